//! Flat `key = value` scenario configuration with dotted section names.
//!
//! One config describes one run. Parsing is strict: unknown or duplicate
//! keys are errors, and validation diagnostics always name the offending
//! field. The geometry of a run is derived deterministically from the grid
//! and the pulse: the splitter sits at the grid midpoint and the detectors
//! two pulse widths before the far edge.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use pulsefock::{Envelope, Grid, PhaseConvention};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("config error: {0}")]
pub struct ConfigError(pub String);

type ConfigResult<T> = Result<T, ConfigError>;

fn err(message: impl Into<String>) -> ConfigError {
    ConfigError(message.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    SingleBs,
    HomSweep,
    Verify,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::SingleBs => "single_bs",
            Scenario::HomSweep => "hom_sweep",
            Scenario::Verify => "verify",
        }
    }
}

/// Everything one run needs, resolved and validated.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub grid_n: usize,
    pub grid_dx: f64,
    pub c: f64,
    pub hbar: f64,
    pub envelope: Envelope,
    pub pulse_width: f64,
    pub pulse_k: f64,
    pub pulse_center: f64,
    pub theta: f64,
    pub phase_convention: PhaseConvention,
    pub delays: Vec<f64>,
    pub output_dir: PathBuf,
    pub snapshot_times: Vec<f64>,
}

/// Splitter and detector placement derived from a validated config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub splitter_position: f64,
    pub detector_position: f64,
    pub t_final: f64,
}

impl ScenarioConfig {
    pub fn grid(&self) -> Grid {
        Grid::new(self.grid_n, self.grid_dx, 0.0).expect("validated grid")
    }

    pub fn geometry(&self) -> Geometry {
        let length = self.grid_n as f64 * self.grid_dx;
        let splitter_position = length / 2.0;
        let detector_position = length - 2.0 * self.pulse_width;
        Geometry {
            splitter_position,
            detector_position,
            t_final: (detector_position - self.pulse_center) / self.c,
        }
    }

    pub fn validate(&self) -> ConfigResult<()> {
        if self.grid_n == 0 || !self.grid_n.is_power_of_two() {
            return Err(err(format!("grid.n = {} must be a power of two", self.grid_n)));
        }
        for (name, value) in [
            ("grid.dx", self.grid_dx),
            ("constants.c", self.c),
            ("constants.hbar", self.hbar),
            ("pulse.width", self.pulse_width),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(err(format!("{name} = {value} must be finite and positive")));
            }
        }
        for (name, value) in [("pulse.k", self.pulse_k), ("pulse.center", self.pulse_center)] {
            if !value.is_finite() {
                return Err(err(format!("{name} = {value} must be finite")));
            }
        }
        if !(self.theta > 0.0 && self.theta < std::f64::consts::FRAC_PI_2) {
            return Err(err(format!(
                "beam_splitter.theta = {} must lie strictly between 0 and pi/2",
                self.theta
            )));
        }

        let length = self.grid_n as f64 * self.grid_dx;
        let half_width = self.pulse_width / 2.0;
        if self.pulse_width > length / 5.0 {
            return Err(err(format!(
                "pulse.width = {} exceeds a fifth of the grid length {length}; the \
                 pulse could not clear the splitter before detection",
                self.pulse_width
            )));
        }
        // guard band of one width on both sides of the support
        if self.pulse_center - half_width - self.pulse_width < 0.0
            || self.pulse_center + half_width + self.pulse_width > length
        {
            return Err(err(format!(
                "pulse.center = {} leaves no guard band of one width inside [0, {length}]",
                self.pulse_center
            )));
        }
        let geometry = self.geometry();
        if self.pulse_center + half_width >= geometry.splitter_position {
            return Err(err(format!(
                "pulse.center = {} is not upstream of the splitter at {}",
                self.pulse_center, geometry.splitter_position
            )));
        }

        if self.scenario == Scenario::HomSweep && self.delays.is_empty() {
            return Err(err("sweep.delays is required for the hom_sweep scenario"));
        }
        for &tau in &self.delays {
            if !tau.is_finite() {
                return Err(err(format!("sweep.delays entry {tau} must be finite")));
            }
            let shift = self.c * tau;
            let shifted_center = self.pulse_center + shift;
            if shifted_center - half_width < 0.0 {
                return Err(err(format!(
                    "sweep.delays entry {tau} pushes the pulse past the grid start"
                )));
            }
            if shifted_center + half_width >= geometry.splitter_position {
                return Err(err(format!(
                    "sweep.delays entry {tau} pushes the pulse into the splitter"
                )));
            }
            if geometry.detector_position + shift + half_width > length {
                return Err(err(format!(
                    "sweep.delays entry {tau} pushes the detection-time pulse past the grid end"
                )));
            }
            // the delayed pulse must still clear the splitter by t_final
            if geometry.splitter_position - shifted_center + half_width
                > geometry.t_final * self.c
            {
                return Err(err(format!(
                    "sweep.delays entry {tau} leaves the pulse straddling the splitter \
                     at detection time"
                )));
            }
        }
        for &t in &self.snapshot_times {
            if !t.is_finite() || t < 0.0 {
                return Err(err(format!(
                    "output.snapshot_times entry {t} must be finite and nonnegative"
                )));
            }
            if self.pulse_center + half_width + self.c * t > length {
                return Err(err(format!(
                    "output.snapshot_times entry {t} lets the pulse reach the grid end"
                )));
            }
        }
        if self.scenario == Scenario::Verify && self.grid_n < 1024 {
            return Err(err(format!(
                "grid.n = {} is too small for the verify suites; use at least 1024",
                self.grid_n
            )));
        }
        Ok(())
    }

    /// Canonical serialization; `parse_config` of the result reproduces the
    /// config exactly.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario = {}", self.scenario.name());
        let _ = writeln!(out, "grid.n = {}", self.grid_n);
        let _ = writeln!(out, "grid.dx = {}", self.grid_dx);
        let _ = writeln!(out, "constants.c = {}", self.c);
        let _ = writeln!(out, "constants.hbar = {}", self.hbar);
        let envelope = match self.envelope {
            Envelope::Sin2 => "sin2",
            Envelope::GaussTruncated => "gauss_truncated",
        };
        let _ = writeln!(out, "pulse.envelope = {envelope}");
        let _ = writeln!(out, "pulse.width = {}", self.pulse_width);
        let _ = writeln!(out, "pulse.k = {}", self.pulse_k);
        let _ = writeln!(out, "pulse.center = {}", self.pulse_center);
        let _ = writeln!(out, "beam_splitter.theta = {}", self.theta);
        let convention = match self.phase_convention {
            PhaseConvention::TransmissionPlusI => "transmission_i",
            PhaseConvention::TransmissionMinusI => "transmission_minus_i",
        };
        let _ = writeln!(out, "beam_splitter.phase_convention = {convention}");
        if !self.delays.is_empty() {
            let list: Vec<String> = self.delays.iter().map(|d| d.to_string()).collect();
            let _ = writeln!(out, "sweep.delays = {}", list.join(", "));
        }
        let _ = writeln!(out, "output.directory = {}", self.output_dir.display());
        if !self.snapshot_times.is_empty() {
            let list: Vec<String> = self.snapshot_times.iter().map(|t| t.to_string()).collect();
            let _ = writeln!(out, "output.snapshot_times = {}", list.join(", "));
        }
        out
    }
}

/// Parse and validate a configuration file.
pub fn parse_config(text: &str) -> ConfigResult<ScenarioConfig> {
    let mut pairs: BTreeMap<String, String> = BTreeMap::new();
    for (index, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(err(format!("line {}: expected `key = value`", index + 1)));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if pairs.insert(key.clone(), value).is_some() {
            return Err(err(format!("duplicate key `{key}`")));
        }
    }

    let mut take = |key: &str| pairs.remove(key);

    let scenario = match take("scenario").as_deref() {
        Some("single_bs") => Scenario::SingleBs,
        Some("hom_sweep") => Scenario::HomSweep,
        Some("verify") => Scenario::Verify,
        Some(other) => {
            return Err(err(format!(
                "scenario = {other} is not one of single_bs, hom_sweep, verify"
            )))
        }
        None => return Err(err("missing required key `scenario`")),
    };

    let required_f64 = |field: &str, value: Option<String>| -> ConfigResult<f64> {
        let text = value.ok_or_else(|| err(format!("missing required key `{field}`")))?;
        text.parse::<f64>()
            .map_err(|_| err(format!("{field} = {text} is not a number")))
    };
    let optional_f64 = |field: &str, value: Option<String>, default: f64| -> ConfigResult<f64> {
        match value {
            Some(text) => text
                .parse::<f64>()
                .map_err(|_| err(format!("{field} = {text} is not a number"))),
            None => Ok(default),
        }
    };

    let grid_n_text = take("grid.n").ok_or_else(|| err("missing required key `grid.n`"))?;
    let grid_n = grid_n_text
        .parse::<usize>()
        .map_err(|_| err(format!("grid.n = {grid_n_text} is not a positive integer")))?;
    let grid_dx = required_f64("grid.dx", take("grid.dx"))?;
    let c = optional_f64("constants.c", take("constants.c"), 1.0)?;
    let hbar = optional_f64("constants.hbar", take("constants.hbar"), 1.0)?;

    let envelope = match take("pulse.envelope").as_deref() {
        None | Some("sin2") => Envelope::Sin2,
        Some("gauss_truncated") => Envelope::GaussTruncated,
        Some(other) => {
            return Err(err(format!(
                "pulse.envelope = {other} is not one of sin2, gauss_truncated"
            )))
        }
    };
    let pulse_width = required_f64("pulse.width", take("pulse.width"))?;
    let pulse_k = required_f64("pulse.k", take("pulse.k"))?;
    let pulse_center = required_f64("pulse.center", take("pulse.center"))?;

    let theta = optional_f64(
        "beam_splitter.theta",
        take("beam_splitter.theta"),
        std::f64::consts::FRAC_PI_4,
    )?;
    let phase_convention = match take("beam_splitter.phase_convention").as_deref() {
        None | Some("transmission_i") => PhaseConvention::TransmissionPlusI,
        Some("transmission_minus_i") => PhaseConvention::TransmissionMinusI,
        Some(other) => {
            return Err(err(format!(
                "beam_splitter.phase_convention = {other} is not one of \
                 transmission_i, transmission_minus_i"
            )))
        }
    };

    let delays = match take("sweep.delays") {
        Some(text) => parse_value_list("sweep.delays", &text)?,
        None => Vec::new(),
    };
    let output_dir = PathBuf::from(take("output.directory").unwrap_or_else(|| "out".into()));
    let snapshot_times = match take("output.snapshot_times") {
        Some(text) => parse_value_list("output.snapshot_times", &text)?,
        None => Vec::new(),
    };

    if let Some((key, _)) = pairs.into_iter().next() {
        return Err(err(format!("unknown key `{key}`")));
    }

    let config = ScenarioConfig {
        scenario,
        grid_n,
        grid_dx,
        c,
        hbar,
        envelope,
        pulse_width,
        pulse_k,
        pulse_center,
        theta,
        phase_convention,
        delays,
        output_dir,
        snapshot_times,
    };
    config.validate()?;
    Ok(config)
}

/// Either a comma-separated list or an inclusive `start:stop:count` range.
fn parse_value_list(field: &str, text: &str) -> ConfigResult<Vec<f64>> {
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(err(format!("{field} = {text}: a range needs start:stop:count")));
        }
        let start: f64 = parts[0]
            .trim()
            .parse()
            .map_err(|_| err(format!("{field}: range start `{}` is not a number", parts[0])))?;
        let stop: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|_| err(format!("{field}: range stop `{}` is not a number", parts[1])))?;
        let count: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| err(format!("{field}: range count `{}` is not an integer", parts[2])))?;
        if count == 0 {
            return Err(err(format!("{field}: range count must be at least 1")));
        }
        if count == 1 {
            return Ok(vec![start]);
        }
        let step = (stop - start) / (count - 1) as f64;
        return Ok((0..count).map(|j| start + j as f64 * step).collect());
    }
    text.split(',')
        .map(|piece| {
            let piece = piece.trim();
            piece
                .parse::<f64>()
                .map_err(|_| err(format!("{field}: `{piece}` is not a number")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> String {
        "\
# two-pulse interference sweep
scenario = hom_sweep
grid.n = 4096
grid.dx = 1.0
pulse.width = 384
pulse.k = 1.0
pulse.center = 1024
sweep.delays = -384:384:21
output.directory = out
"
        .to_string()
    }

    #[test]
    fn parses_with_defaults() {
        let config = parse_config(&sample()).unwrap();
        assert_eq!(config.scenario, Scenario::HomSweep);
        assert_eq!(config.c, 1.0);
        assert_eq!(config.hbar, 1.0);
        assert_eq!(config.theta, std::f64::consts::FRAC_PI_4);
        assert_eq!(config.delays.len(), 21);
        assert_eq!(config.delays[10], 0.0);
        assert_eq!(config.envelope, Envelope::Sin2);
    }

    #[test]
    fn round_trip_is_identity() {
        let config = parse_config(&sample()).unwrap();
        let reparsed = parse_config(&config.to_config_string()).unwrap();
        assert_eq!(config, reparsed);
    }

    #[test]
    fn unknown_keys_are_named() {
        let text = format!("{}pulse.wavelength = 3\n", sample());
        let message = parse_config(&text).unwrap_err().to_string();
        assert!(message.contains("pulse.wavelength"), "{message}");
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let text = format!("{}grid.n = 2048\n", sample());
        let message = parse_config(&text).unwrap_err().to_string();
        assert!(message.contains("duplicate"), "{message}");
    }

    #[test]
    fn diagnostics_name_the_field() {
        let bad_theta = sample() + "beam_splitter.theta = 2.0\n";
        let message = parse_config(&bad_theta).unwrap_err().to_string();
        assert!(message.contains("beam_splitter.theta"), "{message}");

        let bad_grid = sample().replace("grid.n = 4096", "grid.n = 1000");
        let message = parse_config(&bad_grid).unwrap_err().to_string();
        assert!(message.contains("grid.n"), "{message}");

        let bad_center = sample().replace("pulse.center = 1024", "pulse.center = 100");
        let message = parse_config(&bad_center).unwrap_err().to_string();
        assert!(message.contains("pulse.center"), "{message}");

        let bad_delay = sample().replace("-384:384:21", "0, 1200");
        let message = parse_config(&bad_delay).unwrap_err().to_string();
        assert!(message.contains("sweep.delays"), "{message}");
    }

    #[test]
    fn comma_lists_parse() {
        let text = sample().replace("-384:384:21", "-100, 0, 100");
        let config = parse_config(&text).unwrap();
        assert_eq!(config.delays, vec![-100.0, 0.0, 100.0]);
    }

    #[test]
    fn missing_required_keys_are_reported() {
        let text = sample().replace("pulse.width = 384\n", "");
        let message = parse_config(&text).unwrap_err().to_string();
        assert!(message.contains("pulse.width"), "{message}");
    }

    #[test]
    fn geometry_is_derived_from_grid_and_pulse() {
        let config = parse_config(&sample()).unwrap();
        let geometry = config.geometry();
        assert_eq!(geometry.splitter_position, 2048.0);
        assert_eq!(geometry.detector_position, 4096.0 - 768.0);
        assert_eq!(geometry.t_final, 4096.0 - 768.0 - 1024.0);
    }
}
