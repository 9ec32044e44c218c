//! Scenario drivers: build the circuit from a validated config, run the
//! physics, and write deterministic CSV artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use pulsefock::{
    commutator_b_bdag, eigenbasis_evolution_fidelity, energy_expectation, evolve_fock_state,
    hom_sweep, make_pulse, monomial_state, to_reciprocal, BeamSplitter, Circuit,
    DetectorObservable, Dispersion, Envelope, FockState, FrequencyOperator1D, Mode, PulseSpec,
    RailId, RailMode,
};

use crate::config::{ConfigError, Scenario, ScenarioConfig};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] ConfigError),

    #[error("physics error: {0}")]
    Physics(#[from] pulsefock::Error),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

impl RunError {
    /// Exit status contract: 1 for configuration problems, 2 for anything
    /// that went wrong while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            _ => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

/// 17 significant digits: round-trip safe and byte-stable.
fn fmt_float(value: f64) -> String {
    format!("{value:.16e}")
}

fn rail(name: &str) -> RailId {
    RailId::new(name)
}

fn build_circuit(config: &ScenarioConfig) -> Result<Circuit, RunError> {
    let geometry = config.geometry();
    let splitter = BeamSplitter::from_angle(
        config.theta,
        0.0,
        config.phase_convention,
        (rail("x"), rail("y")),
        (rail("x"), rail("y")),
    )?;
    Ok(Circuit::two_rail_junction(
        config.grid(),
        splitter.reflection(),
        splitter.transmission(),
        geometry.splitter_position,
        geometry.detector_position - geometry.splitter_position,
        config.c,
        Dispersion::FullAbsK,
    )?)
}

fn pulse_spec(config: &ScenarioConfig) -> PulseSpec {
    PulseSpec::new(config.envelope, config.pulse_center, config.pulse_width, config.pulse_k)
}

/// Run the scenario named by the config, writing outputs under `output_dir`.
pub fn run(config: &ScenarioConfig, output_dir: &Path) -> Result<(), RunError> {
    match config.scenario {
        Scenario::SingleBs => run_single_bs(config, output_dir),
        Scenario::HomSweep => run_hom_sweep(config, output_dir),
        Scenario::Verify => run_verify(config),
    }
}

/// One photon on the `x` rail through the splitter: detection
/// probabilities, the split-mode commutators, and pulse snapshots.
fn run_single_bs(config: &ScenarioConfig, output_dir: &Path) -> Result<(), RunError> {
    let circuit = build_circuit(config)?;
    let geometry = config.geometry();
    let grid = config.grid();
    let input = RailMode::single(rail("x"), make_pulse(&grid, &pulse_spec(config))?);
    let out = circuit
        .run(std::slice::from_ref(&input), geometry.t_final)?
        .remove(0);

    let state = monomial_state(Complex64::new(1.0, 0.0), vec![out.clone()]);
    let reference_x = out.restricted_to(&rail("x")).normalized()?;
    let reference_y = out.restricted_to(&rail("y")).normalized()?;
    let p_x = DetectorObservable::single_at(rail("x"), reference_x)?.expectation(&state)?;
    let p_y = DetectorObservable::single_at(rail("y"), reference_y)?.expectation(&state)?;

    let reflected = out.restricted_to(&rail("y"));
    let transmitted = out.restricted_to(&rail("x"));
    let comm_rr = commutator_b_bdag(&reflected, &reflected)?;
    let comm_tt = commutator_b_bdag(&transmitted, &transmitted)?;
    let comm_rt = commutator_b_bdag(&reflected, &transmitted)?;

    fs::create_dir_all(output_dir).map_err(io_err(output_dir))?;
    let mut csv = String::from("p_detector_x,p_detector_y,comm_RR,comm_TT,comm_RT\n");
    let _ = writeln!(
        csv,
        "{},{},{},{},{}",
        fmt_float(p_x),
        fmt_float(p_y),
        fmt_float(comm_rr.re),
        fmt_float(comm_tt.re),
        fmt_float(comm_rt.re),
    );
    let path = output_dir.join("single_bs.csv");
    fs::write(&path, csv).map_err(io_err(&path))?;

    write_snapshots(config, &circuit, &input, output_dir)?;
    Ok(())
}

/// The state of the input pulse at each requested time, one CSV per rail.
fn write_snapshots(
    config: &ScenarioConfig,
    circuit: &Circuit,
    input: &RailMode,
    output_dir: &Path,
) -> Result<(), RunError> {
    let grid = config.grid();
    for &time in &config.snapshot_times {
        let state = circuit.propagate_mode(input, time)?;
        for circuit_rail in circuit.rails() {
            let zero = Mode::zero(grid);
            let mode = state.component(&circuit_rail.id).unwrap_or(&zero);
            let mut csv = String::from("x,re,im,abs2\n");
            for (j, sample) in mode.samples().iter().enumerate() {
                let _ = writeln!(
                    csv,
                    "{},{},{},{}",
                    fmt_float(grid.position(j)),
                    fmt_float(sample.re),
                    fmt_float(sample.im),
                    fmt_float(sample.norm_sqr()),
                );
            }
            let path = output_dir.join(format!("snapshot_{}_{}.csv", circuit_rail.id, time));
            fs::write(&path, csv).map_err(io_err(&path))?;
        }
    }
    Ok(())
}

/// Two identical pulses, one per input rail, with the second displaced by
/// `c * tau` per sweep point; one CSV row per delay, in the given order.
fn run_hom_sweep(config: &ScenarioConfig, output_dir: &Path) -> Result<(), RunError> {
    let circuit = build_circuit(config)?;
    let reports = hom_sweep(&circuit, &pulse_spec(config), &config.delays)?;

    fs::create_dir_all(output_dir).map_err(io_err(output_dir))?;
    let mut csv = String::from("delay,overlap_re,overlap_im,p_xx,p_yy,p_coincidence\n");
    for (tau, report) in config.delays.iter().zip(reports.iter()) {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            fmt_float(*tau),
            fmt_float(report.overlap().re),
            fmt_float(report.overlap().im),
            fmt_float(report.p_double_x()),
            fmt_float(report.p_double_y()),
            fmt_float(report.p_coincidence()),
        );
    }
    let path = output_dir.join("hom_sweep.csv");
    fs::write(&path, csv).map_err(io_err(&path))?;
    Ok(())
}

struct SuiteOutcome {
    name: &'static str,
    residual: f64,
    tolerance: f64,
}

impl SuiteOutcome {
    fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

/// Deterministic verification suites on the configured grid: unitarity of
/// the reciprocal map, its round trip, the eigenbasis evolution equivalence
/// at truncated-basis size 64, and energy conservation under free flight.
fn run_verify(config: &ScenarioConfig) -> Result<(), RunError> {
    let grid = config.grid();
    let op = FrequencyOperator1D::new(grid, config.c, Dispersion::FullAbsK)?;
    let mut outcomes = Vec::new();

    let mut rng = ChaCha8Rng::seed_from_u64(0x7075_6c73);
    let random_mode = |rng: &mut ChaCha8Rng| -> Result<Mode, RunError> {
        let samples: Vec<Complex64> = (0..grid.n_points())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        Ok(Mode::from_samples(grid, samples)?.normalized()?)
    };

    let mut unitarity = 0.0f64;
    let mut round_trip = 0.0f64;
    for _ in 0..50 {
        let a = random_mode(&mut rng)?;
        let b = random_mode(&mut rng)?;
        let direct = a.scalar_product(&b)?;
        let reciprocal = to_reciprocal(&a).overlap(&to_reciprocal(&b))?;
        unitarity = unitarity.max((direct - reciprocal).norm());
        let back = pulsefock::from_reciprocal(&to_reciprocal(&a));
        let worst = a
            .samples()
            .iter()
            .zip(back.samples().iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        round_trip = round_trip.max(worst);
    }
    outcomes.push(SuiteOutcome {
        name: "reciprocal-map unitarity (50 mode pairs)",
        residual: unitarity,
        tolerance: 1e-12,
    });
    outcomes.push(SuiteOutcome {
        name: "reciprocal-map round trip (50 modes)",
        residual: round_trip,
        tolerance: 1e-12,
    });

    // Wide truncated Gaussians whose spectra fit in 64 eigenlabels.
    let length = grid.length();
    let width = length / 4.0;
    let carrier = 2.0 * std::f64::consts::PI * (grid.n_points() as f64 / 64.0) / length;
    let mut defect = 0.0f64;
    for photons in 1..=3usize {
        for _ in 0..5 {
            let modes: Vec<Mode> = (0..photons)
                .map(|_| {
                    let center = rng.gen_range(1.5 * width..length - 1.5 * width);
                    make_pulse(
                        &grid,
                        &PulseSpec::new(Envelope::GaussTruncated, center, width, carrier),
                    )
                })
                .collect::<Result<_, _>>()?;
            for factor in [0.0, 0.1, 0.2] {
                let t = factor * length / config.c;
                let fidelity = eigenbasis_evolution_fidelity(&modes, &op, t, 64)?;
                defect = defect.max(1.0 - fidelity);
            }
        }
    }
    outcomes.push(SuiteOutcome {
        name: "eigenbasis evolution equivalence (N = 1..3, basis 64)",
        residual: defect,
        tolerance: 1e-9,
    });

    // Energy of a photon pair is flat along free flight.
    let geometry = config.geometry();
    let spec = pulse_spec(config);
    let companion = PulseSpec::new(
        config.envelope,
        config.pulse_center + config.pulse_width / 4.0,
        config.pulse_width,
        config.pulse_k,
    );
    let state = FockState::vacuum()
        .create(&make_pulse(&grid, &spec)?)?
        .create(&make_pulse(&grid, &companion)?)?;
    let before = config.hbar * energy_expectation(&state, &op)?;
    let evolved = evolve_fock_state(&state, &op, geometry.t_final / 2.0)?;
    let after = config.hbar * energy_expectation(&evolved, &op)?;
    outcomes.push(SuiteOutcome {
        name: "energy conservation along free flight",
        residual: (before - after).abs(),
        tolerance: 1e-10 * config.hbar,
    });

    let mut failures = 0;
    for outcome in &outcomes {
        let verdict = if outcome.passed() { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {} residual {:.3e} tolerance {:.1e}",
            outcome.name, outcome.residual, outcome.tolerance
        );
        if !outcome.passed() {
            failures += 1;
        }
    }
    println!("verify: {}/{} suites passed", outcomes.len() - failures, outcomes.len());
    if failures > 0 {
        return Err(RunError::VerificationFailed(format!(
            "{failures} of {} suites exceeded tolerance",
            outcomes.len()
        )));
    }
    Ok(())
}
