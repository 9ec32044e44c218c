//! Classical modes sampled on a uniform periodic 1D lattice.
//!
//! A mode is a square-integrable complex field configuration; it carries
//! the full Hilbert-space structure of the classical theory through the
//! discrete scalar product `sum_j conj(a_j) b_j dx`. Pulses are built from
//! an envelope with strictly finite support times a plane-wave carrier and
//! normalized to unit norm.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Fraction of a mode's squared norm that counts as negligible: spectral or
/// spatial content below this level is not tracked by the guard machinery.
/// It sits an order below every reported-probability tolerance in the crate.
pub(crate) const NEGLIGIBLE_MASS_FRACTION: f64 = 1e-9;

/// Uniform periodic sampling lattice shared by all modes on a rail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n_points: usize,
    dx: f64,
    origin: f64,
}

impl Grid {
    /// A periodic lattice of `n_points` samples spaced `dx` apart, sample 0
    /// sitting at `origin`. `n_points` must be a power of two so spectral
    /// round trips are exact, `dx` must be positive.
    pub fn new(n_points: usize, dx: f64, origin: f64) -> Result<Self> {
        if n_points == 0 || !n_points.is_power_of_two() {
            return Err(Error::InvalidPulse(format!(
                "grid size {n_points} is not a power of two"
            )));
        }
        if !dx.is_finite() || dx <= 0.0 || !origin.is_finite() {
            return Err(Error::InvalidPulse(format!(
                "grid spacing dx = {dx} and origin = {origin} must be finite, dx > 0"
            )));
        }
        Ok(Grid { n_points, dx, origin })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// Total periodic length `n_points * dx`.
    pub fn length(&self) -> f64 {
        self.n_points as f64 * self.dx
    }

    /// Coordinate of sample `j`.
    pub fn position(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.dx
    }
}

/// Envelope menu for pulse construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Envelope {
    /// `sin^2` bump with strictly finite support (zero at both edges).
    Sin2,
    /// Gaussian multiplied by the characteristic function of the support;
    /// the standard deviation is fixed to `width / 10` so the truncation
    /// happens five sigmas out.
    GaussTruncated,
}

/// Recipe for a normalized carrier pulse on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    pub envelope: Envelope,
    /// Center of the support (same units as grid coordinates).
    pub center: f64,
    /// Length of the support; the envelope vanishes outside
    /// `[center - width/2, center + width/2]`.
    pub width: f64,
    /// Carrier wavenumber in rad per unit length; the carrier frequency is
    /// `c * wavenumber` for a right-moving pulse.
    pub wavenumber: f64,
    /// Unit complex factor multiplying the whole pulse.
    pub amplitude_phase: Complex64,
}

impl PulseSpec {
    pub fn new(envelope: Envelope, center: f64, width: f64, wavenumber: f64) -> Self {
        PulseSpec {
            envelope,
            center,
            width,
            wavenumber,
            amplitude_phase: Complex64::new(1.0, 0.0),
        }
    }

    pub fn with_phase(mut self, phase: Complex64) -> Self {
        self.amplitude_phase = phase;
        self
    }

    fn validate(&self, grid: &Grid) -> Result<()> {
        if !self.width.is_finite() || self.width <= 0.0 {
            return Err(Error::InvalidPulse(format!(
                "pulse width {} must be finite and positive",
                self.width
            )));
        }
        if !self.center.is_finite() || !self.wavenumber.is_finite() {
            return Err(Error::InvalidPulse(
                "pulse center and wavenumber must be finite".into(),
            ));
        }
        let mag = self.amplitude_phase.norm();
        if (mag - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPulse(format!(
                "amplitude_phase must be a unit complex factor, |z| = {mag}"
            )));
        }
        // The support must sit inside the grid with a clear margin of at
        // least one pulse width on both sides, so later translations have
        // room before anything wraps around the periodic boundary.
        let lo = self.center - self.width / 2.0;
        let hi = self.center + self.width / 2.0;
        let guard = self.width;
        if lo - guard < grid.origin() || hi + guard > grid.origin() + grid.length() {
            return Err(Error::SupportOutOfBounds(format!(
                "support [{lo}, {hi}] needs a guard band of {guard} inside \
                 [{}, {}]",
                grid.origin(),
                grid.origin() + grid.length()
            )));
        }
        Ok(())
    }
}

/// One classical electromagnetic configuration on a rail: a complex sample
/// per lattice site, plus an opaque polarization label that is carried
/// along but never interpreted (the dynamics here is scalar).
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    grid: Grid,
    samples: Vec<Complex64>,
    polarization: String,
}

impl Mode {
    pub fn from_samples(grid: Grid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.n_points() {
            return Err(Error::InvalidPulse(format!(
                "expected {} samples, got {}",
                grid.n_points(),
                samples.len()
            )));
        }
        Ok(Mode { grid, samples, polarization: "z".into() })
    }

    pub fn zero(grid: Grid) -> Self {
        Mode {
            grid,
            samples: vec![Complex64::new(0.0, 0.0); grid.n_points()],
            polarization: "z".into(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn polarization(&self) -> &str {
        &self.polarization
    }

    pub fn with_polarization(mut self, tag: impl Into<String>) -> Self {
        self.polarization = tag.into();
        self
    }

    /// Discrete scalar product `sum_j conj(a_j) b_j dx`, the Riemann
    /// approximation to the continuum inner product. Conjugate-linear in
    /// `self`, linear in `other`.
    pub fn scalar_product(&self, other: &Mode) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let acc: Complex64 = self
            .samples
            .iter()
            .zip(other.samples.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(acc * self.grid.dx())
    }

    /// Squared norm `<m|m>`; exactly real by construction.
    pub fn norm_sq(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn is_zero(&self) -> bool {
        self.norm_sq() == 0.0
    }

    /// Rescale to unit norm. The overall phase is untouched.
    pub fn normalized(&self) -> Result<Mode> {
        let n2 = self.norm_sq();
        if n2 <= 0.0 {
            return Err(Error::ZeroMode);
        }
        Ok(self.scaled(Complex64::new(1.0 / n2.sqrt(), 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> Mode {
        Mode {
            grid: self.grid,
            samples: self.samples.iter().map(|z| z * factor).collect(),
            polarization: self.polarization.clone(),
        }
    }

    pub fn try_add(&self, other: &Mode) -> Result<Mode> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Mode {
            grid: self.grid,
            samples: self
                .samples
                .iter()
                .zip(other.samples.iter())
                .map(|(a, b)| a + b)
                .collect(),
            polarization: self.polarization.clone(),
        })
    }

    /// Smallest index window `(j_min, j_max)` outside of which the mode
    /// carries a negligible share of its squared norm (at most
    /// `NEGLIGIBLE_MASS_FRACTION`, split over the two tails). `None` for the
    /// zero mode. A window spanning the whole grid means the mode is
    /// delocalized and periodic translation cannot corrupt it.
    pub fn essential_support(&self) -> Option<(usize, usize)> {
        let masses: Vec<f64> = self.samples.iter().map(|z| z.norm_sqr()).collect();
        let total: f64 = masses.iter().sum();
        if total == 0.0 {
            return None;
        }
        let tail = total * NEGLIGIBLE_MASS_FRACTION / 2.0;
        let mut acc = 0.0;
        let mut j_min = 0;
        for (j, m) in masses.iter().enumerate() {
            acc += m;
            if acc > tail {
                j_min = j;
                break;
            }
        }
        acc = 0.0;
        let mut j_max = masses.len() - 1;
        for (j, m) in masses.iter().enumerate().rev() {
            acc += m;
            if acc > tail {
                j_max = j;
                break;
            }
        }
        Some((j_min, j_max))
    }

    /// Energy centroid `sum x |psi|^2 / sum |psi|^2`; `None` for the zero mode.
    pub fn centroid(&self) -> Option<f64> {
        let n2 = self.norm_sq();
        if n2 == 0.0 {
            return None;
        }
        let weighted: f64 = self
            .samples
            .iter()
            .enumerate()
            .map(|(j, z)| self.grid.position(j) * z.norm_sqr())
            .sum::<f64>()
            * self.grid.dx();
        Some(weighted / n2)
    }

    /// Translate by the nearest lattice multiple of `distance`. The samples
    /// are rotated, so the norm is preserved exactly; translating the
    /// essential support past either grid edge is an error, except for
    /// delocalized modes, which rotate freely.
    pub fn shifted(&self, distance: f64) -> Result<Mode> {
        let sites = (distance / self.grid.dx()).round() as i64;
        if sites == 0 {
            return Ok(self.clone());
        }
        if let Some((j_min, j_max)) = self.essential_support() {
            let delocalized = j_min == 0 && j_max == self.grid.n_points() - 1;
            let lo = j_min as i64 + sites;
            let hi = j_max as i64 + sites;
            if !delocalized && (lo < 0 || hi >= self.grid.n_points() as i64) {
                return Err(Error::SupportOutOfBounds(format!(
                    "shift by {sites} sites moves support [{j_min}, {j_max}] \
                     outside the grid"
                )));
            }
        }
        let n = self.grid.n_points();
        let offset = sites.rem_euclid(n as i64) as usize;
        let mut samples = vec![Complex64::new(0.0, 0.0); n];
        for (j, z) in self.samples.iter().enumerate() {
            samples[(j + offset) % n] = *z;
        }
        Ok(Mode { grid: self.grid, samples, polarization: self.polarization.clone() })
    }

    /// Stable content fingerprint used to canonically order monomial factors.
    pub(crate) fn content_bits(&self) -> Vec<u64> {
        let mut bits = Vec::with_capacity(2 * self.samples.len() + 3);
        bits.push(self.grid.n_points() as u64);
        bits.push(self.grid.dx().to_bits());
        bits.push(self.grid.origin().to_bits());
        for z in &self.samples {
            bits.push(z.re.to_bits());
            bits.push(z.im.to_bits());
        }
        bits
    }
}

/// Realize a pulse spec as a normalized mode: envelope times carrier
/// `exp(i k x)`, scaled so the discrete norm is exactly one, then multiplied
/// by the unit `amplitude_phase`. The normalization constant is chosen real
/// and positive.
pub fn make_pulse(grid: &Grid, spec: &PulseSpec) -> Result<Mode> {
    spec.validate(grid)?;
    let sigma = spec.width / 10.0;
    let mut samples = Vec::with_capacity(grid.n_points());
    for j in 0..grid.n_points() {
        let x = grid.position(j);
        let u = x - spec.center;
        let env = if u.abs() <= spec.width / 2.0 {
            match spec.envelope {
                Envelope::Sin2 => {
                    let s = (std::f64::consts::PI * (u / spec.width + 0.5)).sin();
                    s * s
                }
                Envelope::GaussTruncated => (-u * u / (2.0 * sigma * sigma)).exp(),
            }
        } else {
            0.0
        };
        let carrier = Complex64::from_polar(1.0, spec.wavenumber * x);
        samples.push(env * carrier);
    }
    let mode = Mode::from_samples(*grid, samples)?;
    let normalized = mode.normalized()?;
    Ok(normalized.scaled(spec.amplitude_phase))
}
