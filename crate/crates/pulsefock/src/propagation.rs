//! Time evolution of classical modes and scattering through rail circuits.
//!
//! Free propagation follows `i d(psi)/dt = Omega psi` with `omega(k) = c|k|`
//! applied in the discrete Fourier basis, or an exact lattice translation
//! for narrowband right-movers. Beam splitters are phenomenological mode
//! maps with complex `(r, t)` coefficients; rails are mutually orthogonal
//! subspaces of the classical Hilbert space, so a composite mode is a map
//! from rail id to its component.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{Grid, Mode};

/// Coefficient-constraint tolerance for beam splitters.
const SPLITTER_TOL: f64 = 1e-12;

/// Spectral backend used by [`FrequencyOperator1D`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dispersion {
    /// Exact `omega(k) = c|k|` multiplication in the Fourier basis.
    FullAbsK,
    /// Rigid lattice translation at speed `c`, valid for narrowband pulses
    /// whose spectrum sits entirely at positive wavenumbers. Demands that
    /// `c*t` is a lattice multiple.
    CarrierTranslation,
}

/// Generator of free 1D propagation on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyOperator1D {
    grid: Grid,
    c: f64,
    dispersion: Dispersion,
}

impl FrequencyOperator1D {
    pub fn new(grid: Grid, c: f64, dispersion: Dispersion) -> Result<Self> {
        if !c.is_finite() || c <= 0.0 {
            return Err(Error::InvalidCircuit(format!(
                "propagation speed c = {c} must be finite and positive"
            )));
        }
        Ok(FrequencyOperator1D { grid, c, dispersion })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn speed(&self) -> f64 {
        self.c
    }

    pub fn dispersion(&self) -> Dispersion {
        self.dispersion
    }

    /// Evolve a mode for time `t`, i.e. apply `exp(-i Omega t)`. Unitary;
    /// errors if the translated significant support would leave the grid.
    pub fn evolve(&self, mode: &Mode, t: f64) -> Result<Mode> {
        if mode.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        if t == 0.0 {
            return Ok(mode.clone());
        }
        let displacement = self.c * t;
        match self.dispersion {
            Dispersion::CarrierTranslation => {
                let sites = displacement / self.grid.dx();
                if (sites - sites.round()).abs() > 1e-9 {
                    return Err(Error::NonCommensurateShift {
                        distance: displacement,
                        dx: self.grid.dx(),
                    });
                }
                mode.shifted(displacement)
            }
            Dispersion::FullAbsK => {
                let spectrum = fft::forward(mode.samples());
                let kappa = fft::wavenumbers(&self.grid);
                self.check_guard(mode, &spectrum, &kappa, displacement)?;
                let evolved: Vec<Complex64> = spectrum
                    .iter()
                    .zip(kappa.iter())
                    .map(|(z, k)| z * Complex64::from_polar(1.0, -self.c * k.abs() * t))
                    .collect();
                Mode::from_samples(self.grid, fft::inverse(&evolved))
            }
        }
    }

    /// Apply the generator itself: multiply each spectral component by
    /// `c|k|`. Not unitary; used for energy matrix elements.
    pub fn apply(&self, mode: &Mode) -> Result<Mode> {
        if mode.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let spectrum = fft::forward(mode.samples());
        let kappa = fft::wavenumbers(&self.grid);
        let weighted: Vec<Complex64> = spectrum
            .iter()
            .zip(kappa.iter())
            .map(|(z, k)| z * (self.c * k.abs()))
            .collect();
        Mode::from_samples(self.grid, fft::inverse(&weighted))
    }

    /// The essential support, translated along every spectral direction that
    /// carries non-negligible weight, must stay inside the grid. Delocalized
    /// modes (support spanning the whole grid) are periodic by construction
    /// and exempt.
    fn check_guard(
        &self,
        mode: &Mode,
        spectrum: &[Complex64],
        kappa: &[f64],
        displacement: f64,
    ) -> Result<()> {
        let Some((j_min, j_max)) = mode.essential_support() else {
            return Ok(());
        };
        if j_min == 0 && j_max == self.grid.n_points() - 1 {
            return Ok(());
        }
        let mut rightward = 0.0;
        let mut leftward = 0.0;
        let mut total = 0.0;
        for (z, k) in spectrum.iter().zip(kappa.iter()) {
            let w = z.norm_sqr();
            total += w;
            if *k > 0.0 {
                rightward += w;
            } else if *k < 0.0 {
                leftward += w;
            }
        }
        if total == 0.0 {
            return Ok(());
        }
        let sites = displacement / self.grid.dx();
        let last = (self.grid.n_points() - 1) as f64;
        let check = |moved: f64| -> Result<()> {
            let lo = j_min as f64 + moved;
            let hi = j_max as f64 + moved;
            if lo < 0.0 || hi > last {
                Err(Error::SupportOutOfBounds(format!(
                    "evolution moves support [{j_min}, {j_max}] by {moved:.1} \
                     sites, outside the {} -point grid",
                    self.grid.n_points()
                )))
            } else {
                Ok(())
            }
        };
        if rightward / total > crate::grid::NEGLIGIBLE_MASS_FRACTION {
            check(sites)?;
        }
        if leftward / total > crate::grid::NEGLIGIBLE_MASS_FRACTION {
            check(-sites)?;
        }
        Ok(())
    }
}

/// Identifier of one propagation arm of a circuit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RailId(String);

impl RailId {
    pub fn new(id: impl Into<String>) -> Self {
        RailId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for RailId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// A classical mode spread over several rails. Distinct rails are orthogonal
/// subspaces, so scalar products add rail by rail; a rail that is absent
/// from the map carries the zero component.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RailMode {
    components: BTreeMap<RailId, Mode>,
}

impl RailMode {
    pub fn new() -> Self {
        RailMode { components: BTreeMap::new() }
    }

    pub fn single(rail: RailId, mode: Mode) -> Self {
        let mut rm = RailMode::new();
        rm.insert(rail, mode);
        rm
    }

    /// Store a component; exactly-zero modes are dropped rather than stored.
    pub fn insert(&mut self, rail: RailId, mode: Mode) {
        if !mode.is_zero() {
            self.components.insert(rail, mode);
        }
    }

    pub fn component(&self, rail: &RailId) -> Option<&Mode> {
        self.components.get(rail)
    }

    pub fn rails(&self) -> impl Iterator<Item = &RailId> {
        self.components.keys()
    }

    pub fn components(&self) -> impl Iterator<Item = (&RailId, &Mode)> {
        self.components.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.components.values().all(|m| m.is_zero())
    }

    /// Scalar product extended additively over rails.
    pub fn overlap(&self, other: &RailMode) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (rail, mode) in &self.components {
            if let Some(other_mode) = other.components.get(rail) {
                acc += mode.scalar_product(other_mode)?;
            }
        }
        Ok(acc)
    }

    pub fn norm_sq(&self) -> f64 {
        self.components.values().map(|m| m.norm_sq()).sum()
    }

    pub fn normalized(&self) -> Result<RailMode> {
        let n2 = self.norm_sq();
        if n2 <= 0.0 {
            return Err(Error::ZeroMode);
        }
        Ok(self.scaled(Complex64::new(1.0 / n2.sqrt(), 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> RailMode {
        let mut rm = RailMode::new();
        for (rail, mode) in &self.components {
            rm.insert(rail.clone(), mode.scaled(factor));
        }
        rm
    }

    pub fn try_add(&self, other: &RailMode) -> Result<RailMode> {
        let mut rm = self.clone();
        for (rail, mode) in &other.components {
            let summed = match rm.components.remove(rail) {
                Some(existing) => existing.try_add(mode)?,
                None => mode.clone(),
            };
            rm.insert(rail.clone(), summed);
        }
        Ok(rm)
    }

    /// The component living on `rail`, as a rail mode of its own.
    pub fn restricted_to(&self, rail: &RailId) -> RailMode {
        match self.components.get(rail) {
            Some(mode) => RailMode::single(rail.clone(), mode.clone()),
            None => RailMode::new(),
        }
    }

    /// Energy centroid over the listed rails, `None` if they carry nothing.
    fn centroid_on(&self, rails: [&RailId; 2]) -> Option<f64> {
        let mut weight = 0.0;
        let mut moment = 0.0;
        for rail in rails {
            if let Some(mode) = self.components.get(rail) {
                let w = mode.norm_sq();
                if let Some(c) = mode.centroid() {
                    weight += w;
                    moment += w * c;
                }
            }
        }
        (weight > 0.0).then(|| moment / weight)
    }

    fn support_bounds_on(&self, rails: [&RailId; 2]) -> Option<(f64, f64)> {
        let mut bounds: Option<(f64, f64)> = None;
        for rail in rails {
            if let Some(mode) = self.components.get(rail) {
                if let Some((j_min, j_max)) = mode.essential_support() {
                    let lo = mode.grid().position(j_min);
                    let hi = mode.grid().position(j_max);
                    bounds = Some(match bounds {
                        Some((a, b)) => (a.min(lo), b.max(hi)),
                        None => (lo, hi),
                    });
                }
            }
        }
        bounds
    }

    pub(crate) fn content_bits(&self) -> Vec<u64> {
        let mut bits = Vec::new();
        for (rail, mode) in &self.components {
            bits.push(rail.as_str().len() as u64);
            for byte in rail.as_str().bytes() {
                bits.push(byte as u64);
            }
            bits.extend(mode.content_bits());
        }
        bits
    }
}

/// Sign convention for the transmission phase of the canonical
/// parametrization `r = cos(theta) e^{i alpha}`, `t = ±i sin(theta) e^{i alpha}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseConvention {
    TransmissionPlusI,
    TransmissionMinusI,
}

/// Phenomenological beam splitter: a unitary two-rail mode map with complex
/// reflection and transmission coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamSplitter {
    reflection: Complex64,
    transmission: Complex64,
    input_rails: (RailId, RailId),
    output_rails: (RailId, RailId),
}

impl BeamSplitter {
    /// Coefficients must satisfy `|r|^2 + |t|^2 = 1` and
    /// `conj(r) t + r conj(t) = 0` within 1e-12.
    pub fn new(
        reflection: Complex64,
        transmission: Complex64,
        input_rails: (RailId, RailId),
        output_rails: (RailId, RailId),
    ) -> Result<Self> {
        let power = reflection.norm_sqr() + transmission.norm_sqr();
        if (power - 1.0).abs() > SPLITTER_TOL {
            return Err(Error::InvalidSplitter(format!(
                "|r|^2 + |t|^2 = {power}, must be 1"
            )));
        }
        let cross = reflection.conj() * transmission + reflection * transmission.conj();
        if cross.norm() > SPLITTER_TOL {
            return Err(Error::InvalidSplitter(format!(
                "conj(r) t + r conj(t) = {cross}, must vanish"
            )));
        }
        if input_rails.0 == input_rails.1 || output_rails.0 == output_rails.1 {
            return Err(Error::InvalidSplitter("rail pairs must be distinct".into()));
        }
        Ok(BeamSplitter { reflection, transmission, input_rails, output_rails })
    }

    /// Canonical parametrization; the constraints hold analytically for any
    /// angle, and `theta = pi/4` gives a 50-50 splitter.
    pub fn from_angle(
        theta: f64,
        alpha: f64,
        convention: PhaseConvention,
        input_rails: (RailId, RailId),
        output_rails: (RailId, RailId),
    ) -> Result<Self> {
        let phase = Complex64::from_polar(1.0, alpha);
        let sign = match convention {
            PhaseConvention::TransmissionPlusI => 1.0,
            PhaseConvention::TransmissionMinusI => -1.0,
        };
        let reflection = phase * theta.cos();
        let transmission = phase * Complex64::new(0.0, sign * theta.sin());
        BeamSplitter::new(reflection, transmission, input_rails, output_rails)
    }

    /// The 50-50 convention `r = 1/sqrt(2)`, `t = i r`, so `r^2 + t^2 = 0`.
    pub fn fifty_fifty(
        input_rails: (RailId, RailId),
        output_rails: (RailId, RailId),
    ) -> Result<Self> {
        BeamSplitter::from_angle(
            std::f64::consts::FRAC_PI_4,
            0.0,
            PhaseConvention::TransmissionPlusI,
            input_rails,
            output_rails,
        )
    }

    pub fn reflection(&self) -> Complex64 {
        self.reflection
    }

    pub fn transmission(&self) -> Complex64 {
        self.transmission
    }

    pub fn input_rails(&self) -> (&RailId, &RailId) {
        (&self.input_rails.0, &self.input_rails.1)
    }

    pub fn output_rails(&self) -> (&RailId, &RailId) {
        (&self.output_rails.0, &self.output_rails.1)
    }

    /// Whether the additional 50-50 relation `r^2 + t^2 = 0` holds.
    pub fn is_fifty_fifty(&self) -> bool {
        (self.reflection * self.reflection + self.transmission * self.transmission).norm()
            <= SPLITTER_TOL
    }

    /// Scatter a mode through the splitter: the component entering on the
    /// first input rail leaves as `t` times itself on the first output rail
    /// plus `r` times itself on the second, and symmetrically for the second
    /// input. Linear and norm-preserving.
    pub fn scatter(&self, input: &RailMode) -> Result<RailMode> {
        for rail in input.rails() {
            if *rail != self.input_rails.0 && *rail != self.input_rails.1 {
                return Err(Error::RailMismatch(format!(
                    "input component on rail '{rail}' does not enter this splitter"
                )));
            }
        }
        let first = input.component(&self.input_rails.0);
        let second = input.component(&self.input_rails.1);
        let mut out = RailMode::new();
        let mut push = |rail: &RailId, mode: Mode| match out.components.remove(rail) {
            Some(existing) => {
                let summed = existing.try_add(&mode)?;
                out.insert(rail.clone(), summed);
                Ok(())
            }
            None => {
                out.insert(rail.clone(), mode);
                Ok(())
            }
        };
        if let Some(a) = first {
            push(&self.output_rails.0, a.scaled(self.transmission))?;
            push(&self.output_rails.1, a.scaled(self.reflection))?;
        }
        if let Some(b) = second {
            push(&self.output_rails.0, b.scaled(self.reflection))?;
            push(&self.output_rails.1, b.scaled(self.transmission))?;
        }
        Ok(out)
    }
}

/// A splitter placed at a coordinate along its rails.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedSplitter {
    pub splitter: BeamSplitter,
    pub position: f64,
}

/// One propagation arm: an id, an axis label, and the grid its modes live on.
#[derive(Debug, Clone, PartialEq)]
pub struct Rail {
    pub id: RailId,
    pub axis: String,
    pub grid: Grid,
}

/// Where a detector sits.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSite {
    pub rail: RailId,
    pub position: f64,
}

/// Rails plus scattering elements plus detector bookkeeping. The classical
/// dynamics is linear, so distinct input modes propagate independently.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    rails: Vec<Rail>,
    elements: Vec<PlacedSplitter>,
    detectors: BTreeMap<String, DetectorSite>,
    c: f64,
    dispersion: Dispersion,
}

impl Circuit {
    pub fn new(
        rails: Vec<Rail>,
        elements: Vec<PlacedSplitter>,
        detectors: BTreeMap<String, DetectorSite>,
        c: f64,
        dispersion: Dispersion,
    ) -> Result<Self> {
        let circuit = Circuit::new_with_uneven_detectors(rails, elements, detectors, c, dispersion)?;
        // With a single scattering element, all detectors must sit at the
        // same optical distance from it; callers with intentionally uneven
        // arms use the explicit constructor below.
        if circuit.elements.len() == 1 && circuit.detectors.len() >= 2 {
            let position = circuit.elements[0].position;
            let mut distances = circuit
                .detectors
                .values()
                .map(|site| (site.position - position).abs());
            let first = distances.next().unwrap();
            if distances.any(|d| (d - first).abs() > 1e-9) {
                return Err(Error::InvalidCircuit(
                    "detectors sit at unequal distances from the splitter; use \
                     new_with_uneven_detectors to override"
                        .into(),
                ));
            }
        }
        Ok(circuit)
    }

    pub fn new_with_uneven_detectors(
        rails: Vec<Rail>,
        elements: Vec<PlacedSplitter>,
        detectors: BTreeMap<String, DetectorSite>,
        c: f64,
        dispersion: Dispersion,
    ) -> Result<Self> {
        if !c.is_finite() || c <= 0.0 {
            return Err(Error::InvalidCircuit(format!(
                "propagation speed c = {c} must be finite and positive"
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for rail in &rails {
            if !seen.insert(rail.id.clone()) {
                return Err(Error::InvalidCircuit(format!(
                    "duplicate rail id '{}'",
                    rail.id
                )));
            }
        }
        let rail_exists = |id: &RailId| rails.iter().any(|r| &r.id == id);
        for element in &elements {
            let (i0, i1) = element.splitter.input_rails();
            let (o0, o1) = element.splitter.output_rails();
            for rail in [i0, i1, o0, o1] {
                if !rail_exists(rail) {
                    return Err(Error::InvalidCircuit(format!(
                        "splitter references unknown rail '{rail}'"
                    )));
                }
            }
        }
        for (name, site) in &detectors {
            if !rail_exists(&site.rail) {
                return Err(Error::InvalidCircuit(format!(
                    "detector '{name}' references unknown rail '{}'",
                    site.rail
                )));
            }
        }
        Ok(Circuit { rails, elements, detectors, c, dispersion })
    }

    /// The standard two-rail junction: rails `x` and `y` sharing one grid,
    /// one splitter at `position` coupling them, and one detector per rail
    /// at `position + detector_distance`.
    pub fn two_rail_junction(
        grid: Grid,
        reflection: Complex64,
        transmission: Complex64,
        position: f64,
        detector_distance: f64,
        c: f64,
        dispersion: Dispersion,
    ) -> Result<Self> {
        let x = RailId::new("x");
        let y = RailId::new("y");
        let splitter = BeamSplitter::new(
            reflection,
            transmission,
            (x.clone(), y.clone()),
            (x.clone(), y.clone()),
        )?;
        let rails = vec![
            Rail { id: x.clone(), axis: "x".into(), grid },
            Rail { id: y.clone(), axis: "y".into(), grid },
        ];
        let mut detectors = BTreeMap::new();
        detectors.insert(
            "DX".to_string(),
            DetectorSite { rail: x, position: position + detector_distance },
        );
        detectors.insert(
            "DY".to_string(),
            DetectorSite { rail: y, position: position + detector_distance },
        );
        Circuit::new(
            rails,
            vec![PlacedSplitter { splitter, position }],
            detectors,
            c,
            dispersion,
        )
    }

    pub fn rails(&self) -> &[Rail] {
        &self.rails
    }

    pub fn elements(&self) -> &[PlacedSplitter] {
        &self.elements
    }

    pub fn detectors(&self) -> &BTreeMap<String, DetectorSite> {
        &self.detectors
    }

    pub fn speed(&self) -> f64 {
        self.c
    }

    pub fn dispersion(&self) -> Dispersion {
        self.dispersion
    }

    pub fn rail(&self, id: &RailId) -> Option<&Rail> {
        self.rails.iter().find(|r| &r.id == id)
    }

    /// The free-propagation generator for one rail.
    pub fn operator_for(&self, id: &RailId) -> Result<FrequencyOperator1D> {
        let rail = self
            .rail(id)
            .ok_or_else(|| Error::InvalidCircuit(format!("unknown rail '{id}'")))?;
        FrequencyOperator1D::new(rail.grid, self.c, self.dispersion)
    }

    /// Propagate one composite mode to time `t`. Every element whose
    /// crossing time (distance from the input centroid to the element, over
    /// `c`) has passed is applied as an instantaneous mode map, in crossing
    /// order; free evolution covers the rest of the interval. Because the
    /// scattering map commutes with the identical free evolution on both
    /// rails, the result for fully crossed elements is exact; snapshots
    /// taken while a pulse straddles an element are phenomenological.
    pub fn propagate_mode(&self, input: &RailMode, t: f64) -> Result<RailMode> {
        let mut schedule: Vec<(f64, usize)> = Vec::new();
        for (idx, element) in self.elements.iter().enumerate() {
            let (i0, i1) = element.splitter.input_rails();
            if let Some(center) = input.centroid_on([i0, i1]) {
                schedule.push(((element.position - center) / self.c, idx));
            }
        }
        schedule.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut current = input.clone();
        for (t_cross, idx) in schedule {
            if t_cross > t {
                break;
            }
            let element = &self.elements[idx];
            let (i0, i1) = element.splitter.input_rails();
            let mut entering = current.restricted_to(i0).try_add(&current.restricted_to(i1))?;
            if entering.is_zero() {
                continue;
            }
            let mut rest = RailMode::new();
            for (rail, mode) in current.components() {
                if rail != i0 && rail != i1 {
                    rest.insert(rail.clone(), mode.clone());
                }
            }
            entering = element.splitter.scatter(&entering)?;
            current = entering.try_add(&rest)?;
        }

        let mut evolved = RailMode::new();
        for (rail, mode) in current.components() {
            let op = self.operator_for(rail)?;
            evolved.insert(rail.clone(), op.evolve(mode, t)?);
        }
        Ok(evolved)
    }

    /// Propagate a family of input modes to `t_final`. Inputs must start
    /// strictly upstream of every element they feed, and `t_final` must be
    /// large enough that every pulse has fully cleared its elements.
    pub fn run(&self, inputs: &[RailMode], t_final: f64) -> Result<Vec<RailMode>> {
        for input in inputs {
            for element in &self.elements {
                let (i0, i1) = element.splitter.input_rails();
                if let Some((lo, hi)) = input.support_bounds_on([i0, i1]) {
                    if hi >= element.position {
                        return Err(Error::InvalidCircuit(format!(
                            "input support reaches {hi}, not upstream of the \
                             element at {}",
                            element.position
                        )));
                    }
                    let clears_at = (element.position - lo) / self.c;
                    if t_final < clears_at {
                        return Err(Error::InvalidCircuit(format!(
                            "t_final = {t_final} but the pulse clears the \
                             element at {}, only at t = {clears_at}",
                            element.position
                        )));
                    }
                }
            }
        }
        inputs.iter().map(|input| self.propagate_mode(input, t_final)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_pulse, Envelope, PulseSpec};

    fn grid() -> Grid {
        Grid::new(4096, 1.0, 0.0).unwrap()
    }

    fn op(dispersion: Dispersion) -> FrequencyOperator1D {
        FrequencyOperator1D::new(grid(), 1.0, dispersion).unwrap()
    }

    fn pulse(center: f64, k: f64) -> Mode {
        make_pulse(&grid(), &PulseSpec::new(Envelope::Sin2, center, 384.0, k)).unwrap()
    }

    #[test]
    fn evolve_at_zero_time_is_identity() {
        let m = pulse(800.0, 1.0);
        assert_eq!(op(Dispersion::FullAbsK).evolve(&m, 0.0).unwrap(), m);
        assert_eq!(op(Dispersion::CarrierTranslation).evolve(&m, 0.0).unwrap(), m);
    }

    #[test]
    fn evolution_composes_over_time() {
        let m = pulse(800.0, 1.0);
        let o = op(Dispersion::FullAbsK);
        let two_steps = o.evolve(&o.evolve(&m, 300.0).unwrap(), 500.0).unwrap();
        let one_step = o.evolve(&m, 800.0).unwrap();
        for (a, b) in two_steps.samples().iter().zip(one_step.samples().iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn evolution_is_unitary() {
        let a = pulse(800.0, 1.0);
        let b = pulse(900.0, 1.2);
        let o = op(Dispersion::FullAbsK);
        let before = a.scalar_product(&b).unwrap();
        let after = o
            .evolve(&a, 700.0)
            .unwrap()
            .scalar_product(&o.evolve(&b, 700.0).unwrap())
            .unwrap();
        assert!((before - after).norm() < 1e-12);
        assert!((o.evolve(&a, 700.0).unwrap().norm_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn evolution_commutes_with_lattice_shifts() {
        let m = pulse(800.0, 1.0);
        let o = op(Dispersion::FullAbsK);
        let a = o.evolve(&m.shifted(64.0).unwrap(), 500.0).unwrap();
        let b = o.evolve(&m, 500.0).unwrap().shifted(64.0).unwrap();
        for (x, y) in a.samples().iter().zip(b.samples().iter()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn narrowband_pulse_matches_analytic_translation() {
        // High carrier and a wide envelope: the spectrum sits at positive
        // wavenumbers, so exp(-i c|k| t) acts as a rigid translation.
        let big = Grid::new(65536, 1.0, 0.0).unwrap();
        let spec = PulseSpec::new(Envelope::Sin2, 24576.0, 16384.0, 2.0);
        let m = make_pulse(&big, &spec).unwrap();
        let flight = 16384.0;
        let o = FrequencyOperator1D::new(big, 1.0, Dispersion::FullAbsK).unwrap();
        let evolved = o.evolve(&m, flight).unwrap();
        let analytic = make_pulse(
            &big,
            &PulseSpec::new(Envelope::Sin2, 24576.0 + flight, 16384.0, 2.0),
        )
        .unwrap()
        // The closed-form translate carries the carrier phase exp(-i k c t).
        .scaled(Complex64::from_polar(1.0, -2.0 * flight));
        let worst = evolved
            .samples()
            .iter()
            .zip(analytic.samples().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-10, "max pointwise deviation {worst}");

        let translated = FrequencyOperator1D::new(big, 1.0, Dispersion::CarrierTranslation)
            .unwrap()
            .evolve(&m, flight)
            .unwrap();
        let worst_backend = evolved
            .samples()
            .iter()
            .zip(translated.samples().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst_backend < 1e-10, "backend disagreement {worst_backend}");
    }

    #[test]
    fn translation_backend_rejects_fractional_shifts() {
        let m = pulse(800.0, 1.0);
        let o = op(Dispersion::CarrierTranslation);
        assert!(matches!(
            o.evolve(&m, 0.5),
            Err(Error::NonCommensurateShift { .. })
        ));
    }

    #[test]
    fn guard_band_catches_wraparound() {
        let m = pulse(3000.0, 1.0);
        let o = op(Dispersion::FullAbsK);
        assert!(matches!(
            o.evolve(&m, 2000.0),
            Err(Error::SupportOutOfBounds(_))
        ));
    }

    #[test]
    fn splitter_constraints_are_enforced() {
        let x = RailId::new("x");
        let y = RailId::new("y");
        let ok = BeamSplitter::new(
            Complex64::new(0.6, 0.0),
            Complex64::new(0.0, 0.8),
            (x.clone(), y.clone()),
            (x.clone(), y.clone()),
        );
        assert!(ok.is_ok());
        assert!(!ok.unwrap().is_fifty_fifty());
        let bad_power = BeamSplitter::new(
            Complex64::new(0.6, 0.0),
            Complex64::new(0.0, 0.7),
            (x.clone(), y.clone()),
            (x.clone(), y.clone()),
        );
        assert!(matches!(bad_power, Err(Error::InvalidSplitter(_))));
        let bad_phase = BeamSplitter::new(
            Complex64::new(0.6, 0.0),
            Complex64::new(0.8, 0.0),
            (x.clone(), y.clone()),
            (x, y),
        );
        assert!(matches!(bad_phase, Err(Error::InvalidSplitter(_))));
    }

    #[test]
    fn fifty_fifty_satisfies_the_extra_relation() {
        let x = RailId::new("x");
        let y = RailId::new("y");
        let bs = BeamSplitter::fifty_fifty((x.clone(), y.clone()), (x, y)).unwrap();
        assert!(bs.is_fifty_fifty());
        let r = bs.reflection();
        let t = bs.transmission();
        assert!((r.norm_sqr() - 0.5).abs() < 1e-12);
        assert!((t - Complex64::i() * r).norm() < 1e-12);
    }

    #[test]
    fn scatter_splits_a_single_input_evenly() {
        let x = RailId::new("x");
        let y = RailId::new("y");
        let bs = BeamSplitter::fifty_fifty((x.clone(), y.clone()), (x.clone(), y.clone())).unwrap();
        let input = RailMode::single(x.clone(), pulse(800.0, 1.0));
        let out = bs.scatter(&input).unwrap();
        assert!((out.component(&x).unwrap().norm_sq() - 0.5).abs() < 1e-12);
        assert!((out.component(&y).unwrap().norm_sq() - 0.5).abs() < 1e-12);
        assert!((out.norm_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scatter_of_nothing_is_nothing() {
        let x = RailId::new("x");
        let y = RailId::new("y");
        let bs = BeamSplitter::fifty_fifty((x.clone(), y.clone()), (x, y)).unwrap();
        let out = bs.scatter(&RailMode::new()).unwrap();
        assert!(out.is_zero());
    }

    #[test]
    fn scatter_rejects_foreign_rails() {
        let x = RailId::new("x");
        let y = RailId::new("y");
        let bs = BeamSplitter::fifty_fifty((x.clone(), y.clone()), (x, y)).unwrap();
        let input = RailMode::single(RailId::new("w"), pulse(800.0, 1.0));
        assert!(matches!(bs.scatter(&input), Err(Error::RailMismatch(_))));
    }

    #[test]
    fn scatter_preserves_the_gram_matrix() {
        // Random admissible coefficients via the canonical parametrization.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let x = RailId::new("x");
        let y = RailId::new("y");
        for _ in 0..25 {
            let theta: f64 = rng.gen_range(0.05..std::f64::consts::FRAC_PI_2 - 0.05);
            let alpha: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let convention = if rng.gen_bool(0.5) {
                PhaseConvention::TransmissionPlusI
            } else {
                PhaseConvention::TransmissionMinusI
            };
            let bs = BeamSplitter::from_angle(
                theta,
                alpha,
                convention,
                (x.clone(), y.clone()),
                (x.clone(), y.clone()),
            )
            .unwrap();
            let mut a = RailMode::single(x.clone(), pulse(700.0, 0.9));
            a.insert(y.clone(), pulse(850.0, 1.3).scaled(Complex64::new(0.3, 0.4)));
            let b = RailMode::single(y.clone(), pulse(820.0, 1.1));
            let before = a.overlap(&b).unwrap();
            let after = bs.scatter(&a).unwrap().overlap(&bs.scatter(&b).unwrap()).unwrap();
            assert!((before - after).norm() < 1e-12);
            let na = a.norm_sq();
            let na_after = bs.scatter(&a).unwrap().norm_sq();
            assert!((na - na_after).abs() < 1e-12);
        }
    }

    fn junction() -> Circuit {
        let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let t = Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
        Circuit::two_rail_junction(grid(), r, t, 2048.0, 1024.0, 1.0, Dispersion::FullAbsK)
            .unwrap()
    }

    #[test]
    fn empty_circuit_only_evolves() {
        let circuit = Circuit::new(
            vec![Rail { id: RailId::new("x"), axis: "x".into(), grid: grid() }],
            vec![],
            BTreeMap::new(),
            1.0,
            Dispersion::FullAbsK,
        )
        .unwrap();
        let input = RailMode::single(RailId::new("x"), pulse(800.0, 1.0));
        let out = circuit.run(std::slice::from_ref(&input), 500.0).unwrap();
        let direct = op(Dispersion::FullAbsK)
            .evolve(input.component(&RailId::new("x")).unwrap(), 500.0)
            .unwrap();
        assert_eq!(out[0].component(&RailId::new("x")).unwrap(), &direct);
    }

    #[test]
    fn junction_produces_disjoint_half_pulses() {
        let circuit = junction();
        let x = RailId::new("x");
        let y = RailId::new("y");
        let input = RailMode::single(x.clone(), pulse(1024.0, 1.0));
        let out = circuit.run(&[input], 2048.0).unwrap().remove(0);
        let tx = out.component(&x).unwrap();
        let ty = out.component(&y).unwrap();
        assert!((tx.norm_sq() - 0.5).abs() < 1e-12);
        assert!((ty.norm_sq() - 0.5).abs() < 1e-12);
        // Both emerge centered on the detectors.
        assert!((tx.centroid().unwrap() - 3072.0).abs() < 1.0);
        assert!((ty.centroid().unwrap() - 3072.0).abs() < 1.0);
    }

    #[test]
    fn symmetric_inputs_produce_swapped_outputs() {
        let circuit = junction();
        let x = RailId::new("x");
        let y = RailId::new("y");
        let p = pulse(1024.0, 1.0);
        let a = RailMode::single(x.clone(), p.clone());
        let b = RailMode::single(y.clone(), p);
        let outs = circuit.run(&[a, b], 2048.0).unwrap();
        let r = circuit.elements()[0].splitter.reflection();
        let t = circuit.elements()[0].splitter.transmission();
        // a's x-component carries t, b's carries r, over the same pulse.
        let ax = outs[0].component(&x).unwrap().scaled(r);
        let bx = outs[1].component(&x).unwrap().scaled(t);
        for (u, v) in ax.samples().iter().zip(bx.samples().iter()) {
            assert!((u - v).norm() < 1e-12);
        }
        let ay = outs[0].component(&y).unwrap().scaled(t);
        let by = outs[1].component(&y).unwrap().scaled(r);
        for (u, v) in ay.samples().iter().zip(by.samples().iter()) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn run_rejects_inputs_not_upstream() {
        let circuit = junction();
        let input = RailMode::single(RailId::new("x"), pulse(3000.0, 1.0));
        assert!(matches!(
            circuit.run(&[input], 500.0),
            Err(Error::InvalidCircuit(_))
        ));
    }

    #[test]
    fn run_rejects_too_small_t_final() {
        let circuit = junction();
        let input = RailMode::single(RailId::new("x"), pulse(1024.0, 1.0));
        assert!(matches!(
            circuit.run(&[input], 100.0),
            Err(Error::InvalidCircuit(_))
        ));
    }

    #[test]
    fn snapshot_before_crossing_leaves_the_pulse_unsplit() {
        let circuit = junction();
        let x = RailId::new("x");
        let input = RailMode::single(x.clone(), pulse(1024.0, 1.0));
        let early = circuit.propagate_mode(&input, 400.0).unwrap();
        assert!(early.component(&RailId::new("y")).is_none());
        assert!((early.component(&x).unwrap().norm_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circuits_reject_duplicate_or_unknown_rails() {
        let x = RailId::new("x");
        let y = RailId::new("y");
        let duplicated = Circuit::new(
            vec![
                Rail { id: x.clone(), axis: "x".into(), grid: grid() },
                Rail { id: x.clone(), axis: "x".into(), grid: grid() },
            ],
            vec![],
            BTreeMap::new(),
            1.0,
            Dispersion::FullAbsK,
        );
        assert!(matches!(duplicated, Err(Error::InvalidCircuit(_))));

        let bs = BeamSplitter::fifty_fifty((x.clone(), y.clone()), (x.clone(), y)).unwrap();
        let dangling = Circuit::new(
            vec![Rail { id: x, axis: "x".into(), grid: grid() }],
            vec![PlacedSplitter { splitter: bs, position: 2048.0 }],
            BTreeMap::new(),
            1.0,
            Dispersion::FullAbsK,
        );
        assert!(matches!(dangling, Err(Error::InvalidCircuit(_))));
    }

    #[test]
    fn detectors_must_be_equidistant_unless_overridden() {
        let x = RailId::new("x");
        let y = RailId::new("y");
        let bs = BeamSplitter::fifty_fifty((x.clone(), y.clone()), (x.clone(), y.clone())).unwrap();
        let rails = vec![
            Rail { id: x.clone(), axis: "x".into(), grid: grid() },
            Rail { id: y.clone(), axis: "y".into(), grid: grid() },
        ];
        let mut detectors = BTreeMap::new();
        detectors.insert("DX".into(), DetectorSite { rail: x, position: 3000.0 });
        detectors.insert("DY".into(), DetectorSite { rail: y, position: 2900.0 });
        let uneven = Circuit::new(
            rails.clone(),
            vec![PlacedSplitter { splitter: bs.clone(), position: 2048.0 }],
            detectors.clone(),
            1.0,
            Dispersion::FullAbsK,
        );
        assert!(matches!(uneven, Err(Error::InvalidCircuit(_))));
        let overridden = Circuit::new_with_uneven_detectors(
            rails,
            vec![PlacedSplitter { splitter: bs, position: 2048.0 }],
            detectors,
            1.0,
            Dispersion::FullAbsK,
        );
        assert!(overridden.is_ok());
    }
}
