//! Detector observables and coincidence statistics.
//!
//! Detectors are ideal projectors built from the propagated detection-time
//! modes. For delayed arrivals the outcome sectors come from the exact
//! rail decomposition: rails are orthogonal subspaces, so an N-photon state
//! splits multilinearly into components with a definite photon count per
//! rail, and the squared norms of those components are the outcome
//! probabilities. In the degenerate case this reduces to the reference-mode
//! projectors. Classical-wave and classical-particle baselines are included
//! for contrast.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{monomial_state, FockState};
use crate::grid::{make_pulse, PulseSpec};
use crate::propagation::{Circuit, RailId, RailMode};

/// States fed to observables must be normalized to within this tolerance.
const NORMALIZATION_TOL: f64 = 1e-10;

/// What a detector readout asks of the state.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservableKind {
    /// Exactly one photon, carried by the reference mode on this rail.
    SingleAt(RailId),
    /// Two photons, both carried by the reference mode on this rail.
    DoubleAt(RailId),
    /// One photon on each rail of the pair, in the reference modes.
    Coincidence(RailId, RailId),
}

/// A projector observable assembled from normalized detection-time modes.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorObservable {
    kind: ObservableKind,
    references: BTreeMap<RailId, RailMode>,
}

impl DetectorObservable {
    pub fn single_at(rail: RailId, reference: RailMode) -> Result<Self> {
        validate_reference(&rail, &reference)?;
        let mut references = BTreeMap::new();
        references.insert(rail.clone(), reference);
        Ok(DetectorObservable { kind: ObservableKind::SingleAt(rail), references })
    }

    pub fn double_at(rail: RailId, reference: RailMode) -> Result<Self> {
        validate_reference(&rail, &reference)?;
        let mut references = BTreeMap::new();
        references.insert(rail.clone(), reference);
        Ok(DetectorObservable { kind: ObservableKind::DoubleAt(rail), references })
    }

    pub fn coincidence(
        rail_x: RailId,
        reference_x: RailMode,
        rail_y: RailId,
        reference_y: RailMode,
    ) -> Result<Self> {
        validate_reference(&rail_x, &reference_x)?;
        validate_reference(&rail_y, &reference_y)?;
        if rail_x == rail_y {
            return Err(Error::RailMismatch(
                "coincidence needs two distinct rails".into(),
            ));
        }
        let mut references = BTreeMap::new();
        references.insert(rail_x.clone(), reference_x);
        references.insert(rail_y.clone(), reference_y);
        Ok(DetectorObservable {
            kind: ObservableKind::Coincidence(rail_x, rail_y),
            references,
        })
    }

    pub fn kind(&self) -> &ObservableKind {
        &self.kind
    }

    /// `<state| O |state>` for a normalized state in the observable's
    /// photon sector. Real and inside `[0, 1]` because `O` is a projector.
    pub fn expectation(&self, state: &FockState<RailMode>) -> Result<f64> {
        let norm_sq = state.norm_sq()?;
        if (norm_sq - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        self.project(state)?.norm_sq()
    }

    /// Apply the projector. `expectation` is the squared norm of the result.
    pub fn project(&self, state: &FockState<RailMode>) -> Result<FockState<RailMode>> {
        let one = Complex64::new(1.0, 0.0);
        match &self.kind {
            ObservableKind::SingleAt(rail) => {
                self.require_sector(state, 1)?;
                let basis = monomial_state(one, vec![self.references[rail].clone()]);
                let amplitude = basis.inner_product(state)?;
                Ok(basis.scaled(amplitude))
            }
            ObservableKind::DoubleAt(rail) => {
                self.require_sector(state, 2)?;
                let reference = self.references[rail].clone();
                let pair = monomial_state(one, vec![reference.clone(), reference]);
                // |Bdag Bdag vac|^2 = 2 for a normalized label
                let amplitude = pair.inner_product(state)? / 2.0;
                Ok(pair.scaled(amplitude))
            }
            ObservableKind::Coincidence(rail_x, rail_y) => {
                self.require_sector(state, 2)?;
                let pair = monomial_state(
                    one,
                    vec![self.references[rail_x].clone(), self.references[rail_y].clone()],
                );
                // orthogonal rails make this basis monomial normalized
                let amplitude = pair.inner_product(state)?;
                Ok(pair.scaled(amplitude))
            }
        }
    }

    fn require_sector(&self, state: &FockState<RailMode>, expected: usize) -> Result<()> {
        if state.photon_number() != expected {
            return Err(Error::SectorMismatch { expected, actual: state.photon_number() });
        }
        Ok(())
    }
}

fn validate_reference(rail: &RailId, reference: &RailMode) -> Result<()> {
    for r in reference.rails() {
        if r != rail {
            return Err(Error::RailMismatch(format!(
                "reference mode for rail '{rail}' has support on '{r}'"
            )));
        }
    }
    let norm_sq = reference.norm_sq();
    if (norm_sq - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized { norm_sq });
    }
    Ok(())
}

/// Squared norms of the rail-count components of a state over a rail pair;
/// entry `k` holds the weight of the sector with `k` photons on the first
/// rail. The entries sum to the state's squared norm.
pub fn rail_occupation_weights(
    state: &FockState<RailMode>,
    rails: (&RailId, &RailId),
) -> Result<Vec<f64>> {
    let n = state.photon_number();
    let (rail_a, rail_b) = rails;
    let mut sectors: Vec<FockState<RailMode>> = vec![FockState::zero_state(); n + 1];
    for term in state.terms() {
        let mut splits = Vec::with_capacity(n);
        for mode in term.modes() {
            for rail in mode.rails() {
                if rail != rail_a && rail != rail_b {
                    return Err(Error::RailMismatch(format!(
                        "constituent mode has support on rail '{rail}', outside \
                         the decomposition pair"
                    )));
                }
            }
            let on_a = mode.restricted_to(rail_a);
            let on_b = mode.restricted_to(rail_b);
            if on_a.is_zero() && on_b.is_zero() {
                return Err(Error::RailMismatch(
                    "constituent mode has support on neither rail".into(),
                ));
            }
            splits.push((on_a, on_b));
        }
        // multilinear expansion of prod_j (Bdag_{a_j} + Bdag_{b_j})
        for mask in 0..(1usize << n) {
            let mut modes = Vec::with_capacity(n);
            let mut count_a = 0;
            for (j, (on_a, on_b)) in splits.iter().enumerate() {
                if mask & (1 << j) != 0 {
                    modes.push(on_a.clone());
                    count_a += 1;
                } else {
                    modes.push(on_b.clone());
                }
            }
            // monomials containing a zero component collapse to the zero state
            let piece = monomial_state(term.coeff(), modes);
            sectors[count_a] = sectors[count_a].try_add(&piece)?;
        }
    }
    sectors.iter().map(|s| s.norm_sq()).collect()
}

/// Two-photon outcome sectors over a rail pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorWeights {
    /// Both photons on the first rail.
    pub xx: f64,
    /// Both photons on the second rail.
    pub yy: f64,
    /// One photon on each rail (the symmetric mixed sector).
    pub xy: f64,
}

/// Exact three-way sector split of a two-photon state.
pub fn rail_sector_decompose(
    state: &FockState<RailMode>,
    rails: (&RailId, &RailId),
) -> Result<SectorWeights> {
    if state.photon_number() != 2 {
        return Err(Error::SectorMismatch { expected: 2, actual: state.photon_number() });
    }
    let weights = rail_occupation_weights(state, rails)?;
    Ok(SectorWeights { xx: weights[2], yy: weights[0], xy: weights[1] })
}

/// Probabilities of the two-detector readout. Raw values are kept for
/// residue diagnostics; the public accessors clamp into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionReport {
    raw_single_x: f64,
    raw_single_y: f64,
    raw_double_x: f64,
    raw_double_y: f64,
    raw_coincidence: f64,
    overlap: Complex64,
}

impl DetectionReport {
    fn new(raw: [f64; 5], overlap: Complex64) -> Self {
        DetectionReport {
            raw_single_x: raw[0],
            raw_single_y: raw[1],
            raw_double_x: raw[2],
            raw_double_y: raw[3],
            raw_coincidence: raw[4],
            overlap,
        }
    }

    pub fn p_single_x(&self) -> f64 {
        self.raw_single_x.clamp(0.0, 1.0)
    }

    pub fn p_single_y(&self) -> f64 {
        self.raw_single_y.clamp(0.0, 1.0)
    }

    pub fn p_double_x(&self) -> f64 {
        self.raw_double_x.clamp(0.0, 1.0)
    }

    pub fn p_double_y(&self) -> f64 {
        self.raw_double_y.clamp(0.0, 1.0)
    }

    pub fn p_coincidence(&self) -> f64 {
        self.raw_coincidence.clamp(0.0, 1.0)
    }

    /// The complex overlap of the co-propagating detection-time modes.
    pub fn overlap(&self) -> Complex64 {
        self.overlap
    }

    /// Largest distance any raw value sits outside `[0, 1]`.
    pub fn clamp_residual(&self) -> f64 {
        [
            self.raw_single_x,
            self.raw_single_y,
            self.raw_double_x,
            self.raw_double_y,
            self.raw_coincidence,
        ]
        .iter()
        .map(|v| (v - v.clamp(0.0, 1.0)).abs())
        .fold(0.0, f64::max)
    }
}

/// Readout of a normalized one-photon state: the photon lands on one rail
/// or the other.
pub fn one_photon_report(
    state: &FockState<RailMode>,
    rails: (&RailId, &RailId),
) -> Result<DetectionReport> {
    if state.photon_number() != 1 {
        return Err(Error::SectorMismatch { expected: 1, actual: state.photon_number() });
    }
    let norm_sq = state.norm_sq()?;
    if (norm_sq - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized { norm_sq });
    }
    let weights = rail_occupation_weights(state, rails)?;
    Ok(DetectionReport::new(
        [weights[1], weights[0], 0.0, 0.0, 0.0],
        Complex64::new(0.0, 0.0),
    ))
}

/// Readout of a normalized two-photon state. With ideal lossless detectors
/// the three sectors exhaust the outcomes, and "exactly one photon at a
/// detector" is the coincidence event.
pub fn two_photon_report(
    state: &FockState<RailMode>,
    rails: (&RailId, &RailId),
    overlap: Complex64,
) -> Result<DetectionReport> {
    let norm_sq = state.norm_sq()?;
    if (norm_sq - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized { norm_sq });
    }
    let sectors = rail_sector_decompose(state, rails)?;
    Ok(DetectionReport::new(
        [sectors.xy, sectors.xy, sectors.xx, sectors.yy, sectors.xy],
        overlap,
    ))
}

/// Sweep the arrival delay of the second pulse through a two-input
/// interference circuit and report the detection statistics per delay.
///
/// For each delay `tau` the first input is the given pulse on the first
/// input rail, the second is the same pulse displaced by `c*tau` on the
/// second input rail; both are propagated to the common detection time, the
/// two-photon state is assembled, and its rail sectors are measured.
pub fn hom_sweep(
    circuit: &Circuit,
    pulse: &PulseSpec,
    delays: &[f64],
) -> Result<Vec<DetectionReport>> {
    let element = circuit
        .elements()
        .first()
        .ok_or_else(|| Error::InvalidCircuit("delay sweep needs a splitter".into()))?;
    let (rail_x, rail_y) = element.splitter.input_rails();
    let rail_x = rail_x.clone();
    let rail_y = rail_y.clone();
    let grid_x = circuit
        .rail(&rail_x)
        .ok_or_else(|| Error::InvalidCircuit(format!("unknown rail '{rail_x}'")))?
        .grid;
    let grid_y = circuit
        .rail(&rail_y)
        .ok_or_else(|| Error::InvalidCircuit(format!("unknown rail '{rail_y}'")))?
        .grid;
    let t_final = circuit
        .detectors()
        .values()
        .map(|site| (site.position - pulse.center) / circuit.speed())
        .fold(f64::NEG_INFINITY, f64::max);
    if !t_final.is_finite() {
        return Err(Error::InvalidCircuit("delay sweep needs detectors".into()));
    }

    let base_x = make_pulse(&grid_x, pulse)?;
    let base_y = make_pulse(&grid_y, pulse)?;
    // the x-rail components carry t and r respectively; divide those out so
    // the reported overlap is the bare detection-time mode overlap
    let coefficient_phases =
        element.splitter.transmission().conj() * element.splitter.reflection();
    let one = Complex64::new(1.0, 0.0);
    let mut reports = Vec::with_capacity(delays.len());
    for &tau in delays {
        let delayed = base_y.shifted(circuit.speed() * tau)?;
        let input_a = RailMode::single(rail_x.clone(), base_x.clone());
        let input_b = RailMode::single(rail_y.clone(), delayed);
        let outs = circuit.run(&[input_a, input_b], t_final)?;
        let overlap = match (outs[0].component(&rail_x), outs[1].component(&rail_x)) {
            (Some(a), Some(b)) if coefficient_phases.norm() > 0.0 => {
                a.scalar_product(b)? / coefficient_phases
            }
            _ => Complex64::new(0.0, 0.0),
        };
        let state = monomial_state(one, vec![outs[0].clone(), outs[1].clone()]);
        reports.push(two_photon_report(&state, (&rail_x, &rail_y), overlap)?);
    }
    Ok(reports)
}

/// Distinguishable classical particles, each reflected or transmitted with
/// probability one half: doubles 1/4 each, coincidence 1/2.
pub fn classical_particle_baseline() -> DetectionReport {
    DetectionReport::new(
        [0.5, 0.5, 0.25, 0.25, 0.5],
        Complex64::new(0.0, 0.0),
    )
}

/// Classical waves split at the junction, so both detectors always receive
/// energy: simultaneous activation is certain.
pub fn classical_wave_baseline() -> DetectionReport {
    DetectionReport::new([0.0, 0.0, 0.0, 0.0, 1.0], Complex64::new(0.0, 0.0))
}
