//! Simulation of one- and few-photon pulses in linear optical circuits.
//!
//! The classical layer propagates complex pulse profiles on periodic 1D
//! rails (`grid`, `propagation`, `spectral`); the quantum layer builds
//! bosonic Fock states directly on those pulses (`fock`) and reads them out
//! with projector detectors and exact rail-sector statistics (`detection`).
//! Everything is deterministic: no randomness, no hidden state.

pub mod detection;
pub mod error;
pub(crate) mod fft;
pub mod fock;
pub mod grid;
pub mod propagation;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{make_pulse, Envelope, Grid, Mode, PulseSpec};
pub use propagation::{
    BeamSplitter, Circuit, DetectorSite, Dispersion, FrequencyOperator1D, PhaseConvention,
    PlacedSplitter, Rail, RailId, RailMode,
};
pub use fock::{
    commutator_b_bdag, energy_expectation, evolve_fock_state, evolve_fock_state_through,
    monomial_state, permanent, vacuum_expectation_oracle, FockOp, FockState, ModeLike, Monomial,
};
pub use detection::{
    classical_particle_baseline, classical_wave_baseline, hom_sweep, one_photon_report,
    rail_occupation_weights, rail_sector_decompose, two_photon_report, DetectionReport,
    DetectorObservable, ObservableKind, SectorWeights,
};
pub use spectral::{
    eigenbasis_evolution_fidelity, from_reciprocal, to_reciprocal, SpectralCoefficients,
};
