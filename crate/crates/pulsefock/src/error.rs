use thiserror::Error;

/// Errors shared by all simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("modes live on different grids")]
    GridMismatch,

    #[error("support violates the guard band: {0}")]
    SupportOutOfBounds(String),

    #[error("operation is undefined for a zero mode or an empty state")]
    ZeroMode,

    #[error("translation by {distance} is not a lattice multiple of dx = {dx}")]
    NonCommensurateShift { distance: f64, dx: f64 },

    #[error("mode occupies unexpected rails: {0}")]
    RailMismatch(String),

    #[error("state norm^2 = {norm_sq} differs from 1 beyond tolerance")]
    NotNormalized { norm_sq: f64 },

    #[error("truncated basis captures {captured} of the mode weight, need at least {required}")]
    Truncation { captured: f64, required: f64 },

    #[error("invalid pulse specification: {0}")]
    InvalidPulse(String),

    #[error("invalid beam-splitter coefficients: {0}")]
    InvalidSplitter(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("observable acts on the {expected}-photon sector, state carries {actual} photons")]
    SectorMismatch { expected: usize, actual: usize },

    #[error("photon number {n} exceeds the supported cap {cap}")]
    PhotonNumberTooLarge { n: usize, cap: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
