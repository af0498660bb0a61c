use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("symmetry violation ({symmetry}): worst deviation {worst:.3e} at index ({m1},{m2})")]
    Symmetry {
        symmetry: &'static str,
        worst: f64,
        m1: i32,
        m2: i32,
    },

    #[error("eigensolver failure at k = ({0:.6}, {1:.6}): LAPACK info = {2}")]
    Eigensolver(f64, f64, i32),

    #[error("linear solve failure: {0}")]
    LinearSolve(String),

    #[error("hypothesis failure: {0}")]
    Hypothesis(String),

    #[error("rotation classification unavailable: deformation breaks the fourfold symmetry (tau1 = {tau1:.3e}, tau3 = {tau3:.3e})")]
    RotationBroken { tau1: f64, tau3: f64 },

    #[error("near-singular deflated system: eigenvalue within {0:.3e} of the shift outside the declared kernel")]
    DeflationSingular(f64),

    #[error("parameters outside the reduction validity radius: {0}")]
    ValidityRadius(String),

    #[error("Newton iteration diverged after {iterations} steps, residual {residual:.3e}")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("gap closure on grid at k = ({0:.6}, {1:.6}): gap {2:.3e}")]
    GapClosure(f64, f64, f64),

    #[error("band {band} not isolated: min gap {gap:.3e} at k = ({k1:.6}, {k2:.6})")]
    BandNotIsolated { band: usize, gap: f64, k1: f64, k2: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
