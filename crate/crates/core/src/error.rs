use thiserror::Error;

/// Errors raised by the verification operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QhjError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("x = {x} outside the tabulated domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("x = {x} is not a grid point")]
    OffGrid { x: f64 },

    #[error(
        "solution growth exceeded {limit:e} at x = {x}; restrict the domain out of the classically forbidden region"
    )]
    Growth { x: f64, limit: f64 },

    #[error("action slope vanishes at x = {x}")]
    SingularSlope { x: f64 },

    #[error("numerator and denominator of the action both vanish at {point:?}")]
    IndeterminatePoint { point: [f64; 3] },

    #[error("tangent composition pole: 1 - fx*fy - fx*fz - fy*fz = {denominator:e}")]
    Pole { denominator: f64 },

    #[error("amplitude vanishes at {point:?}")]
    AmplitudeNode { point: Vec<f64> },

    #[error("step size too large: |v|*dt = {displacement:e} exceeds the limit {limit:e} at t = {t}")]
    StepSize { t: f64, displacement: f64, limit: f64 },

    #[error("numerical rank unstable across generic draws: {ranks:?}")]
    RankInstability { ranks: Vec<usize>, singular_values: Vec<Vec<f64>> },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

pub type Result<T> = std::result::Result<T, QhjError>;
