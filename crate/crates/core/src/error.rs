use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("axis {axis} out of range for a {dim}-dimensional grid")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("expected a {expected} tensor, got a {found} one")]
    VarianceMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("degenerate metric at grid point {point}: leading minor {minor} = {value:e}")]
    DegenerateMetric {
        point: usize,
        minor: usize,
        value: f64,
    },

    #[error("amplitude {amplitude} leaves the positive-definite cone; lower it")]
    AmplitudeTooLarge { amplitude: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time {t} outside validity window [-{window}, {window}]")]
    OutsideWindow { t: f64, window: f64 },

    #[error("need at least {needed} time samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("finite-difference step for degree of freedom {dof} leaves the metric cone")]
    GradientStep { dof: usize },

    #[error("snapshot: {0}")]
    Snapshot(String),
}
