use thiserror::Error;

/// Errors raised by the solvers and diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point (t={t}, x={x}) outside the model domain [0, {horizon}] x [0, {length}]")]
    Domain { t: f64, x: f64, horizon: f64, length: f64 },
    #[error("invalid outer-flow model: {0}")]
    Model(String),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("profile is not strictly increasing at node {index} (value {value})")]
    Monotonicity { index: usize, value: f64 },
    #[error("profile truncated: u/Ue = {ratio} at the outer node, tolerance {tolerance}")]
    Truncation { ratio: f64, tolerance: f64 },
    #[error("Crocco map not invertible: w = {value} at interior node {index}")]
    Invertibility { index: usize, value: f64 },
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical instability at node ({i}, {j}), t = {t}")]
    Instability { i: usize, j: usize, t: f64 },
    #[error("tridiagonal solve failed: zero pivot at row {0}")]
    SingularPivot(usize),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("no blow-up before the horizon even at G0 = {upper}")]
    ThresholdUnreachable { upper: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
