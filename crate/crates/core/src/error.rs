use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A scenario or parameter set violates one of its invariants.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A geometric query was made at a point outside the walkable set.
    #[error("point ({x}, {y}) is outside the walkable domain")]
    OutsideDomain { x: f64, y: f64 },

    /// `dt * sup(rate)` exceeds one, so switching probabilities are not valid.
    #[error("time step {dt} exceeds 1/sup(rate) = {bound} (dt * sup = {product})")]
    StepBound { dt: f64, bound: f64, product: f64 },

    /// The numerical solution left its admissible range.
    #[error("simulation failed at t = {t}: {reason}")]
    Runtime { t: f64, reason: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("scenario parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::StepBound { .. } | Error::Parse(_) | Error::GridMismatch(_) => 2,
            _ => 3,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::OutsideDomain { .. } => "domain",
            Error::StepBound { .. } => "step_bound",
            Error::Runtime { .. } => "runtime",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::Io(_) => "io",
            Error::Parse(_) => "parse",
            Error::Csv(_) => "csv",
        }
    }
}
