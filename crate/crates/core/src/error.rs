use thiserror::Error;

pub type Result<T> = std::result::Result<T, PnpError>;

#[derive(Debug, Error)]
pub enum PnpError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {what} at node {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("negative concentration in {what} at node {index}: {value:e}")]
    NegativeConcentration { what: &'static str, index: usize, value: f64 },

    /// The net charge p - n + rho_f does not have zero mass, so the periodic
    /// Poisson problem has no solution.
    #[error("charge data not mean-zero: mass {mass:e} exceeds tolerance {tolerance:e}")]
    IncompatibleCharge { mass: f64, tolerance: f64 },

    #[error("second-order step requires the previous time level")]
    MissingHistory,

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<PnpError>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PnpError {
    /// Process exit code for the CLI: 2 for configuration problems, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PnpError::InvalidGrid(_)
            | PnpError::InvalidParameter(_)
            | PnpError::Config(_)
            | PnpError::Csv(_)
            | PnpError::Io(_) => 2,
            PnpError::NonFinite { .. }
            | PnpError::NegativeConcentration { .. }
            | PnpError::IncompatibleCharge { .. }
            | PnpError::MissingHistory => 3,
            PnpError::Step { source, .. } => source.exit_code(),
        }
    }

    /// Short machine-readable tag used in CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            PnpError::InvalidGrid(_) => "invalid_grid",
            PnpError::InvalidParameter(_) => "invalid_parameter",
            PnpError::NonFinite { .. } => "non_finite",
            PnpError::NegativeConcentration { .. } => "negative_concentration",
            PnpError::IncompatibleCharge { .. } => "incompatible_charge",
            PnpError::MissingHistory => "missing_history",
            PnpError::Step { source, .. } => source.kind(),
            PnpError::Config(_) => "config",
            PnpError::Csv(_) => "csv",
            PnpError::Io(_) => "io",
        }
    }
}
