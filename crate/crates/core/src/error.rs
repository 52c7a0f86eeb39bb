use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("root solver did not converge after {iterations} iterations (bracket [{lo}, {hi}])")]
    Solver { iterations: usize, lo: f64, hi: f64 },

    /// The equilibrium would sit at or beyond a power cap, or `(K-1)·β* >= 1`.
    #[error("non-saturation violated: {0}")]
    NonSaturationViolated(String),

    #[error("player {player}: required power {required} exceeds cap {cap}")]
    PowerCap { player: usize, required: f64, cap: f64 },

    /// A strategy was asked to act without a signal its information row requires.
    #[error("missing information for {strategy}: {field}")]
    Information { strategy: String, field: &'static str },

    #[error("transition law is reducible: {0}")]
    Reducible(String),

    #[error("invalid channel model: {0}")]
    Model(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io(_) | Error::Csv(_) => 1,
            _ => 3,
        }
    }
}
