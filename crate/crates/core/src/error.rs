use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("scale mismatch: radius {left} vs {right}")]
    ScaleMismatch { left: f64, right: f64 },

    #[error("invalid radius {0}: must be positive and finite")]
    InvalidRadius(f64),

    #[error("value {value} outside domain: {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("incoherent scales: {0}")]
    IncoherentScales(String),

    #[error("precision exhausted: the extreme dyadic code supports at most 52 neurons, got {0}")]
    PrecisionExhausted(usize),

    #[error("cell budget exceeded: {needed} cells needed, budget is {budget}; use the sampled proxy instead")]
    CellBudgetExceeded { needed: usize, budget: usize },

    #[error("indistinguishable pair: the two stimuli have identical active sets")]
    IndistinguishablePair,

    #[error("bound hypothesis unmet: {0}")]
    HypothesisUnmet(String),

    #[error("invalid code: {0}")]
    InvalidCode(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
