use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("element {element} appears in more than one block")]
    Overlap { element: usize },

    #[error("blocks do not cover 1..={d}: {detail}")]
    Coverage { d: usize, detail: String },

    #[error("enumeration would produce {count} partitions, above the cap of {cap}")]
    TooLarge { count: u128, cap: u128 },

    #[error("no coarsening of {partition} stays in class {class}")]
    NoCoarsening { partition: String, class: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("partition {0} is not an interval partition")]
    NotInterval(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("integer overflow while computing {0}")]
    Overflow(String),

    #[error("cannot parse partition {input:?}: {reason}")]
    Parse { input: String, reason: String },

    #[error("model list is empty")]
    EmptyModelList,

    #[error("model pool is empty")]
    EmptyPool,

    #[error("arm set is empty")]
    EmptyArmSet,

    #[error("could not draw a parameter with separation {eps0} after {attempts} attempts")]
    InfeasibleSeparation { eps0: f64, attempts: usize },

    #[error("phase length {phase} must lie in [1, {horizon})")]
    InvalidPhase { phase: usize, horizon: usize },

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
