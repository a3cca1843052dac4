use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid instance: {field}: {reason}")]
    InvalidInstance { field: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("trace is incomplete: job {job} never completed")]
    IncompleteTrace { job: usize },

    #[error("policy {policy} is incompatible with {service} service")]
    IncompatiblePolicy {
        policy: &'static str,
        service: &'static str,
    },

    #[error("no remaining jobs to select from")]
    EmptyRemaining,

    #[error("simulation exceeded {cap} slots with {remaining} jobs still present")]
    SlotCapExceeded { cap: u64, remaining: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("{0}")]
    Io(String),
}

impl Error {
    pub(crate) fn instance(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidInstance {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(format!("json: {e}"))
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(format!("csv: {e}"))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
