use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Enumeration would produce more items than the configured guard allows.
    #[error("guard exceeded: {what} needs {required} entries, limit is {limit}")]
    GuardExceeded {
        what: &'static str,
        required: u128,
        limit: u128,
    },

    /// No pattern satisfies every constraint.
    #[error("EmptySupport: no pattern satisfies all constraints")]
    EmptySupport,

    #[error("MalformedSpec at {location}: {message}")]
    MalformedSpec { location: String, message: String },

    #[error("BoundaryNotExtendable: no admissible label at site {site}")]
    BoundaryNotExtendable { site: usize },

    #[error("ConstraintViolatedInit: initial pattern {pattern} is outside the constraint set")]
    ConstraintViolatedInit { pattern: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn malformed(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::MalformedSpec {
            location: location.into(),
            message: message.into(),
        }
    }
}
