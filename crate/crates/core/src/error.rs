use thiserror::Error;

/// Errors raised across the toolkit. Each variant names the stage that failed
/// so callers (and the CLI exit-code mapping) can tell bad input from solver trouble.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("size limit exceeded: {0}")]
    Size(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("solver failure ({stage}): {detail}")]
    Solver { stage: &'static str, detail: String },
    #[error("internal consistency error: {0}")]
    Consistency(String),
    #[error("construction error: {0}")]
    Construction(String),
}

impl Error {
    pub(crate) fn solver(stage: &'static str, detail: impl Into<String>) -> Self {
        Error::Solver { stage, detail: detail.into() }
    }

    /// True for errors caused by the caller's input rather than by a numeric routine.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Shape(_)
                | Error::Domain(_)
                | Error::Size(_)
                | Error::Parse(_)
                | Error::Config(_)
                | Error::Precondition(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
