use std::fmt::Display;

/// An error together with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub const VALIDATION: u8 = 2;
pub const LAW: u8 = 3;
pub const PARSE: u8 = 4;

impl Failure {
    pub fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Self {
            code,
            error: error.into(),
        }
    }

    pub fn validation(error: impl Into<anyhow::Error>) -> Self {
        Self::new(VALIDATION, error)
    }

    pub fn parse(error: impl Into<anyhow::Error>) -> Self {
        Self::new(PARSE, error)
    }

    pub fn law(message: impl Display) -> Self {
        Self::new(LAW, anyhow::anyhow!("{message}"))
    }

    pub fn context(self, context: impl Display + Send + Sync + 'static) -> Self {
        Self {
            code: self.code,
            error: self.error.context(context),
        }
    }
}

pub type Outcome<T> = Result<T, Failure>;
