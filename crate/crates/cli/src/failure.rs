use std::fmt;
use std::process::ExitCode;

/// A command failure tagged with its exit status: 2 for bad input, 1 for
/// runtime or environment trouble.
#[derive(Debug)]
pub struct Failure {
    pub status: u8,
    pub error: anyhow::Error,
}

pub const INVALID_INPUT: u8 = 2;
pub const RUNTIME: u8 = 1;

pub type CmdResult<T = ()> = Result<T, Failure>;

impl Failure {
    pub fn invalid(error: impl Into<anyhow::Error>) -> Self {
        Self { status: INVALID_INPUT, error: error.into() }
    }

    pub fn runtime(error: impl Into<anyhow::Error>) -> Self {
        Self { status: RUNTIME, error: error.into() }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.status)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub trait Classify<T> {
    fn invalid(self, context: impl fmt::Display + Send + Sync + 'static) -> CmdResult<T>;
    fn runtime(self, context: impl fmt::Display + Send + Sync + 'static) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn invalid(self, context: impl fmt::Display + Send + Sync + 'static) -> CmdResult<T> {
        self.map_err(|e| Failure::invalid(e.into().context(context)))
    }

    fn runtime(self, context: impl fmt::Display + Send + Sync + 'static) -> CmdResult<T> {
        self.map_err(|e| Failure::runtime(e.into().context(context)))
    }
}

/// Unwraps a flag that is required after config merging.
pub fn required<T>(value: Option<T>, flag: &str) -> CmdResult<T> {
    value.ok_or_else(|| Failure::invalid(anyhow::anyhow!("missing required option --{flag}")))
}
