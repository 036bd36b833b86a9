use std::fmt::Display;
use std::process::ExitCode;

/// Command failure, split by exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad configuration, arguments or input files (exit 2).
    Config(anyhow::Error),
    /// Inputs are well-formed but a check did not hold (exit 3).
    Verification(anyhow::Error),
}

impl Failure {
    pub fn config(msg: impl Display) -> Self {
        Failure::Config(anyhow::anyhow!("{msg}"))
    }

    pub fn verification(msg: impl Display) -> Self {
        Failure::Verification(anyhow::anyhow!("{msg}"))
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            Failure::Config(_) => ExitCode::from(2),
            Failure::Verification(_) => ExitCode::from(3),
        }
    }
}

impl Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "configuration error: {e:#}"),
            Failure::Verification(e) => write!(f, "verification failed: {e:#}"),
        }
    }
}

pub trait ResultExt<T> {
    fn config_err<C: Display + Send + Sync + 'static>(self, ctx: impl FnOnce() -> C) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> ResultExt<T> for Result<T, E> {
    fn config_err<C: Display + Send + Sync + 'static>(self, ctx: impl FnOnce() -> C) -> Result<T, Failure> {
        self.map_err(|e| Failure::Config(e.into().context(ctx())))
    }
}
