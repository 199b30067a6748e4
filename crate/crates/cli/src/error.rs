use std::fmt;

use droplet_core::DropletError;

/// Failure of a subcommand, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(DropletError),
    Io(std::io::Error),
    /// Number of failed verification checks.
    Verify(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verify(_) => 1,
            CliError::Config(_) => 2,
            CliError::Solver(_) | CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Solver(e) => write!(f, "solver failure: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Verify(n) => write!(f, "{n} verification check(s) failed"),
        }
    }
}

impl From<DropletError> for CliError {
    fn from(e: DropletError) -> Self {
        match e {
            DropletError::Io(e) => CliError::Io(e),
            DropletError::InvalidParams(m) | DropletError::InvalidOptions(m) => CliError::Config(m),
            other => CliError::Solver(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Solver(DropletError::Json(e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Verify(2).exit_code(), 1);
        assert_eq!(CliError::from(DropletError::InvalidParams("beta".into())).exit_code(), 2);
        assert_eq!(CliError::from(DropletError::NoConvergence { iters: 1, residual: 1.0 }).exit_code(), 3);
        assert_eq!(CliError::from(std::io::Error::other("disk")).exit_code(), 3);
    }
}
