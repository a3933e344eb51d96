use std::path::Path;

use powcheck_core::Error as CoreError;

pub type CliResult<T> = Result<T, CliError>;

/// Exit 2 for anything the caller can fix by changing flags or input
/// content, exit 1 for failures while reading, writing or computing.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Param(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn param(msg: impl Into<String>) -> Self {
        CliError::Param(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Runtime(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Param(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    /// `error[<kind>]: <message>` with any line breaks flattened.
    pub fn line(&self) -> String {
        let (kind, msg) = match self {
            CliError::Param(m) => ("parameter", m),
            CliError::Runtime(m) => ("runtime", m),
        };
        let flat: Vec<&str> = msg.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        format!("error[{kind}]: {}", flat.join(" "))
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let bad_input = matches!(
            e,
            CoreError::LengthMismatch { .. } | CoreError::Misaligned { .. } | CoreError::Empty(_)
        );
        if e.is_parameter_error() || bad_input {
            CliError::Param(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}
