use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The requested accuracy difference cannot be realised with the given
    /// agreement rate (`|delta| > 1 - agreement`).
    #[error("effect exceeds 1 - agreement")]
    InfeasibleEffect { effect: f64, agreement: f64 },

    #[error("infeasible combination: {0}")]
    Infeasible(String),

    #[error(
        "infeasible at this n: power {power:.4} at maximum effect {max_effect} is below target {target}"
    )]
    InfeasibleMde {
        max_effect: f64,
        power: f64,
        target: f64,
    },

    #[error("length mismatch in {what}: {left} vs {right}")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("misaligned input at index {index}: {reason}")]
    Misaligned { index: usize, reason: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("rank deficient design; collinear columns: {}", .columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("unknown task `{task}`; known tasks: {}", .known.join(", "))]
    UnknownTask { task: String, known: Vec<String> },

    #[error("repetition {rep}: {source}")]
    Rep { rep: u64, source: Box<Error> },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Whether the error stems from the caller's parameters rather than from
    /// data or computation.
    pub fn is_parameter_error(&self) -> bool {
        match self {
            Error::InvalidParameter { .. }
            | Error::InfeasibleEffect { .. }
            | Error::Infeasible(_)
            | Error::InfeasibleMde { .. }
            | Error::UnknownTask { .. } => true,
            Error::Rep { source, .. } => source.is_parameter_error(),
            _ => false,
        }
    }
}
