use crate::{calibrate::CalibrateError, corpus::CorpusError, detect::DetectError, rank::RankError, weat::WeatError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Crate-level error; each module reports through its own enum.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Calibrate(#[from] CalibrateError),
    #[error(transparent)]
    Weat(#[from] WeatError),
}

impl Error {
    /// True when the error comes from malformed input or configuration
    /// rather than from the environment (I/O).
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Corpus(e) => !matches!(e, CorpusError::Io { .. }),
            Error::Detect(e) => !matches!(e, DetectError::Io { .. }),
            Error::Rank(_) => true,
            Error::Calibrate(e) => !matches!(e, CalibrateError::Io { .. }),
            Error::Weat(e) => !matches!(e, WeatError::Io { .. }),
        }
    }
}

/// A problem tied to a line of an input file (1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineDiagnostic {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for LineDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

pub(crate) fn join_diagnostics(diags: &[LineDiagnostic]) -> String {
    diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n")
}
