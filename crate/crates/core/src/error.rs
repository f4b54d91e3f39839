use thiserror::Error;

/// Errors raised anywhere in the estimation stack.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MseError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("duplicate cell for pattern {0}")]
    DuplicateCell(String),
    #[error("illegal cell: the all-zero pattern cannot carry a count")]
    IllegalCell,
    #[error("invalid list subset: {0}")]
    InvalidSubset(String),
    #[error("degenerate cell: probability at pattern {0} is not strictly positive")]
    DegenerateCell(String),
    #[error("outside the assumption's domain (margin {margin:.6})")]
    OutsideDomain { margin: f64 },
    #[error(
        "conditional MLE may not exist: sample proportions lie outside the assumption's domain \
         (margin {margin:.6}); use the Bayesian route instead"
    )]
    MleMayNotExist { margin: f64 },
    #[error("invalid unobserved-cell probability {0}")]
    InvalidPi0(f64),
    #[error("target {target} is not bracketed by N({lo_xi})={lo_value} and N({hi_xi})={hi_value}")]
    NotBracketed {
        target: f64,
        lo_xi: f64,
        hi_xi: f64,
        lo_value: f64,
        hi_value: f64,
    },
    #[error("infeasible prior: {0}")]
    Infeasible(String),
    #[error("evidence is unbounded in pi0; rejection sampling is impossible for this prior")]
    UnboundedEvidence,
    #[error("malformed draw at row {row}: {reason}")]
    MalformedDraw { row: usize, reason: String },
    #[error("no draws were accepted")]
    NoAcceptedDraws,
    #[error("size guard: {0}")]
    SizeGuard(String),
    #[error("invalid construction: {0}")]
    InvalidConstruction(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("fixture checksum mismatch")]
    ChecksumMismatch,
    #[error("io error: {0}")]
    Io(String),
}

impl MseError {
    /// Stable identifier, printed by the CLI next to the message.
    pub fn name(&self) -> &'static str {
        match self {
            MseError::Parse(_) => "ParseError",
            MseError::DuplicateCell(_) => "DuplicateCell",
            MseError::IllegalCell => "IllegalCell",
            MseError::InvalidSubset(_) => "InvalidSubset",
            MseError::DegenerateCell(_) => "DegenerateCell",
            MseError::OutsideDomain { .. } => "OutsideDomain",
            MseError::MleMayNotExist { .. } => "MleMayNotExist",
            MseError::InvalidPi0(_) => "InvalidPi0",
            MseError::NotBracketed { .. } => "NotBracketed",
            MseError::Infeasible(_) => "Infeasible",
            MseError::UnboundedEvidence => "UnboundedEvidence",
            MseError::MalformedDraw { .. } => "MalformedDraw",
            MseError::NoAcceptedDraws => "NoAcceptedDraws",
            MseError::SizeGuard(_) => "SizeGuard",
            MseError::InvalidConstruction(_) => "InvalidConstruction",
            MseError::InvalidInput(_) => "InvalidInput",
            MseError::ChecksumMismatch => "ChecksumMismatch",
            MseError::Io(_) => "IoError",
        }
    }

    /// True for errors caused by malformed input rather than by the estimation itself.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            MseError::Parse(_)
                | MseError::DuplicateCell(_)
                | MseError::IllegalCell
                | MseError::MalformedDraw { .. }
                | MseError::ChecksumMismatch
                | MseError::Io(_)
                | MseError::InvalidInput(_)
                | MseError::InvalidSubset(_)
        )
    }
}

impl From<std::io::Error> for MseError {
    fn from(e: std::io::Error) -> Self {
        MseError::Io(e.to_string())
    }
}

impl From<csv::Error> for MseError {
    fn from(e: csv::Error) -> Self {
        MseError::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for MseError {
    fn from(e: serde_json::Error) -> Self {
        MseError::Parse(e.to_string())
    }
}

pub type Result<T, E = MseError> = std::result::Result<T, E>;
