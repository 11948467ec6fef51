use thiserror::Error;

pub type Result<T> = std::result::Result<T, RiskError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiskError {
    #[error("dimension mismatch: expected {expected} scenarios, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{name} = {value} is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// Malformed construction input (bad probabilities, non-finite payoffs, ...).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A structural hypothesis of the requested measure does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{what} needs at most {max} scenarios, got {n}; use random sampling instead")]
    Size {
        what: &'static str,
        n: usize,
        max: usize,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// File ingestion failure with location diagnostics.
    #[error("{source_name}: {message}")]
    Input {
        source_name: String,
        message: String,
    },
}

impl RiskError {
    pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(RiskError::DimensionMismatch { expected, found })
        }
    }

    /// True for errors caused by unmet structural hypotheses rather than bad input.
    pub fn is_precondition(&self) -> bool {
        matches!(self, RiskError::Precondition(_) | RiskError::Size { .. })
    }
}
