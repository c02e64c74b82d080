use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A state left the model's domain (e.g. a negative population).
    #[error("domain violation{}: {detail}", .index.map(|i| format!(" at grid index {i}")).unwrap_or_default())]
    DomainViolation { index: Option<usize>, detail: String },

    /// Linear algebra broke down (singular or indefinite matrix beyond the jitter budget).
    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("integrator failure at t = {t}: {reason}")]
    Integrator { t: f64, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub fn domain(detail: impl Into<String>) -> Self {
        Error::DomainViolation {
            index: None,
            detail: detail.into(),
        }
    }

    pub fn numeric(detail: impl Into<String>) -> Self {
        Error::NumericFailure(detail.into())
    }

    pub fn invalid(detail: impl Into<String>) -> Self {
        Error::InvalidInput(detail.into())
    }

    /// Attaches a grid index to a domain violation.
    pub fn at_index(self, k: usize) -> Self {
        match self {
            Error::DomainViolation { detail, .. } => Error::DomainViolation {
                index: Some(k),
                detail,
            },
            other => other,
        }
    }

    pub fn is_domain_violation(&self) -> bool {
        matches!(self, Error::DomainViolation { .. })
    }

    pub fn is_numeric_failure(&self) -> bool {
        matches!(self, Error::NumericFailure(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
