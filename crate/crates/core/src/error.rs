use thiserror::Error;

/// Errors produced by lattice operations, integrators and audits.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DnlsError {
    /// An input violates a documented precondition.
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    /// A numerical procedure failed to converge or produced non-finite values.
    #[error("numerical failure: {reason}{}", context(.time, .residual))]
    Numerical {
        reason: String,
        time: Option<f64>,
        residual: Option<f64>,
    },

    /// A diagnostic bound was violated.
    #[error("audit failed: {0}")]
    Audit(String),
}

fn context(time: &Option<f64>, residual: &Option<f64>) -> String {
    let mut out = String::new();
    if let Some(t) = time {
        out.push_str(&format!(" (t = {t})"));
    }
    if let Some(r) = residual {
        out.push_str(&format!(" (residual = {r:e})"));
    }
    out
}

impl DnlsError {
    pub fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        DnlsError::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn numerical(reason: impl Into<String>) -> Self {
        DnlsError::Numerical {
            reason: reason.into(),
            time: None,
            residual: None,
        }
    }

    /// Attaches the simulation time at which a numerical failure happened.
    pub fn at_time(self, t: f64) -> Self {
        match self {
            DnlsError::Numerical {
                reason, residual, ..
            } => DnlsError::Numerical {
                reason,
                time: Some(t),
                residual,
            },
            other => other,
        }
    }

    pub fn is_validation(&self) -> bool {
        matches!(self, DnlsError::Validation { .. })
    }
}

pub type Result<T> = std::result::Result<T, DnlsError>;
