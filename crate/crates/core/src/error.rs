use thiserror::Error;

use crate::lagrange::LagrangeStep;

/// Errors raised by the lazy-bandit routines.
#[derive(Debug, Error)]
pub enum LrbError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("observation {feedback} has zero probability under belief {belief}")]
    ImpossibleObservation { feedback: u8, belief: f64 },

    #[error("reducible chain (p00 = 1, p10 = 0): no unique stationary belief")]
    NoStationaryBelief,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{routine} did not converge after {iterations} iterations (last residual {residual:e}, last iterate {last:e})")]
    NotConverged {
        routine: &'static str,
        iterations: usize,
        residual: f64,
        last: f64,
    },

    #[error("threshold structure violated: play preferred at {above} above switch point {switch}")]
    ThresholdStructure { switch: f64, above: f64 },

    #[error("lagrangian iteration cap of {iterations} reached without |g| <= tol")]
    LagrangeNotConverged {
        iterations: usize,
        trace: Vec<LagrangeStep>,
    },

    #[error("configuration invalid:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<LrbError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LrbError {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        LrbError::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Wraps the error with a short description of where it happened.
    pub fn context(self, context: impl Into<String>) -> Self {
        LrbError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, LrbError>;
