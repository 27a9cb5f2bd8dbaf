use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("vector must have at least one coordinate")]
    EmptyVector,

    #[error("non-finite value at coordinate {index}")]
    NonFiniteCoordinate { index: usize },

    #[error("{what} = {value} exceeds certified bound {bound}")]
    DomainViolation {
        what: &'static str,
        value: f64,
        bound: f64,
    },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("{0}")]
    Invalid(String),

    #[error("step size {step} at t={t} exceeds the {regime} cap {cap}")]
    StepSizeCap {
        regime: &'static str,
        t: usize,
        step: f64,
        cap: f64,
    },

    #[error("non-finite iterate at step {step}")]
    NonFiniteIterate { step: usize },

    #[error(
        "solver did not converge in {iterations} iterations (suboptimality {suboptimality:e})"
    )]
    NonConvergence {
        iterations: usize,
        suboptimality: f64,
    },

    #[error("fit failed at {context}: {source}")]
    FitFailed {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("insufficient replications: {got} < {needed}")]
    InsufficientReplications { got: usize, needed: usize },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }

    pub(crate) fn at(self, context: impl Into<String>) -> Self {
        Error::FitFailed {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::param("delta", delta, "must lie in (0, 1)"))
    }
}

pub(crate) fn check_deformation(a: f64) -> Result<()> {
    if a > 1.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::param("a", a, "deformation must exceed 1"))
    }
}
