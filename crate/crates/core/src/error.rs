//! Error types shared across the library.

use std::fmt;

/// The numbered standing assumptions that the algorithms rely on.
///
/// Every assumption is checked where it becomes load-bearing: at model
/// construction, at projector construction, or before iteration 0 of a run.
/// Violations surface as [`Error::AssumptionViolation`] naming the assumption.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    /// Assumption 1: every sampled stage cost lies in [0, 1].
    CostRange,
    /// Assumption 2: policy-value estimates are unbiased given the past.
    UnbiasedEstimates,
    /// Assumption 3: the anchor rows of the feature matrix have full column rank.
    FeatureRank,
    /// Assumption 4: the outer step sizes sum to infinity while their squares
    /// sum to a finite value.
    StepSizes,
    /// Assumption 5: the gradient step size keeps the inner iteration a
    /// contraction, i.e. the spectral norm of I − β·ΦD'ΦD is below one.
    GdContraction,
    /// Assumption 6: the estimation noise is bounded in sup norm.
    BoundedNoise,
    /// Assumption 7: the inner gradient-descent step counts grow without bound.
    GrowingInnerSteps,
}

impl Assumption {
    fn number(self) -> u8 {
        match self {
            Assumption::CostRange => 1,
            Assumption::UnbiasedEstimates => 2,
            Assumption::FeatureRank => 3,
            Assumption::StepSizes => 4,
            Assumption::GdContraction => 5,
            Assumption::BoundedNoise => 6,
            Assumption::GrowingInnerSteps => 7,
        }
    }

    fn summary(self) -> &'static str {
        match self {
            Assumption::CostRange => "costs in [0, 1]",
            Assumption::UnbiasedEstimates => "unbiased policy-value estimates",
            Assumption::FeatureRank => "anchor features have full column rank",
            Assumption::StepSizes => "step sizes sum to infinity, squares summable",
            Assumption::GdContraction => "spectral norm of I - beta*PhiD'PhiD below 1",
            Assumption::BoundedNoise => "bounded estimation noise",
            Assumption::GrowingInnerSteps => "inner step counts grow without bound",
        }
    }
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Assumption {} ({})", self.number(), self.summary())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{assumption} violated: {detail}")]
    AssumptionViolation {
        assumption: Assumption,
        detail: String,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn assumption(assumption: Assumption, detail: impl Into<String>) -> Self {
        Error::AssumptionViolation {
            assumption,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
