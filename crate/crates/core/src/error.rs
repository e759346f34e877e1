use thiserror::Error;

use crate::template::TemplateViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid template: {0}")]
    Template(#[from] TemplateViolation),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid threshold distribution: {0}")]
    InvalidDistribution(String),

    #[error("vertex count {n} is not divisible by the cluster count {k}")]
    UnevenClusters { n: u64, k: usize },

    #[error("seed count {seeds} exceeds vertex count {n}")]
    TooManySeeds { seeds: u64, n: u64 },

    #[error("empty horizon: 1/(3*phi) = {horizon:.3} admits no generation (graph too dense)")]
    EmptyHorizon { horizon: f64 },

    #[error("simulation exceeded the generation cap of {0}")]
    GenerationCap(u64),

    #[error("observed state is inconsistent: {0}")]
    InconsistentState(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
