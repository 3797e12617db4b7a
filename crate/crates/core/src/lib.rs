//! Two-step nonparametric estimation of mixture components: cluster the
//! covariates, then fit a kernel density estimate of the response on each
//! cluster.

pub mod baseline;
pub mod erdf;
pub mod harness;
pub mod kde;
pub mod metrics;
pub mod model;
pub mod numeric;
pub mod radius;
pub mod rng;
pub mod scenarios;

use thiserror::Error;

pub use kde::{oracle_estimate, two_step_estimate, BandwidthPolicy, ComponentEstimate};
pub use model::{ClusterAssignment, ClusterMethod, DensityGrid, LabeledSample, Permutation};
pub use radius::{interval_cluster, radius_graph_cluster};

/// Broad failure class, used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Kde(#[from] kde::KdeError),
    #[error(transparent)]
    Radius(#[from] radius::RadiusError),
    #[error(transparent)]
    Baseline(#[from] baseline::BaselineError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    #[error(transparent)]
    Scenario(#[from] scenarios::ScenarioError),
    #[error(transparent)]
    Erdf(#[from] erdf::ErdfError),
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: line {line}: {message}")]
    Input {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{failed} of {total} replications failed (first failing seed {first_seed})")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first_seed: u64,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Usage,
            Error::Kde(kde::KdeError::InvalidPolicy(_)) => ErrorKind::Usage,
            Error::Input { .. } | Error::Csv(_) | Error::Io(_) | Error::Erdf(_) => ErrorKind::Data,
            Error::Model(_) => ErrorKind::Data,
            Error::Radius(
                radius::RadiusError::CannotRealize { .. }
                | radius::RadiusError::TooFewPoints { .. }
                | radius::RadiusError::Empty,
            ) => ErrorKind::Data,
            _ => ErrorKind::Numeric,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
