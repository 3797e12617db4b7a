//! Comparison clusterers and the parametric EM benchmark.

pub mod em;
pub mod kmeans;
pub mod spectral;

use thiserror::Error;

use crate::model::ModelError;

pub use em::{em_gaussian_1d, gaussian_density_grid, GaussianMixtureFit};
pub use kmeans::kmeans_cluster;
pub use spectral::{spectral_cluster, SpectralSigma};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("fewer points than required ({n} < {k})")]
    TooFewPoints { n: usize, k: usize },
    #[error("isolated point at this sigma (point {point}, sigma {sigma})")]
    IsolatedPoint { point: usize, sigma: f64 },
    #[error("non-finite input")]
    NonFinite,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
