//! Gaussian-process grade inference with point and interval support.

mod io;
mod kernel;
pub mod linalg;
mod model;
mod train;

pub use io::{
    checksum, model_from_str, model_to_string, predictions_csv, read_model, read_queries, read_queries_str, write_model,
};
pub use kernel::{covariance_with_grads, cross_covariance, kernel, GpInput, Hyper, Prepared, Support, N_PARAMS};
pub use model::{log_marginal_likelihood, GpModel, Lml};
pub use train::{initial_guess, log_bounds, round_hyper, subsample, train, TrainConfig, MIN_TRAINING_SAMPLES};

use thiserror::Error;

use crate::chemistry::AssaySample;
use crate::num::Real;

#[derive(Debug, Error)]
pub enum GpError {
    #[error("covariance is not positive definite after jitter escalation")]
    NotPositiveDefinite,
    #[error("need at least {needed} training samples, found {found}")]
    TooFewSamples { found: usize, needed: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("hyperparameters: {0}")]
    Hyper(String),
    #[error("model file: {0}")]
    Format(String),
    #[error("model file data checksum mismatch")]
    Checksum,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// GP input for an assay sample under the chosen support.
pub fn sample_input<T: Real>(s: &AssaySample<T>, support: Support) -> GpInput<T> {
    match support {
        Support::Interval => GpInput::interval(s.collar, s.interval_length),
        Support::Point => GpInput::point(s.midpoint()),
    }
}
