//! Main-effect estimation for black-box prediction models.
//!
//! Three estimators share one dataset/predictor interface:
//!
//! * [`estimators::estimate_pd`]: partial dependence.
//! * [`estimators::estimate_ale`]: accumulated local effects over quantile bins.
//! * [`estimators::estimate_a2d2e`]: the same accumulation, with each bin's
//!   increment taken from least-squares slopes on `2^D` factorial designs
//!   around the training points.
//!
//! [`benchmarks`] and [`evaluation`] provide test functions, reference
//! curves and the experiment drivers used to check the estimators.

pub mod benchmarks;
pub mod binning;
pub mod design;
mod error;
pub mod estimators;
pub mod evaluation;
pub mod model;
pub mod predictor;
pub mod protocol;
pub mod rng;

pub use error::{Error, Result};
pub use estimators::{
    estimate_a2d2e, estimate_a2d2e_all, estimate_ale, estimate_pd, EstimatorOptions, GridSpec,
};
pub use model::{center_curve, Dataset, EffectCurve, ExperimentConfig, Method, Normalizer};
pub use predictor::Predictor;
