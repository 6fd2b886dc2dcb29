//! Monte-Carlo checks of single-bin increment variances under additive
//! model noise.

use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::check_design_dims;
use crate::error::{Error, Result};
use crate::estimators::{a2d2e_bin_increment, ale_bin_increment, bin_increment_variance, IncrementKind};
use crate::predictor::{wrap_with_noise, FnPredictor};
use crate::rng;

/// Minimum replicate count accepted by [`run_variance_experiment`].
pub const MIN_REPLICATES: usize = 500;

/// Bin `[BIN_LOWER, BIN_LOWER + width]` of the first variable.
const BIN_LOWER: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceSetup {
    pub kind: IncrementKind,
    pub dims: usize,
    pub sigma: f64,
    pub count: usize,
    pub width: f64,
    pub delta: f64,
    pub replicates: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub setup: VarianceSetup,
    pub empirical: f64,
    pub theoretical: f64,
    pub relative_error: f64,
}

/// A linear response, so the increment is unbiased and noise is the only
/// source of spread.
fn linear_response(x: &[f64]) -> f64 {
    x.iter().enumerate().map(|(j, v)| (1.0 - 0.3 * j as f64) * v).sum()
}

/// Fixed bin members: first coordinate inside the bin, others uniform.
fn bin_members(setup: &VarianceSetup, count: usize) -> Array2<f64> {
    let mut rng = rng::stream(setup.seed, &[rng::BIN_POINTS, count as u64]);
    Array2::from_shape_fn((count, setup.dims), |(_, j)| {
        let u: f64 = rng.random();
        if j == 0 {
            BIN_LOWER + u * setup.width
        } else {
            u
        }
    })
}

fn check_setup(setup: &VarianceSetup) -> Result<()> {
    check_design_dims(setup.dims)?;
    let positive = |name: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
        }
    };
    positive("width", setup.width)?;
    positive("delta", setup.delta)?;
    if !(setup.sigma >= 0.0 && setup.sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "sigma must be non-negative, got {}",
            setup.sigma
        )));
    }
    if setup.count == 0 {
        return Err(Error::InvalidArgument("bin count must be at least 1".into()));
    }
    Ok(())
}

/// One increment per replicate, each replicate with its own noise stream.
fn replicate_increments(setup: &VarianceSetup, count: usize) -> Result<Vec<f64>> {
    let members = bin_members(setup, count);
    (0..setup.replicates)
        .into_par_iter()
        .map(|r| {
            let noise_seed = rng::derive_seed(setup.seed, &[rng::REPETITION, count as u64, r as u64]);
            let f = wrap_with_noise(FnPredictor::new(setup.dims, linear_response), setup.sigma, noise_seed)?;
            match setup.kind {
                IncrementKind::Ale => ale_bin_increment(&f, members.view(), 0, BIN_LOWER, BIN_LOWER + setup.width),
                IncrementKind::A2d2e => a2d2e_bin_increment(&f, members.view(), 0, setup.width, setup.delta),
            }
        })
        .collect()
}

/// Unbiased sample variance; exactly zero when every value is identical.
fn sample_variance(values: &[f64]) -> f64 {
    if values.len() < 2 || values.iter().all(|&v| v == values[0]) {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Empirical variance of one bin increment against its closed form.
pub fn run_variance_experiment(setup: &VarianceSetup) -> Result<VarianceReport> {
    check_setup(setup)?;
    if setup.replicates < MIN_REPLICATES {
        return Err(Error::InvalidArgument(format!(
            "variance experiment needs at least {MIN_REPLICATES} replicates, got {}",
            setup.replicates
        )));
    }
    let increments = replicate_increments(setup, setup.count)?;
    let empirical = sample_variance(&increments);
    let theoretical = bin_increment_variance(setup.kind, setup.sigma, setup.count, setup.width, setup.delta, setup.dims);
    let relative_error = if theoretical > 0.0 {
        (empirical - theoretical).abs() / theoretical
    } else if empirical == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(VarianceReport {
        setup: *setup,
        empirical,
        theoretical,
        relative_error,
    })
}

/// Spread of the aggregated-design increment at one bin population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRow {
    pub count: usize,
    pub std: Option<f64>,
    pub theoretical_std: f64,
    pub error: Option<String>,
}

/// Monte-Carlo standard deviation of the increment at each bin population in
/// `counts`. `base` supplies everything except the population. A row with
/// fewer than two replicates carries an error instead of a value.
pub fn run_consistency_experiment(counts: &[usize], base: &VarianceSetup) -> Result<Vec<ConsistencyRow>> {
    if counts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!(
            "bin populations must be strictly increasing, got {counts:?}"
        )));
    }
    let setup = VarianceSetup {
        kind: IncrementKind::A2d2e,
        ..*base
    };
    counts
        .iter()
        .map(|&count| {
            check_setup(&VarianceSetup { count, ..setup })?;
            let theoretical_std =
                bin_increment_variance(setup.kind, setup.sigma, count, setup.width, setup.delta, setup.dims).sqrt();
            if setup.replicates < 2 {
                return Ok(ConsistencyRow {
                    count,
                    std: None,
                    theoretical_std,
                    error: Some(format!(
                        "standard deviation undefined for {} replicate(s)",
                        setup.replicates
                    )),
                });
            }
            let increments = replicate_increments(&setup, count)?;
            Ok(ConsistencyRow {
                count,
                std: Some(sample_variance(&increments).sqrt()),
                theoretical_std,
                error: None,
            })
        })
        .collect()
}

/// `std(previous) / std(next)` for consecutive rows that both have values.
pub fn std_ratios(rows: &[ConsistencyRow]) -> Vec<Option<f64>> {
    rows.windows(2)
        .map(|w| match (w[0].std, w[1].std) {
            (Some(a), Some(b)) if b > 0.0 => Some(a / b),
            _ => None,
        })
        .collect()
}
