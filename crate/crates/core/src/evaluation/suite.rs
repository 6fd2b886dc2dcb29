//! Repeated benchmark runs scored against reference curves.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ormse::{ormse, summarize, Summary};
use crate::benchmarks::{ground_truth_main_effect, sample_benchmark, BenchmarkFunction, DependenceSpec, TruthOptions};
use crate::error::{Error, Result};
use crate::estimators::{estimate_a2d2e_all, estimate_ale, estimate_pd, EstimatorOptions};
use crate::model::{evaluation_grid, Dataset, EffectCurve, ExperimentConfig, Method, Normalizer};
use crate::predictor::{
    add_response_noise, noise_sigma_for_fraction, train_tiny_nn, CountingPredictor, NormalizedPredictor, Predictor,
    TinyNnConfig,
};
use crate::rng;

/// What stands in for the fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictorKind {
    /// The noise-free benchmark function itself.
    Oracle,
    /// A small network trained on the noisy responses of each repetition.
    TinyNn(TinyNnConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub methods: Vec<Method>,
    pub predictor: PredictorKind,
    pub truth: TruthOptions,
}

/// Score of one method in one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrmseReport {
    pub function: String,
    pub dependence: String,
    pub method: Method,
    pub rep: usize,
    /// Seed of this repetition, derived from the config seed.
    pub seed: u64,
    pub per_variable: Vec<f64>,
    pub ormse: f64,
    pub queries: u64,
    pub wall_ms: f64,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub summary: Summary,
}

fn estimate_all<P: Predictor>(
    method: Method,
    dataset: &Dataset,
    predictor: &P,
    options: &EstimatorOptions,
) -> Result<Vec<EffectCurve>> {
    match method {
        Method::A2d2e => estimate_a2d2e_all(dataset, predictor, options),
        Method::Ale => (0..dataset.dims()).map(|d| estimate_ale(dataset, predictor, d, options)).collect(),
        Method::Pd => (0..dataset.dims()).map(|d| estimate_pd(dataset, predictor, d, options)).collect(),
        Method::Truth => Err(Error::InvalidArgument("`truth` is not an estimator".into())),
    }
}

fn run_repetition(
    function: BenchmarkFunction,
    config: &ExperimentConfig,
    options: &SuiteOptions,
    rep: usize,
) -> Result<Vec<OrmseReport>> {
    let seed = rng::derive_seed(config.seed, &[rng::REPETITION, rep as u64]);
    let spec = DependenceSpec::new(config.dependence);
    let n = config.sample_count(function.dims());
    let (native, clean) = sample_benchmark(function, n, spec, seed);
    let sigma = noise_sigma_for_fraction(clean.view(), config.noise_fraction)?;
    let noisy = add_response_noise(clean.view(), sigma, seed);
    let raw = Dataset::new(native, noisy)?;
    let normalizer = Normalizer::fit(&raw)?;
    let dataset = normalizer.normalize(&raw)?;

    let estimator_options = EstimatorOptions::from(config);
    let truth_options = TruthOptions {
        seed: rng::derive_seed(seed, &[rng::TRUTH]),
        ..options.truth
    };
    let truth = (0..function.dims())
        .map(|d| {
            let grid = evaluation_grid(dataset.column(d), config.grid_size)?;
            ground_truth_main_effect(function, d, &grid, &normalizer, spec, &truth_options)
        })
        .collect::<Result<Vec<_>>>()?;

    let predictor: Box<dyn Predictor> = match &options.predictor {
        PredictorKind::Oracle => Box::new(NormalizedPredictor::new(function, normalizer.clone())?),
        PredictorKind::TinyNn(nn) => {
            let cfg = TinyNnConfig { seed, ..nn.clone() };
            let (net, report) = train_tiny_nn(&dataset, &cfg)?;
            log::debug!(
                "{function} rep {rep}: network loss {:.4e} after {} iterations",
                report.final_loss(),
                report.iterations
            );
            Box::new(net)
        }
    };
    let counted = CountingPredictor::new(predictor);

    options
        .methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let curves = estimate_all(method, &dataset, &counted, &estimator_options)?;
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            let score = ormse(&curves, &truth)?;
            Ok(OrmseReport {
                function: function.name().to_string(),
                dependence: config.dependence.to_string(),
                method,
                rep,
                seed,
                per_variable: score.per_variable,
                ormse: score.ormse,
                queries: counted.take_queries(),
                wall_ms,
                config: config.clone(),
            })
        })
        .collect()
}

/// Runs `config.repetitions` independent repetitions. A repetition that
/// fails is logged and left out; the others still report. Results are
/// ordered by repetition, then by the order of `options.methods`.
pub fn run_benchmark_suite(config: &ExperimentConfig, options: &SuiteOptions) -> Result<Vec<OrmseReport>> {
    config.validate()?;
    let function: BenchmarkFunction = config.function.parse()?;
    if options.methods.contains(&Method::Truth) {
        return Err(Error::InvalidArgument("`truth` is not an estimator".into()));
    }
    let per_rep: Vec<Option<Vec<OrmseReport>>> = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| match run_repetition(function, config, options, rep) {
            Ok(reports) => Some(reports),
            Err(e) => {
                log::warn!("{function} repetition {rep} failed: {e}");
                None
            }
        })
        .collect();
    Ok(per_rep.into_iter().flatten().flatten().collect())
}

/// ORMSE summary per method, in first-appearance order.
pub fn summarize_reports(reports: &[OrmseReport]) -> Vec<MethodSummary> {
    let mut methods: Vec<Method> = Vec::new();
    for r in reports {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    methods
        .into_iter()
        .filter_map(|method| {
            let scores: Vec<f64> = reports.iter().filter(|r| r.method == method).map(|r| r.ormse).collect();
            summarize(&scores).map(|summary| MethodSummary { method, summary })
        })
        .collect()
}
