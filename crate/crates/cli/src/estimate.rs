use std::collections::BTreeMap;
use std::path::Path;

use main_effects::benchmarks::{sample_benchmark, BenchmarkFunction, DependenceSpec};
use main_effects::estimators::{estimate_a2d2e_all, estimate_ale, estimate_pd, EstimatorOptions, GridSpec};
use main_effects::model::ExperimentConfig;
use main_effects::predictor::{
    add_response_noise, noise_sigma_for_fraction, train_tiny_nn, CountingPredictor, NormalizedPredictor,
    SubprocessPredictor, TinyNnConfig,
};
use main_effects::{Dataset, EffectCurve, Method, Normalizer, Predictor};
use ndarray::{Array1, Array2};

use crate::output::{ensure_dir, write_curve, write_json, RunManifest};
use crate::{CliError, EstimateArgs, MethodArg};

/// Reads a numeric CSV with a header; the last column is the response.
fn load_csv(path: &Path) -> Result<Dataset, CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let width = reader.headers()?.len();
    if width < 2 {
        return Err(CliError::Invalid(format!(
            "{}: need at least one input column and a response column",
            path.display()
        )));
    }
    let mut cells = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != width {
            return Err(CliError::Invalid(format!(
                "{}: row {} has {} cells, header has {width}",
                path.display(),
                row + 1,
                record.len()
            )));
        }
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                CliError::Invalid(format!(
                    "{}: non-numeric cell `{cell}` at row {}, column {}",
                    path.display(),
                    row + 1,
                    col + 1
                ))
            })?;
            cells.push(v);
        }
    }
    let rows = cells.len() / width;
    let table = Array2::from_shape_vec((rows, width), cells).expect("row widths checked");
    let inputs = table.slice(ndarray::s![.., ..width - 1]).to_owned();
    let responses: Array1<f64> = table.column(width - 1).to_owned();
    Ok(Dataset::new(inputs, responses)?)
}

fn build_predictor(
    spec: &str,
    function: Option<BenchmarkFunction>,
    dataset: &Dataset,
    normalizer: &Normalizer,
    seed: u64,
) -> Result<Box<dyn Predictor>, CliError> {
    if spec == "oracle" {
        let f = function.ok_or_else(|| CliError::Invalid("--predictor oracle needs --function".into()))?;
        return Ok(Box::new(NormalizedPredictor::new(f, normalizer.clone())?));
    }
    if spec == "nn" {
        let (net, report) = train_tiny_nn(dataset, &TinyNnConfig { seed, ..Default::default() })?;
        log::info!("network trained: loss {:.4e} after {} iterations", report.final_loss(), report.iterations);
        return Ok(Box::new(net));
    }
    if let Some(command) = spec.strip_prefix("external:") {
        if command.trim().is_empty() {
            return Err(CliError::Invalid("--predictor external: needs a command".into()));
        }
        let remote = SubprocessPredictor::spawn(command, dataset.dims())?;
        return Ok(Box::new(NormalizedPredictor::new(remote, normalizer.clone())?));
    }
    Err(CliError::Invalid(format!(
        "unknown predictor `{spec}`; use oracle, nn or external:<command>"
    )))
}

fn methods(arg: MethodArg) -> Vec<Method> {
    match arg {
        MethodArg::Pd => vec![Method::Pd],
        MethodArg::Ale => vec![Method::Ale],
        MethodArg::A2d2e => vec![Method::A2d2e],
        MethodArg::All => Method::ESTIMATORS.to_vec(),
    }
}

pub fn run(args: &EstimateArgs) -> Result<(), CliError> {
    let started_at = chrono::Utc::now().to_rfc3339();
    let mut config = None;
    let (raw, function) = match (&args.function, &args.data) {
        (Some(name), None) => {
            let f: BenchmarkFunction = name.parse()?;
            let cfg = ExperimentConfig {
                dependence: args.dependence,
                n: args.n,
                k: args.bins,
                delta: args.delta,
                noise_fraction: args.noise_fraction,
                seed: args.seed,
                grid_size: args.grid_size,
                repetitions: 1,
                ..ExperimentConfig::new(name.clone())
            };
            cfg.validate()?;
            let n = cfg.sample_count(f.dims());
            let (x, y) = sample_benchmark(f, n, DependenceSpec::new(args.dependence), args.seed);
            let sigma = noise_sigma_for_fraction(y.view(), args.noise_fraction)?;
            let y = add_response_noise(y.view(), sigma, args.seed);
            config = Some(cfg);
            (Dataset::new(x, y)?, Some(f))
        }
        (None, Some(path)) => {
            if args.bins == 0 || !(args.delta > 0.0) || args.grid_size < 2 {
                return Err(CliError::Invalid("--bins ≥ 1, --delta > 0 and --grid-size ≥ 2 are required".into()));
            }
            (load_csv(path)?, None)
        }
        _ => return Err(CliError::Invalid("give exactly one of --function and --data".into())),
    };
    let normalizer = Normalizer::fit(&raw)?;
    let dataset = normalizer.normalize(&raw)?;
    let predictor = CountingPredictor::new(build_predictor(&args.predictor, function, &dataset, &normalizer, args.seed)?);
    let options = EstimatorOptions {
        bins: args.bins,
        delta: args.delta,
        grid: GridSpec::Uniform(args.grid_size),
    };

    ensure_dir(&args.out)?;
    let mut outputs = Vec::new();
    let mut queries = BTreeMap::new();
    for method in methods(args.method) {
        let curves: Vec<EffectCurve> = match method {
            Method::A2d2e => estimate_a2d2e_all(&dataset, &predictor, &options)?,
            Method::Ale => (0..dataset.dims())
                .map(|d| estimate_ale(&dataset, &predictor, d, &options))
                .collect::<Result<_, _>>()?,
            _ => (0..dataset.dims())
                .map(|d| estimate_pd(&dataset, &predictor, d, &options))
                .collect::<Result<_, _>>()?,
        };
        queries.insert(method.to_string(), predictor.take_queries());
        for curve in &curves {
            let path = args.out.join(format!("{method}_x{}.csv", curve.variable + 1));
            write_curve(&path, curve)?;
            outputs.push(path);
        }
    }
    drop(predictor);

    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: "estimate",
        config,
        data: args.data.clone(),
        predictor: args.predictor.clone(),
        seed: args.seed,
        rows: dataset.len(),
        dims: dataset.dims(),
        normalizer: normalizer.bounds().to_vec(),
        queries,
        outputs: outputs.clone(),
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339(),
    };
    write_json(&args.out.join(RunManifest::FILE), &manifest)?;
    println!("wrote {} curve files to {}", outputs.len(), args.out.display());
    Ok(())
}
