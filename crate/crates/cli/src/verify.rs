use main_effects::benchmarks::TruthOptions;
use main_effects::design::MAX_DESIGN_DIMS;
use main_effects::estimators::IncrementKind;
use main_effects::evaluation::{
    run_benchmark_suite, run_consistency_experiment, run_variance_experiment, std_ratios, summarize_reports,
    ConsistencyRow, MethodSummary, PredictorKind, SuiteOptions, VarianceReport, VarianceSetup,
};
use main_effects::predictor::TinyNnConfig;
use main_effects::{ExperimentConfig, Method};
use serde::Serialize;

use crate::output::{ensure_dir, write_json, write_ormse_csv};
use crate::{Check, CliError, VerifyArgs};

/// Largest accepted relative error between empirical and closed-form variance.
pub const VARIANCE_TOLERANCE: f64 = 0.10;
/// Accepted range for the spread ratio when the bin population grows fourfold.
pub const RATIO_RANGE: (f64, f64) = (1.6, 2.4);
pub const CONSISTENCY_COUNTS: [usize; 3] = [25, 100, 400];

#[derive(Serialize)]
struct VarianceCheck {
    check: &'static str,
    tolerance: f64,
    passed: bool,
    reports: Vec<VarianceReport>,
}

#[derive(Serialize)]
struct ConsistencyCheck {
    check: &'static str,
    ratio_range: (f64, f64),
    passed: bool,
    rows: Vec<ConsistencyRow>,
    ratios: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct TrendCheck {
    check: &'static str,
    passed: bool,
    config: ExperimentConfig,
    summaries: Vec<MethodSummary>,
    reports: Vec<serde_json::Value>,
}

fn setup(args: &VerifyArgs, kind: IncrementKind, dims: usize) -> VarianceSetup {
    VarianceSetup {
        kind,
        dims,
        sigma: args.sigma,
        count: args.count,
        width: args.width,
        delta: args.delta,
        replicates: args.replicates,
        seed: args.seed,
    }
}

fn print_variance(r: &VarianceReport) {
    println!(
        "{:?} D={} δ={} |I|={}: empirical {:.6e}, closed form {:.6e}, relative error {:.4}",
        r.setup.kind, r.setup.dims, r.setup.delta, r.setup.count, r.empirical, r.theoretical, r.relative_error
    );
}

fn finish<T: Serialize>(args: &VerifyArgs, file: &str, report: &T, passed: bool) -> Result<(), CliError> {
    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        write_json(&dir.join(file), report)?;
    }
    if passed {
        println!("PASS");
        Ok(())
    } else {
        Err(CliError::CheckFailed("verification tolerance not met".into()))
    }
}

fn lemma1(args: &VerifyArgs) -> Result<(), CliError> {
    let r = run_variance_experiment(&setup(args, IncrementKind::Ale, 2))?;
    print_variance(&r);
    let passed = r.relative_error < VARIANCE_TOLERANCE;
    let report = VarianceCheck {
        check: "lemma1",
        tolerance: VARIANCE_TOLERANCE,
        passed,
        reports: vec![r],
    };
    finish(args, "lemma1.json", &report, passed)
}

fn lemma2(args: &VerifyArgs) -> Result<(), CliError> {
    let dims: Vec<usize> = match args.dims {
        Some(d) => vec![d],
        None => vec![2, 3, 4],
    };
    if let Some(&d) = dims.iter().find(|&&d| d == 0 || d > MAX_DESIGN_DIMS) {
        return Err(CliError::Invalid(format!(
            "--dims {d} is outside 1..={MAX_DESIGN_DIMS}; the design has 2^D vertices per point"
        )));
    }
    let mut reports = Vec::new();
    for &d in &dims {
        let base = setup(args, IncrementKind::A2d2e, d);
        for delta in [args.delta, args.width / 2.0] {
            let r = run_variance_experiment(&VarianceSetup { delta, ..base })?;
            print_variance(&r);
            reports.push(r);
        }
    }
    let passed = reports.iter().all(|r| r.relative_error < VARIANCE_TOLERANCE);
    let report = VarianceCheck {
        check: "lemma2",
        tolerance: VARIANCE_TOLERANCE,
        passed,
        reports,
    };
    finish(args, "lemma2.json", &report, passed)
}

fn consistency(args: &VerifyArgs) -> Result<(), CliError> {
    let rows = run_consistency_experiment(&CONSISTENCY_COUNTS, &setup(args, IncrementKind::A2d2e, 2))?;
    let ratios = std_ratios(&rows);
    for row in &rows {
        match (&row.std, &row.error) {
            (Some(s), _) => println!("|I|={}: std {:.6e} (closed form {:.6e})", row.count, s, row.theoretical_std),
            (None, Some(e)) => println!("|I|={}: {e}", row.count),
            _ => {}
        }
    }
    for r in &ratios {
        match r {
            Some(r) => println!("ratio {r:.4}"),
            None => println!("ratio undefined"),
        }
    }
    let passed = ratios
        .iter()
        .all(|r| r.is_some_and(|r| (RATIO_RANGE.0..=RATIO_RANGE.1).contains(&r)));
    let report = ConsistencyCheck {
        check: "consistency",
        ratio_range: RATIO_RANGE,
        passed,
        rows,
        ratios,
    };
    finish(args, "consistency.json", &report, passed)
}

fn median(summaries: &[MethodSummary], method: Method) -> Option<f64> {
    summaries.iter().find(|s| s.method == method).map(|s| s.summary.median)
}

fn ormse_trend(args: &VerifyArgs) -> Result<(), CliError> {
    let config = ExperimentConfig {
        dependence: args.dependence,
        repetitions: args.repetitions,
        seed: args.seed,
        ..ExperimentConfig::new(args.function.clone())
    };
    let options = SuiteOptions {
        methods: Method::ESTIMATORS.to_vec(),
        predictor: PredictorKind::TinyNn(TinyNnConfig::default()),
        truth: TruthOptions {
            samples: args.truth_samples,
            ..Default::default()
        },
    };
    let reports = run_benchmark_suite(&config, &options)?;
    let summaries = summarize_reports(&reports);
    for s in &summaries {
        println!(
            "{}: ORMSE {:.4} ± {:.4}, median {:.4} over {} repetitions",
            s.method, s.summary.mean, s.summary.half_width, s.summary.median, s.summary.count
        );
    }
    let passed = match (median(&summaries, Method::A2d2e), median(&summaries, Method::Pd)) {
        (Some(a), Some(p)) => a < p,
        _ => false,
    };
    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        write_ormse_csv(&dir.join("ormse.csv"), &reports, args.timings)?;
    }
    let records = reports
        .iter()
        .map(|r| {
            let mut v = serde_json::to_value(r)?;
            if !args.timings {
                v.as_object_mut().map(|o| o.remove("wall_ms"));
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>, serde_json::Error>>()?;
    let report = TrendCheck {
        check: "ormse-trend",
        passed,
        config,
        summaries,
        reports: records,
    };
    finish(args, "ormse_trend.json", &report, passed)
}

pub fn run(args: &VerifyArgs) -> Result<(), CliError> {
    match args.check {
        Check::Lemma1 => lemma1(args),
        Check::Lemma2 => lemma2(args),
        Check::Consistency => consistency(args),
        Check::OrmseTrend => ormse_trend(args),
    }
}
