//! Acceptance checks for the estimator library and CLI. Each check prints a
//! single PASS/FAIL line with its tolerance and runtime budget; the test
//! fails afterwards if any line failed.

use std::io::Write;
use std::time::{Duration, Instant};

use main_effects::benchmarks::{sample_benchmark, sample_inputs, BenchmarkFunction, DependenceSpec, TruthOptions};
use main_effects::design::{build_local_design, local_slopes_fast, local_slopes_ols};
use main_effects::estimators::{compute_local_slopes, estimate_a2d2e_all, IncrementKind};
use main_effects::evaluation::{
    run_benchmark_suite, run_consistency_experiment, run_variance_experiment, std_ratios, summarize_reports,
    PredictorKind, SuiteOptions, VarianceSetup,
};
use main_effects::model::DependenceLevel;
use main_effects::predictor::{CountingPredictor, FnPredictor, NormalizedPredictor, SubprocessPredictor, TinyNnConfig};
use main_effects::{
    estimate_ale, estimate_pd, Dataset, EffectCurve, EstimatorOptions, ExperimentConfig, Method, Normalizer,
};
use ndarray::{Array1, Array2};

type Outcome = Result<String, String>;

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn uniform(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    sample_inputs(cols, rows, DependenceSpec::new(DependenceLevel::Independent), seed)
}

fn fast_path_equivalence() -> Outcome {
    const TOL: f64 = 1e-8;
    let mut worst = 0.0f64;
    for trial in 0..1000u64 {
        let dims = 1 + (trial % 5) as usize;
        let params = uniform(4, dims, 100 + trial);
        let center: Vec<f64> = params.row(0).iter().map(|v| 2.0 * v - 0.5).collect();
        let weights: Vec<f64> = params.row(1).iter().map(|v| 4.0 * v - 2.0).collect();
        let delta = 1e-3 + 0.5 * params[[2, 0]];
        let design = build_local_design(&center, delta).map_err(|e| e.to_string())?;
        let y: Array1<f64> = design
            .vertices()
            .rows()
            .into_iter()
            .map(|x| {
                x.iter().zip(&weights).map(|(a, w)| (w * a).sin() + w * a * a).sum::<f64>() + x[0] * x[dims - 1]
            })
            .collect();
        let fast = local_slopes_fast(&design, y.view()).map_err(|e| e.to_string())?;
        let ols = local_slopes_ols(&design, y.view()).map_err(|e| e.to_string())?;
        worst = worst.max(max_gap(&fast.slopes, &ols.slopes));
    }
    let detail = format!("1000 designs, D 1..=5, max |fast - ols| = {worst:.2e} (tol {TOL:.0e})");
    if worst <= TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn linear_recovery() -> Outcome {
    const TOL: f64 = 1e-10;
    let beta = [1.5, -2.0, 0.7];
    let line = move |x: &[f64]| 0.3 + beta.iter().zip(x).map(|(b, v)| b * v).sum::<f64>();
    let f = FnPredictor::new(3, line);
    let mut worst = 0.0f64;
    for level in [DependenceLevel::Independent, DependenceLevel::High] {
        let inputs = sample_inputs(3, 300, DependenceSpec::new(level), 9);
        let y: Array1<f64> = inputs.rows().into_iter().map(|r| line(r.as_slice().unwrap())).collect();
        let data = Dataset::new(inputs, y).map_err(|e| e.to_string())?;
        let opts = EstimatorOptions::default();
        let a2 = estimate_a2d2e_all(&data, &f, &opts).map_err(|e| e.to_string())?;
        for (d, a2) in a2.iter().enumerate() {
            let pd = estimate_pd(&data, &f, d, &opts).map_err(|e| e.to_string())?;
            let ale = estimate_ale(&data, &f, d, &opts).map_err(|e| e.to_string())?;
            worst = worst
                .max(max_gap(pd.values(), ale.values()))
                .max(max_gap(pd.values(), a2.values()))
                .max(max_gap(ale.values(), a2.values()));
        }
    }
    let detail = format!("linear additive f, D = 3, independent and high dependence, max pairwise gap {worst:.2e} (tol {TOL:.0e})");
    if worst <= TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn quadratic_slopes() -> Outcome {
    const TOL: f64 = 1e-12;
    let f = FnPredictor::new(3, |x: &[f64]| x[0] * x[0]);
    let centers = uniform(200, 3, 21);
    let mut worst = 0.0f64;
    // rounding in the vertex differences grows like eps / delta, which
    // reaches 1e-12 just below delta = 5e-4 in double precision
    for delta in [0.5, 0.1, 0.01, 1e-3, 5e-4] {
        let table = compute_local_slopes(centers.view(), &f, delta).map_err(|e| e.to_string())?;
        for (row, slopes) in centers.rows().into_iter().zip(table.slopes.rows()) {
            worst = worst.max((slopes[0] - 2.0 * row[0]).abs());
            worst = worst.max(slopes[1].abs()).max(slopes[2].abs());
        }
    }
    let detail = format!("f = x1^2, 200 points, delta 5e-4..0.5, max |slope - 2 x1| = {worst:.2e} (tol {TOL:.0e})");
    if worst <= TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

const VARIANCE_TOL: f64 = 0.10;

fn base_setup(kind: IncrementKind, dims: usize) -> VarianceSetup {
    VarianceSetup {
        kind,
        dims,
        sigma: 0.1,
        count: 50,
        width: 0.025,
        delta: 0.01,
        replicates: 2000,
        seed: 0,
    }
}

fn ale_variance() -> Outcome {
    let r = run_variance_experiment(&base_setup(IncrementKind::Ale, 2)).map_err(|e| e.to_string())?;
    let detail = format!(
        "sigma 0.1, |I| 50, 2000 replicates: empirical {:.4e} vs 2 sigma^2/|I| = {:.4e}, rel err {:.3} (tol {VARIANCE_TOL})",
        r.empirical, r.theoretical, r.relative_error
    );
    if (r.theoretical - 4e-4).abs() < 1e-15 && r.relative_error < VARIANCE_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn a2d2e_variance() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for dims in [2, 3, 4] {
        let base = base_setup(IncrementKind::A2d2e, dims);
        for delta in [base.delta, base.width / 2.0] {
            let r = run_variance_experiment(&VarianceSetup { delta, ..base }).map_err(|e| e.to_string())?;
            ok &= r.relative_error < VARIANCE_TOL;
            if delta == base.width / 2.0 {
                let closed = base.sigma.powi(2) / (base.count as f64 * 2f64.powi(dims as i32 - 4));
                ok &= ((r.theoretical - closed) / closed).abs() < 1e-12;
            }
            parts.push(format!("D{dims}/d{delta}:{:.3}", r.relative_error));
        }
    }
    let detail = format!("rel err {} (tol {VARIANCE_TOL}); half-width delta matches sigma^2/(|I| 2^(D-4))", parts.join(" "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn consistency() -> Outcome {
    const RANGE: (f64, f64) = (1.6, 2.4);
    let rows = run_consistency_experiment(&[25, 100, 400], &base_setup(IncrementKind::A2d2e, 2)).map_err(|e| e.to_string())?;
    let ratios = std_ratios(&rows);
    let ok = !ratios.is_empty() && ratios.iter().all(|r| matches!(r, Some(v) if (RANGE.0..=RANGE.1).contains(v)));
    let shown: Vec<String> = ratios.iter().map(|r| r.map_or("n/a".into(), |v| format!("{v:.3}"))).collect();
    let detail = format!("std ratios |I| 25/100/400: {} (range [{}, {}])", shown.join(", "), RANGE.0, RANGE.1);
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn oracle_accuracy() -> Outcome {
    const TOL: f64 = 5e-3;
    let config = ExperimentConfig {
        repetitions: 3,
        k: 40,
        ..ExperimentConfig::new("simple-1")
    };
    let options = SuiteOptions {
        methods: vec![Method::Ale, Method::A2d2e],
        predictor: PredictorKind::Oracle,
        truth: TruthOptions::default(),
    };
    let reports = run_benchmark_suite(&config, &options).map_err(|e| e.to_string())?;
    let worst = |m: Method| reports.iter().filter(|r| r.method == m).map(|r| r.ormse).fold(f64::NAN, f64::max);
    let (ale, a2) = (worst(Method::Ale), worst(Method::A2d2e));
    let detail = format!("simple-1, K 40, oracle, worst of 3 reps: ALE {ale:.2e}, A2D2E {a2:.2e} (tol {TOL:.0e})");
    if reports.len() == 6 && ale < TOL && a2 < TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn surrogate_ordering() -> Outcome {
    let config = ExperimentConfig {
        dependence: DependenceLevel::High,
        repetitions: 10,
        ..ExperimentConfig::new("simple-1")
    };
    let options = SuiteOptions {
        methods: Method::ESTIMATORS.to_vec(),
        predictor: PredictorKind::TinyNn(TinyNnConfig::default()),
        truth: TruthOptions::default(),
    };
    let reports = run_benchmark_suite(&config, &options).map_err(|e| e.to_string())?;
    let summaries = summarize_reports(&reports);
    let median = |m: Method| summaries.iter().find(|s| s.method == m).map(|s| (s.summary.median, s.summary.count));
    let (Some((pd, n_pd)), Some((a2, n_a2))) = (median(Method::Pd), median(Method::A2d2e)) else {
        return Err("missing method summaries".into());
    };
    let detail = format!("simple-1, high dependence, tiny NN, median ORMSE A2D2E {a2:.4} ({n_a2} reps) vs PD {pd:.4} ({n_pd} reps)");
    if a2 < pd && n_pd == 10 && n_a2 == 10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn curves_gap(a: &[EffectCurve], b: &[EffectCurve]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| max_gap(x.values(), y.values()).max(max_gap(x.grid(), y.grid())))
        .fold(0.0, f64::max)
}

fn protocol_transparency() -> Outcome {
    const TOL: f64 = 1e-12;
    let mut parts = Vec::new();
    let mut ok = true;
    for function in [BenchmarkFunction::Simple1, BenchmarkFunction::Simple2] {
        let dims = function.dims();
        let n = 100 * dims;
        let (x, y) = sample_benchmark(function, n, DependenceSpec::new(DependenceLevel::High), 3);
        let native = Dataset::new(x, y).map_err(|e| e.to_string())?;
        let normalizer = Normalizer::fit(&native).map_err(|e| e.to_string())?;
        let data = normalizer.normalize(&native).map_err(|e| e.to_string())?;
        let opts = EstimatorOptions::default();

        let local = NormalizedPredictor::new(function, normalizer.clone()).map_err(|e| e.to_string())?;
        let command = format!("{} serve-oracle --function {function}", env!("CARGO_BIN_EXE_main-effects"));
        let remote = SubprocessPredictor::spawn(&command, dims).map_err(|e| e.to_string())?;
        let remote = CountingPredictor::new(NormalizedPredictor::new(remote, normalizer).map_err(|e| e.to_string())?);

        let a2_local = estimate_a2d2e_all(&data, &local, &opts).map_err(|e| e.to_string())?;
        let a2_remote = estimate_a2d2e_all(&data, &remote, &opts).map_err(|e| e.to_string())?;
        let a2_queries = remote.take_queries();
        let expected = (n as u64) << dims;
        ok &= a2_queries == expected;

        let mut gap = curves_gap(&a2_local, &a2_remote);
        for d in 0..dims {
            for (l, r) in [
                (estimate_ale(&data, &local, d, &opts), estimate_ale(&data, &remote, d, &opts)),
                (estimate_pd(&data, &local, d, &opts), estimate_pd(&data, &remote, d, &opts)),
            ] {
                let (l, r) = (l.map_err(|e| e.to_string())?, r.map_err(|e| e.to_string())?);
                gap = gap.max(curves_gap(&[l], &[r]));
            }
        }
        ok &= gap <= TOL;
        parts.push(format!("{function}: gap {gap:.1e}, A2D2E queries {a2_queries} (expected N 2^D = {expected})"));
    }
    let detail = format!("{} (tol {TOL:.0e})", parts.join("; "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

#[test]
fn acceptance_criteria() {
    let checks: [(&str, fn() -> Outcome, u64); 9] = [
        ("fast-path equivalence", fast_path_equivalence, 5),
        ("exact linear recovery", linear_recovery, 5),
        ("quadratic slope identity", quadratic_slopes, 1),
        ("ALE increment variance", ale_variance, 30),
        ("A2D2E increment variance", a2d2e_variance, 60),
        ("A2D2E consistency", consistency, 60),
        ("oracle accuracy budget", oracle_accuracy, 30),
        ("surrogate ordering under dependence", surrogate_ordering, 300),
        ("protocol transparency", protocol_transparency, 30),
    ];
    let mut failed = Vec::new();
    for (i, (name, check, budget)) in checks.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_budget = elapsed <= Duration::from_secs(budget);
        let (status, detail) = match &outcome {
            Ok(d) if in_budget => ("PASS", d.clone()),
            Ok(d) => ("FAIL", format!("{d}; over time budget")),
            Err(d) => ("FAIL", d.clone()),
        };
        // written past the test harness capture so the lines show in every run
        writeln!(
            std::io::stdout().lock(),
            "criterion {}: {status} {name}: {detail} [{:.2} s, budget {budget} s]",
            i + 1,
            elapsed.as_secs_f64()
        )
        .unwrap();
        if status == "FAIL" {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
