use main_effects::benchmarks::{ground_truth_main_effect, BenchmarkFunction, DependenceSpec, TruthOptions};
use main_effects::model::{DependenceLevel, Normalizer};

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn constant_derivative_effect_ignores_dependence() {
    // ∂/∂x2 of simple-1 is 1 regardless of the other inputs
    let norm = Normalizer::from_bounds(vec![(-0.1, 1.1), (-0.2, 1.2)]).unwrap();
    let grid: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
    let opts = TruthOptions { samples: 10_000, ..Default::default() };
    let curves: Vec<_> = [DependenceLevel::Independent, DependenceLevel::Low, DependenceLevel::High]
        .into_iter()
        .map(|level| {
            ground_truth_main_effect(BenchmarkFunction::Simple1, 1, &grid, &norm, DependenceSpec::new(level), &opts).unwrap()
        })
        .collect();
    for c in &curves[1..] {
        assert!(max_gap(c.values(), curves[0].values()) < 2e-3);
    }
    // slope is 1 per native unit, and the normalized grid spans 1.4 native units
    let line: Vec<f64> = grid.iter().map(|u| 1.4 * (u - 0.5)).collect();
    assert!(max_gap(curves[0].values(), &line) < 1e-3);
}

#[test]
fn truth_is_seed_deterministic() {
    let norm = Normalizer::from_bounds(vec![(0.0, 1.0); 6]).unwrap();
    let grid: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
    let opts = TruthOptions { samples: 500, seed: 3, ..Default::default() };
    let spec = DependenceSpec::new(DependenceLevel::Low);
    let a = ground_truth_main_effect(BenchmarkFunction::Levy, 2, &grid, &norm, spec, &opts).unwrap();
    let b = ground_truth_main_effect(BenchmarkFunction::Levy, 2, &grid, &norm, spec, &opts).unwrap();
    assert_eq!(a, b);
}
