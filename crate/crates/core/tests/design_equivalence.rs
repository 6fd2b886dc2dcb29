use main_effects::design::{build_local_design, local_slopes_fast, local_slopes_ols};
use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn fast_path_matches_least_squares_on_random_designs() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let dims = rng.random_range(1..=5);
        let center: Vec<f64> = (0..dims).map(|_| rng.random_range(-1.0..2.0)).collect();
        let delta = 10f64.powf(rng.random_range(-3.0..0.0));
        let coef: Vec<f64> = (0..dims).map(|_| rng.random_range(-3.0..3.0)).collect();
        let design = build_local_design(&center, delta).unwrap();
        let y: Array1<f64> = design
            .vertices()
            .rows()
            .into_iter()
            .map(|v| {
                v.iter().zip(&coef).map(|(x, c)| (c * x).sin() + c * x * x).sum::<f64>() + v[0] * v[dims - 1]
            })
            .collect();
        let fast = local_slopes_fast(&design, y.view()).unwrap();
        let ols = local_slopes_ols(&design, y.view()).unwrap();
        for (a, b) in fast.slopes.iter().zip(&ols.slopes) {
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst <= 1e-8, "{worst}");
}

#[test]
fn square_slope_is_twice_the_center() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let center = [rng.random_range(-2.0..2.0), rng.random_range(0.0..1.0)];
        let delta = rng.random_range(1e-4..1.0);
        let design = build_local_design(&center, delta).unwrap();
        let y: Array1<f64> = design.vertices().rows().into_iter().map(|v| v[0] * v[0]).collect();
        let fit = local_slopes_fast(&design, y.view()).unwrap();
        assert!((fit.slopes[0] - 2.0 * center[0]).abs() < 1e-12);
        assert!(fit.slopes[1].abs() < 1e-12);
    }
}
