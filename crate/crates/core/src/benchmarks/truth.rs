//! Reference main effects: the conditional mean of `∂f/∂x_d` given
//! `x_d = z`, integrated along the grid.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sample_inputs, BenchmarkFunction, DependenceSpec};
use crate::error::{Error, Result};
use crate::model::{EffectCurve, Method, Normalizer};
use crate::rng;

/// Redraws allowed when inverting `x_d = x_1 + ε` for `x_1` in the unit
/// interval before the draw is clamped.
const MAX_REJECTIONS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruthMode {
    /// Integrate the conditional mean derivative.
    #[default]
    Conditional,
    /// Average `f` over draws of the other variables that ignore `x_d`.
    PdProxy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthOptions {
    pub samples: usize,
    pub mode: TruthMode,
    pub seed: u64,
}

impl Default for TruthOptions {
    fn default() -> Self {
        Self {
            samples: 100_000,
            mode: TruthMode::Conditional,
            seed: 0,
        }
    }
}

/// Draws the other coordinates (unit scale) given `s[d] = t`.
fn conditional_draw(s: &mut [f64], d: usize, t: f64, spec: DependenceSpec, rng: &mut ChaCha8Rng) {
    s[d] = t;
    match spec.sigma() {
        None => {
            for (j, v) in s.iter_mut().enumerate() {
                if j != d {
                    *v = rng.random();
                }
            }
        }
        Some(sigma) => {
            let lead = if d == 0 {
                t
            } else {
                let mut lead = f64::NAN;
                for _ in 0..MAX_REJECTIONS {
                    let e: f64 = rng.sample(StandardNormal);
                    let candidate = t - sigma * e;
                    if (0.0..=1.0).contains(&candidate) {
                        lead = candidate;
                        break;
                    }
                }
                if lead.is_nan() {
                    lead = t.clamp(0.0, 1.0);
                }
                s[0] = lead;
                lead
            };
            for (j, v) in s.iter_mut().enumerate() {
                if j != 0 && j != d {
                    let e: f64 = rng.sample(StandardNormal);
                    *v = lead + sigma * e;
                }
            }
        }
    }
}

/// Reference curve for variable `d` on a grid given in normalized units.
///
/// `normalizer` maps those units to the native domain of `function`. The
/// result is centered on the grid.
pub fn ground_truth_main_effect(
    function: BenchmarkFunction,
    d: usize,
    grid: &[f64],
    normalizer: &Normalizer,
    spec: DependenceSpec,
    options: &TruthOptions,
) -> Result<EffectCurve> {
    let dims = function.dims();
    if d >= dims || normalizer.dims() != dims {
        return Err(Error::DimensionMismatch {
            expected: dims,
            actual: normalizer.dims().max(d + 1),
        });
    }
    if options.samples == 0 {
        return Err(Error::InvalidArgument("truth needs at least one sample".into()));
    }
    let domain = function.domain();
    let native: Vec<f64> = grid.iter().map(|&u| normalizer.inverse_value(d, u)).collect();
    let m = options.samples;

    let values: Vec<f64> = match options.mode {
        TruthMode::Conditional => {
            let slopes: Vec<f64> = native
                .par_iter()
                .map(|&z| {
                    let (lo, hi) = domain[d];
                    let t = (z - lo) / (hi - lo);
                    let mut rng = rng::stream(options.seed, &[rng::TRUTH, d as u64]);
                    let mut s = vec![0.0; dims];
                    let mut x = vec![0.0; dims];
                    let mut total = 0.0;
                    for _ in 0..m {
                        conditional_draw(&mut s, d, t, spec, &mut rng);
                        for (j, (lo, hi)) in domain.iter().enumerate() {
                            x[j] = lo + s[j] * (hi - lo);
                        }
                        x[d] = z;
                        total += function.partial(&x, d);
                    }
                    total / m as f64
                })
                .collect();
            if let Some((index, &value)) = slopes.iter().enumerate().find(|(_, v)| !v.is_finite()) {
                return Err(Error::NonFiniteOutput { index, value });
            }
            let mut acc = 0.0;
            let mut out = Vec::with_capacity(grid.len());
            out.push(0.0);
            for i in 1..grid.len() {
                acc += (native[i] - native[i - 1]) * (slopes[i] + slopes[i - 1]) / 2.0;
                out.push(acc);
            }
            out
        }
        TruthMode::PdProxy => {
            let unit = sample_inputs(dims, m, spec, rng::derive_seed(options.seed, &[rng::TRUTH]));
            let background = function.to_native(unit.view());
            native
                .par_iter()
                .map(|&z| {
                    let mut x = vec![0.0; dims];
                    let total: f64 = background
                        .rows()
                        .into_iter()
                        .map(|r| {
                            x.iter_mut().zip(r.iter()).for_each(|(a, &b)| *a = b);
                            x[d] = z;
                            function.evaluate(&x)
                        })
                        .sum();
                    total / m as f64
                })
                .collect()
        }
    };
    Ok(EffectCurve::new(d, Method::Truth, grid.to_vec(), values)?.centered())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DependenceLevel;

    fn unit_grid() -> Vec<f64> {
        (0..100).map(|i| i as f64 / 99.0).collect()
    }

    fn centered(v: Vec<f64>) -> Vec<f64> {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.into_iter().map(|x| x - m).collect()
    }

    fn max_gap(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn simple_1_truth_is_analytic() {
        let norm = Normalizer::from_bounds(vec![(0.0, 1.0); 2]).unwrap();
        let grid = unit_grid();
        let opts = TruthOptions { samples: 2000, ..Default::default() };
        for level in [DependenceLevel::Independent, DependenceLevel::High] {
            let spec = DependenceSpec::new(level);
            let c1 = ground_truth_main_effect(BenchmarkFunction::Simple1, 0, &grid, &norm, spec, &opts).unwrap();
            let sq = centered(grid.iter().map(|x| x * x).collect());
            assert!(max_gap(c1.values(), &sq) < 2e-3);
            let c2 = ground_truth_main_effect(BenchmarkFunction::Simple1, 1, &grid, &norm, spec, &opts).unwrap();
            assert!(max_gap(c2.values(), &centered(grid.clone())) < 1e-3);
        }
    }

    #[test]
    fn additive_part_is_unaffected_by_dependence() {
        // ∂f/∂x4 = x1, whose mean is 1/2 under independent inputs
        let norm = Normalizer::from_bounds(vec![(0.0, 1.0); 4]).unwrap();
        let grid = unit_grid();
        let opts = TruthOptions { samples: 20_000, ..Default::default() };
        let ind = ground_truth_main_effect(BenchmarkFunction::Simple2, 3, &grid, &norm, DependenceSpec::new(DependenceLevel::Independent), &opts).unwrap();
        let line = centered(grid.iter().map(|x| 0.5 * x).collect());
        assert!(max_gap(ind.values(), &line) < 2e-3);
    }

    #[test]
    fn conditional_draws_respect_the_constraint() {
        let spec = DependenceSpec::new(DependenceLevel::Low);
        let mut rng = rng::stream(3, &[1]);
        let mut s = vec![0.0; 4];
        let mut lead_mean = 0.0;
        for _ in 0..20_000 {
            conditional_draw(&mut s, 2, 0.02, spec, &mut rng);
            assert_eq!(s[2], 0.02);
            assert!((0.0..=1.0).contains(&s[0]));
            lead_mean += s[0];
        }
        // the lead variable is pulled up into the unit interval
        assert!(lead_mean / 20_000.0 > 0.02);
    }

    #[test]
    fn pd_proxy_matches_marginal_average() {
        let norm = Normalizer::from_bounds(vec![(0.0, 1.0); 2]).unwrap();
        let grid = unit_grid();
        let opts = TruthOptions { samples: 5000, mode: TruthMode::PdProxy, seed: 1 };
        let c = ground_truth_main_effect(BenchmarkFunction::Simple1, 0, &grid, &norm, DependenceSpec::new(DependenceLevel::High), &opts).unwrap();
        let sq = centered(grid.iter().map(|x| x * x).collect());
        assert!(max_gap(c.values(), &sq) < 1e-12);
    }
}
