//! Closed-form response surfaces, dependence-controlled input samplers, and
//! numerical ground-truth main effects.

mod truth;

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DependenceLevel;
use crate::predictor::Predictor;
use crate::rng;

pub use truth::{ground_truth_main_effect, TruthMode, TruthOptions};

/// Relative step (fraction of the native range) for central-difference gradients.
pub const GRADIENT_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BenchmarkFunction {
    #[serde(rename = "franke")]
    Franke,
    #[serde(rename = "branin")]
    Branin,
    #[serde(rename = "simple-1")]
    Simple1,
    #[serde(rename = "simple-2")]
    Simple2,
    #[serde(rename = "levy")]
    Levy,
    #[serde(rename = "ackley")]
    Ackley,
    #[serde(rename = "detpep108d")]
    Detpep108d,
}

impl BenchmarkFunction {
    pub const ALL: [BenchmarkFunction; 7] = [
        Self::Franke,
        Self::Branin,
        Self::Simple1,
        Self::Simple2,
        Self::Levy,
        Self::Ackley,
        Self::Detpep108d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Franke => "franke",
            Self::Branin => "branin",
            Self::Simple1 => "simple-1",
            Self::Simple2 => "simple-2",
            Self::Levy => "levy",
            Self::Ackley => "ackley",
            Self::Detpep108d => "detpep108d",
        }
    }

    pub fn dims(self) -> usize {
        match self {
            Self::Franke | Self::Branin | Self::Simple1 => 2,
            Self::Simple2 => 4,
            Self::Levy | Self::Ackley => 6,
            Self::Detpep108d => 8,
        }
    }

    /// Native input box, one `(lower, upper)` pair per dimension.
    pub fn domain(self) -> Vec<(f64, f64)> {
        match self {
            Self::Branin => vec![(-5.0, 10.0), (0.0, 15.0)],
            Self::Levy => vec![(-10.0, 10.0); 6],
            Self::Ackley => vec![(-32.768, 32.768); 6],
            other => vec![(0.0, 1.0); other.dims()],
        }
    }

    pub fn in_domain(self, x: &[f64]) -> bool {
        x.len() == self.dims()
            && x.iter()
                .zip(self.domain())
                .all(|(&v, (lo, hi))| (lo..=hi).contains(&v))
    }

    /// Value at a point in native units. Points outside the box are evaluated
    /// all the same.
    pub fn evaluate(self, x: &[f64]) -> f64 {
        match self {
            Self::Franke => {
                let (a, b) = (9.0 * x[0], 9.0 * x[1]);
                0.75 * (-(a - 2.0).powi(2) / 4.0 - (b - 2.0).powi(2) / 4.0).exp()
                    + 0.75 * (-(a + 1.0).powi(2) / 49.0 - (b + 1.0) / 10.0).exp()
                    + 0.5 * (-(a - 7.0).powi(2) / 4.0 - (b - 3.0).powi(2) / 4.0).exp()
                    - 0.2 * (-(a - 4.0).powi(2) - (b - 7.0).powi(2)).exp()
            }
            Self::Branin => {
                let (x1, x2) = (x[0], x[1]);
                let inner = x2 - 5.1 / (4.0 * PI * PI) * x1 * x1 + 5.0 / PI * x1 - 6.0;
                inner * inner + 10.0 * (1.0 - 1.0 / (8.0 * PI)) * x1.cos() + 10.0
            }
            Self::Simple1 => x[0] * x[0] + x[1],
            Self::Simple2 => x[0] * x[1] - x[1] * x[2] + x[3] * x[0],
            Self::Levy => {
                let w: Vec<f64> = x.iter().map(|v| 1.0 + (v - 1.0) / 4.0).collect();
                let d = w.len();
                let head = (PI * w[0]).sin().powi(2);
                let middle: f64 = w[..d - 1]
                    .iter()
                    .map(|wi| (wi - 1.0).powi(2) * (1.0 + 10.0 * (PI * wi + 1.0).sin().powi(2)))
                    .sum();
                let wd = w[d - 1];
                let tail = (wd - 1.0).powi(2) * (1.0 + (2.0 * PI * wd).sin().powi(2));
                head + middle + tail
            }
            Self::Ackley => {
                let d = x.len() as f64;
                let sq = x.iter().map(|v| v * v).sum::<f64>() / d;
                let cs = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / d;
                -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E
            }
            Self::Detpep108d => {
                let mut running = 0.0;
                let mut total = 0.0;
                for (i, v) in x.iter().enumerate() {
                    running += v;
                    total += (running - (i + 1) as f64 / 2.0).powi(2);
                }
                total
            }
        }
    }

    /// Partial derivative with respect to native coordinate `d`: exact for
    /// simple-1 and simple-2, central differences otherwise.
    pub fn partial(self, x: &[f64], d: usize) -> f64 {
        match self {
            Self::Simple1 => {
                if d == 0 {
                    2.0 * x[0]
                } else {
                    1.0
                }
            }
            Self::Simple2 => match d {
                0 => x[1] + x[3],
                1 => x[0] - x[2],
                2 => -x[1],
                _ => x[0],
            },
            _ => {
                let (lo, hi) = self.domain()[d];
                let h = GRADIENT_STEP * (hi - lo);
                let mut p = x.to_vec();
                p[d] = x[d] + h;
                let up = self.evaluate(&p);
                p[d] = x[d] - h;
                let down = self.evaluate(&p);
                (up - down) / (2.0 * h)
            }
        }
    }

    /// Affine map from the unit box to the native box.
    pub fn to_native(self, unit: ArrayView2<'_, f64>) -> Array2<f64> {
        let domain = self.domain();
        let mut out = unit.to_owned();
        for (mut col, (lo, hi)) in out.columns_mut().into_iter().zip(domain) {
            col.mapv_inplace(|u| lo + u * (hi - lo));
        }
        out
    }
}

impl fmt::Display for BenchmarkFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownFunction(s.to_string()))
    }
}

/// Evaluates a registered function by name at a native-domain point.
pub fn evaluate_function(name: &str, x: &[f64]) -> Result<f64> {
    let f: BenchmarkFunction = name.parse()?;
    if x.len() != f.dims() {
        return Err(Error::DimensionMismatch {
            expected: f.dims(),
            actual: x.len(),
        });
    }
    if !f.in_domain(x) {
        log::debug!("{name}: evaluating outside the native domain at {x:?}");
    }
    Ok(f.evaluate(x))
}

impl Predictor for BenchmarkFunction {
    fn dims(&self) -> usize {
        BenchmarkFunction::dims(*self)
    }

    fn predict_batch(&self, points: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        let mut row = vec![0.0; self.dims()];
        Ok(points
            .rows()
            .into_iter()
            .map(|r| {
                row.iter_mut().zip(r.iter()).for_each(|(a, &b)| *a = b);
                self.evaluate(&row)
            })
            .collect())
    }
}

/// Input dependence regime: every variable after the first is either an
/// independent uniform draw or the first variable plus `N(0, σ²)` noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependenceSpec {
    pub level: DependenceLevel,
}

impl DependenceSpec {
    pub fn new(level: DependenceLevel) -> Self {
        Self { level }
    }

    /// `None` for independent inputs.
    pub fn sigma(self) -> Option<f64> {
        match self.level {
            DependenceLevel::Independent => None,
            DependenceLevel::Low => Some(0.1),
            DependenceLevel::High => Some(0.05),
        }
    }
}

impl From<DependenceLevel> for DependenceSpec {
    fn from(level: DependenceLevel) -> Self {
        Self::new(level)
    }
}

/// `n × dims` inputs in unit-box coordinates. The first column is
/// `Unif(0, 1)`; dependent columns are not truncated.
pub fn sample_inputs(dims: usize, n: usize, spec: DependenceSpec, seed: u64) -> Array2<f64> {
    let mut rng = rng::stream(seed, &[rng::SAMPLER]);
    let mut out = Array2::zeros((n, dims));
    for mut row in out.rows_mut() {
        let lead: f64 = rng.random();
        row[0] = lead;
        for j in 1..dims {
            row[j] = match spec.sigma() {
                None => rng.random(),
                Some(s) => {
                    let z: f64 = rng.sample(StandardNormal);
                    lead + s * z
                }
            };
        }
    }
    out
}

/// Native-unit inputs and noise-free responses for one benchmark draw.
pub fn sample_benchmark(function: BenchmarkFunction, n: usize, spec: DependenceSpec, seed: u64) -> (Array2<f64>, Array1<f64>) {
    let unit = sample_inputs(function.dims(), n, spec, seed);
    let native = function.to_native(unit.view());
    let y = native
        .rows()
        .into_iter()
        .map(|r| function.evaluate(&r.to_vec()))
        .collect();
    (native, y)
}
