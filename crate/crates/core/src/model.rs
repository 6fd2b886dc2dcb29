//! Shared domain types: datasets, min-max normalization, partitions, effect
//! curves and experiment configuration.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Training inputs (N×D) and responses (N).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    inputs: Array2<f64>,
    responses: Array1<f64>,
}

impl Dataset {
    pub fn new(inputs: Array2<f64>, responses: Array1<f64>) -> Result<Self> {
        let (n, dims) = inputs.dim();
        if n == 0 || dims == 0 {
            return Err(Error::InvalidDataset(format!(
                "need at least one row and one column, got {n}x{dims}"
            )));
        }
        if responses.len() != n {
            return Err(Error::InvalidDataset(format!(
                "{} responses for {n} input rows",
                responses.len()
            )));
        }
        if let Some(((row, col), v)) = inputs.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite input {v} at row {row}, column {col}"
            )));
        }
        if let Some((row, v)) = responses.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite response {v} at row {row}"
            )));
        }
        Ok(Self { inputs, responses })
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.nrows() == 0
    }

    pub fn dims(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn inputs(&self) -> ArrayView2<'_, f64> {
        self.inputs.view()
    }

    pub fn responses(&self) -> ArrayView1<'_, f64> {
        self.responses.view()
    }

    pub fn column(&self, d: usize) -> ArrayView1<'_, f64> {
        self.inputs.column(d)
    }

    pub fn with_responses(&self, responses: Array1<f64>) -> Result<Self> {
        Self::new(self.inputs.clone(), responses)
    }
}

/// Per-dimension min-max scaling to the unit interval.
///
/// Fit on training inputs only. Points outside the training range map outside
/// `[0, 1]`; nothing is clipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    bounds: Vec<(f64, f64)>,
}

impl Normalizer {
    pub fn fit(dataset: &Dataset) -> Result<Self> {
        let bounds = dataset
            .inputs()
            .axis_iter(Axis(1))
            .enumerate()
            .map(|(dim, col)| {
                let (lo, hi) = col
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                        (lo.min(v), hi.max(v))
                    });
                if hi > lo {
                    Ok((lo, hi))
                } else {
                    Err(Error::ConstantColumn { dim, value: lo })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { bounds })
    }

    pub fn from_bounds(bounds: Vec<(f64, f64)>) -> Result<Self> {
        for (dim, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
                return Err(Error::InvalidArgument(format!(
                    "normalizer bounds for dimension {dim} must satisfy min < max, got ({lo}, {hi})"
                )));
            }
        }
        Ok(Self { bounds })
    }

    pub fn dims(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn transform_value(&self, d: usize, x: f64) -> f64 {
        let (lo, hi) = self.bounds[d];
        (x - lo) / (hi - lo)
    }

    pub fn inverse_value(&self, d: usize, u: f64) -> f64 {
        let (lo, hi) = self.bounds[d];
        lo + u * (hi - lo)
    }

    pub fn transform(&self, points: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check(points.ncols())?;
        let mut out = points.to_owned();
        for (d, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            col.mapv_inplace(|x| self.transform_value(d, x));
        }
        Ok(out)
    }

    pub fn inverse(&self, points: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check(points.ncols())?;
        let mut out = points.to_owned();
        for (d, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            col.mapv_inplace(|u| self.inverse_value(d, u));
        }
        Ok(out)
    }

    /// Returns a copy of `dataset` with normalized inputs and untouched responses.
    pub fn normalize(&self, dataset: &Dataset) -> Result<Dataset> {
        Dataset::new(
            self.transform(dataset.inputs())?,
            dataset.responses().to_owned(),
        )
    }

    fn check(&self, dims: usize) -> Result<()> {
        if dims != self.bounds.len() {
            return Err(Error::DimensionMismatch {
                expected: self.bounds.len(),
                actual: dims,
            });
        }
        Ok(())
    }
}

/// Bin endpoints `z_1 < … < z_{K+1}` for one variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub variable: usize,
    endpoints: Vec<f64>,
    /// Bin count asked for before duplicate endpoints were merged.
    pub requested_bins: usize,
}

impl Partition {
    pub fn new(variable: usize, endpoints: Vec<f64>, requested_bins: usize) -> Result<Self> {
        if endpoints.len() < 2 {
            return Err(Error::InvalidArgument(
                "a partition needs at least two endpoints".into(),
            ));
        }
        if endpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(format!(
                "partition endpoints must be strictly increasing: {endpoints:?}"
            )));
        }
        Ok(Self {
            variable,
            endpoints,
            requested_bins,
        })
    }

    pub fn endpoints(&self) -> &[f64] {
        &self.endpoints
    }

    pub fn bins(&self) -> usize {
        self.endpoints.len() - 1
    }

    pub fn lower(&self) -> f64 {
        self.endpoints[0]
    }

    pub fn upper(&self) -> f64 {
        self.endpoints[self.endpoints.len() - 1]
    }

    pub fn width(&self, k: usize) -> f64 {
        self.endpoints[k + 1] - self.endpoints[k]
    }

    /// True when duplicate quantiles were merged and fewer bins remain.
    pub fn was_reduced(&self) -> bool {
        self.bins() < self.requested_bins
    }
}

/// Training-row membership of each bin, zero-based: `sets[k]` holds bin `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinIndexSets {
    pub variable: usize,
    pub sets: Vec<Vec<usize>>,
}

impl BinIndexSets {
    pub fn bins(&self) -> usize {
        self.sets.len()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.sets.iter().map(Vec::len).collect()
    }

    pub fn total(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pd,
    Ale,
    A2d2e,
    Truth,
}

impl Method {
    pub const ESTIMATORS: [Method; 3] = [Method::Pd, Method::Ale, Method::A2d2e];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pd => "pd",
            Method::Ale => "ale",
            Method::A2d2e => "a2d2e",
            Method::Truth => "truth",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pd" => Ok(Method::Pd),
            "ale" => Ok(Method::Ale),
            "a2d2e" => Ok(Method::A2d2e),
            "truth" => Ok(Method::Truth),
            other => Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        }
    }
}

/// A main-effect function of one variable tabulated on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectCurve {
    pub variable: usize,
    pub method: Method,
    grid: Vec<f64>,
    values: Vec<f64>,
    centered: bool,
}

impl EffectCurve {
    pub fn new(variable: usize, method: Method, grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "grid has {} points but {} values were given",
                grid.len(),
                values.len()
            )));
        }
        check_grid(&grid)?;
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite curve value {v}")));
        }
        Ok(Self {
            variable,
            method,
            grid,
            values,
            centered: false,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn centered(self) -> Self {
        center_curve(self)
    }
}

/// Subtracts the grid mean from every value.
pub fn center_curve(mut curve: EffectCurve) -> EffectCurve {
    if !curve.centered {
        let mean = curve.values.iter().sum::<f64>() / curve.values.len().max(1) as f64;
        curve.values.iter_mut().for_each(|v| *v -= mean);
        curve.centered = true;
    }
    curve
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty evaluation grid".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "evaluation grid must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `size` equally spaced points from min to max of `values`, both inclusive.
pub fn evaluation_grid(values: ArrayView1<'_, f64>, size: usize) -> Result<Vec<f64>> {
    if size < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid size must be at least 2, got {size}"
        )));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if !(hi > lo) {
        return Err(Error::ZeroWidthSupport(values.len()));
    }
    let step = (hi - lo) / (size - 1) as f64;
    let mut grid: Vec<f64> = (0..size).map(|i| lo + step * i as f64).collect();
    grid[size - 1] = hi;
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DependenceLevel {
    #[default]
    Independent,
    Low,
    High,
}

impl DependenceLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            DependenceLevel::Independent => "independent",
            DependenceLevel::Low => "low",
            DependenceLevel::High => "high",
        }
    }
}

impl fmt::Display for DependenceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DependenceLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "independent" => Ok(Self::Independent),
            "low" => Ok(Self::Low),
            "high" => Ok(Self::High),
            other => Err(Error::InvalidArgument(format!(
                "unknown dependence level `{other}`"
            ))),
        }
    }
}

pub const DEFAULT_BINS: usize = 40;
pub const DEFAULT_DELTA: f64 = 0.01;
pub const DEFAULT_NOISE_FRACTION: f64 = 0.10;
pub const DEFAULT_GRID_SIZE: usize = 100;
pub const DEFAULT_REPETITIONS: usize = 10;

/// One benchmark setting. `n = None` means 100 samples per input dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub function: String,
    #[serde(default)]
    pub dependence: DependenceLevel,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default = "default_bins")]
    pub k: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_noise_fraction")]
    pub noise_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
}

fn default_bins() -> usize {
    DEFAULT_BINS
}
fn default_delta() -> f64 {
    DEFAULT_DELTA
}
fn default_noise_fraction() -> f64 {
    DEFAULT_NOISE_FRACTION
}
fn default_grid_size() -> usize {
    DEFAULT_GRID_SIZE
}
fn default_repetitions() -> usize {
    DEFAULT_REPETITIONS
}

impl ExperimentConfig {
    pub fn new(function: impl Into<String>) -> Self {
        Self {
            function: function.into(),
            dependence: DependenceLevel::Independent,
            n: None,
            k: DEFAULT_BINS,
            delta: DEFAULT_DELTA,
            noise_fraction: DEFAULT_NOISE_FRACTION,
            seed: 0,
            grid_size: DEFAULT_GRID_SIZE,
            repetitions: DEFAULT_REPETITIONS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.k < 1 {
            return bad("k must be at least 1".into());
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        if !(0.0..1.0).contains(&self.noise_fraction) {
            return bad(format!(
                "noise_fraction must lie in [0, 1), got {}",
                self.noise_fraction
            ));
        }
        if self.grid_size < 2 {
            return bad(format!("grid_size must be at least 2, got {}", self.grid_size));
        }
        if self.n == Some(0) {
            return bad("n must be at least 1".into());
        }
        Ok(())
    }

    /// Sample count, resolving the `100 × D` default.
    pub fn sample_count(&self, dims: usize) -> usize {
        self.n.unwrap_or(100 * dims)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn column_dataset(col: &[f64]) -> Dataset {
        let inputs = Array2::from_shape_vec((col.len(), 1), col.to_vec()).unwrap();
        Dataset::new(inputs, Array1::zeros(col.len())).unwrap()
    }

    #[test]
    fn normalizer_maps_to_unit_interval() {
        let norm = Normalizer::fit(&column_dataset(&[2.0, 4.0, 6.0])).unwrap();
        assert_eq!(norm.bounds(), &[(2.0, 6.0)]);
        let out = norm.transform(array![[2.0], [4.0], [6.0]].view()).unwrap();
        assert_eq!(out.column(0).to_vec(), vec![0.0, 0.5, 1.0]);

        let unit = Normalizer::fit(&column_dataset(&[0.0, 1.0])).unwrap();
        let out = unit.transform(array![[0.0], [0.3], [1.0]].view()).unwrap();
        assert_eq!(out.column(0).to_vec(), vec![0.0, 0.3, 1.0]);

        let skew = Normalizer::fit(&column_dataset(&[-1.0, 0.0, 3.0])).unwrap();
        let out = skew.transform(array![[-1.0], [0.0], [3.0]].view()).unwrap();
        assert_eq!(out.column(0).to_vec(), vec![0.0, 0.25, 1.0]);
    }

    #[test]
    fn normalizer_rejects_constant_column() {
        let inputs = array![[1.0, 5.0], [2.0, 5.0]];
        let data = Dataset::new(inputs, array![0.0, 0.0]).unwrap();
        match Normalizer::fit(&data) {
            Err(Error::ConstantColumn { dim: 1, value }) => assert_eq!(value, 5.0),
            other => panic!("expected constant-column error, got {other:?}"),
        }
    }

    #[test]
    fn dataset_rejects_bad_shapes() {
        assert!(Dataset::new(Array2::zeros((0, 2)), Array1::zeros(0)).is_err());
        assert!(Dataset::new(Array2::zeros((3, 2)), Array1::zeros(2)).is_err());
        assert!(Dataset::new(array![[f64::NAN]], array![0.0]).is_err());
    }

    #[test]
    fn centering_examples() {
        let curve = |v: Vec<f64>| {
            let grid = (0..v.len()).map(|i| i as f64).collect();
            EffectCurve::new(0, Method::Pd, grid, v).unwrap()
        };
        assert_eq!(center_curve(curve(vec![1.0, 2.0, 3.0])).values(), &[-1.0, 0.0, 1.0]);
        assert_eq!(center_curve(curve(vec![0.0, 0.0])).values(), &[0.0, 0.0]);
        let single = center_curve(curve(vec![5.0]));
        assert_eq!(single.values(), &[0.0]);
        assert!(single.is_centered());
    }

    #[test]
    fn grid_spans_observed_range() {
        let grid = evaluation_grid(array![0.3, -1.0, 2.0].view(), 4).unwrap();
        assert_eq!(grid, vec![-1.0, 0.0, 1.0, 2.0]);
        assert!(evaluation_grid(array![1.0, 1.0].view(), 4).is_err());
        assert!(evaluation_grid(array![0.0, 1.0].view(), 1).is_err());
    }

    #[test]
    fn curve_rejects_unsorted_grid() {
        assert!(EffectCurve::new(0, Method::Ale, vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(EffectCurve::new(0, Method::Ale, vec![1.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn config_json_round_trip_and_unknown_keys() {
        let mut config = ExperimentConfig::new("simple-1");
        config.dependence = DependenceLevel::High;
        config.seed = 42;
        let text = config.to_json().unwrap();
        for key in [
            "function",
            "dependence",
            "n",
            "k",
            "delta",
            "noise_fraction",
            "seed",
            "grid_size",
            "repetitions",
        ] {
            assert!(text.contains(&format!("\"{key}\"")), "missing {key} in {text}");
        }
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), config);

        let err = ExperimentConfig::from_json(r#"{"function":"simple-1","bins":40}"#);
        assert!(err.is_err());
        let minimal = ExperimentConfig::from_json(r#"{"function":"branin"}"#).unwrap();
        assert_eq!(minimal.k, 40);
        assert_eq!(minimal.delta, 0.01);
        assert_eq!(minimal.sample_count(2), 200);
    }

    #[test]
    fn config_validation() {
        let mut c = ExperimentConfig::new("simple-1");
        c.noise_fraction = 1.0;
        assert!(c.validate().is_err());
        c.noise_fraction = 0.1;
        c.delta = 0.0;
        assert!(c.validate().is_err());
        c.delta = 0.01;
        c.grid_size = 1;
        assert!(c.validate().is_err());
    }

    proptest! {
        #[test]
        fn normalizer_round_trip(rows in prop::collection::vec(
            prop::collection::vec(-1e3f64..1e3, 3), 2..20)
        ) {
            let n = rows.len();
            let flat: Vec<f64> = rows.concat();
            let inputs = Array2::from_shape_vec((n, 3), flat).unwrap();
            let data = Dataset::new(inputs.clone(), Array1::zeros(n)).unwrap();
            if let Ok(norm) = Normalizer::fit(&data) {
                let back = norm.inverse(norm.transform(inputs.view()).unwrap().view()).unwrap();
                for (a, b) in inputs.iter().zip(back.iter()) {
                    prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
                }
            }
        }

        #[test]
        fn centering_is_idempotent(values in prop::collection::vec(-1e3f64..1e3, 1..50)) {
            let grid = (0..values.len()).map(|i| i as f64).collect();
            let once = EffectCurve::new(0, Method::Pd, grid, values).unwrap().centered();
            let mean = once.values().iter().sum::<f64>() / once.len() as f64;
            prop_assert!(mean.abs() < 1e-10);
            let twice = center_curve(once.clone());
            prop_assert_eq!(once, twice);
        }
    }
}
