//! Partial dependence, accumulated local effects, and aggregated local
//! factorial-design effects.
//!
//! All three work on a dataset in the predictor's input units and only call
//! the predictor through [`query`]. Curves are returned centered.
//!
//! Bin-based curves are accumulated with linear interpolation inside the bin
//! holding `x`: `f(x) = Σ_{j<k} Δ_j + (x - z_k) / w_k · Δ_k`. At every bin
//! endpoint this agrees with plain cumulative summation of whole bins.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binning::{assign_bins, locate, quantile_partition};
use crate::design::{check_design_dims, factorial_slopes_into, vertex_sign};
use crate::error::{Error, Result};
use crate::model::{
    evaluation_grid, BinIndexSets, Dataset, EffectCurve, ExperimentConfig, Method, Partition,
    DEFAULT_BINS, DEFAULT_DELTA, DEFAULT_GRID_SIZE,
};
use crate::predictor::{query, Predictor};

/// Cap on rows sent to the predictor in one call while evaluating designs.
const DESIGN_CHUNK_ROWS: usize = 1 << 16;

/// Where curves are evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GridSpec {
    /// Evenly spaced points spanning the observed range of the variable.
    Uniform(usize),
    /// Caller-supplied strictly increasing locations.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOptions {
    pub bins: usize,
    pub delta: f64,
    pub grid: GridSpec,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            bins: DEFAULT_BINS,
            delta: DEFAULT_DELTA,
            grid: GridSpec::Uniform(DEFAULT_GRID_SIZE),
        }
    }
}

impl From<&ExperimentConfig> for EstimatorOptions {
    fn from(config: &ExperimentConfig) -> Self {
        Self {
            bins: config.k,
            delta: config.delta,
            grid: GridSpec::Uniform(config.grid_size),
        }
    }
}

impl EstimatorOptions {
    pub fn grid_for(&self, dataset: &Dataset, d: usize) -> Result<Vec<f64>> {
        match &self.grid {
            GridSpec::Uniform(size) => evaluation_grid(dataset.column(d), *size),
            GridSpec::Explicit(points) => Ok(points.clone()),
        }
    }
}

/// Contribution of one bin to an accumulated curve.
///
/// For ALE the mean endpoint difference is stored in `mean_slope` with
/// `width` 1, so `increment = width × mean_slope` holds for both kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinIncrement {
    pub bin: usize,
    pub variable: usize,
    pub width: f64,
    pub mean_slope: f64,
    pub increment: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IncrementKind {
    Ale,
    A2d2e,
}

/// Local first-order slopes at every training point, from one shared set of
/// design evaluations.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSlopeTable {
    pub delta: f64,
    /// N × D.
    pub slopes: Array2<f64>,
    pub intercepts: Vec<f64>,
    /// Predictor queries spent building the table.
    pub queries: usize,
}

impl LocalSlopeTable {
    pub fn len(&self) -> usize {
        self.slopes.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.slopes.nrows() == 0
    }

    pub fn dims(&self) -> usize {
        self.slopes.ncols()
    }
}

/// Evaluates the `2^D` vertex design around every row of `centers` and fits
/// slopes at each. Chunks are evaluated in parallel only when the predictor
/// is deterministic, so noisy predictors see a fixed query order.
pub fn compute_local_slopes<P: Predictor + ?Sized>(
    centers: ArrayView2<'_, f64>,
    predictor: &P,
    delta: f64,
) -> Result<LocalSlopeTable> {
    let (n, dims) = centers.dim();
    check_design_dims(dims)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "design edge length must be positive, got {delta}"
        )));
    }
    let vertices = 1usize << dims;
    let per_chunk = (DESIGN_CHUNK_ROWS / vertices).max(1);
    let half = delta / 2.0;

    let eval_chunk = |start: usize| -> Result<Vec<f64>> {
        let end = (start + per_chunk).min(n);
        let rows = (end - start) * vertices;
        let pts = Array2::from_shape_fn((rows, dims), |(r, j)| {
            let (p, v) = (start + r / vertices, r % vertices);
            centers[[p, j]] + half * vertex_sign(v, j, dims)
        });
        query(predictor, pts.view())
    };
    let starts: Vec<usize> = (0..n).step_by(per_chunk).collect();
    let chunks: Vec<Vec<f64>> = if predictor.is_deterministic() {
        starts.par_iter().map(|&s| eval_chunk(s)).collect::<Result<_>>()?
    } else {
        starts.iter().map(|&s| eval_chunk(s)).collect::<Result<_>>()?
    };
    let values: Vec<f64> = chunks.concat();

    let mut slopes = Array2::zeros((n, dims));
    let mut intercepts = vec![0.0; n];
    slopes
        .as_slice_mut()
        .expect("fresh arrays are contiguous")
        .par_chunks_mut(dims)
        .zip(intercepts.par_iter_mut())
        .zip(values.par_chunks(vertices))
        .for_each(|((row, b0), y)| *b0 = factorial_slopes_into(dims, delta, y, row));
    Ok(LocalSlopeTable {
        delta,
        slopes,
        intercepts,
        queries: n * vertices,
    })
}

fn bins_for(dataset: &Dataset, d: usize, bins: usize) -> Result<(Partition, BinIndexSets)> {
    if d >= dataset.dims() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dims(),
            actual: d + 1,
        });
    }
    let partition = quantile_partition(d, dataset.column(d), bins)?;
    let sets = assign_bins(dataset, &partition)?;
    Ok((partition, sets))
}

fn ordered_mean(values: impl Iterator<Item = f64>) -> (f64, usize) {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (sum / count as f64, count)
}

fn check_nonempty(sets: &BinIndexSets) -> Result<()> {
    if let Some(k) = sets.sets.iter().position(Vec::is_empty) {
        return Err(Error::InvalidDataset(format!(
            "bin {k} of variable {} has no observations",
            sets.variable
        )));
    }
    Ok(())
}

/// Per-bin `width × mean slope` for variable `d`, using a precomputed table.
pub fn a2d2e_increments(
    dataset: &Dataset,
    table: &LocalSlopeTable,
    d: usize,
    bins: usize,
) -> Result<(Partition, Vec<BinIncrement>)> {
    if table.len() != dataset.len() || table.dims() != dataset.dims() {
        return Err(Error::DimensionMismatch {
            expected: dataset.len(),
            actual: table.len(),
        });
    }
    let (partition, sets) = bins_for(dataset, d, bins)?;
    check_nonempty(&sets)?;
    let increments = sets
        .sets
        .iter()
        .enumerate()
        .map(|(k, members)| {
            let (mean_slope, count) = ordered_mean(members.iter().map(|&n| table.slopes[[n, d]]));
            let width = partition.width(k);
            BinIncrement {
                bin: k,
                variable: d,
                width,
                mean_slope,
                increment: width * mean_slope,
                count,
            }
        })
        .collect();
    Ok((partition, increments))
}

/// Per-bin mean of `f(z_{k+1}, x_\d) - f(z_k, x_\d)` over the bin's rows.
pub fn ale_increments<P: Predictor + ?Sized>(
    dataset: &Dataset,
    predictor: &P,
    d: usize,
    bins: usize,
) -> Result<(Partition, Vec<BinIncrement>)> {
    let (partition, sets) = bins_for(dataset, d, bins)?;
    check_nonempty(&sets)?;
    let inputs = dataset.inputs();
    let dims = dataset.dims();
    let mut pts = Array2::zeros((2 * dataset.len(), dims));
    let mut r = 0;
    for (k, members) in sets.sets.iter().enumerate() {
        let (lo, hi) = (partition.endpoints()[k], partition.endpoints()[k + 1]);
        for &n in members {
            for (edge, z) in [hi, lo].into_iter().enumerate() {
                let mut row = pts.row_mut(r + edge);
                row.assign(&inputs.row(n));
                row[d] = z;
            }
            r += 2;
        }
    }
    let values = query(predictor, pts.view())?;
    let mut offset = 0;
    let increments = sets
        .sets
        .iter()
        .enumerate()
        .map(|(k, members)| {
            let diffs = values[offset..offset + 2 * members.len()]
                .chunks_exact(2)
                .map(|pair| pair[0] - pair[1]);
            offset += 2 * members.len();
            let (mean, count) = ordered_mean(diffs);
            BinIncrement {
                bin: k,
                variable: d,
                width: 1.0,
                mean_slope: mean,
                increment: mean,
                count,
            }
        })
        .collect();
    Ok((partition, increments))
}

/// ALE increment for a single bin `[lower, upper]` from the rows of `members`.
pub fn ale_bin_increment<P: Predictor + ?Sized>(
    predictor: &P,
    members: ArrayView2<'_, f64>,
    d: usize,
    lower: f64,
    upper: f64,
) -> Result<f64> {
    if members.nrows() == 0 {
        return Err(Error::InvalidArgument("bin has no members".into()));
    }
    let mut pts = Array2::zeros((2 * members.nrows(), members.ncols()));
    for (i, row) in members.rows().into_iter().enumerate() {
        for (edge, z) in [upper, lower].into_iter().enumerate() {
            let mut out = pts.row_mut(2 * i + edge);
            out.assign(&row);
            out[d] = z;
        }
    }
    let values = query(predictor, pts.view())?;
    Ok(ordered_mean(values.chunks_exact(2).map(|p| p[0] - p[1])).0)
}

/// Aggregated local-design increment for a single bin of the given width.
pub fn a2d2e_bin_increment<P: Predictor + ?Sized>(
    predictor: &P,
    members: ArrayView2<'_, f64>,
    d: usize,
    width: f64,
    delta: f64,
) -> Result<f64> {
    if members.nrows() == 0 {
        return Err(Error::InvalidArgument("bin has no members".into()));
    }
    let table = compute_local_slopes(members, predictor, delta)?;
    Ok(width * ordered_mean(table.slopes.column(d).iter().copied()).0)
}

/// Value of the accumulated curve at `x`; locations outside the partition
/// are clamped to its range.
pub fn accumulate(partition: &Partition, increments: &[BinIncrement], x: f64) -> f64 {
    let z = partition.endpoints();
    let x = x.clamp(partition.lower(), partition.upper());
    let k = locate(x, partition).bin;
    let before: f64 = increments[..k].iter().map(|b| b.increment).sum();
    before + (x - z[k]) / partition.width(k) * increments[k].increment
}

fn accumulated_curve(
    d: usize,
    method: Method,
    partition: &Partition,
    increments: &[BinIncrement],
    grid: Vec<f64>,
) -> Result<EffectCurve> {
    let values = grid.iter().map(|&x| accumulate(partition, increments, x)).collect();
    Ok(EffectCurve::new(d, method, grid, values)?.centered())
}

/// Accumulated local effects of variable `d`.
pub fn estimate_ale<P: Predictor + ?Sized>(
    dataset: &Dataset,
    predictor: &P,
    d: usize,
    options: &EstimatorOptions,
) -> Result<EffectCurve> {
    let (partition, increments) = ale_increments(dataset, predictor, d, options.bins)?;
    accumulated_curve(d, Method::Ale, &partition, &increments, options.grid_for(dataset, d)?)
}

/// Aggregated local-design effect of variable `d`.
pub fn estimate_a2d2e<P: Predictor + ?Sized>(
    dataset: &Dataset,
    predictor: &P,
    d: usize,
    options: &EstimatorOptions,
) -> Result<EffectCurve> {
    let table = compute_local_slopes(dataset.inputs(), predictor, options.delta)?;
    a2d2e_curve(dataset, &table, d, options)
}

/// Curve for variable `d` from an existing slope table; issues no queries.
pub fn a2d2e_curve(
    dataset: &Dataset,
    table: &LocalSlopeTable,
    d: usize,
    options: &EstimatorOptions,
) -> Result<EffectCurve> {
    let (partition, increments) = a2d2e_increments(dataset, table, d, options.bins)?;
    accumulated_curve(d, Method::A2d2e, &partition, &increments, options.grid_for(dataset, d)?)
}

/// Curves for every variable from one shared set of `N × 2^D` design queries.
pub fn estimate_a2d2e_all<P: Predictor + ?Sized>(
    dataset: &Dataset,
    predictor: &P,
    options: &EstimatorOptions,
) -> Result<Vec<EffectCurve>> {
    let table = compute_local_slopes(dataset.inputs(), predictor, options.delta)?;
    (0..dataset.dims())
        .map(|d| a2d2e_curve(dataset, &table, d, options))
        .collect()
}

/// Partial dependence of variable `d`: the model averaged over the observed
/// rows with coordinate `d` replaced by each grid location.
pub fn estimate_pd<P: Predictor + ?Sized>(
    dataset: &Dataset,
    predictor: &P,
    d: usize,
    options: &EstimatorOptions,
) -> Result<EffectCurve> {
    if d >= dataset.dims() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dims(),
            actual: d + 1,
        });
    }
    let grid = options.grid_for(dataset, d)?;
    let n = dataset.len();
    let inputs = dataset.inputs();
    let mut pts = Array2::zeros((grid.len() * n, dataset.dims()));
    for (g, &x) in grid.iter().enumerate() {
        for i in 0..n {
            let mut row = pts.row_mut(g * n + i);
            row.assign(&inputs.row(i));
            row[d] = x;
        }
    }
    let values = query(predictor, pts.view())?;
    let curve = values.chunks_exact(n).map(|c| ordered_mean(c.iter().copied()).0).collect();
    Ok(EffectCurve::new(d, Method::Pd, grid, curve)?.centered())
}

/// Sampling variance of one bin increment under additive model noise of
/// standard deviation `sigma`.
pub fn bin_increment_variance(
    kind: IncrementKind,
    sigma: f64,
    count: usize,
    width: f64,
    delta: f64,
    dims: usize,
) -> f64 {
    let s2 = sigma * sigma;
    match kind {
        IncrementKind::Ale => 2.0 * s2 / count as f64,
        IncrementKind::A2d2e => {
            width * width * s2 / (count as f64 * 2f64.powi(dims as i32 - 2) * delta * delta)
        }
    }
}
