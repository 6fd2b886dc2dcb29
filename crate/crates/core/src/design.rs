//! Two-level full factorial designs around a single point.
//!
//! The design around a center `c` with edge length `δ` is the `2^D` corners
//! `c + (δ/2) s`, `s ∈ {-1, +1}^D`. Its centered design matrix `Ṽ` has
//! mutually orthogonal columns with `ṼᵀṼ = 2^(D-2) δ² I_D`, which makes the
//! first-order least-squares fit a single scaled product `Ṽᵀy`.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest input dimension for which a design is built (65 536 vertices).
pub const MAX_DESIGN_DIMS: usize = 16;

/// Sign of coordinate `j` at vertex `i` in lexicographic order: the first
/// coordinate varies slowest and `-1` precedes `+1`.
#[inline]
pub fn vertex_sign(vertex: usize, coord: usize, dims: usize) -> f64 {
    if (vertex >> (dims - 1 - coord)) & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

pub fn check_design_dims(dims: usize) -> Result<()> {
    if dims == 0 {
        return Err(Error::InvalidArgument("design needs at least one dimension".into()));
    }
    if dims > MAX_DESIGN_DIMS {
        return Err(Error::DesignTooLarge {
            dims,
            cap: MAX_DESIGN_DIMS,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalDesign {
    center: Vec<f64>,
    delta: f64,
    vertices: Array2<f64>,
}

/// Intercept and per-coordinate slopes of a first-order fit around one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeVector {
    pub center: Vec<f64>,
    pub intercept: f64,
    pub slopes: Vec<f64>,
}

pub fn build_local_design(center: &[f64], delta: f64) -> Result<LocalDesign> {
    let dims = center.len();
    check_design_dims(dims)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "design edge length must be positive, got {delta}"
        )));
    }
    let half = delta / 2.0;
    let vertices = Array2::from_shape_fn((1 << dims, dims), |(i, j)| {
        center[j] + half * vertex_sign(i, j, dims)
    });
    Ok(LocalDesign {
        center: center.to_vec(),
        delta,
        vertices,
    })
}

impl LocalDesign {
    pub fn dims(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.nrows()
    }

    pub fn vertices(&self) -> &Array2<f64> {
        &self.vertices
    }

    /// `Ṽ`: the ideal offsets `(δ/2) s`, one row per vertex.
    pub fn centered_matrix(&self) -> Array2<f64> {
        let dims = self.dims();
        let half = self.delta / 2.0;
        Array2::from_shape_fn((1 << dims, dims), |(i, j)| half * vertex_sign(i, j, dims))
    }

    fn check_values(&self, values: ArrayView1<'_, f64>) -> Result<()> {
        if values.len() != self.vertex_count() {
            return Err(Error::DimensionMismatch {
                expected: self.vertex_count(),
                actual: values.len(),
            });
        }
        Ok(())
    }
}

/// Slopes `2^(2-D) δ^(-2) Ṽᵀy` in `dims` dimensions from vertex values in
/// lexicographic order; writes into `slopes` and returns the intercept
/// (the mean of `values`).
pub fn factorial_slopes_into(dims: usize, delta: f64, values: &[f64], slopes: &mut [f64]) -> f64 {
    debug_assert_eq!(values.len(), 1 << dims);
    debug_assert_eq!(slopes.len(), dims);
    let half = delta / 2.0;
    let scale = 2f64.powi(2 - dims as i32) / (delta * delta);
    for (j, slope) in slopes.iter_mut().enumerate() {
        let dot: f64 = values
            .iter()
            .enumerate()
            .map(|(i, &y)| half * vertex_sign(i, j, dims) * y)
            .sum();
        *slope = scale * dot;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// First-order fit using the orthogonality of the factorial design.
pub fn local_slopes_fast(design: &LocalDesign, values: ArrayView1<'_, f64>) -> Result<SlopeVector> {
    design.check_values(values)?;
    let values = values.to_vec();
    let mut slopes = vec![0.0; design.dims()];
    let intercept = factorial_slopes_into(design.dims(), design.delta, &values, &mut slopes);
    Ok(SlopeVector {
        center: design.center.clone(),
        intercept,
        slopes,
    })
}

/// First-order fit by a general least-squares solve (Householder QR) on the
/// intercept-augmented vertex matrix.
///
/// The returned intercept is the fitted value at the design center, so it
/// is comparable with [`local_slopes_fast`].
pub fn local_slopes_ols(design: &LocalDesign, values: ArrayView1<'_, f64>) -> Result<SlopeVector> {
    design.check_values(values)?;
    let rows = design.vertex_count();
    let dims = design.dims();
    let x = DMatrix::from_fn(rows, dims + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            design.vertices[[i, j - 1]]
        }
    });
    let y = DVector::from_iterator(rows, values.iter().copied());
    let qr = x.qr();
    let qty = qr.q().transpose() * y;
    let beta = qr.r().solve_upper_triangular(&qty).ok_or(Error::SingularDesign)?;
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::SingularDesign);
    }
    let slopes: Vec<f64> = beta.iter().skip(1).copied().collect();
    let intercept = beta[0]
        + slopes
            .iter()
            .zip(&design.center)
            .map(|(b, c)| b * c)
            .sum::<f64>();
    Ok(SlopeVector {
        center: design.center.clone(),
        intercept,
        slopes,
    })
}
