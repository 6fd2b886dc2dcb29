//! The black-box boundary. Estimators only ever see [`Predictor`].

mod memo;
mod nn;
mod noisy;
mod subprocess;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::model::Normalizer;

pub use memo::MemoizedPredictor;
pub use nn::{train_tiny_nn, Activation, Optimizer, TinyNn, TinyNnConfig, TrainingReport};
pub use noisy::{add_response_noise, calibrate_noise_sigma, noise_sigma_for_fraction, wrap_with_noise, NoisyPredictor};
pub use subprocess::{SubprocessPredictor, DEFAULT_BATCH_LIMIT};

/// A batched query interface `points ↦ values`.
///
/// Implementations return one value per row of `points`, in order. An empty
/// batch must yield an empty result.
pub trait Predictor: Send + Sync {
    fn dims(&self) -> usize;

    fn predict_batch(&self, points: ArrayView2<'_, f64>) -> Result<Vec<f64>>;

    /// Whether identical points always produce identical values.
    fn is_deterministic(&self) -> bool {
        true
    }
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn dims(&self) -> usize {
        (**self).dims()
    }
    fn predict_batch(&self, points: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        (**self).predict_batch(points)
    }
    fn is_deterministic(&self) -> bool {
        (**self).is_deterministic()
    }
}

impl<P: Predictor + ?Sized> Predictor for Box<P> {
    fn dims(&self) -> usize {
        (**self).dims()
    }
    fn predict_batch(&self, points: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        (**self).predict_batch(points)
    }
    fn is_deterministic(&self) -> bool {
        (**self).is_deterministic()
    }
}

impl<P: Predictor + ?Sized> Predictor for Arc<P> {
    fn dims(&self) -> usize {
        (**self).dims()
    }
    fn predict_batch(&self, points: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        (**self).predict_batch(points)
    }
    fn is_deterministic(&self) -> bool {
        (**self).is_deterministic()
    }
}

/// Queries `predictor`, checking the point dimension, the number of values
/// returned, and that every value is finite.
pub fn query<P: Predictor + ?Sized>(predictor: &P, points: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    if points.nrows() == 0 {
        return Ok(Vec::new());
    }
    if points.ncols() != predictor.dims() {
        return Err(Error::DimensionMismatch {
            expected: predictor.dims(),
            actual: points.ncols(),
        });
    }
    let values = predictor.predict_batch(points)?;
    if values.len() != points.nrows() {
        return Err(Error::OutputLength {
            expected: points.nrows(),
            actual: values.len(),
        });
    }
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFiniteOutput { index, value });
    }
    Ok(values)
}

/// A predictor backed by a closure evaluated row by row.
pub struct FnPredictor<F> {
    dims: usize,
    f: F,
}

impl<F> FnPredictor<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(dims: usize, f: F) -> Self {
        Self { dims, f }
    }
}

impl<F> Predictor for FnPredictor<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn dims(&self) -> usize {
        self.dims
    }

    fn predict_batch(&self, points: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        let mut row = vec![0.0; self.dims];
        Ok(points
            .rows()
            .into_iter()
            .map(|r| {
                row.iter_mut().zip(r.iter()).for_each(|(a, &b)| *a = b);
                (self.f)(&row)
            })
            .collect())
    }
}

/// Exposes a predictor defined on raw inputs in normalized coordinates.
pub struct NormalizedPredictor<P> {
    inner: P,
    normalizer: Normalizer,
}

impl<P: Predictor> NormalizedPredictor<P> {
    pub fn new(inner: P, normalizer: Normalizer) -> Result<Self> {
        if inner.dims() != normalizer.dims() {
            return Err(Error::DimensionMismatch {
                expected: inner.dims(),
                actual: normalizer.dims(),
            });
        }
        Ok(Self { inner, normalizer })
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: Predictor> Predictor for NormalizedPredictor<P> {
    fn dims(&self) -> usize {
        self.inner.dims()
    }

    fn predict_batch(&self, points: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        let raw: Array2<f64> = self.normalizer.inverse(points)?;
        self.inner.predict_batch(raw.view())
    }

    fn is_deterministic(&self) -> bool {
        self.inner.is_deterministic()
    }
}

/// Counts every point forwarded to the inner predictor.
pub struct CountingPredictor<P> {
    inner: P,
    points: AtomicU64,
    batches: AtomicU64,
}

impl<P: Predictor> CountingPredictor<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            points: AtomicU64::new(0),
            batches: AtomicU64::new(0),
        }
    }

    pub fn queries(&self) -> u64 {
        self.points.load(Ordering::Relaxed)
    }

    pub fn batches(&self) -> u64 {
        self.batches.load(Ordering::Relaxed)
    }

    /// Returns the count so far and resets it to zero.
    pub fn take_queries(&self) -> u64 {
        self.batches.store(0, Ordering::Relaxed);
        self.points.swap(0, Ordering::Relaxed)
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: Predictor> Predictor for CountingPredictor<P> {
    fn dims(&self) -> usize {
        self.inner.dims()
    }

    fn predict_batch(&self, points: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        self.points.fetch_add(points.nrows() as u64, Ordering::Relaxed);
        self.batches.fetch_add(1, Ordering::Relaxed);
        self.inner.predict_batch(points)
    }

    fn is_deterministic(&self) -> bool {
        self.inner.is_deterministic()
    }
}
