use std::sync::Mutex;

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::Predictor;
use crate::error::{Error, Result};
use crate::rng;

/// Adds a fresh `N(0, σ²)` draw to every value the inner predictor returns.
///
/// Draws come from one seeded stream consumed in query order, so a fixed
/// sequence of calls is reproducible. Concurrent callers are serialized.
pub struct NoisyPredictor<P> {
    inner: P,
    sigma: f64,
    rng: Mutex<ChaCha8Rng>,
}

pub fn wrap_with_noise<P: Predictor>(inner: P, sigma: f64, seed: u64) -> Result<NoisyPredictor<P>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise standard deviation must be non-negative, got {sigma}"
        )));
    }
    Ok(NoisyPredictor {
        inner,
        sigma,
        rng: Mutex::new(rng::stream(seed, &[rng::MODEL_NOISE])),
    })
}

impl<P> NoisyPredictor<P> {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl<P: Predictor> Predictor for NoisyPredictor<P> {
    fn dims(&self) -> usize {
        self.inner.dims()
    }

    fn predict_batch(&self, points: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        let mut values = self.inner.predict_batch(points)?;
        if self.sigma > 0.0 {
            let mut rng = self.rng.lock().unwrap_or_else(|e| e.into_inner());
            for v in &mut values {
                let z: f64 = rng.sample(StandardNormal);
                *v += self.sigma * z;
            }
        }
        Ok(values)
    }

    fn is_deterministic(&self) -> bool {
        self.sigma == 0.0 && self.inner.is_deterministic()
    }
}

/// `sqrt(fraction × s²)` where `s²` is the unbiased sample variance.
pub fn noise_sigma_for_fraction(responses: ArrayView1<'_, f64>, fraction: f64) -> Result<f64> {
    let n = responses.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "noise calibration needs at least 2 responses, got {n}"
        )));
    }
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!(
            "noise fraction must lie in [0, 1), got {fraction}"
        )));
    }
    let mean = responses.sum() / n as f64;
    let var = responses.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok((fraction * var).sqrt())
}

/// Noise level whose variance is 10% of the sample variance of `responses`.
pub fn calibrate_noise_sigma(responses: ArrayView1<'_, f64>) -> Result<f64> {
    noise_sigma_for_fraction(responses, 0.1)
}

/// Returns `responses + N(0, σ²)` noise, one draw per response.
pub fn add_response_noise(responses: ArrayView1<'_, f64>, sigma: f64, seed: u64) -> Array1<f64> {
    let mut rng = rng::stream(seed, &[rng::RESPONSE_NOISE]);
    responses.mapv(|y| {
        let z: f64 = rng.sample(StandardNormal);
        y + sigma * z
    })
}
