use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::EffectCurve;

/// Per-variable RMSE and their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrmseScore {
    pub per_variable: Vec<f64>,
    pub ormse: f64,
}

/// Mean over variables of the RMSE between paired curves. Curves are used
/// as given; center them first if that is wanted.
pub fn ormse(estimated: &[EffectCurve], truth: &[EffectCurve]) -> Result<OrmseScore> {
    if estimated.len() != truth.len() || estimated.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} estimated curves for {} reference curves",
            estimated.len(),
            truth.len()
        )));
    }
    let per_variable = estimated
        .iter()
        .zip(truth)
        .map(|(e, t)| {
            let same_grid = e.len() == t.len()
                && e.grid().iter().zip(t.grid()).all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            if !same_grid {
                return Err(Error::InvalidArgument(format!(
                    "grid mismatch for variable {}",
                    e.variable
                )));
            }
            let sq: f64 = e.values().iter().zip(t.values()).map(|(a, b)| (a - b).powi(2)).sum();
            Ok((sq / e.len() as f64).sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;
    let ormse = per_variable.iter().sum::<f64>() / per_variable.len() as f64;
    Ok(OrmseScore { per_variable, ormse })
}

/// Mean with a `1.96 × SE` band, plus the median.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Standard error of the mean from the unbiased sample variance; zero
    /// for fewer than two values.
    pub standard_error: f64,
    pub half_width: f64,
    pub median: f64,
}

/// Summary statistics, computed on sorted values so the result does not
/// depend on input order.
pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let standard_error = if n > 1 {
        let var = sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    Some(Summary {
        count: n,
        mean,
        standard_error,
        half_width: 1.96 * standard_error,
        median,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Method;

    fn curve(values: Vec<f64>) -> EffectCurve {
        let grid = (0..values.len()).map(|i| i as f64).collect();
        EffectCurve::new(0, Method::A2d2e, grid, values).unwrap()
    }

    #[test]
    fn identical_curves_score_zero() {
        let c = curve(vec![1.0, -2.0, 0.5]);
        assert_eq!(ormse(&[c.clone()], &[c]).unwrap().ormse, 0.0);
    }

    #[test]
    fn hand_computed_scores() {
        let s = ormse(&[curve(vec![1.0, 2.0])], &[curve(vec![1.0, 1.0])]).unwrap();
        assert!((s.ormse - 0.5f64.sqrt()).abs() < 1e-15);

        let s = ormse(
            &[curve(vec![0.1, 0.1]), curve(vec![0.3, -0.3])],
            &[curve(vec![0.0, 0.0]), curve(vec![0.0, 0.0])],
        )
        .unwrap();
        assert!((s.ormse - 0.2).abs() < 1e-15);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = curve(vec![0.0, 1.0]);
        let b = EffectCurve::new(0, Method::Truth, vec![0.0, 2.0], vec![0.0, 1.0]).unwrap();
        assert!(ormse(&[a], &[b]).is_err());
    }

    #[test]
    fn shifting_before_centering_does_not_change_the_score() {
        let t = curve(vec![0.3, -0.1, 0.4, 0.2]).centered();
        let e = curve(vec![0.1, 0.0, 0.5, 0.1]);
        let shifted = curve(e.values().iter().map(|v| v + 12.5).collect());
        let a = ormse(&[e.centered()], &[t.clone()]).unwrap().ormse;
        let b = ormse(&[shifted.centered()], &[t]).unwrap().ormse;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn summary_of_three_values() {
        let s = summarize(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.median, 2.0);
        // sample variance 1, SE = 1/sqrt(3)
        assert!((s.standard_error - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((s.half_width - 1.96 / 3f64.sqrt()).abs() < 1e-15);
        assert!(summarize(&[]).is_none());
    }
}
