//! Quantile partitions of one variable's observed support and bin membership.
//!
//! Boundary rule: bin `k` (zero-based) is `(z_k, z_{k+1}]`, except bin 0 which
//! is closed on both ends. A value sitting exactly on an interior endpoint
//! therefore belongs to the lower bin.

use ndarray::ArrayView1;

use crate::error::{Error, Result};
use crate::model::{BinIndexSets, Dataset, Partition};

/// Empirical quantile at probability `p` of sorted data, interpolating
/// linearly between order statistics.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Quantile at probability `num / den`, with the order-statistic position
/// computed in integers so that exact positions are never rounded down.
fn quantile_at_fraction(sorted: &[f64], num: usize, den: usize) -> f64 {
    let scaled = (sorted.len() - 1) * num;
    let (lo, rem) = (scaled / den, scaled % den);
    if rem == 0 || lo + 1 >= sorted.len() {
        sorted[lo.min(sorted.len() - 1)]
    } else {
        let frac = rem as f64 / den as f64;
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Splits the observed range of `values` into `bins` equal-frequency bins.
///
/// Endpoints sit at the `j / bins` quantiles. Repeated endpoints (from ties)
/// are merged, as are endpoints that would leave a bin with no observations,
/// so the result can hold fewer bins than requested. Asking for more bins
/// than observations caps the request at the observation count.
pub fn quantile_partition(variable: usize, values: ArrayView1<'_, f64>, bins: usize) -> Result<Partition> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "quantile partition needs at least 2 values, got {n}"
        )));
    }
    if bins < 1 {
        return Err(Error::InvalidArgument("bin count must be at least 1".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite value {v}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[n - 1] {
        return Err(Error::ZeroWidthSupport(n));
    }

    let effective = if bins > n {
        log::warn!("variable {variable}: {bins} bins requested for {n} observations; using {n}");
        n
    } else {
        bins
    };

    let mut candidates: Vec<f64> = (0..=effective)
        .map(|j| quantile_at_fraction(&sorted, j, effective))
        .collect();
    candidates.dedup();

    // Keep an interior endpoint only if at least one observation falls in
    // (last kept endpoint, candidate]. The maximum is always kept.
    let upper = sorted[n - 1];
    let mut endpoints = vec![sorted[0]];
    for &z in &candidates[1..candidates.len() - 1] {
        let last = *endpoints.last().unwrap();
        let below_last = if endpoints.len() == 1 {
            0
        } else {
            sorted.partition_point(|&v| v <= last)
        };
        let below_z = sorted.partition_point(|&v| v <= z);
        if below_z > below_last && z < upper {
            endpoints.push(z);
        }
    }
    endpoints.push(upper);

    if endpoints.len() - 1 < bins {
        log::debug!(
            "variable {variable}: {} of {bins} bins remain after merging",
            endpoints.len() - 1
        );
    }
    Partition::new(variable, endpoints, bins)
}

/// Zero-based bin of `x`, plus whether `x` had to be clamped into range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub bin: usize,
    pub clamped: bool,
}

pub fn locate(x: f64, partition: &Partition) -> Location {
    let z = partition.endpoints();
    if x < partition.lower() {
        return Location { bin: 0, clamped: true };
    }
    if x > partition.upper() {
        return Location {
            bin: partition.bins() - 1,
            clamped: true,
        };
    }
    Location {
        bin: z[1..z.len() - 1].partition_point(|&e| e < x),
        clamped: false,
    }
}

/// Assigns each training row to the bin holding its value of the partition's variable.
pub fn assign_bins(dataset: &Dataset, partition: &Partition) -> Result<BinIndexSets> {
    let d = partition.variable;
    if d >= dataset.dims() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dims(),
            actual: d + 1,
        });
    }
    let mut sets = vec![Vec::new(); partition.bins()];
    for (row, &x) in dataset.column(d).iter().enumerate() {
        let loc = locate(x, partition);
        if loc.clamped {
            return Err(Error::OutOfRange {
                value: x,
                lower: partition.lower(),
                upper: partition.upper(),
            });
        }
        sets[loc.bin].push(row);
    }
    Ok(BinIndexSets { variable: d, sets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1, Array2};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single_column(values: &[f64]) -> Dataset {
        let inputs = Array2::from_shape_vec((values.len(), 1), values.to_vec()).unwrap();
        Dataset::new(inputs, Array1::zeros(values.len())).unwrap()
    }

    #[test]
    fn two_values_one_bin() {
        let p = quantile_partition(0, array![0.0, 1.0].view(), 1).unwrap();
        assert_eq!(p.endpoints(), &[0.0, 1.0]);
    }

    #[test]
    fn median_of_one_to_eight() {
        let values = Array1::from_iter((1..=8).map(f64::from));
        let p = quantile_partition(0, values.view(), 2).unwrap();
        assert_eq!(p.endpoints(), &[1.0, 4.5, 8.0]);
    }

    #[test]
    fn ties_are_merged() {
        // Half the sample sits exactly on 0.5.
        let mut values: Vec<f64> = (0..10).map(|i| i as f64 / 20.0).collect();
        values.extend(std::iter::repeat_n(0.5, 10));
        let p = quantile_partition(0, Array1::from(values.clone()).view(), 4).unwrap();
        assert!(p.endpoints().windows(2).all(|w| w[1] > w[0]));
        assert!(p.bins() < 4);
        assert!(p.was_reduced());
        let sets = assign_bins(&single_column(&values), &p).unwrap();
        assert_eq!(sets.total(), values.len());
        assert!(sets.sets.iter().all(|s| !s.is_empty()));
    }

    #[test]
    fn tie_run_followed_by_gap_leaves_no_empty_bin() {
        let mut values = vec![0.5; 50];
        values.extend((0..50).map(|i| 0.6 + i as f64 * 0.01));
        let p = quantile_partition(0, Array1::from(values.clone()).view(), 10).unwrap();
        let sets = assign_bins(&single_column(&values), &p).unwrap();
        assert!(sets.sets.iter().all(|s| !s.is_empty()), "{:?}", sets.counts());
    }

    #[test]
    fn identical_values_rejected() {
        assert!(matches!(
            quantile_partition(0, array![2.0, 2.0, 2.0].view(), 2),
            Err(Error::ZeroWidthSupport(3))
        ));
        assert!(quantile_partition(0, array![1.0].view(), 1).is_err());
    }

    #[test]
    fn too_many_bins_are_capped() {
        let p = quantile_partition(0, array![0.0, 1.0, 2.0].view(), 10).unwrap();
        assert_eq!(p.bins(), 3);
        assert_eq!(p.requested_bins, 10);
    }

    #[test]
    fn boundary_value_goes_to_lower_bin() {
        let p = Partition::new(0, vec![0.0, 0.5, 1.0], 2).unwrap();
        assert_eq!(locate(0.5, &p), Location { bin: 0, clamped: false });
        assert_eq!(locate(0.1, &p).bin, 0);
        assert_eq!(locate(0.9, &p).bin, 1);
        assert_eq!(locate(0.25, &p), Location { bin: 0, clamped: false });
        assert_eq!(locate(0.0, &p), Location { bin: 0, clamped: false });
        assert_eq!(locate(1.0, &p), Location { bin: 1, clamped: false });
        assert_eq!(locate(1.2, &p), Location { bin: 1, clamped: true });
        assert_eq!(locate(-0.2, &p), Location { bin: 0, clamped: true });

        let sets = assign_bins(&single_column(&[0.1, 0.9, 0.5]), &p).unwrap();
        assert_eq!(sets.sets, vec![vec![0, 2], vec![1]]);
    }

    #[test]
    fn assign_rejects_out_of_range_rows() {
        let p = Partition::new(0, vec![0.0, 0.5, 1.0], 2).unwrap();
        assert!(matches!(
            assign_bins(&single_column(&[0.2, 1.5]), &p),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn uniform_draws_fill_bins_equally() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let values: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
        let p = quantile_partition(0, Array1::from(values.clone()).view(), 10).unwrap();
        let sets = assign_bins(&single_column(&values), &p).unwrap();
        assert_eq!(sets.counts(), vec![10; 10]);
    }

    proptest! {
        #[test]
        fn tie_free_counts_differ_by_at_most_one(
            raw in prop::collection::btree_set(0u32..1_000_000, 2..300),
            bins in 1usize..50,
        ) {
            let values: Vec<f64> = raw.iter().map(|&v| v as f64 / 1e6).collect();
            let p = quantile_partition(0, Array1::from(values.clone()).view(), bins).unwrap();
            let sets = assign_bins(&single_column(&values), &p).unwrap();
            let counts = sets.counts();
            let max = *counts.iter().max().unwrap();
            let min = *counts.iter().min().unwrap();
            prop_assert!(max - min <= 1, "{counts:?}");
            prop_assert_eq!(sets.total(), values.len());
            prop_assert_eq!(p.lower(), values.iter().cloned().fold(f64::INFINITY, f64::min));
            prop_assert_eq!(p.upper(), values.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        }

        #[test]
        fn membership_agrees_with_locate(
            values in prop::collection::vec((0u32..50).prop_map(|v| v as f64 / 7.0), 2..200),
            bins in 1usize..30,
        ) {
            prop_assume!(values.iter().any(|&v| v != values[0]));
            let p = quantile_partition(0, Array1::from(values.clone()).view(), bins).unwrap();
            prop_assert!(p.endpoints().windows(2).all(|w| w[1] > w[0]));
            let sets = assign_bins(&single_column(&values), &p).unwrap();
            prop_assert_eq!(sets.total(), values.len());
            prop_assert!(sets.sets.iter().all(|s| !s.is_empty()));
            for (k, rows) in sets.sets.iter().enumerate() {
                for &row in rows {
                    prop_assert_eq!(locate(values[row], &p).bin, k);
                }
            }
        }
    }
}
