use serde::Serialize;

use super::StatsError;
use crate::scalar::Scalar;

pub const HI_MAX: f64 = 100.0;

/// Fixed-width bins over `[0, 100]`; every bin is half-open except the last, which is closed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HappinessHistogram<T> {
    pub bin_width: T,
    pub counts: Vec<u64>,
    /// `counts / total`, all zero when the histogram is empty.
    pub proportions: Vec<T>,
    pub total: u64,
    /// Set when there were no values, so the proportions carry no information.
    pub empty: bool,
}

impl<T: Scalar> HappinessHistogram<T> {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    /// `(lo, hi)` of bin `i`.
    pub fn bin_edges(&self, i: usize) -> (T, T) {
        let lo = self.bin_width * T::from_count(i as u64);
        let hi = (lo + self.bin_width).min(T::lit(HI_MAX));
        (lo, hi)
    }
}

pub fn n_bins_for<T: Scalar>(bin_width: T) -> Result<usize, StatsError> {
    let max = T::lit(HI_MAX);
    if !(bin_width > T::zero() && bin_width <= max) {
        return Err(StatsError::BadBinWidth(bin_width.to_f64().unwrap_or(f64::NAN)));
    }
    Ok((max / bin_width)
        .ceil()
        .to_usize()
        .expect("bin count fits usize")
        .max(1))
}

pub fn bin_index<T: Scalar>(value: T, bin_width: T, n_bins: usize) -> usize {
    let idx = (value / bin_width).floor().to_usize().unwrap_or(0);
    idx.min(n_bins - 1)
}

pub fn build_histogram<T: Scalar>(values: &[T], bin_width: T) -> Result<HappinessHistogram<T>, StatsError> {
    let n_bins = n_bins_for(bin_width)?;
    let mut counts = vec![0u64; n_bins];
    for (index, &v) in values.iter().enumerate() {
        if !(v >= T::zero() && v <= T::lit(HI_MAX)) {
            return Err(StatsError::ValueOutOfRange {
                index,
                value: v.to_f64().unwrap_or(f64::NAN),
            });
        }
        counts[bin_index(v, bin_width, n_bins)] += 1;
    }
    let total = values.len() as u64;
    let proportions = if total == 0 {
        vec![T::zero(); n_bins]
    } else {
        let n = T::from_count(total);
        counts.iter().map(|&c| T::from_count(c) / n).collect()
    };
    Ok(HappinessHistogram {
        bin_width,
        counts,
        proportions,
        total,
        empty: total == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_binned() {
        let h = build_histogram(&[5.0f64, 15.0, 15.0, 95.0], 10.0).unwrap();
        assert_eq!(h.counts, vec![1, 2, 0, 0, 0, 0, 0, 0, 0, 1]);
        assert_eq!(h.proportions[0], 0.25);
        assert_eq!(h.proportions[1], 0.5);
        assert_eq!(h.proportions[9], 0.25);
        assert!(!h.empty);
    }

    #[test]
    fn upper_edge_goes_to_last_bin() {
        let h = build_histogram(&[100.0f64, 0.0, 10.0, 99.999], 10.0).unwrap();
        assert_eq!(h.counts, vec![1, 1, 0, 0, 0, 0, 0, 0, 0, 2]);
    }

    #[test]
    fn empty_is_flagged() {
        let h = build_histogram::<f64>(&[], 10.0).unwrap();
        assert!(h.empty);
        assert_eq!(h.counts, vec![0; 10]);
        assert_eq!(h.proportions, vec![0.0; 10]);
    }

    #[test]
    fn out_of_range_rejected() {
        assert_eq!(
            build_histogram(&[50.0f64, 100.5], 10.0).unwrap_err(),
            StatsError::ValueOutOfRange { index: 1, value: 100.5 }
        );
        assert!(build_histogram(&[-1.0f64], 10.0).is_err());
        assert!(build_histogram(&[f64::NAN], 10.0).is_err());
        assert!(build_histogram(&[1.0f64], 0.0).is_err());
    }

    #[test]
    fn uneven_width_clips_last_bin() {
        let h = build_histogram(&[99.0f32, 44.0], 15.0).unwrap();
        assert_eq!(h.n_bins(), 7);
        assert_eq!(h.bin_edges(6), (90.0, 100.0));
        assert_eq!(h.counts[6], 1);
        assert_eq!(h.counts[2], 1);
    }

    proptest! {
        #[test]
        fn proportions_sum_to_one(values in prop::collection::vec(0.0..=100.0f64, 1..500), w in prop::sample::select(vec![5.0, 10.0, 12.5, 20.0, 33.0])) {
            let h = build_histogram(&values, w).unwrap();
            let s: f64 = h.proportions.iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-9);
            prop_assert_eq!(h.counts.iter().sum::<u64>(), values.len() as u64);
        }
    }
}
