//! Pearson chi-square test of independence on an `r x k` table of counts.

use serde::Serialize;

use super::gamma::chi_square_sf;
use super::StatsError;
use crate::scalar::{pairwise_sum, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChiSquareOptions {
    /// Merge adjacent columns until every expected count reaches this value.
    pub pool_min_expected: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareResult<T> {
    pub statistic: T,
    pub df: usize,
    pub p_value: T,
    /// Original column indices removed because both rows were zero there.
    pub dropped_bins: Vec<usize>,
    /// Column groups after pooling, in original indices; `None` when pooling is off.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pooled: Option<Vec<Vec<usize>>>,
}

pub fn chi_square_independence<T: Scalar>(table: &[Vec<u64>]) -> Result<ChiSquareResult<T>, StatsError> {
    chi_square_independence_with(table, ChiSquareOptions::default())
}

pub fn chi_square_independence_with<T: Scalar>(
    table: &[Vec<u64>],
    options: ChiSquareOptions,
) -> Result<ChiSquareResult<T>, StatsError> {
    let rows = table.len();
    if rows < 2 {
        return Err(StatsError::DegenerateTable(format!("need at least 2 rows, got {rows}")));
    }
    let width = table[0].len();
    for (row, r) in table.iter().enumerate() {
        if r.len() != width {
            return Err(StatsError::Ragged {
                row,
                got: r.len(),
                expected: width,
            });
        }
    }
    let row_totals: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    if let Some(row) = row_totals.iter().position(|&t| t == 0) {
        return Err(StatsError::DegenerateTable(format!("row {row} has no observations")));
    }

    let col_total = |j: usize| table.iter().map(|r| r[j]).sum::<u64>();
    let (kept, dropped_bins): (Vec<usize>, Vec<usize>) = (0..width).partition(|&j| col_total(j) > 0);
    let grand: u64 = row_totals.iter().sum();

    let groups: Vec<Vec<usize>> = match options.pool_min_expected {
        Some(min) => pool_columns(&kept, &row_totals, grand, min, col_total),
        None => kept.iter().map(|&j| vec![j]).collect(),
    };
    if groups.len() < 2 {
        return Err(StatsError::DegenerateTable(format!(
            "need at least 2 non-empty columns, got {}",
            groups.len()
        )));
    }

    let n = T::from_count(grand);
    let mut terms = Vec::with_capacity(rows * groups.len());
    for (i, row) in table.iter().enumerate() {
        let r = T::from_count(row_totals[i]);
        for g in &groups {
            let observed = T::from_count(g.iter().map(|&j| row[j]).sum());
            let c = T::from_count(g.iter().map(|&j| col_total(j)).sum());
            let expected = r * c / n;
            let diff = observed - expected;
            terms.push(diff * diff / expected);
        }
    }
    let statistic = pairwise_sum(&terms);
    let df = (rows - 1) * (groups.len() - 1);
    Ok(ChiSquareResult {
        statistic,
        df,
        p_value: chi_square_sf(statistic, df),
        dropped_bins,
        pooled: options.pool_min_expected.map(|_| groups),
    })
}

/// Greedy left-to-right merge of adjacent columns; a short tail joins the previous group.
fn pool_columns(
    kept: &[usize],
    row_totals: &[u64],
    grand: u64,
    min_expected: f64,
    col_total: impl Fn(usize) -> u64,
) -> Vec<Vec<usize>> {
    let min_row = *row_totals.iter().min().expect("at least one row") as f64;
    let enough = |total: u64| min_row * total as f64 / grand as f64 >= min_expected;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    let mut current_total = 0u64;
    for &j in kept {
        current.push(j);
        current_total += col_total(j);
        if enough(current_total) {
            groups.push(std::mem::take(&mut current));
            current_total = 0;
        }
    }
    if !current.is_empty() {
        match groups.last_mut() {
            Some(last) => last.extend(current),
            None => groups.push(current),
        }
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_rows_give_zero() {
        let r: ChiSquareResult<f64> = chi_square_independence(&[vec![10, 20, 30], vec![10, 20, 30]]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.df, 2);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn two_by_two_hand_computed() {
        // N = 60, all expected counts 15, four terms of 25/15
        let r: ChiSquareResult<f64> = chi_square_independence(&[vec![10, 20], vec![20, 10]]).unwrap();
        assert!((r.statistic - 20.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.df, 1);
        assert!((r.p_value - 0.009_823_274_507_519_235).abs() < 1e-12);
    }

    #[test]
    fn all_zero_columns_are_dropped() {
        let r: ChiSquareResult<f64> = chi_square_independence(&[vec![0, 10, 0, 20, 0], vec![0, 20, 0, 10, 0]]).unwrap();
        assert_eq!(r.dropped_bins, vec![0, 2, 4]);
        assert_eq!(r.df, 1);
        assert!((r.statistic - 20.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_tables() {
        assert!(matches!(
            chi_square_independence::<f64>(&[vec![0, 5, 0], vec![0, 7, 0]]),
            Err(StatsError::DegenerateTable(_))
        ));
        assert!(matches!(
            chi_square_independence::<f64>(&[vec![1, 2]]),
            Err(StatsError::DegenerateTable(_))
        ));
        assert!(matches!(
            chi_square_independence::<f64>(&[vec![0, 0], vec![3, 4]]),
            Err(StatsError::DegenerateTable(_))
        ));
        assert!(matches!(
            chi_square_independence::<f64>(&[vec![1, 2], vec![3]]),
            Err(StatsError::Ragged { .. })
        ));
    }

    #[test]
    fn pooling_merges_sparse_tail() {
        let t = vec![vec![30, 30, 1, 1, 0], vec![30, 30, 2, 0, 1]];
        let r: ChiSquareResult<f64> = chi_square_independence_with(
            &t,
            ChiSquareOptions {
                pool_min_expected: Some(5.0),
            },
        )
        .unwrap();
        assert_eq!(r.pooled, Some(vec![vec![0], vec![1, 2, 3, 4]]));
        assert_eq!(r.df, 1);
    }

    #[test]
    fn three_rows() {
        // hand: rows (10,10),(10,10),(20,0); N=60, cols 40/20
        // E row1,2: 40/3, 20/3 ; row3: 40/3, 20/3
        let r: ChiSquareResult<f64> = chi_square_independence(&[vec![10, 10], vec![10, 10], vec![20, 0]]).unwrap();
        let e1: f64 = 40.0 / 3.0;
        let e2: f64 = 20.0 / 3.0;
        let per_row = (10.0 - e1).powi(2) / e1 + (10.0 - e2).powi(2) / e2;
        let last = (20.0 - e1).powi(2) / e1 + e2;
        assert!((r.statistic - (2.0 * per_row + last)).abs() < 1e-12);
        assert_eq!(r.df, 2);
    }

    fn arb_table() -> impl Strategy<Value = Vec<Vec<u64>>> {
        (2usize..8).prop_flat_map(|k| prop::collection::vec(prop::collection::vec(1u64..200, k), 2))
    }

    proptest! {
        #[test]
        fn row_swap_invariant(t in arb_table()) {
            let a: ChiSquareResult<f64> = chi_square_independence(&t).unwrap();
            let b: ChiSquareResult<f64> = chi_square_independence(&[t[1].clone(), t[0].clone()]).unwrap();
            prop_assert!((a.statistic - b.statistic).abs() <= 1e-9 * a.statistic.max(1.0));
        }

        #[test]
        fn statistic_scales_linearly(t in arb_table(), c in 2u64..20) {
            let a: ChiSquareResult<f64> = chi_square_independence(&t).unwrap();
            let scaled: Vec<Vec<u64>> = t.iter().map(|r| r.iter().map(|&v| v * c).collect()).collect();
            let b: ChiSquareResult<f64> = chi_square_independence(&scaled).unwrap();
            prop_assert!((b.statistic - c as f64 * a.statistic).abs() <= 1e-9 * b.statistic.max(1.0));
            prop_assert!(b.p_value <= a.p_value + 1e-15);
        }

        #[test]
        fn p_value_in_unit_interval(t in arb_table()) {
            let r: ChiSquareResult<f64> = chi_square_independence(&t).unwrap();
            prop_assert!(r.statistic >= 0.0);
            prop_assert!((0.0..=1.0).contains(&r.p_value));
        }
    }
}
