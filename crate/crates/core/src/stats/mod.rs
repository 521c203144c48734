//! Cohort partitions, normalized histograms and the chi-square test of independence.

pub mod chi_square;
pub mod cohort;
pub mod gamma;
pub mod histogram;

use thiserror::Error;

pub use chi_square::{chi_square_independence, chi_square_independence_with, ChiSquareOptions, ChiSquareResult};
pub use cohort::{cohort_report, partition_users, CohortPartition, CohortReport, ReportOptions};
pub use gamma::{chi_square_sf, gamma_p, gamma_q, ln_gamma};
pub use histogram::{build_histogram, HappinessHistogram, HI_MAX};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("value #{index} = {value} outside [0, 100]")]
    ValueOutOfRange { index: usize, value: f64 },
    #[error("bin width {0} must be in (0, 100]")]
    BadBinWidth(f64),
    #[error("degenerate table: {0}")]
    DegenerateTable(String),
    #[error("ragged table: row {row} has {got} columns, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
}
