//! Gender x ownership partitions and the cohort comparison report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::chi_square::{chi_square_independence_with, ChiSquareOptions};
use super::histogram::{build_histogram, HappinessHistogram};
use super::StatsError;
use crate::annotate::Gender;
use crate::demographics::{GenderVerdict, UserDemographics};
use crate::ownership::{OwnershipStatus, OwnershipVerdict};

/// Below this, a p-value is displayed as `p < 0.0001`.
pub const P_DISPLAY_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct PartitionRow {
    pub owner: u64,
    pub non_owner: u64,
    pub total: u64,
}

impl PartitionRow {
    fn add(&mut self, status: OwnershipStatus) {
        match status {
            OwnershipStatus::Owner => self.owner += 1,
            OwnershipStatus::NonOwner => self.non_owner += 1,
        }
        self.total += 1;
    }
}

/// 2x2 counts of users by gender and ownership with margins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct CohortPartition {
    pub male: PartitionRow,
    pub female: PartitionRow,
    pub total: PartitionRow,
}

impl CohortPartition {
    pub fn row(&self, gender: Gender) -> &PartitionRow {
        match gender {
            Gender::Male => &self.male,
            Gender::Female => &self.female,
        }
    }

    pub fn is_consistent(&self) -> bool {
        let rows_ok = [self.male, self.female, self.total]
            .iter()
            .all(|r| r.owner + r.non_owner == r.total);
        rows_ok
            && self.male.owner + self.female.owner == self.total.owner
            && self.male.non_owner + self.female.non_owner == self.total.non_owner
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct PartitionExclusions {
    pub unknown_gender: u64,
    pub missing_demographics: u64,
}

/// Counts users with a verdict and a known gender.
pub fn partition_users(
    verdicts: &[OwnershipVerdict],
    demographics: &[UserDemographics],
) -> (CohortPartition, PartitionExclusions) {
    let genders: BTreeMap<&str, GenderVerdict> = demographics.iter().map(|d| (d.user_id.as_str(), d.gender)).collect();
    let mut partition = CohortPartition::default();
    let mut excluded = PartitionExclusions::default();
    for v in verdicts {
        match genders.get(v.user_id.as_str()).map(|g| g.known()) {
            Some(Some(Gender::Male)) => partition.male.add(v.status),
            Some(Some(Gender::Female)) => partition.female.add(v.status),
            Some(None) => {
                excluded.unknown_gender += 1;
                continue;
            }
            None => {
                excluded.missing_demographics += 1;
                continue;
            }
        }
        partition.total.add(v.status);
    }
    (partition, excluded)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    pub bin_width: f64,
    pub pool_min_expected: Option<f64>,
    /// Comparisons involving a smaller cohort are skipped.
    pub min_cohort_size: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            bin_width: 10.0,
            pool_min_expected: None,
            min_cohort_size: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortHistogram {
    pub size: u64,
    pub empty: bool,
    pub mean_hi: Option<f64>,
    pub bins: Vec<HistogramBin>,
}

impl CohortHistogram {
    fn from_histogram(h: &HappinessHistogram<f64>, values: &[f64]) -> Self {
        let bins = (0..h.n_bins())
            .map(|i| {
                let (lo, hi) = h.bin_edges(i);
                HistogramBin {
                    lo,
                    hi,
                    count: h.counts[i],
                    proportion: h.proportions[i],
                }
            })
            .collect();
        Self {
            size: h.total,
            empty: h.empty,
            mean_hi: crate::scalar::mean(values),
            bins,
        }
    }

    pub fn counts(&self) -> Vec<u64> {
        self.bins.iter().map(|b| b.count).collect()
    }

    /// `bin_lo,bin_hi,count,proportion` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count,proportion\n");
        for b in &self.bins {
            writeln!(out, "{},{},{},{}", b.lo, b.hi, b.count, b.proportion).expect("write to String");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestSummary {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub p_display: String,
    pub dropped_bins: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pooled: Option<Vec<Vec<usize>>>,
}

pub fn display_p(p: f64) -> String {
    if p < P_DISPLAY_FLOOR {
        "p < 0.0001".to_string()
    } else {
        format!("p = {p:.4}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub name: String,
    pub cohorts: [String; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test: Option<TestSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ReportExclusions {
    /// Users with a verdict but no happiness index.
    pub no_happiness_index: u64,
    /// Users with a happiness index but no verdict.
    pub no_verdict: u64,
    pub unknown_gender: u64,
    pub missing_demographics: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortReport {
    pub bin_width: f64,
    pub partition: CohortPartition,
    pub exclusions: ReportExclusions,
    pub cohorts: BTreeMap<String, CohortHistogram>,
    pub comparisons: Vec<Comparison>,
}

pub const COHORTS: [&str; 8] = [
    "owners",
    "non_owners",
    "male",
    "female",
    "male_owners",
    "male_non_owners",
    "female_owners",
    "female_non_owners",
];

pub const COMPARISONS: [(&str, &str, &str); 3] = [
    ("owners_vs_non_owners", "owners", "non_owners"),
    ("male_owners_vs_male_non_owners", "male_owners", "male_non_owners"),
    (
        "female_owners_vs_female_non_owners",
        "female_owners",
        "female_non_owners",
    ),
];

fn cohort_names(status: OwnershipStatus, gender: Option<Gender>) -> Vec<&'static str> {
    let owner = status == OwnershipStatus::Owner;
    let mut names = vec![if owner { "owners" } else { "non_owners" }];
    match (gender, owner) {
        (Some(Gender::Male), true) => names.extend(["male", "male_owners"]),
        (Some(Gender::Male), false) => names.extend(["male", "male_non_owners"]),
        (Some(Gender::Female), true) => names.extend(["female", "female_owners"]),
        (Some(Gender::Female), false) => names.extend(["female", "female_non_owners"]),
        (None, _) => {}
    }
    names
}

/// Builds cohort histograms and the owner / non-owner comparisons.
///
/// Users need a verdict and a happiness index to enter any cohort; gendered
/// cohorts additionally need a known gender. The partition table counts every
/// user with a verdict and a known gender, whether or not they have an index.
pub fn cohort_report(
    verdicts: &[OwnershipVerdict],
    hi: &BTreeMap<String, f64>,
    demographics: &[UserDemographics],
    options: &ReportOptions,
) -> Result<CohortReport, StatsError> {
    let (partition, part_excl) = partition_users(verdicts, demographics);
    let genders: BTreeMap<&str, GenderVerdict> = demographics.iter().map(|d| (d.user_id.as_str(), d.gender)).collect();

    let mut exclusions = ReportExclusions {
        unknown_gender: part_excl.unknown_gender,
        missing_demographics: part_excl.missing_demographics,
        ..Default::default()
    };
    let mut members: BTreeMap<&str, Vec<f64>> = COHORTS.iter().map(|&c| (c, Vec::new())).collect();
    let mut with_verdict = std::collections::BTreeSet::new();
    for v in verdicts {
        with_verdict.insert(v.user_id.as_str());
        let Some(&value) = hi.get(&v.user_id) else {
            exclusions.no_happiness_index += 1;
            continue;
        };
        let gender = genders.get(v.user_id.as_str()).and_then(|g| g.known());
        for name in cohort_names(v.status, gender) {
            members.get_mut(name).expect("known cohort").push(value);
        }
    }
    exclusions.no_verdict = hi.keys().filter(|u| !with_verdict.contains(u.as_str())).count() as u64;

    let built: Vec<(&str, Result<CohortHistogram, StatsError>)> = members
        .par_iter()
        .map(|(&name, values)| {
            let h = build_histogram(values, options.bin_width).map(|h| CohortHistogram::from_histogram(&h, values));
            (name, h)
        })
        .collect();
    let mut cohorts = BTreeMap::new();
    for (name, h) in built {
        cohorts.insert(name.to_string(), h?);
    }

    let comparisons = COMPARISONS
        .iter()
        .map(|&(name, a, b)| compare(name, &cohorts[a], &cohorts[b], [a, b], options))
        .collect();

    Ok(CohortReport {
        bin_width: options.bin_width,
        partition,
        exclusions,
        cohorts,
        comparisons,
    })
}

fn compare(
    name: &str,
    a: &CohortHistogram,
    b: &CohortHistogram,
    labels: [&str; 2],
    options: &ReportOptions,
) -> Comparison {
    let cohorts = [labels[0].to_string(), labels[1].to_string()];
    let skip = |reason: String| Comparison {
        name: name.to_string(),
        cohorts: cohorts.clone(),
        test: None,
        skipped: Some(reason),
    };
    for (label, h) in labels.iter().zip([a, b]) {
        if (h.size as usize) < options.min_cohort_size {
            return skip(format!(
                "cohort {label} has {} users, need at least {}",
                h.size, options.min_cohort_size
            ));
        }
    }
    let table = vec![a.counts(), b.counts()];
    match chi_square_independence_with::<f64>(
        &table,
        ChiSquareOptions {
            pool_min_expected: options.pool_min_expected,
        },
    ) {
        Ok(r) => Comparison {
            name: name.to_string(),
            cohorts: cohorts.clone(),
            test: Some(TestSummary {
                statistic: r.statistic,
                df: r.df,
                p_value: r.p_value,
                p_display: display_p(r.p_value),
                dropped_bins: r.dropped_bins,
                pooled: r.pooled,
            }),
            skipped: None,
        },
        Err(e) => skip(e.to_string()),
    }
}
