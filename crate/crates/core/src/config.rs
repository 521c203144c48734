//! Pipeline tunables and their layering: CLI flags > environment > config file > defaults.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::remote::RetryPolicy;
use crate::annotate::{FaceSizeMetric, SelfieRule};
use crate::corpus::{IngestMode, StudyWindow};
use crate::stats::ReportOptions;

pub const ENV_PREFIX: &str = "PETHAPPY_";
pub const ANNOTATOR_URL_ENV: &str = "ANNOTATOR_URL";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub min_selfies: usize,
    pub min_area_ratio: f64,
    pub face_size_metric: FaceSizeMetric,
    pub min_gap_days: f64,
    pub pet_conf: f64,
    pub bin_width: f64,
    pub strict: bool,
    /// Study window; `None` covers every ingested post.
    pub window: Option<String>,
    pub annotator_url: Option<String>,
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
    pub batch_size: usize,
    pub parallelism: usize,
    pub pool_min_expected: Option<f64>,
    pub min_cohort_size: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            min_selfies: 3,
            min_area_ratio: 0.10,
            face_size_metric: FaceSizeMetric::Area,
            min_gap_days: 7.0,
            pet_conf: 0.5,
            bin_width: 10.0,
            strict: false,
            window: None,
            annotator_url: None,
            max_attempts: 3,
            initial_backoff_ms: 250,
            max_backoff_ms: 5_000,
            batch_size: 64,
            parallelism: 4,
            pool_min_expected: None,
            min_cohort_size: 2,
        }
    }
}

/// A partial configuration; unset fields defer to lower layers.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub min_selfies: Option<usize>,
    pub min_area_ratio: Option<f64>,
    pub face_size_metric: Option<FaceSizeMetric>,
    pub min_gap_days: Option<f64>,
    pub pet_conf: Option<f64>,
    pub bin_width: Option<f64>,
    pub strict: Option<bool>,
    pub window: Option<String>,
    pub annotator_url: Option<String>,
    pub max_attempts: Option<u32>,
    pub initial_backoff_ms: Option<u64>,
    pub max_backoff_ms: Option<u64>,
    pub batch_size: Option<usize>,
    pub parallelism: Option<usize>,
    pub pool_min_expected: Option<f64>,
    pub min_cohort_size: Option<usize>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config file: {0}")]
    File(String),
    #[error("environment variable {name}: cannot parse {value:?}")]
    Env { name: String, value: String },
    #[error("{field} = {value} is outside its allowed range {allowed}")]
    Range {
        field: &'static str,
        value: String,
        allowed: &'static str,
    },
    #[error("window: {0}")]
    Window(String),
}

fn env_parse<T: std::str::FromStr>(
    lookup: &impl Fn(&str) -> Option<String>,
    key: &str,
) -> Result<Option<T>, ConfigError> {
    let name = format!("{ENV_PREFIX}{key}");
    match lookup(&name) {
        None => Ok(None),
        Some(value) => value
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| ConfigError::Env { name, value }),
    }
}

impl ConfigLayer {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::File(e.to_string()))
    }

    /// Reads `PETHAPPY_*` variables plus `ANNOTATOR_URL` through `lookup`.
    pub fn from_env(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let metric = match env_parse::<String>(&lookup, "FACE_SIZE_METRIC")? {
            None => None,
            Some(s) => Some(match s.as_str() {
                "area" => FaceSizeMetric::Area,
                "longer_side" => FaceSizeMetric::LongerSide,
                _ => {
                    return Err(ConfigError::Env {
                        name: format!("{ENV_PREFIX}FACE_SIZE_METRIC"),
                        value: s,
                    })
                }
            }),
        };
        Ok(Self {
            min_selfies: env_parse(&lookup, "MIN_SELFIES")?,
            min_area_ratio: env_parse(&lookup, "MIN_AREA_RATIO")?,
            face_size_metric: metric,
            min_gap_days: env_parse(&lookup, "MIN_GAP_DAYS")?,
            pet_conf: env_parse(&lookup, "PET_CONF")?,
            bin_width: env_parse(&lookup, "BIN_WIDTH")?,
            strict: env_parse(&lookup, "STRICT")?,
            window: env_parse(&lookup, "WINDOW")?,
            annotator_url: lookup(ANNOTATOR_URL_ENV),
            max_attempts: env_parse(&lookup, "MAX_ATTEMPTS")?,
            initial_backoff_ms: env_parse(&lookup, "INITIAL_BACKOFF_MS")?,
            max_backoff_ms: env_parse(&lookup, "MAX_BACKOFF_MS")?,
            batch_size: env_parse(&lookup, "BATCH_SIZE")?,
            parallelism: env_parse(&lookup, "PARALLELISM")?,
            pool_min_expected: env_parse(&lookup, "POOL_MIN_EXPECTED")?,
            min_cohort_size: env_parse(&lookup, "MIN_COHORT_SIZE")?,
        })
    }

    pub fn from_process_env() -> Result<Self, ConfigError> {
        Self::from_env(|k| std::env::var(k).ok())
    }
}

macro_rules! overlay {
    ($cfg:expr, $layer:expr, $($field:ident),+ $(,)?) => {
        $( if let Some(v) = &$layer.$field { $cfg.$field = v.clone(); } )+
    };
}

impl PipelineConfig {
    pub fn apply(mut self, layer: &ConfigLayer) -> Self {
        overlay!(
            self,
            layer,
            min_selfies,
            min_area_ratio,
            face_size_metric,
            min_gap_days,
            pet_conf,
            bin_width,
            strict,
            max_attempts,
            initial_backoff_ms,
            max_backoff_ms,
            batch_size,
            parallelism,
            min_cohort_size,
        );
        if layer.window.is_some() {
            self.window = layer.window.clone();
        }
        if layer.annotator_url.is_some() {
            self.annotator_url = layer.annotator_url.clone();
        }
        if layer.pool_min_expected.is_some() {
            self.pool_min_expected = layer.pool_min_expected;
        }
        self
    }

    /// Defaults overlaid with `file`, then `env`, then `cli`, then validated.
    pub fn resolve(file: &ConfigLayer, env: &ConfigLayer, cli: &ConfigLayer) -> Result<Self, ConfigError> {
        let cfg = Self::default().apply(file).apply(env).apply(cli);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn check(
            ok: bool,
            field: &'static str,
            value: impl ToString,
            allowed: &'static str,
        ) -> Result<(), ConfigError> {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::Range {
                    field,
                    value: value.to_string(),
                    allowed,
                })
            }
        }
        check(
            self.min_area_ratio > 0.0 && self.min_area_ratio < 1.0,
            "min_area_ratio",
            self.min_area_ratio,
            "(0, 1)",
        )?;
        check(
            self.min_gap_days >= 0.0 && self.min_gap_days.is_finite(),
            "min_gap_days",
            self.min_gap_days,
            "[0, inf)",
        )?;
        check(
            (0.0..=1.0).contains(&self.pet_conf),
            "pet_conf",
            self.pet_conf,
            "[0, 1]",
        )?;
        check(
            self.bin_width > 0.0 && self.bin_width <= 100.0,
            "bin_width",
            self.bin_width,
            "(0, 100]",
        )?;
        check(self.max_attempts >= 1, "max_attempts", self.max_attempts, ">= 1")?;
        check(self.batch_size >= 1, "batch_size", self.batch_size, ">= 1")?;
        check(self.parallelism >= 1, "parallelism", self.parallelism, ">= 1")?;
        check(
            self.initial_backoff_ms <= self.max_backoff_ms,
            "initial_backoff_ms",
            self.initial_backoff_ms,
            "<= max_backoff_ms",
        )?;
        if let Some(p) = self.pool_min_expected {
            check(p > 0.0, "pool_min_expected", p, "(0, inf)")?;
        }
        self.study_window()?;
        Ok(())
    }

    pub fn study_window(&self) -> Result<Option<StudyWindow>, ConfigError> {
        self.window
            .as_deref()
            .map(|w| w.parse::<StudyWindow>().map_err(|e| ConfigError::Window(e.to_string())))
            .transpose()
    }

    pub fn ingest_mode(&self) -> IngestMode {
        if self.strict {
            IngestMode::Strict
        } else {
            IngestMode::Lenient
        }
    }

    pub fn selfie_rule(&self) -> SelfieRule {
        SelfieRule {
            min_area_ratio: self.min_area_ratio,
            metric: self.face_size_metric,
        }
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            max_attempts: self.max_attempts,
            initial_backoff: Duration::from_millis(self.initial_backoff_ms),
            max_backoff: Duration::from_millis(self.max_backoff_ms),
            ..RetryPolicy::default()
        }
    }

    pub fn report_options(&self) -> ReportOptions {
        ReportOptions {
            bin_width: self.bin_width,
            pool_min_expected: self.pool_min_expected,
            min_cohort_size: self.min_cohort_size,
        }
    }
}
