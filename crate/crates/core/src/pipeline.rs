//! Stage wiring shared by the individual subcommands and `pipeline`.
//!
//! Each stage function is pure over its inputs, so running the subcommands one
//! after another produces the same files as a single `pipeline` run.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::annotate::remote::{FetchFailure, RemoteAnnotator};
use crate::annotate::{load_annotations, AnnotationStore, ImageAnnotation};
use crate::config::PipelineConfig;
use crate::corpus::{
    build_timelines, covering_window, filter_eligible_users, ingest_posts, Corpus, IngestReport, StudyWindow,
    UserTimeline, SECONDS_PER_DAY,
};
use crate::demographics::{infer_gender, UserDemographics};
use crate::happiness::{collect_face_images, happiness_index, happiness_series, HiRecord, HiSeriesRecord};
use crate::ownership::{classify_owner, extract_pet_posts, OwnershipVerdict};
use crate::stats::{cohort_report, CohortReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Io,
    Remote,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Validation => 1,
            ErrorKind::Io => 2,
            ErrorKind::Remote => 3,
        }
    }
}

#[derive(Debug, Error)]
#[error("[{stage}] {message}")]
pub struct PipelineError {
    pub stage: &'static str,
    pub kind: ErrorKind,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: &'static str, kind: ErrorKind, message: impl Into<String>) -> Self {
        Self {
            stage,
            kind,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }
}

type Result<T> = std::result::Result<T, PipelineError>;

fn open(stage: &'static str, path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| PipelineError::new(stage, ErrorKind::Io, format!("cannot open {}: {e}", path.display())))
}

pub fn write_file(stage: &'static str, path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| {
            PipelineError::new(stage, ErrorKind::Io, format!("cannot create {}: {e}", parent.display()))
        })?;
    }
    fs::write(path, bytes)
        .map_err(|e| PipelineError::new(stage, ErrorKind::Io, format!("cannot write {}: {e}", path.display())))
}

pub fn read_posts(path: &Path, cfg: &PipelineConfig) -> Result<Corpus> {
    ingest_posts(open("ingest", path)?, cfg.ingest_mode()).map_err(|e| {
        let kind = match e {
            crate::corpus::IngestError::Io { .. } => ErrorKind::Io,
            crate::corpus::IngestError::Malformed { .. } => ErrorKind::Validation,
        };
        PipelineError::new("ingest", kind, format!("{}: {e}", path.display()))
    })
}

pub fn read_annotations(path: &Path, cfg: &PipelineConfig) -> Result<(AnnotationStore, IngestReport)> {
    load_annotations(open("annotate", path)?, cfg.ingest_mode()).map_err(|e| {
        let kind = match e {
            crate::corpus::IngestError::Io { .. } => ErrorKind::Io,
            crate::corpus::IngestError::Malformed { .. } => ErrorKind::Validation,
        };
        PipelineError::new("annotate", kind, format!("{}: {e}", path.display()))
    })
}

/// Strict JSONL reader for the pipeline's own intermediate files.
pub fn read_jsonl<T: DeserializeOwned>(stage: &'static str, path: &Path) -> Result<Vec<T>> {
    let mut text = String::new();
    open(stage, path)?
        .read_to_string(&mut text)
        .map_err(|e| PipelineError::new(stage, ErrorKind::Io, format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| {
                PipelineError::new(
                    stage,
                    ErrorKind::Validation,
                    format!("{}:{}: {e}", path.display(), i + 1),
                )
            })
        })
        .collect()
}

pub fn jsonl_bytes<T: Serialize>(records: &[T]) -> Vec<u8> {
    crate::jsonl::to_bytes(records)
}

pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report serializes");
    out.push(b'\n');
    out
}

/// The study window in force: the configured one, or the span of the corpus.
pub fn resolve_window(corpus: &Corpus, cfg: &PipelineConfig) -> Result<StudyWindow> {
    let configured = cfg
        .study_window()
        .map_err(|e| PipelineError::new("ingest", ErrorKind::Validation, e.to_string()))?;
    configured.or_else(|| covering_window(corpus)).ok_or_else(|| {
        PipelineError::new(
            "ingest",
            ErrorKind::Validation,
            "corpus is empty and no window was given",
        )
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusSummary {
    pub window: String,
    pub users: usize,
    pub posts_in_window: usize,
    pub ingest: IngestReport,
}

pub fn summarize_corpus(
    corpus: &Corpus,
    window: StudyWindow,
    timelines: &BTreeMap<String, UserTimeline>,
) -> CorpusSummary {
    CorpusSummary {
        window: window.to_string(),
        users: timelines.len(),
        posts_in_window: timelines.values().map(|t| t.posts.len()).sum(),
        ingest: corpus.report.clone(),
    }
}

/// Timelines plus the users passing the selfie-count filter.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub window: StudyWindow,
    pub timelines: BTreeMap<String, UserTimeline>,
    pub eligible: BTreeSet<String>,
}

impl Prepared {
    pub fn new(corpus: &Corpus, store: &AnnotationStore, cfg: &PipelineConfig) -> Result<Self> {
        let window = resolve_window(corpus, cfg)?;
        let timelines = build_timelines(corpus, window);
        let eligible = filter_eligible_users(&timelines, store, cfg.min_selfies, &cfg.selfie_rule());
        Ok(Self {
            window,
            timelines,
            eligible,
        })
    }

    fn eligible_timelines(&self) -> Vec<&UserTimeline> {
        self.eligible.iter().map(|u| &self.timelines[u]).collect()
    }
}

pub fn compute_verdicts(prep: &Prepared, store: &AnnotationStore, cfg: &PipelineConfig) -> Vec<OwnershipVerdict> {
    prep.eligible_timelines()
        .par_iter()
        .map(|t| classify_owner(&t.user_id, &extract_pet_posts(t, store, cfg.pet_conf), cfg.min_gap_days))
        .collect()
}

/// Full-window indices for eligible users; users without face images are left out.
pub fn compute_happiness(prep: &Prepared, store: &AnnotationStore) -> Vec<HiRecord> {
    prep.eligible_timelines()
        .par_iter()
        .filter_map(|t| happiness_index::<f64>(&collect_face_images(t, store)).ok())
        .map(|h| HiRecord::from(&h))
        .collect()
}

pub fn compute_happiness_series(
    prep: &Prepared,
    store: &AnnotationStore,
    granularity_days: f64,
) -> Vec<HiSeriesRecord> {
    let step = (granularity_days * SECONDS_PER_DAY as f64).round().max(1.0) as i64;
    prep.eligible_timelines()
        .par_iter()
        .map(|t| {
            happiness_series::<f64>(t, store, step)
                .iter()
                .map(HiSeriesRecord::from)
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

pub fn compute_demographics(prep: &Prepared, store: &AnnotationStore, cfg: &PipelineConfig) -> Vec<UserDemographics> {
    let rule = cfg.selfie_rule();
    prep.eligible_timelines()
        .par_iter()
        .map(|t| {
            let selfies: Vec<&ImageAnnotation> = t
                .posts
                .iter()
                .filter_map(|p| store.get(&p.image_ref))
                .filter(|a| rule.is_selfie(a))
                .collect();
            infer_gender(&t.user_id, &selfies)
        })
        .collect()
}

pub fn compute_report(
    verdicts: &[OwnershipVerdict],
    hi: &[HiRecord],
    demographics: &[UserDemographics],
    cfg: &PipelineConfig,
) -> Result<CohortReport> {
    let hi_map: BTreeMap<String, f64> = hi.iter().map(|h| (h.user_id.clone(), h.hi)).collect();
    cohort_report(verdicts, &hi_map, demographics, &cfg.report_options())
        .map_err(|e| PipelineError::new("report", ErrorKind::Validation, e.to_string()))
}

pub fn write_csv_dir(report: &CohortReport, dir: &Path) -> Result<()> {
    for (name, h) in &report.cohorts {
        write_file("report", &dir.join(format!("{name}.csv")), h.to_csv().as_bytes())?;
    }
    Ok(())
}

/// Fetches annotations for every in-window image of the corpus.
pub fn fetch_for_corpus(
    corpus: &Corpus,
    cfg: &PipelineConfig,
    url: &str,
) -> Result<(AnnotationStore, Vec<FetchFailure>, usize)> {
    let window = resolve_window(corpus, cfg)?;
    let refs: Vec<&str> = corpus
        .posts
        .iter()
        .filter(|p| window.contains(p.timestamp))
        .map(|p| p.image_ref.as_str())
        .collect();
    let client = RemoteAnnotator::new(url)
        .map_err(|e| PipelineError::new("annotate", ErrorKind::Remote, e.to_string()))?
        .with_retry(cfg.retry_policy())
        .with_batch_size(cfg.batch_size)
        .with_parallelism(cfg.parallelism);
    let outcome = client.fetch(&refs);
    Ok((outcome.store, outcome.failures, outcome.retries.len()))
}

#[derive(Debug, Clone)]
pub enum AnnotationSource {
    File(PathBuf),
    Remote(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

pub fn digest_file(path: &Path) -> Result<InputDigest> {
    let data = fs::read(path).map_err(|e| {
        PipelineError::new(
            "manifest",
            ErrorKind::Io,
            format!("cannot read {}: {e}", path.display()),
        )
    })?;
    Ok(InputDigest {
        path: path.display().to_string(),
        bytes: data.len() as u64,
        sha256: hex::encode(Sha256::digest(&data)),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: &'static str,
    pub millis: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub version: &'static str,
    pub config: PipelineConfig,
    pub inputs: Vec<InputDigest>,
    pub annotator_url: Option<String>,
    pub eligible_users: usize,
    pub stages: Vec<StageTiming>,
    pub outputs: Vec<String>,
}

pub const CORPUS_REPORT_FILE: &str = "corpus_report.json";
pub const ANNOTATION_REPORT_FILE: &str = "annotation_report.json";
pub const FETCHED_ANNOTATIONS_FILE: &str = "annotations.jsonl";
pub const FETCH_FAILURES_FILE: &str = "fetch_failures.jsonl";
pub const VERDICTS_FILE: &str = "verdicts.jsonl";
pub const HI_FILE: &str = "hi.jsonl";
pub const DEMOGRAPHICS_FILE: &str = "demographics.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const MANIFEST_FILE: &str = "manifest.json";

struct Timer(Vec<StageTiming>);

impl Timer {
    fn run<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f()?;
        self.0.push(StageTiming {
            stage,
            millis: start.elapsed().as_secs_f64() * 1e3,
        });
        Ok(out)
    }
}

/// Runs every stage and writes the artifacts into `out_dir`.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    posts_path: &Path,
    source: &AnnotationSource,
    out_dir: &Path,
    csv_dir: Option<&Path>,
) -> Result<RunManifest> {
    let mut timer = Timer(Vec::new());
    let mut outputs = Vec::new();
    let mut emit = |name: &str, bytes: &[u8]| -> Result<()> {
        write_file("output", &out_dir.join(name), bytes)?;
        outputs.push(name.to_string());
        Ok(())
    };

    let corpus = timer.run("ingest", || read_posts(posts_path, cfg))?;
    let mut inputs = vec![digest_file(posts_path)?];

    let store = match source {
        AnnotationSource::File(path) => {
            let (store, report) = timer.run("annotate", || read_annotations(path, cfg))?;
            inputs.push(digest_file(path)?);
            emit(ANNOTATION_REPORT_FILE, &json_bytes(&report))?;
            store
        }
        AnnotationSource::Remote(url) => {
            let (store, failures, _) = timer.run("annotate", || fetch_for_corpus(&corpus, cfg, url))?;
            let mut buf = Vec::new();
            store
                .write_jsonl(&mut buf)
                .map_err(|e| PipelineError::new("annotate", ErrorKind::Io, e.to_string()))?;
            emit(FETCHED_ANNOTATIONS_FILE, &buf)?;
            emit(FETCH_FAILURES_FILE, &jsonl_bytes(&failures))?;
            if !failures.is_empty() {
                return Err(PipelineError::new(
                    "annotate",
                    ErrorKind::Remote,
                    format!(
                        "{} images could not be annotated; see {FETCH_FAILURES_FILE}",
                        failures.len()
                    ),
                ));
            }
            store
        }
    };

    let prep = timer.run("timelines", || Prepared::new(&corpus, &store, cfg))?;
    emit(
        CORPUS_REPORT_FILE,
        &json_bytes(&summarize_corpus(&corpus, prep.window, &prep.timelines)),
    )?;

    let verdicts = timer.run("owners", || Ok(compute_verdicts(&prep, &store, cfg)))?;
    emit(VERDICTS_FILE, &jsonl_bytes(&verdicts))?;
    let hi = timer.run("happiness", || Ok(compute_happiness(&prep, &store)))?;
    emit(HI_FILE, &jsonl_bytes(&hi))?;
    let demographics = timer.run("demographics", || Ok(compute_demographics(&prep, &store, cfg)))?;
    emit(DEMOGRAPHICS_FILE, &jsonl_bytes(&demographics))?;

    let report = timer.run("report", || compute_report(&verdicts, &hi, &demographics, cfg))?;
    emit(REPORT_FILE, &json_bytes(&report))?;
    if let Some(dir) = csv_dir {
        write_csv_dir(&report, dir)?;
    }

    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        inputs,
        annotator_url: match source {
            AnnotationSource::Remote(u) => Some(u.clone()),
            AnnotationSource::File(_) => None,
        },
        eligible_users: prep.eligible.len(),
        stages: timer.0,
        outputs,
    };
    write_file("output", &out_dir.join(MANIFEST_FILE), &json_bytes(&manifest))?;
    Ok(manifest)
}
