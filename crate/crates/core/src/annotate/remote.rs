//! JSON-over-HTTP client for a remote annotation service.
//!
//! Protocol: `POST <base>/annotate` with `{"image_refs": [...]}`; the response
//! body is a JSON array of annotation records in the file schema. Refs are sent
//! in batches; batches may run concurrently but the assembled store depends
//! only on the inputs and the responses.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use log::{debug, warn};
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;
use url::Url;

use super::{AnnotationStore, ImageAnnotation, Provenance};

/// Bounded exponential backoff.
#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    /// Total attempts per batch, including the first.
    pub max_attempts: u32,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
    pub multiplier: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            initial_backoff: Duration::from_millis(250),
            max_backoff: Duration::from_secs(5),
            multiplier: 2.0,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (1-based).
    pub fn delay(&self, retry: u32) -> Duration {
        let factor = self.multiplier.max(1.0).powi(retry.saturating_sub(1) as i32);
        let secs = self.initial_backoff.as_secs_f64() * factor;
        Duration::from_secs_f64(secs.min(self.max_backoff.as_secs_f64()))
    }
}

#[derive(Debug, Error)]
pub enum RemoteError {
    #[error("invalid annotator URL {url:?}: {message}")]
    BadUrl { url: String, message: String },
    #[error("failed to build HTTP client: {0}")]
    Client(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FetchFailure {
    pub image_ref: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RetryEvent {
    pub batch: usize,
    pub attempt: u32,
    pub reason: String,
    pub delay_ms: u64,
}

/// Result of a fetch: whatever validated, plus a manifest of what did not.
#[derive(Debug)]
pub struct FetchOutcome {
    pub store: AnnotationStore,
    pub failures: Vec<FetchFailure>,
    pub retries: Vec<RetryEvent>,
}

#[derive(Debug, Clone)]
pub struct RemoteAnnotator {
    endpoint: Url,
    client: Client,
    pub batch_size: usize,
    pub parallelism: usize,
    pub retry: RetryPolicy,
}

enum AttemptError {
    Retryable(String),
    Fatal(String),
}

struct BatchResult {
    annotations: Vec<ImageAnnotation>,
    failures: Vec<FetchFailure>,
    retries: Vec<RetryEvent>,
}

impl RemoteAnnotator {
    /// `base` may be the service root or the full `/annotate` URL.
    pub fn new(base: &str) -> Result<Self, RemoteError> {
        let bad = |message: String| RemoteError::BadUrl {
            url: base.to_string(),
            message,
        };
        let mut endpoint = Url::parse(base).map_err(|e| bad(e.to_string()))?;
        if !endpoint.path().trim_end_matches('/').ends_with("/annotate") {
            let path = format!("{}/annotate", endpoint.path().trim_end_matches('/'));
            endpoint.set_path(&path);
        }
        let client = Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| RemoteError::Client(e.to_string()))?;
        Ok(Self {
            endpoint,
            client,
            batch_size: 64,
            parallelism: 4,
            retry: RetryPolicy::default(),
        })
    }

    pub fn endpoint(&self) -> &Url {
        &self.endpoint
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }

    pub fn with_parallelism(mut self, parallelism: usize) -> Self {
        self.parallelism = parallelism.max(1);
        self
    }

    pub fn fetch<S: AsRef<str>>(&self, image_refs: &[S]) -> FetchOutcome {
        let mut seen = BTreeSet::new();
        let refs: Vec<String> = image_refs
            .iter()
            .map(|r| r.as_ref().to_string())
            .filter(|r| seen.insert(r.clone()))
            .collect();
        let batches: Vec<&[String]> = refs.chunks(self.batch_size.max(1)).collect();
        let results: Mutex<BTreeMap<usize, BatchResult>> = Mutex::new(BTreeMap::new());
        let next = AtomicUsize::new(0);

        std::thread::scope(|scope| {
            for _ in 0..self.parallelism.max(1).min(batches.len().max(1)) {
                scope.spawn(|| loop {
                    let idx = next.fetch_add(1, Ordering::SeqCst);
                    let Some(batch) = batches.get(idx) else { break };
                    let result = self.run_batch(idx, batch);
                    results.lock().expect("result lock").insert(idx, result);
                });
            }
        });

        let mut annotations = Vec::new();
        let mut failures = Vec::new();
        let mut retries = Vec::new();
        for (_, r) in results.into_inner().expect("result lock") {
            annotations.extend(r.annotations);
            failures.extend(r.failures);
            retries.extend(r.retries);
        }
        let store = AnnotationStore::from_annotations(annotations, Provenance::Remote)
            .expect("batch results are validated and disjoint");
        FetchOutcome {
            store,
            failures,
            retries,
        }
    }

    fn run_batch(&self, batch_idx: usize, refs: &[String]) -> BatchResult {
        let mut retries = Vec::new();
        let attempts = self.retry.max_attempts.max(1);
        let mut attempt = 1;
        let outcome = loop {
            match self.attempt(refs) {
                Ok(body) => break Ok(body),
                Err(AttemptError::Retryable(reason)) if attempt < attempts => {
                    let delay = self.retry.delay(attempt);
                    warn!("annotator batch {batch_idx} attempt {attempt} failed ({reason}); retrying in {delay:?}");
                    retries.push(RetryEvent {
                        batch: batch_idx,
                        attempt,
                        reason,
                        delay_ms: delay.as_millis() as u64,
                    });
                    std::thread::sleep(delay);
                    attempt += 1;
                }
                Err(AttemptError::Retryable(reason)) => {
                    break Err(format!("gave up after {attempt} attempts: {reason}"))
                }
                Err(AttemptError::Fatal(reason)) => break Err(reason),
            }
        };
        match outcome {
            Ok(body) => {
                let (annotations, failures) = validate_response(refs, body);
                BatchResult {
                    annotations,
                    failures,
                    retries,
                }
            }
            Err(reason) => BatchResult {
                annotations: Vec::new(),
                failures: refs
                    .iter()
                    .map(|r| FetchFailure {
                        image_ref: r.clone(),
                        reason: reason.clone(),
                    })
                    .collect(),
                retries,
            },
        }
    }

    fn attempt(&self, refs: &[String]) -> Result<Vec<Value>, AttemptError> {
        debug!("POST {} ({} refs)", self.endpoint, refs.len());
        let body = serde_json::json!({ "image_refs": refs });
        let resp = self
            .client
            .post(self.endpoint.clone())
            .json(&body)
            .send()
            .map_err(|e| AttemptError::Retryable(format!("network error: {e}")))?;
        let status = resp.status();
        if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
            return Err(AttemptError::Retryable(format!("HTTP {}", status.as_u16())));
        }
        if !status.is_success() {
            return Err(AttemptError::Fatal(format!("HTTP {}", status.as_u16())));
        }
        let text = resp
            .text()
            .map_err(|e| AttemptError::Retryable(format!("body read failed: {e}")))?;
        match serde_json::from_str::<Value>(&text) {
            Ok(Value::Array(items)) => Ok(items),
            Ok(_) => Err(AttemptError::Fatal(
                "schema violation: response is not a JSON array".into(),
            )),
            Err(e) => Err(AttemptError::Fatal(format!("schema violation: {e}"))),
        }
    }
}

/// Applies file-schema validation to each response item. Requested refs with
/// no valid item end up in the failure list; unrequested items are ignored.
fn validate_response(refs: &[String], items: Vec<Value>) -> (Vec<ImageAnnotation>, Vec<FetchFailure>) {
    let requested: BTreeSet<&str> = refs.iter().map(String::as_str).collect();
    let mut good: BTreeMap<String, ImageAnnotation> = BTreeMap::new();
    let mut bad: BTreeMap<String, String> = BTreeMap::new();
    for item in items {
        let claimed = item.get("image_ref").and_then(Value::as_str).map(str::to_string);
        let parsed = serde_json::from_value::<ImageAnnotation>(item)
            .map_err(|e| e.to_string())
            .and_then(|a| a.validate().map(|_| a));
        match (parsed, claimed) {
            (Ok(a), _) if requested.contains(a.image_ref.as_str()) => {
                good.entry(a.image_ref.clone()).or_insert(a);
            }
            (Ok(a), _) => warn!("annotator returned unrequested image {:?}", a.image_ref),
            (Err(e), Some(r)) if requested.contains(r.as_str()) => {
                bad.entry(r).or_insert(format!("schema violation: {e}"));
            }
            (Err(e), _) => warn!("annotator returned an unattributable invalid record: {e}"),
        }
    }
    let failures = refs
        .iter()
        .filter(|r| !good.contains_key(r.as_str()))
        .map(|r| FetchFailure {
            image_ref: r.clone(),
            reason: bad.get(r).cloned().unwrap_or_else(|| "missing from response".into()),
        })
        .collect();
    (good.into_values().collect(), failures)
}
