//! Post ingestion, study windows and per-user timelines.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::{AnnotationStore, SelfieRule};

/// Seconds since the Unix epoch, UTC.
pub type Timestamp = i64;

pub const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostRecord {
    pub post_id: String,
    pub user_id: String,
    pub timestamp: Timestamp,
    pub image_ref: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
}

impl PostRecord {
    fn validate(&self) -> Result<(), String> {
        if self.post_id.is_empty() {
            return Err("post_id is empty".into());
        }
        if self.user_id.is_empty() {
            return Err("user_id is empty".into());
        }
        if self.image_ref.is_empty() {
            return Err("image_ref is empty".into());
        }
        if self.timestamp <= 0 {
            return Err(format!("timestamp must be positive, got {}", self.timestamp));
        }
        Ok(())
    }
}

/// Half-open interval `[start, end)` of timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyWindow {
    pub start: Timestamp,
    pub end: Timestamp,
}

#[derive(Debug, Error, PartialEq)]
pub enum WindowError {
    #[error("window start {start} must precede end {end}")]
    Empty { start: Timestamp, end: Timestamp },
    #[error("expected <start>/<end>, got {0:?}")]
    Syntax(String),
    #[error("cannot parse {0:?} as an ISO-8601 date or datetime")]
    Instant(String),
}

impl StudyWindow {
    pub fn new(start: Timestamp, end: Timestamp) -> Result<Self, WindowError> {
        if start >= end {
            return Err(WindowError::Empty { start, end });
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, ts: Timestamp) -> bool {
        self.start <= ts && ts < self.end
    }

    pub fn duration_secs(&self) -> i64 {
        self.end - self.start
    }

    /// Consecutive sub-windows of `step_secs`; the last one is clipped to `end`.
    pub fn split(&self, step_secs: i64) -> Vec<StudyWindow> {
        assert!(step_secs > 0, "sub-window length must be positive");
        let mut out = Vec::new();
        let mut lo = self.start;
        while lo < self.end {
            let hi = lo.saturating_add(step_secs).min(self.end);
            out.push(StudyWindow { start: lo, end: hi });
            lo = hi;
        }
        out
    }
}

fn parse_instant(s: &str) -> Result<Timestamp, WindowError> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.with_timezone(&Utc).timestamp());
    }
    if let Ok(d) = NaiveDate::from_str(s) {
        return Ok(d.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp());
    }
    Err(WindowError::Instant(s.to_string()))
}

impl FromStr for StudyWindow {
    type Err = WindowError;

    /// Parses `<iso8601>/<iso8601>`; each side is an RFC 3339 datetime or a bare date (midnight UTC).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once('/').ok_or_else(|| WindowError::Syntax(s.to_string()))?;
        StudyWindow::new(parse_instant(a)?, parse_instant(b)?)
    }
}

impl fmt::Display for StudyWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |ts: Timestamp| {
            DateTime::<Utc>::from_timestamp(ts, 0)
                .map(|d| d.format("%Y-%m-%dT%H:%M:%SZ").to_string())
                .unwrap_or_else(|| ts.to_string())
        };
        write!(f, "{}/{}", show(self.start), show(self.end))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IngestMode {
    /// Abort on the first malformed record.
    Strict,
    /// Skip malformed records and report them.
    #[default]
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DuplicateRecord {
    pub line: usize,
    pub key: String,
}

/// What happened to every input line. Line numbers are 1-based.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub lines_read: usize,
    pub accepted: usize,
    pub malformed: Vec<LineError>,
    pub duplicates: Vec<DuplicateRecord>,
}

impl IngestReport {
    pub fn is_clean(&self) -> bool {
        self.malformed.is_empty() && self.duplicates.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("read failed at line {line}: {source}")]
    Io {
        line: usize,
        #[source]
        source: std::io::Error,
    },
}

/// Shared JSONL validation loop used by post and annotation loaders.
///
/// `parse` turns a trimmed line into a record or a message; `key` extracts the
/// uniqueness key. Later duplicates are rejected in both modes.
pub(crate) fn ingest_lines<R, T, P, K>(
    reader: R,
    mode: IngestMode,
    mut parse: P,
    key: K,
) -> Result<(Vec<T>, IngestReport), IngestError>
where
    R: BufRead,
    P: FnMut(&str) -> Result<T, String>,
    K: Fn(&T) -> &str,
{
    let mut report = IngestReport::default();
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| IngestError::Io { line: line_no, source })?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        report.lines_read += 1;
        match parse(trimmed) {
            Ok(record) => {
                let k = key(&record);
                if seen.contains(k) {
                    report.duplicates.push(DuplicateRecord {
                        line: line_no,
                        key: k.to_string(),
                    });
                } else {
                    seen.insert(k.to_string());
                    records.push(record);
                }
            }
            Err(message) => {
                if mode == IngestMode::Strict {
                    return Err(IngestError::Malformed { line: line_no, message });
                }
                report.malformed.push(LineError { line: line_no, message });
            }
        }
    }
    report.accepted = records.len();
    Ok((records, report))
}

/// Validated posts in input order plus the ingestion report.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub posts: Vec<PostRecord>,
    pub report: IngestReport,
}

pub fn ingest_posts<R: BufRead>(reader: R, mode: IngestMode) -> Result<Corpus, IngestError> {
    let (posts, report) = ingest_lines(
        reader,
        mode,
        |line| {
            let post: PostRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
            post.validate()?;
            Ok(post)
        },
        |p: &PostRecord| p.post_id.as_str(),
    )?;
    Ok(Corpus { posts, report })
}

/// One user's in-window posts sorted by `(timestamp, post_id)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserTimeline {
    pub user_id: String,
    pub window: StudyWindow,
    pub posts: Vec<PostRecord>,
}

impl UserTimeline {
    /// Builds a timeline, dropping out-of-window posts and posts of other users.
    pub fn new(user_id: impl Into<String>, window: StudyWindow, posts: Vec<PostRecord>) -> Self {
        let user_id = user_id.into();
        let mut posts: Vec<PostRecord> = posts
            .into_iter()
            .filter(|p| p.user_id == user_id && window.contains(p.timestamp))
            .collect();
        posts.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.post_id.cmp(&b.post_id)));
        Self { user_id, window, posts }
    }

    /// The same timeline restricted to a narrower window.
    pub fn restrict(&self, window: StudyWindow) -> UserTimeline {
        UserTimeline {
            user_id: self.user_id.clone(),
            window,
            posts: self
                .posts
                .iter()
                .filter(|p| window.contains(p.timestamp))
                .cloned()
                .collect(),
        }
    }
}

pub fn build_timelines(corpus: &Corpus, window: StudyWindow) -> BTreeMap<String, UserTimeline> {
    let mut by_user: BTreeMap<&str, Vec<PostRecord>> = BTreeMap::new();
    for post in corpus.posts.iter().filter(|p| window.contains(p.timestamp)) {
        by_user.entry(post.user_id.as_str()).or_default().push(post.clone());
    }
    let built: Vec<UserTimeline> = by_user
        .into_par_iter()
        .map(|(user, posts)| UserTimeline::new(user, window, posts))
        .collect();
    built.into_iter().map(|t| (t.user_id.clone(), t)).collect()
}

/// Smallest window covering every post, used when no window is given.
pub fn covering_window(corpus: &Corpus) -> Option<StudyWindow> {
    let lo = corpus.posts.iter().map(|p| p.timestamp).min()?;
    let hi = corpus.posts.iter().map(|p| p.timestamp).max()?;
    StudyWindow::new(lo, hi + 1).ok()
}

pub fn count_selfies(timeline: &UserTimeline, store: &AnnotationStore, rule: &SelfieRule) -> usize {
    timeline
        .posts
        .iter()
        .filter(|p| rule.is_selfie(&store.annotation_or_default(&p.image_ref)))
        .count()
}

/// Users with at least `min_selfies` selfie posts in their timeline.
pub fn filter_eligible_users(
    timelines: &BTreeMap<String, UserTimeline>,
    store: &AnnotationStore,
    min_selfies: usize,
    rule: &SelfieRule,
) -> BTreeSet<String> {
    timelines
        .par_iter()
        .filter(|(_, t)| count_selfies(t, store, rule) >= min_selfies)
        .map(|(u, _)| u.clone())
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}
