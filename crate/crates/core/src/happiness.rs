//! Per-user happiness index: the mean smile confidence over every
//! face-containing image in a time window, using the biggest face of each image.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::{biggest_face, AnnotationStore};
use crate::corpus::{StudyWindow, UserTimeline};
use crate::scalar::{mean, pairwise_sum, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct FaceEntry<T> {
    pub post_id: String,
    pub smile: T,
}

/// The face-containing images of one user inside one window.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceImageSet<T> {
    pub user_id: String,
    pub window: StudyWindow,
    pub entries: Vec<FaceEntry<T>>,
}

impl<T: Scalar> FaceImageSet<T> {
    pub fn new(user_id: impl Into<String>, window: StudyWindow, entries: Vec<FaceEntry<T>>) -> Self {
        let mut seen = BTreeSet::new();
        let entries = entries.into_iter().filter(|e| seen.insert(e.post_id.clone())).collect();
        Self {
            user_id: user_id.into(),
            window,
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn smiles(&self) -> Vec<T> {
        self.entries.iter().map(|e| e.smile).collect()
    }

    /// Union of two sets for the same user; entries already present in `self` win.
    pub fn merge(&self, other: &FaceImageSet<T>) -> FaceImageSet<T> {
        let entries = self.entries.iter().chain(other.entries.iter()).cloned().collect();
        let window = StudyWindow {
            start: self.window.start.min(other.window.start),
            end: self.window.end.max(other.window.end),
        };
        FaceImageSet::new(self.user_id.clone(), window, entries)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HappinessIndex<T> {
    pub user_id: String,
    pub window: StudyWindow,
    pub value: T,
    pub n_images: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HappinessError {
    #[error("happiness index undefined for user {user_id:?}: no face images in window")]
    NoFaceImages { user_id: String },
}

pub fn collect_face_images<T: Scalar>(timeline: &UserTimeline, store: &AnnotationStore) -> FaceImageSet<T> {
    let entries = timeline
        .posts
        .iter()
        .filter_map(|post| {
            let ann = store.get(&post.image_ref)?;
            let face = biggest_face(ann)?;
            Some(FaceEntry {
                post_id: post.post_id.clone(),
                smile: T::lit(face.smile),
            })
        })
        .collect();
    FaceImageSet::new(timeline.user_id.clone(), timeline.window, entries)
}

pub fn happiness_index<T: Scalar>(face_set: &FaceImageSet<T>) -> Result<HappinessIndex<T>, HappinessError> {
    let value = mean(&face_set.smiles()).ok_or_else(|| HappinessError::NoFaceImages {
        user_id: face_set.user_id.clone(),
    })?;
    Ok(HappinessIndex {
        user_id: face_set.user_id.clone(),
        window: face_set.window,
        value,
        n_images: face_set.len(),
    })
}

/// Combines indices of disjoint image sets into the index of their union.
pub fn weighted_mean<T: Scalar>(parts: &[(T, usize)]) -> Option<T> {
    let n: usize = parts.iter().map(|&(_, k)| k).sum();
    if n == 0 {
        return None;
    }
    let weighted: Vec<T> = parts.iter().map(|&(v, k)| v * T::from_count(k as u64)).collect();
    Some(pairwise_sum(&weighted) / T::from_count(n as u64))
}

/// Indices over consecutive sub-windows of `step_secs`; sub-windows with no face images are skipped.
pub fn happiness_series<T: Scalar>(
    timeline: &UserTimeline,
    store: &AnnotationStore,
    step_secs: i64,
) -> Vec<HappinessIndex<T>> {
    timeline
        .window
        .split(step_secs)
        .into_iter()
        .filter_map(|w| happiness_index(&collect_face_images::<T>(&timeline.restrict(w), store)).ok())
        .collect()
}

/// JSONL record for a full-window index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiRecord {
    pub user_id: String,
    pub hi: f64,
    pub n_images: usize,
}

impl From<&HappinessIndex<f64>> for HiRecord {
    fn from(h: &HappinessIndex<f64>) -> Self {
        Self {
            user_id: h.user_id.clone(),
            hi: h.value,
            n_images: h.n_images,
        }
    }
}

/// JSONL record for one sub-window of a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiSeriesRecord {
    pub user_id: String,
    pub window_start: i64,
    pub window_end: i64,
    pub hi: f64,
    pub n_images: usize,
}

impl From<&HappinessIndex<f64>> for HiSeriesRecord {
    fn from(h: &HappinessIndex<f64>) -> Self {
        Self {
            user_id: h.user_id.clone(),
            window_start: h.window.start,
            window_end: h.window.end,
            hi: h.value,
            n_images: h.n_images,
        }
    }
}
