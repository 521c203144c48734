//! Per-image detector outputs and the face rules built on them.
//!
//! Annotations arrive either from a JSONL file ([`load_annotations`]), from a
//! remote annotator service ([`remote`]), or from the synthetic generator.
//! Once built, an [`AnnotationStore`] is read-only.

pub mod remote;

use std::borrow::Cow;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ingest_lines, IngestError, IngestMode, IngestReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PetClass {
    Cat,
    Dog,
    Other,
}

impl PetClass {
    pub const ALL: [PetClass; 3] = [PetClass::Cat, PetClass::Dog, PetClass::Other];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PetLabel {
    pub klass: PetClass,
    pub confidence: f64,
}

impl PetLabel {
    /// Label used for images without an annotation.
    pub fn other() -> Self {
        Self {
            klass: PetClass::Other,
            confidence: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

/// Face bounding box in fractions of the image dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self, String> {
        if ![x, y, w, h].iter().all(|v| v.is_finite()) {
            return Err("bbox has non-finite coordinates".into());
        }
        if x < 0.0 || y < 0.0 {
            return Err(format!("bbox origin ({x}, {y}) is negative"));
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(format!("bbox size ({w}, {h}) must be positive"));
        }
        if x + w > 1.0 || y + h > 1.0 {
            return Err(format!("bbox [{x}, {y}, {w}, {h}] extends past the image"));
        }
        Ok(Self { x, y, w, h })
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = String;

    fn try_from(v: [f64; 4]) -> Result<Self, Self::Error> {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceObservation {
    pub bbox: BBox,
    /// Smile confidence on the 0..=100 scale.
    pub smile: f64,
    pub gender: Gender,
    pub gender_conf: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub race: Option<String>,
}

fn unit_interval(name: &str, v: f64) -> Result<(), String> {
    if !(0.0..=1.0).contains(&v) {
        return Err(format!("{name} {v} outside [0, 1]"));
    }
    Ok(())
}

impl FaceObservation {
    fn validate(&self) -> Result<(), String> {
        if !(0.0..=100.0).contains(&self.smile) {
            return Err(format!("smile {} outside [0, 100]", self.smile));
        }
        unit_interval("gender_conf", self.gender_conf)?;
        if let Some(age) = self.age {
            if !(age.is_finite() && age >= 0.0) {
                return Err(format!("age {age} is not a non-negative number"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageAnnotation {
    pub image_ref: String,
    pub pet: PetLabel,
    #[serde(default)]
    pub faces: Vec<FaceObservation>,
}

impl ImageAnnotation {
    /// Stand-in for images with no annotation: no faces, `other` at confidence 0.
    pub fn missing(image_ref: &str) -> Self {
        Self {
            image_ref: image_ref.to_string(),
            pet: PetLabel::other(),
            faces: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.image_ref.is_empty() {
            return Err("image_ref is empty".into());
        }
        unit_interval("pet confidence", self.pet.confidence)?;
        for (i, face) in self.faces.iter().enumerate() {
            face.validate().map_err(|e| format!("face {i}: {e}"))?;
        }
        Ok(())
    }

    /// Parses and validates one JSON annotation record.
    pub fn parse(line: &str) -> Result<Self, String> {
        let ann: ImageAnnotation = serde_json::from_str(line).map_err(|e| e.to_string())?;
        ann.validate()?;
        Ok(ann)
    }
}

/// Total order used to pick the biggest face: larger area first, then smaller
/// `(x, y)`, then the remaining fields so the choice never depends on list order.
fn face_rank(a: &FaceObservation, b: &FaceObservation) -> Ordering {
    b.bbox
        .area()
        .total_cmp(&a.bbox.area())
        .then_with(|| a.bbox.x.total_cmp(&b.bbox.x))
        .then_with(|| a.bbox.y.total_cmp(&b.bbox.y))
        .then_with(|| a.bbox.w.total_cmp(&b.bbox.w))
        .then_with(|| b.smile.total_cmp(&a.smile))
        .then_with(|| a.gender.cmp(&b.gender))
        .then_with(|| b.gender_conf.total_cmp(&a.gender_conf))
        .then_with(|| a.age.unwrap_or(-1.0).total_cmp(&b.age.unwrap_or(-1.0)))
        .then_with(|| a.race.cmp(&b.race))
}

pub fn biggest_face(annotation: &ImageAnnotation) -> Option<&FaceObservation> {
    annotation.faces.iter().min_by(|a, b| face_rank(a, b))
}

/// How a face's size is measured against the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceSizeMetric {
    /// `w * h`, the fraction of image area covered.
    #[default]
    Area,
    /// `max(w, h)`, the longer side as a fraction of the image side.
    LongerSide,
}

impl FaceSizeMetric {
    pub fn measure(self, bbox: &BBox) -> f64 {
        match self {
            FaceSizeMetric::Area => bbox.area(),
            FaceSizeMetric::LongerSide => bbox.w.max(bbox.h),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfieRule {
    pub min_area_ratio: f64,
    pub metric: FaceSizeMetric,
}

impl Default for SelfieRule {
    fn default() -> Self {
        Self {
            min_area_ratio: 0.10,
            metric: FaceSizeMetric::Area,
        }
    }
}

impl SelfieRule {
    pub fn with_ratio(min_area_ratio: f64) -> Self {
        Self {
            min_area_ratio,
            ..Self::default()
        }
    }

    /// Exactly one face, strictly larger than the threshold.
    pub fn is_selfie(&self, annotation: &ImageAnnotation) -> bool {
        match annotation.faces.as_slice() {
            [face] => self.metric.measure(&face.bbox) > self.min_area_ratio,
            _ => false,
        }
    }
}

pub fn is_selfie(annotation: &ImageAnnotation, min_area_ratio: f64) -> bool {
    SelfieRule::with_ratio(min_area_ratio).is_selfie(annotation)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    File,
    Remote,
    Synthetic,
}

#[derive(Debug, Error, PartialEq)]
pub enum AnnotationError {
    #[error("duplicate annotation for image {0:?}")]
    Duplicate(String),
    #[error("invalid annotation for image {image_ref:?}: {message}")]
    Invalid { image_ref: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationStore {
    annotations: BTreeMap<String, ImageAnnotation>,
    provenance: Provenance,
}

impl AnnotationStore {
    pub fn empty(provenance: Provenance) -> Self {
        Self {
            annotations: BTreeMap::new(),
            provenance,
        }
    }

    pub fn from_annotations<I>(annotations: I, provenance: Provenance) -> Result<Self, AnnotationError>
    where
        I: IntoIterator<Item = ImageAnnotation>,
    {
        let mut map = BTreeMap::new();
        for ann in annotations {
            ann.validate().map_err(|message| AnnotationError::Invalid {
                image_ref: ann.image_ref.clone(),
                message,
            })?;
            if map.contains_key(&ann.image_ref) {
                return Err(AnnotationError::Duplicate(ann.image_ref));
            }
            map.insert(ann.image_ref.clone(), ann);
        }
        Ok(Self {
            annotations: map,
            provenance,
        })
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.annotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.annotations.is_empty()
    }

    pub fn get(&self, image_ref: &str) -> Option<&ImageAnnotation> {
        self.annotations.get(image_ref)
    }

    /// The stored annotation, or [`ImageAnnotation::missing`] when absent.
    pub fn annotation_or_default(&self, image_ref: &str) -> Cow<'_, ImageAnnotation> {
        match self.annotations.get(image_ref) {
            Some(a) => Cow::Borrowed(a),
            None => Cow::Owned(ImageAnnotation::missing(image_ref)),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &ImageAnnotation> {
        self.annotations.values()
    }

    /// Writes one record per line, ordered by `image_ref`.
    pub fn write_jsonl<W: Write>(&self, writer: W) -> std::io::Result<()> {
        crate::jsonl::write_records(writer, self.annotations.values())
    }
}

pub fn load_annotations<R: BufRead>(
    reader: R,
    mode: IngestMode,
) -> Result<(AnnotationStore, IngestReport), IngestError> {
    let (records, report) = ingest_lines(reader, mode, ImageAnnotation::parse, |a: &ImageAnnotation| {
        a.image_ref.as_str()
    })?;
    let annotations = records.into_iter().map(|a| (a.image_ref.clone(), a)).collect();
    Ok((
        AnnotationStore {
            annotations,
            provenance: Provenance::File,
        },
        report,
    ))
}
