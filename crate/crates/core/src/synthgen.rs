//! Seeded synthetic corpora with known ground truth.
//!
//! Every user gets a gender, an ownership status and a latent happiness mean.
//! Posts and annotations are then laid out so that, with noiseless labels,
//! each pipeline rule recovers the ground truth exactly:
//!
//! * owners post one pet type at least twice, with two posts more than a week apart;
//! * "pet lovers" (non-owners who post pets) either post one burst within six
//!   days or a single cat and a single dog;
//! * eligible users get at least `min_selfies` single-face selfies;
//! * every face image's biggest face belongs to the user.
//!
//! Pet labels are then passed through the configured confusion matrix.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`) seeded with `seed_from_u64`,
//! consumed only through raw 64-bit draws so the stream is portable.

use std::fs;
use std::io;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::{BBox, FaceObservation, Gender, ImageAnnotation, PetClass, PetLabel};
use crate::corpus::{PostRecord, StudyWindow, Timestamp, SECONDS_PER_DAY};
use crate::ownership::PetType;

/// Pet classifier confusion matrix: rows actual cat/dog/other, columns predicted.
pub const CLASSIFIER_CONFUSION: [[f64; 3]; 3] = [[0.962, 0.019, 0.019], [0.008, 0.977, 0.015], [0.004, 0.006, 0.990]];

pub const IDENTITY_CONFUSION: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: u32,
    pub max: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmileParams {
    pub mean: f64,
    pub sd: f64,
}

/// Distribution of per-user happiness means for each gender x ownership cohort.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CohortSmiles {
    pub male_owner: SmileParams,
    pub male_non_owner: SmileParams,
    pub female_owner: SmileParams,
    pub female_non_owner: SmileParams,
}

impl CohortSmiles {
    pub fn get(&self, gender: Gender, owner: bool) -> SmileParams {
        match (gender, owner) {
            (Gender::Male, true) => self.male_owner,
            (Gender::Male, false) => self.male_non_owner,
            (Gender::Female, true) => self.female_owner,
            (Gender::Female, false) => self.female_non_owner,
        }
    }

    pub fn uniform(params: SmileParams) -> Self {
        Self {
            male_owner: params,
            male_non_owner: params,
            female_owner: params,
            female_non_owner: params,
        }
    }
}

impl Default for CohortSmiles {
    fn default() -> Self {
        Self {
            male_owner: SmileParams { mean: 45.0, sd: 12.0 },
            male_non_owner: SmileParams { mean: 36.0, sd: 12.0 },
            female_owner: SmileParams { mean: 52.0, sd: 12.0 },
            female_non_owner: SmileParams { mean: 49.0, sd: 12.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_users: usize,
    pub owner_fraction: f64,
    /// Share of female users.
    pub gender_mix: f64,
    /// Share of non-owners that post pet images anyway.
    pub pet_lover_fraction: f64,
    /// Share of users generated with fewer than `min_selfies` selfies.
    pub ineligible_fraction: f64,
    pub min_selfies: u32,
    pub posts_per_user: Range,
    pub owner_pet_posts: Range,
    /// Chance that a filler post becomes an extra selfie.
    pub selfie_rate: f64,
    /// Chance that a remaining filler post shows faces without being a selfie.
    pub face_photo_rate: f64,
    pub smiles: CohortSmiles,
    /// Spread of individual image smiles around the user's mean.
    pub image_smile_sd: f64,
    pub pet_label_noise: [[f64; 3]; 3],
    /// Chance that a face's reported gender is flipped.
    pub gender_label_noise: f64,
    /// `<iso8601>/<iso8601>`.
    pub window: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 2015,
            n_users: 2905,
            owner_fraction: 0.338,
            gender_mix: 1557.0 / 2905.0,
            pet_lover_fraction: 0.3,
            ineligible_fraction: 0.0,
            min_selfies: 3,
            posts_per_user: Range { min: 16, max: 40 },
            owner_pet_posts: Range { min: 3, max: 8 },
            selfie_rate: 0.1,
            face_photo_rate: 0.3,
            smiles: CohortSmiles::default(),
            image_smile_sd: 8.0,
            pet_label_noise: CLASSIFIER_CONFUSION,
            gender_label_noise: 0.0,
            window: "2015-06-01T00:00:00Z/2015-12-01T00:00:00Z".to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("infeasible config: {0}")]
    Infeasible(String),
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl SynthConfig {
    pub fn from_toml(text: &str) -> Result<Self, SynthError> {
        toml::from_str(text).map_err(|e| SynthError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn study_window(&self) -> Result<StudyWindow, SynthError> {
        self.window
            .parse()
            .map_err(|e| SynthError::Invalid(format!("window: {e}")))
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let fractions = [
            ("owner_fraction", self.owner_fraction),
            ("gender_mix", self.gender_mix),
            ("pet_lover_fraction", self.pet_lover_fraction),
            ("ineligible_fraction", self.ineligible_fraction),
            ("selfie_rate", self.selfie_rate),
            ("face_photo_rate", self.face_photo_rate),
            ("gender_label_noise", self.gender_label_noise),
        ];
        for (name, v) in fractions {
            if !(0.0..=1.0).contains(&v) {
                return Err(SynthError::Invalid(format!("{name} = {v} outside [0, 1]")));
            }
        }
        for (i, row) in self.pet_label_noise.iter().enumerate() {
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(SynthError::Invalid(format!(
                    "confusion row {i} has an entry outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(SynthError::Invalid(format!("confusion row {i} sums to {sum}")));
            }
        }
        let smiles = [
            self.smiles.male_owner,
            self.smiles.male_non_owner,
            self.smiles.female_owner,
            self.smiles.female_non_owner,
        ];
        let bad_sd = |sd: f64| sd.is_nan() || sd < 0.0;
        if smiles.iter().any(|s| !(0.0..=100.0).contains(&s.mean) || bad_sd(s.sd)) || bad_sd(self.image_smile_sd) {
            return Err(SynthError::Invalid(
                "smile means must lie in [0, 100] and sds be non-negative".into(),
            ));
        }
        for (name, r) in [
            ("posts_per_user", self.posts_per_user),
            ("owner_pet_posts", self.owner_pet_posts),
        ] {
            if r.min > r.max {
                return Err(SynthError::Invalid(format!("{name}: min {} > max {}", r.min, r.max)));
            }
        }
        if self.owner_pet_posts.min < 2 {
            return Err(SynthError::Infeasible("owners need at least 2 pet posts".into()));
        }
        let needed = self.min_selfies + self.owner_pet_posts.max.max(LOVER_MAX_PET_POSTS);
        if self.posts_per_user.min < needed {
            return Err(SynthError::Infeasible(format!(
                "posts_per_user.min = {} cannot hold {} selfies plus up to {} pet posts",
                self.posts_per_user.min,
                self.min_selfies,
                needed - self.min_selfies
            )));
        }
        let window = self.study_window()?;
        if window.duration_secs() < 8 * SECONDS_PER_DAY {
            return Err(SynthError::Infeasible(
                "window must span at least 8 days to place owner posts".into(),
            ));
        }
        Ok(())
    }
}

const LOVER_MAX_PET_POSTS: u32 = 5;

/// Portable sampling on top of ChaCha8.
#[derive(Debug, Clone)]
pub struct SynthRng(ChaCha8Rng);

impl SynthRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn int_range(&mut self, lo: i64, hi: i64) -> i64 {
        debug_assert!(lo <= hi);
        let span = (hi - lo + 1) as f64;
        (lo + (self.uniform() * span) as i64).min(hi)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Standard normal via Box-Muller (one draw per call).
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Normal restricted to `[lo, hi]` by rejection.
    pub fn truncated_normal(&mut self, mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
        if sd == 0.0 {
            return mean.clamp(lo, hi);
        }
        for _ in 0..1000 {
            let v = mean + sd * self.standard_normal();
            if (lo..=hi).contains(&v) {
                return v;
            }
        }
        mean.clamp(lo, hi)
    }

    /// Index drawn from a probability vector.
    pub fn categorical(&mut self, probs: &[f64]) -> usize {
        let u = self.uniform();
        let mut acc = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        // rounding left u above the cumulative sum: take the last non-zero entry
        probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub user_id: String,
    pub is_owner: bool,
    pub pet_type: Option<PetType>,
    pub gender: Gender,
    pub true_hi_mean: f64,
    pub eligible: bool,
    pub pet_lover: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub posts: Vec<PostRecord>,
    pub annotations: Vec<ImageAnnotation>,
    pub ground_truth: Vec<GroundTruth>,
}

pub const POSTS_FILE: &str = "posts.jsonl";
pub const ANNOTATIONS_FILE: &str = "annotations.jsonl";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.jsonl";
pub const CONFIG_ECHO_FILE: &str = "synth_config.toml";

impl SynthCorpus {
    pub fn posts_jsonl(&self) -> Vec<u8> {
        crate::jsonl::to_bytes(&self.posts)
    }

    pub fn annotations_jsonl(&self) -> Vec<u8> {
        crate::jsonl::to_bytes(&self.annotations)
    }

    pub fn ground_truth_jsonl(&self) -> Vec<u8> {
        crate::jsonl::to_bytes(&self.ground_truth)
    }

    pub fn write_to_dir(&self, dir: &Path, config: &SynthConfig) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(POSTS_FILE), self.posts_jsonl())?;
        fs::write(dir.join(ANNOTATIONS_FILE), self.annotations_jsonl())?;
        fs::write(dir.join(GROUND_TRUTH_FILE), self.ground_truth_jsonl())?;
        fs::write(dir.join(CONFIG_ECHO_FILE), config.to_toml())
    }
}

enum Content {
    Pet(PetType),
    Selfie,
    FacePhoto,
    Plain,
}

struct UserBuilder<'a> {
    cfg: &'a SynthConfig,
    window: StudyWindow,
    gender: Gender,
    hi_mean: f64,
    age: f64,
    posts: Vec<(Timestamp, Content)>,
}

impl UserBuilder<'_> {
    fn random_time(&self, rng: &mut SynthRng) -> Timestamp {
        rng.int_range(self.window.start, self.window.end - 1)
    }

    fn add_owner_posts(&mut self, rng: &mut SynthRng, pet: PetType) {
        let n = rng.int_range(self.cfg.owner_pet_posts.min as i64, self.cfg.owner_pet_posts.max as i64);
        // one pair strictly more than a week apart, the rest anywhere
        let gap = 7 * SECONDS_PER_DAY + 3_600;
        let first = rng.int_range(self.window.start, self.window.end - 1 - gap);
        let second = rng.int_range(first + gap, self.window.end - 1);
        self.posts.push((first, Content::Pet(pet)));
        self.posts.push((second, Content::Pet(pet)));
        for _ in 2..n {
            let t = self.random_time(rng);
            self.posts.push((t, Content::Pet(pet)));
        }
    }

    fn add_lover_posts(&mut self, rng: &mut SynthRng) {
        let burst = 6 * SECONDS_PER_DAY;
        let start = rng.int_range(self.window.start, self.window.end - 1 - burst);
        let n = rng.int_range(1, LOVER_MAX_PET_POSTS as i64);
        for _ in 0..n {
            let pet = if rng.bernoulli(0.5) { PetType::Cat } else { PetType::Dog };
            let t = rng.int_range(start, start + burst);
            self.posts.push((t, Content::Pet(pet)));
        }
    }

    fn face(&self, rng: &mut SynthRng, side: (f64, f64), own: bool) -> FaceObservation {
        let w = rng.uniform_range(side.0, side.1);
        let h = rng.uniform_range(side.0, side.1);
        let x = rng.uniform_range(0.0, 1.0 - w);
        let y = rng.uniform_range(0.0, 1.0 - h);
        let (gender, smile, age) = if own {
            let flipped = rng.bernoulli(self.cfg.gender_label_noise);
            let g = match (self.gender, flipped) {
                (Gender::Male, false) | (Gender::Female, true) => Gender::Male,
                _ => Gender::Female,
            };
            let smile = rng.truncated_normal(self.hi_mean, self.cfg.image_smile_sd, 0.0, 100.0);
            (g, smile, self.age + rng.uniform_range(-3.0, 3.0))
        } else {
            let g = if rng.bernoulli(0.5) {
                Gender::Male
            } else {
                Gender::Female
            };
            (g, rng.uniform_range(0.0, 100.0), rng.uniform_range(15.0, 70.0))
        };
        FaceObservation {
            bbox: BBox::new(x, y, w, h).expect("generated bbox fits the image"),
            smile,
            gender,
            gender_conf: rng.uniform_range(0.8, 1.0),
            age: Some(age.max(0.0)),
            race: None,
        }
    }

    fn faces_for(&self, rng: &mut SynthRng, content: &Content) -> Vec<FaceObservation> {
        match content {
            Content::Selfie => vec![self.face(rng, (0.35, 0.6), true)],
            Content::FacePhoto => {
                if rng.bernoulli(0.5) {
                    // one small face: counts toward happiness, not a selfie
                    vec![self.face(rng, (0.1, 0.3), true)]
                } else {
                    let mut faces = vec![self.face(rng, (0.25, 0.4), true)];
                    let others = rng.int_range(1, 2);
                    for _ in 0..others {
                        faces.push(self.face(rng, (0.05, 0.2), false));
                    }
                    faces
                }
            }
            Content::Pet(_) | Content::Plain => Vec::new(),
        }
    }
}

fn true_class(content: &Content) -> PetClass {
    match content {
        Content::Pet(PetType::Cat) => PetClass::Cat,
        Content::Pet(PetType::Dog) => PetClass::Dog,
        _ => PetClass::Other,
    }
}

pub fn generate_corpus(cfg: &SynthConfig) -> Result<SynthCorpus, SynthError> {
    cfg.validate()?;
    let window = cfg.study_window()?;
    let mut rng = SynthRng::new(cfg.seed);
    let width = cfg.n_users.max(1).to_string().len().max(5);

    let mut posts = Vec::new();
    let mut annotations = Vec::new();
    let mut truth = Vec::with_capacity(cfg.n_users);

    for u in 0..cfg.n_users {
        let user_id = format!("u{u:0width$}");
        let gender = if rng.bernoulli(cfg.gender_mix) {
            Gender::Female
        } else {
            Gender::Male
        };
        let is_owner = rng.bernoulli(cfg.owner_fraction);
        let eligible = !rng.bernoulli(cfg.ineligible_fraction);
        let smile = cfg.smiles.get(gender, is_owner);
        let hi_mean = rng.truncated_normal(smile.mean, smile.sd, 0.0, 100.0);
        let age = rng.uniform_range(18.0, 60.0);
        let mut b = UserBuilder {
            cfg,
            window,
            gender,
            hi_mean,
            age,
            posts: Vec::new(),
        };

        let pet_type = if is_owner {
            let pet = if rng.bernoulli(0.5) { PetType::Cat } else { PetType::Dog };
            b.add_owner_posts(&mut rng, pet);
            Some(pet)
        } else {
            None
        };
        let pet_lover = !is_owner && rng.bernoulli(cfg.pet_lover_fraction);
        if pet_lover {
            b.add_lover_posts(&mut rng);
        }

        let n_posts = rng.int_range(cfg.posts_per_user.min as i64, cfg.posts_per_user.max as i64) as usize;
        let n_selfies = if eligible {
            cfg.min_selfies as usize
        } else {
            rng.int_range(0, cfg.min_selfies as i64 - 1).max(0) as usize
        };
        for _ in 0..n_selfies {
            let t = b.random_time(&mut rng);
            b.posts.push((t, Content::Selfie));
        }
        while b.posts.len() < n_posts {
            let t = b.random_time(&mut rng);
            let content = if eligible && rng.bernoulli(cfg.selfie_rate) {
                Content::Selfie
            } else if rng.bernoulli(cfg.face_photo_rate) {
                Content::FacePhoto
            } else {
                Content::Plain
            };
            b.posts.push((t, content));
        }

        let contents = std::mem::take(&mut b.posts);
        for (i, (timestamp, content)) in contents.iter().enumerate() {
            let post_id = format!("{user_id}-p{i:03}");
            let image_ref = format!("img-{user_id}-{i:03}");
            let actual = true_class(content);
            let observed = PetClass::ALL[rng.categorical(&cfg.pet_label_noise[actual.index()])];
            let confidence = rng.uniform_range(0.6, 1.0);
            let faces = b.faces_for(&mut rng, content);
            posts.push(PostRecord {
                post_id,
                user_id: user_id.clone(),
                timestamp: *timestamp,
                image_ref: image_ref.clone(),
                caption: None,
            });
            annotations.push(ImageAnnotation {
                image_ref,
                pet: PetLabel {
                    klass: observed,
                    confidence,
                },
                faces,
            });
        }

        truth.push(GroundTruth {
            user_id,
            is_owner,
            pet_type,
            gender,
            true_hi_mean: hi_mean,
            eligible,
            pet_lover,
            seed: cfg.seed,
        });
    }

    Ok(SynthCorpus {
        posts,
        annotations,
        ground_truth: truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::is_selfie;
    use crate::ownership::{classify_owner, PetPost};

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            seed,
            n_users: 200,
            pet_label_noise: IDENTITY_CONFUSION,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn default_config_is_valid() {
        SynthConfig::default().validate().unwrap();
        let text = SynthConfig::default().to_toml();
        assert_eq!(SynthConfig::from_toml(&text).unwrap(), SynthConfig::default());
    }

    #[test]
    fn partial_toml_uses_defaults() {
        let c = SynthConfig::from_toml("seed = 7\nn_users = 10\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.owner_fraction, 0.338);
        assert!(SynthConfig::from_toml("bogus_key = 1").is_err());
    }

    #[test]
    fn invalid_configs() {
        let bad_row = SynthConfig {
            pet_label_noise: [[0.5, 0.4, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            ..SynthConfig::default()
        };
        assert!(matches!(bad_row.validate(), Err(SynthError::Invalid(_))));
        let bad_frac = SynthConfig {
            owner_fraction: 1.2,
            ..SynthConfig::default()
        };
        assert!(matches!(bad_frac.validate(), Err(SynthError::Invalid(_))));
        let tight = SynthConfig {
            posts_per_user: Range { min: 4, max: 10 },
            ..SynthConfig::default()
        };
        assert!(matches!(generate_corpus(&tight), Err(SynthError::Infeasible(_))));
        let short = SynthConfig {
            window: "2015-06-01/2015-06-05".into(),
            ..SynthConfig::default()
        };
        assert!(matches!(short.validate(), Err(SynthError::Infeasible(_))));
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = generate_corpus(&small(9)).unwrap();
        let b = generate_corpus(&small(9)).unwrap();
        assert_eq!(a.posts_jsonl(), b.posts_jsonl());
        assert_eq!(a.annotations_jsonl(), b.annotations_jsonl());
        assert_eq!(a.ground_truth_jsonl(), b.ground_truth_jsonl());
        let c = generate_corpus(&small(10)).unwrap();
        assert_ne!(a.posts_jsonl(), c.posts_jsonl());
    }

    #[test]
    fn every_owner_satisfies_the_rule_under_noiseless_labels() {
        let corpus = generate_corpus(&small(3)).unwrap();
        let window = small(3).study_window().unwrap();
        for gt in &corpus.ground_truth {
            let pet_posts: Vec<PetPost> = corpus
                .posts
                .iter()
                .zip(&corpus.annotations)
                .filter(|(p, _)| p.user_id == gt.user_id)
                .filter_map(|(p, a)| {
                    assert!(window.contains(p.timestamp));
                    PetType::from_class(a.pet.klass).map(|klass| PetPost {
                        post_id: p.post_id.clone(),
                        timestamp: p.timestamp,
                        klass,
                        confidence: a.pet.confidence,
                    })
                })
                .collect();
            let v = classify_owner(&gt.user_id, &pet_posts, 7.0);
            assert_eq!(v.is_owner(), gt.is_owner, "{}", gt.user_id);
            assert_eq!(v.pet_type, gt.pet_type);
        }
    }

    #[test]
    fn eligible_users_have_enough_selfies() {
        let cfg = SynthConfig {
            ineligible_fraction: 0.2,
            ..small(4)
        };
        let corpus = generate_corpus(&cfg).unwrap();
        assert!(corpus.ground_truth.iter().any(|g| !g.eligible));
        for gt in &corpus.ground_truth {
            let selfies = corpus
                .posts
                .iter()
                .zip(&corpus.annotations)
                .filter(|(p, a)| p.user_id == gt.user_id && is_selfie(a, 0.10))
                .count();
            assert_eq!(selfies >= 3, gt.eligible, "{}", gt.user_id);
        }
    }

    #[test]
    fn annotations_validate() {
        let corpus = generate_corpus(&SynthConfig {
            n_users: 50,
            ..SynthConfig::default()
        })
        .unwrap();
        for a in &corpus.annotations {
            a.validate().unwrap();
        }
    }

    #[test]
    fn rng_primitives() {
        let mut rng = SynthRng::new(1);
        for _ in 0..10_000 {
            let u = rng.uniform();
            assert!((0.0..1.0).contains(&u));
            let k = rng.int_range(3, 5);
            assert!((3..=5).contains(&k));
            let t = rng.truncated_normal(95.0, 10.0, 0.0, 100.0);
            assert!((0.0..=100.0).contains(&t));
        }
        assert_eq!(rng.categorical(&[0.0, 1.0, 0.0]), 1);
        let n = 200_000;
        let mut rng = SynthRng::new(2);
        let draws: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let m = draws.iter().sum::<f64>() / n as f64;
        let v = draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / n as f64;
        assert!(m.abs() < 0.01 && (v - 1.0).abs() < 0.02, "mean {m} var {v}");
    }
}
