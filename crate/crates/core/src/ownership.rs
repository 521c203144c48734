//! Pet-owner classification from pet-labeled posts along a timeline.
//!
//! A user owns a pet type when two posts of that type are more than
//! `min_gap_days` apart. Any number of pet posts packed into a shorter burst,
//! or isolated posts of different types, leave the user in the control group.

use serde::{Deserialize, Serialize};

use crate::annotate::{AnnotationStore, PetClass};
use crate::corpus::{Timestamp, UserTimeline, SECONDS_PER_DAY};

pub const DEFAULT_MIN_GAP_DAYS: f64 = 7.0;
pub const DEFAULT_PET_CONF: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PetType {
    Cat,
    Dog,
}

impl PetType {
    pub const ALL: [PetType; 2] = [PetType::Cat, PetType::Dog];

    pub fn from_class(class: PetClass) -> Option<Self> {
        match class {
            PetClass::Cat => Some(PetType::Cat),
            PetClass::Dog => Some(PetType::Dog),
            PetClass::Other => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PetPost {
    pub post_id: String,
    pub timestamp: Timestamp,
    pub klass: PetType,
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OwnershipStatus {
    Owner,
    NonOwner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OwnershipVerdict {
    pub user_id: String,
    pub status: OwnershipStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pet_type: Option<PetType>,
    pub evidence: Vec<String>,
    pub max_span_days: f64,
}

impl OwnershipVerdict {
    pub fn is_owner(&self) -> bool {
        self.status == OwnershipStatus::Owner
    }
}

/// Pet posts (cat or dog at or above the confidence threshold) in timeline order.
pub fn extract_pet_posts(timeline: &UserTimeline, store: &AnnotationStore, pet_conf_threshold: f64) -> Vec<PetPost> {
    timeline
        .posts
        .iter()
        .filter_map(|post| {
            let ann = store.get(&post.image_ref)?;
            let klass = PetType::from_class(ann.pet.klass)?;
            (ann.pet.confidence >= pet_conf_threshold).then(|| PetPost {
                post_id: post.post_id.clone(),
                timestamp: post.timestamp,
                klass,
                confidence: ann.pet.confidence,
            })
        })
        .collect()
}

fn span_days(lo: Timestamp, hi: Timestamp) -> f64 {
    (hi - lo) as f64 / SECONDS_PER_DAY as f64
}

#[derive(Debug, Clone)]
struct TypeSummary<'a> {
    klass: PetType,
    posts: Vec<&'a PetPost>,
    first: Timestamp,
    span_days: f64,
}

fn summarize(pet_posts: &[PetPost], klass: PetType) -> Option<TypeSummary<'_>> {
    let posts: Vec<&PetPost> = pet_posts.iter().filter(|p| p.klass == klass).collect();
    let first = posts.iter().map(|p| p.timestamp).min()?;
    let last = posts.iter().map(|p| p.timestamp).max()?;
    Some(TypeSummary {
        klass,
        posts,
        first,
        span_days: span_days(first, last),
    })
}

/// The widest within-type gap is `max - min`, so the pairwise rule reduces to a span check.
pub fn classify_owner(user_id: &str, pet_posts: &[PetPost], min_gap_days: f64) -> OwnershipVerdict {
    let summaries: Vec<TypeSummary> = PetType::ALL.iter().filter_map(|&k| summarize(pet_posts, k)).collect();
    let max_span_days = summaries.iter().map(|s| s.span_days).fold(0.0, f64::max);

    // more posts wins, then the earlier first post; cat before dog as the last resort
    let chosen = summaries.iter().filter(|s| s.span_days > min_gap_days).min_by(|a, b| {
        b.posts
            .len()
            .cmp(&a.posts.len())
            .then(a.first.cmp(&b.first))
            .then(a.klass.cmp(&b.klass))
    });

    match chosen {
        Some(s) => OwnershipVerdict {
            user_id: user_id.to_string(),
            status: OwnershipStatus::Owner,
            pet_type: Some(s.klass),
            evidence: s.posts.iter().map(|p| p.post_id.clone()).collect(),
            max_span_days: s.span_days,
        },
        None => OwnershipVerdict {
            user_id: user_id.to_string(),
            status: OwnershipStatus::NonOwner,
            pet_type: None,
            evidence: pet_posts.iter().map(|p| p.post_id.clone()).collect(),
            max_span_days,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const DAY: i64 = SECONDS_PER_DAY;

    fn pp(id: &str, day: f64, klass: PetType) -> PetPost {
        PetPost {
            post_id: id.into(),
            timestamp: 1_000_000_000 + (day * DAY as f64) as i64,
            klass,
            confidence: 0.9,
        }
    }

    #[test]
    fn no_pet_posts() {
        let v = classify_owner("u", &[], 7.0);
        assert_eq!(v.status, OwnershipStatus::NonOwner);
        assert_eq!(v.pet_type, None);
        assert_eq!(v.max_span_days, 0.0);
    }

    #[test]
    fn two_dogs_thirty_days_apart() {
        let v = classify_owner("u", &[pp("a", 0.0, PetType::Dog), pp("b", 30.0, PetType::Dog)], 7.0);
        assert_eq!(v.status, OwnershipStatus::Owner);
        assert_eq!(v.pet_type, Some(PetType::Dog));
        assert_eq!(v.max_span_days, 30.0);
        assert_eq!(v.evidence, vec!["a", "b"]);
    }

    #[test]
    fn burst_within_a_week_is_not_ownership() {
        let posts: Vec<_> = (0..5)
            .map(|i| pp(&format!("c{i}"), i as f64 * 0.75, PetType::Cat))
            .collect();
        let v = classify_owner("u", &posts, 7.0);
        assert_eq!(v.status, OwnershipStatus::NonOwner);
        assert_eq!(v.max_span_days, 3.0);
        assert_eq!(v.evidence.len(), 5);
    }

    #[test]
    fn mixed_singletons_are_not_ownership() {
        let v = classify_owner("u", &[pp("c", 0.0, PetType::Cat), pp("d", 60.0, PetType::Dog)], 7.0);
        assert_eq!(v.status, OwnershipStatus::NonOwner);
    }

    #[test]
    fn both_types_qualify_majority_wins() {
        let posts = vec![
            pp("d1", 0.0, PetType::Dog),
            pp("c1", 1.0, PetType::Cat),
            pp("d2", 10.0, PetType::Dog),
            pp("c2", 11.0, PetType::Cat),
            pp("d3", 20.0, PetType::Dog),
        ];
        let v = classify_owner("u", &posts, 7.0);
        assert_eq!(v.pet_type, Some(PetType::Dog));
        assert_eq!(v.max_span_days, 20.0);
        assert_eq!(v.evidence, vec!["d1", "d2", "d3"]);
    }

    #[test]
    fn equal_counts_prefer_earlier_first_post() {
        let posts = vec![
            pp("c1", 2.0, PetType::Cat),
            pp("d1", 1.0, PetType::Dog),
            pp("c2", 20.0, PetType::Cat),
            pp("d2", 20.0, PetType::Dog),
        ];
        assert_eq!(classify_owner("u", &posts, 7.0).pet_type, Some(PetType::Dog));
    }

    #[test]
    fn exactly_seven_days_does_not_qualify() {
        let posts = vec![pp("a", 0.0, PetType::Cat), pp("b", 7.0, PetType::Cat)];
        assert!(!classify_owner("u", &posts, 7.0).is_owner());
        let posts = vec![
            pp("a", 0.0, PetType::Cat),
            PetPost {
                timestamp: posts[1].timestamp + 1,
                ..posts[1].clone()
            },
        ];
        assert!(classify_owner("u", &posts, 7.0).is_owner());
    }

    #[test]
    fn verdict_serialization_schema() {
        let v = classify_owner("u", &[pp("a", 0.0, PetType::Dog), pp("b", 30.0, PetType::Dog)], 7.0);
        assert_eq!(
            serde_json::to_string(&v).unwrap(),
            r#"{"user_id":"u","status":"owner","pet_type":"dog","evidence":["a","b"],"max_span_days":30.0}"#
        );
        let n = classify_owner("u", &[], 7.0);
        assert_eq!(
            serde_json::to_string(&n).unwrap(),
            r#"{"user_id":"u","status":"non_owner","evidence":[],"max_span_days":0.0}"#
        );
    }

    mod extraction {
        use super::*;
        use crate::annotate::{ImageAnnotation, PetLabel, Provenance};
        use crate::corpus::{PostRecord, StudyWindow};

        fn setup(labels: &[(PetClass, f64)]) -> (UserTimeline, AnnotationStore) {
            let posts: Vec<PostRecord> = (0..labels.len())
                .map(|i| PostRecord {
                    post_id: format!("p{i}"),
                    user_id: "u".into(),
                    timestamp: 100 + i as i64,
                    image_ref: format!("i{i}"),
                    caption: None,
                })
                .collect();
            let anns = labels
                .iter()
                .enumerate()
                .map(|(i, &(klass, confidence))| ImageAnnotation {
                    image_ref: format!("i{i}"),
                    pet: PetLabel { klass, confidence },
                    faces: vec![],
                });
            (
                UserTimeline::new("u", StudyWindow::new(0, 1000).unwrap(), posts),
                AnnotationStore::from_annotations(anns, Provenance::Synthetic).unwrap(),
            )
        }

        #[test]
        fn none_labeled() {
            let (t, s) = setup(&[(PetClass::Other, 0.99), (PetClass::Other, 0.7)]);
            assert!(extract_pet_posts(&t, &s, 0.5).is_empty());
        }

        #[test]
        fn threshold_filters_low_confidence() {
            let (t, s) = setup(&[(PetClass::Dog, 0.9), (PetClass::Dog, 0.6), (PetClass::Dog, 0.3)]);
            let got = extract_pet_posts(&t, &s, 0.5);
            assert_eq!(
                got.iter().map(|p| p.post_id.as_str()).collect::<Vec<_>>(),
                vec!["p0", "p1"]
            );
        }

        #[test]
        fn threshold_is_inclusive() {
            let (t, s) = setup(&[(PetClass::Cat, 0.5)]);
            assert_eq!(extract_pet_posts(&t, &s, 0.5).len(), 1);
        }

        #[test]
        fn unannotated_posts_are_skipped() {
            let (t, _) = setup(&[(PetClass::Cat, 0.9)]);
            let empty = AnnotationStore::empty(Provenance::File);
            assert!(extract_pet_posts(&t, &empty, 0.5).is_empty());
        }
    }

    fn arb_posts() -> impl Strategy<Value = Vec<PetPost>> {
        prop::collection::vec((0i64..180 * DAY, any::<bool>()), 0..10).prop_map(|v| {
            let mut posts: Vec<PetPost> = v
                .into_iter()
                .enumerate()
                .map(|(i, (ts, cat))| PetPost {
                    post_id: format!("p{i}"),
                    timestamp: 1_433_116_800 + ts,
                    klass: if cat { PetType::Cat } else { PetType::Dog },
                    confidence: 0.9,
                })
                .collect();
            posts.sort_by_key(|p| p.timestamp);
            posts
        })
    }

    proptest! {
        #[test]
        fn adding_a_post_never_revokes_ownership(posts in arb_posts(), ts in 0i64..180 * DAY, cat in any::<bool>()) {
            let before = classify_owner("u", &posts, 7.0);
            let mut more = posts.clone();
            more.push(PetPost {
                post_id: "extra".into(),
                timestamp: 1_433_116_800 + ts,
                klass: if cat { PetType::Cat } else { PetType::Dog },
                confidence: 0.9,
            });
            more.sort_by_key(|p| p.timestamp);
            if before.is_owner() {
                prop_assert!(classify_owner("u", &more, 7.0).is_owner());
            }
        }

        #[test]
        fn time_translation_invariant(posts in arb_posts(), shift in -1_000_000i64..1_000_000) {
            let shifted: Vec<PetPost> = posts.iter().map(|p| PetPost { timestamp: p.timestamp + shift, ..p.clone() }).collect();
            prop_assert_eq!(classify_owner("u", &posts, 7.0), classify_owner("u", &shifted, 7.0));
        }

        #[test]
        fn larger_gap_never_creates_owners(posts in arb_posts(), g1 in 0.0..60.0f64, g2 in 0.0..60.0f64) {
            let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
            if !classify_owner("u", &posts, lo).is_owner() {
                prop_assert!(!classify_owner("u", &posts, hi).is_owner());
            }
        }
    }
}
