//! Per-user gender verdict from selfie annotations.

use serde::{Deserialize, Serialize};

use crate::annotate::{biggest_face, Gender, ImageAnnotation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenderVerdict {
    Male,
    Female,
    Unknown,
}

impl GenderVerdict {
    pub fn known(self) -> Option<Gender> {
        match self {
            GenderVerdict::Male => Some(Gender::Male),
            GenderVerdict::Female => Some(Gender::Female),
            GenderVerdict::Unknown => None,
        }
    }
}

impl From<Gender> for GenderVerdict {
    fn from(g: Gender) -> Self {
        match g {
            Gender::Male => GenderVerdict::Male,
            Gender::Female => GenderVerdict::Female,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserDemographics {
    pub user_id: String,
    pub gender: GenderVerdict,
    /// Number of selfies that cast a vote.
    pub support: usize,
    /// Share of votes held by the larger side.
    pub agreement: f64,
}

/// Majority vote over each selfie's face; equal vote counts fall back to the
/// summed `gender_conf`, and an exact tie there yields `unknown`.
pub fn infer_gender(user_id: &str, selfies: &[&ImageAnnotation]) -> UserDemographics {
    let mut votes = [0usize; 2];
    let mut conf = [0.0f64; 2];
    // sum confidences in a fixed order so the result is independent of input order
    let mut by_gender: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for face in selfies.iter().filter_map(|a| biggest_face(a)) {
        let slot = face.gender as usize;
        votes[slot] += 1;
        by_gender[slot].push(face.gender_conf);
    }
    for (slot, confs) in by_gender.iter_mut().enumerate() {
        confs.sort_by(f64::total_cmp);
        conf[slot] = confs.iter().sum();
    }
    let support = votes[0] + votes[1];
    let leader = match votes[0].cmp(&votes[1]) {
        std::cmp::Ordering::Greater => Some(Gender::Male),
        std::cmp::Ordering::Less => Some(Gender::Female),
        std::cmp::Ordering::Equal => match conf[0].total_cmp(&conf[1]) {
            std::cmp::Ordering::Greater => Some(Gender::Male),
            std::cmp::Ordering::Less => Some(Gender::Female),
            std::cmp::Ordering::Equal => None,
        },
    };
    let (gender, agreement) = match (support, leader) {
        (0, _) => (GenderVerdict::Unknown, 0.0),
        (_, Some(g)) => (g.into(), votes[g as usize] as f64 / support as f64),
        (_, None) => (GenderVerdict::Unknown, votes[0].max(votes[1]) as f64 / support as f64),
    };
    UserDemographics {
        user_id: user_id.to_string(),
        gender,
        support,
        agreement,
    }
}
