//! Pet-ownership and happiness analytics over social-media timelines.
//!
//! The pipeline ingests posts and per-image detector annotations, rebuilds
//! per-user timelines inside a study window, keeps users with enough selfies,
//! classifies pet owners from recurring pet posts, computes a smile-based
//! happiness index per user and compares owner and non-owner cohorts with
//! normalized histograms and a chi-square test of independence.
//!
//! Numeric kernels are generic over [`Scalar`] (`f32`, `f64`); the aliases
//! below fix the scalar at `f64`, which is what the pipeline uses.

pub mod annotate;
pub mod config;
pub mod corpus;
pub mod demographics;
pub mod happiness;
pub mod jsonl;
pub mod ownership;
pub mod pipeline;
pub mod scalar;
pub mod stats;
pub mod synthgen;

pub use scalar::Scalar;

pub type FaceImageSet = happiness::FaceImageSet<f64>;
pub type HappinessIndex = happiness::HappinessIndex<f64>;
pub type HappinessHistogram = stats::HappinessHistogram<f64>;
pub type ChiSquareResult = stats::ChiSquareResult<f64>;

pub type FaceImageSetF32 = happiness::FaceImageSet<f32>;
pub type HappinessIndexF32 = happiness::HappinessIndex<f32>;
pub type HappinessHistogramF32 = stats::HappinessHistogram<f32>;
pub type ChiSquareResultF32 = stats::ChiSquareResult<f32>;
