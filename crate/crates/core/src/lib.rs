//! Learning to defer with multiple experts.
//!
//! The crate provides the deferral loss over an augmented label set, a family
//! of cost-weighted surrogate losses built from eleven multiclass base losses,
//! exact conditional-regret analysis on finite distributions, small score-model
//! trainers, and an experiment runner used by the `l2d` binary.

pub mod analysis;
pub mod domain;
pub mod error;
pub mod experiment;
pub mod losses;
pub mod seeding;
pub mod training;

pub use error::{Error, Result};
