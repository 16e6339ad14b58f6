//! Worker allocation for crowdsourced binary classification.
//!
//! The crate covers the whole pipeline from individual votes to accuracy
//! predictions:
//!
//! * [`aggregation`]: weighted log-odds voting with known worker skills.
//! * [`inference`]: mean-field estimation of task posteriors and worker skills
//!   when skills are unknown, in batch and online form.
//! * [`policy`]: uniform, uncertainty-sampling and greedy information-gain
//!   allocation rules.
//! * [`analysis`]: vote densities, bounded and unbounded random walks, budget
//!   calibration, homogeneous closed forms and moment bounds.
//! * [`sim`]: a seeded, round-based Monte Carlo harness.
//! * [`cli`]: configuration files, CSV tables and the `crowd-alloc` binary.

pub mod aggregation;
pub mod analysis;
pub mod cli;
pub mod domain;
pub mod error;
pub mod inference;
pub mod policy;
pub mod sim;

pub use domain::{
    ExperimentConfig, Label, LabelRecord, LabelStore, Mode, PolicyKind, SkillDistribution, TieBreak,
};
pub use error::{Error, Result};
pub use inference::Prior;
