//! Theory of the allocation policies.
//!
//! A task's log-odds evolves as a random walk whose increments follow the
//! vote density. Active learning corresponds to a walk absorbed at `±z_B`,
//! uniform allocation to a walk of fixed length `r_u`. This module builds the
//! densities, propagates both walks numerically, matches `z_B` to a budget,
//! and provides the homogeneous-crowd closed forms and moment bounds.

mod bounds;
mod closed_form;
mod convolve;
mod density;
mod walk;

pub use bounds::{
    chernoff_bound, gambler_ruin_bound, moments, moments_with_gamma, rho_root, MomentSummary,
    RhoRoot, DEFAULT_GAMMA_FACTOR,
};
pub use closed_form::{homogeneous_expected_steps, homogeneous_uniform_accuracy};
pub use convolve::{convolve, convolve_direct, ConvolutionMethod, Convolver};
pub use density::{
    population_vote_density, vote_density, weight_density, Density, GridPdf, GridSpec, LatticePdf,
    TRUNCATION_WARNING,
};
pub use walk::{
    bounded_walk, calibrate, unbounded_accuracy, unbounded_accuracy_with, CalibrateOptions,
    Calibration, WalkOptions, WalkReport,
};
