//! Compile trained ReLU feed-forward networks into multivariate decision-rule sets.
//!
//! The crate is `no_std` and only needs `alloc`. It contains the algorithmic
//! pieces; file formats, CSV ingestion, timing and the command line live in
//! the `relucid` companion crate.
//!
//! * [`model`]: dense ReLU networks, forward passes and activation patterns.
//! * [`ecdt`]: the exact transform. Every feasible activation pattern becomes one
//!   rule whose affine consequence reproduces the network on that region.
//! * [`cnet`]: the hybrid transform. A univariate tree is fitted on last-hidden-layer
//!   features and its thresholds are back-projected into input space.
//! * [`udt`]: gain-ratio univariate trees with pessimistic pruning.
//! * [`feasibility`]: phase-one simplex used to discard contradictory rules.
//! * [`eval`] and [`viz`]: fidelity/compactness measurements and SVG slices.
#![no_std]

extern crate alloc;

pub mod cnet;
pub mod data;
pub mod ecdt;
mod error;
pub mod eval;
pub mod feasibility;
pub mod linalg;
pub mod model;
pub mod rules;
pub mod trainer;
pub mod udt;
pub mod viz;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use model::{Activation, ActivationPattern, Decision, Layer, Mlp};
pub use rules::{
    AffineConsequence, Consequence, LinearConstraint, Op, Rule, RuleSet, RuleSetKind,
};

/// Anything that maps an input vector to a class label.
pub trait Classifier {
    fn input_dim(&self) -> usize;
    fn classify_label(&self, x: &[f64]) -> Result<usize>;
}
