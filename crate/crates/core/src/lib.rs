//! Semi-adaptive synergetic two-way pseudoinverse learning.
//!
//! Classifiers are trained without gradient descent. Each elementary model
//! stacks pseudoinverse-learned autoencoder layers (forward learning), pulls
//! the labels back through the trained network to refit a second network
//! (backward learning), concatenates features from both paths and fits a
//! random-expansion ridge classifier on them. The depth of the forward stack
//! is chosen by early stopping on a validation probe. Several elementary
//! models trained on random subsets form the final ensemble.
//!
//! Matrices hold one sample per column: a data set with `d` features and `N`
//! samples is `d x N`, targets are one-hot `c x N`.

pub mod backward;
pub mod data;
mod error;
pub mod forward;
pub mod fusion;
pub mod linalg;
pub mod metrics;
pub mod persist;
pub mod rng;
pub mod synergy;

pub use error::{Error, Result};
pub use linalg::{Activation, ActivationKind, DataMatrix};
