//! Numerical laboratory for conditioning on null sets, likelihood
//! formulations for inverse problems, and what reparameterization does to
//! densities, MAP points, evidences and empirical-Bayes hyperparameters.
//!
//! Every density is carried on a [`grid::GriddedDensity`]; every random
//! draw comes from a seeded ChaCha8 stream, so runs are reproducible.

pub mod estimators;
pub mod experiment;
pub mod grid;
pub mod hierarchy;
pub mod inversion;
pub mod reparam;
pub mod sphere;

pub use grid::{Axis, GriddedDensity};
