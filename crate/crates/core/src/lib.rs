//! Inhomogeneous spatial preferential attachment (SPA) graphs.
//!
//! Nodes arrive one per time step on the unit torus `[0,1)^m`, drawn from a
//! piecewise-constant density over a `k^m` grid of cells. Every existing node
//! owns a sphere of influence whose volume grows with its in-degree and
//! shrinks with time; a newcomer links to each node whose sphere contains it,
//! independently with probability `p`.
//!
//! The crate covers the whole loop:
//!
//! - [`model`]: parameters, density layouts, torus geometry and the seeded RNG.
//! - [`generator`]: the grid-indexed process plus a brute-force oracle.
//! - [`analysis`]: region statistics, degree tails, common neighbours and
//!   regime classification of node pairs.
//! - [`estimators`]: distance and density reconstruction from link structure.
//! - [`io`]: TSV / JSON artifact formats.
//!
//! All numeric code is generic over [`Scalar`]; the `*64` and `*32` aliases
//! below fix the scalar type for callers that do not care.

// `!(x < y)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod estimators;
pub mod generator;
pub mod io;
pub mod model;
pub mod scalar;

pub use error::{Result, SpaError};
pub use scalar::Scalar;

pub use generator::{EvolvingGraph, NodeRecord, TrajectoryLog};
pub use model::{DensityLayout, ModelParams, Point};

pub type Point64 = model::Point<f64>;
pub type Point32 = model::Point<f32>;
pub type ModelParams64 = model::ModelParams<f64>;
pub type ModelParams32 = model::ModelParams<f32>;
pub type DensityLayout64 = model::DensityLayout<f64>;
pub type DensityLayout32 = model::DensityLayout<f32>;
pub type Graph64 = generator::EvolvingGraph<f64>;
pub type Graph32 = generator::EvolvingGraph<f32>;
pub type PairRecord64 = analysis::PairRecord<f64>;
pub type DistanceEstimate64 = estimators::DistanceEstimate<f64>;
pub type DensityEstimate64 = estimators::DensityEstimate<f64>;
