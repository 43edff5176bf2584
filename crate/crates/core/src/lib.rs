//! Nearest-neighbor estimators for the strength of a conditional dependence
//! `P(Y|X)`, measured either as uniform mutual information (mutual information
//! under a uniform input law) or capacitated mutual information (the channel
//! capacity, power constrained for real-valued inputs).
//!
//! The numeric core is generic over the scalar type through [`Real`]; the
//! `f64` aliases re-exported here are what the CLI and benchmarks use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod channels;
pub mod cmi;
pub mod dataset;
pub mod density;
pub mod error;
pub mod estimate;
pub mod estimators;
pub mod knn;
pub mod math;
pub mod rng;
mod scalar;

pub use error::{Error, Result};
pub use estimate::Estimate;
pub use math::Metric;
pub use scalar::Real;

/// Continuous `(X, Y)` samples in double precision.
pub type ContinuousDataset = dataset::ContinuousDataset<f64>;
/// Categorical `X` with real-valued `Y`, double precision.
pub type DiscreteXDataset = dataset::DiscreteXDataset<f64>;
/// Row-major sample matrix in double precision.
pub type Points = dataset::Points<f64>;
/// Row-stochastic channel matrix in double precision.
pub type DiscreteChannel = channels::DiscreteChannel<f64>;
/// Self-normalized sample weights in double precision.
pub type WeightVector = density::WeightVector<f64>;
/// Estimator output in double precision.
pub type EstimateF64 = estimate::Estimate<f64>;
