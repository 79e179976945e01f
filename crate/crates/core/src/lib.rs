//! Broadcasting with random 2×2 matrices on trees.
//!
//! Each tree edge carries an i.i.d. coupling `J`, and the spin of a child copies
//! its parent's spin with probability `e^{βJ}/(1+e^{βJ})`. This crate provides
//! the threshold `Δ_KS(β,φ) = 1/E[tanh²(βJ/2)]`, exact inference on small trees,
//! edge influences and the bounds built from them, the flip-majority estimator
//! with its closed-form moments, and seeded Monte Carlo estimators of the
//! reconstruction total variation distance.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what the experiment driver uses.

// `!(x <= y)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod broadcast;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod inference;
pub mod influence;
pub mod model;
pub mod quadrature;
pub mod rng;
pub mod scalar;
pub mod treegen;

pub use error::{Error, Result};
pub use model::{
    CouplingAssignment, Edge, GibbsParams, LogRatio, RootedTree, SpinConfig, SpinValue,
    TreeBuilder, Vertex,
};
pub use scalar::Scalar;

/// Per-edge couplings in double precision.
pub type Couplings = model::CouplingAssignment<f64>;
/// A Gibbs instance in double precision.
pub type Instance<'t> = inference::GibbsInstance<'t, f64>;
/// Root posterior in double precision.
pub type Posterior = inference::PosteriorPair<f64>;
/// Edge influences in double precision.
pub type Influences = influence::InfluenceAssignment<f64>;
/// Log-ratio in double precision.
pub type LogRatioF64 = model::LogRatio<f64>;

/// Single-precision couplings.
pub type CouplingsF32 = model::CouplingAssignment<f32>;
/// Single-precision Gibbs instance.
pub type InstanceF32<'t> = inference::GibbsInstance<'t, f32>;
