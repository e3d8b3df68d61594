//! Zip-shift symbolic dynamics and an N-to-1 piecewise-affine horseshoe.
//!
//! The crate has two halves. The symbolic half ([`symbolic`]) is exact: it
//! implements the shift space over an alphabet pair (S, Z) with a surjection
//! `tau: S -> Z`, its dyadic metric, cylinder sets, and the constructive
//! density/transitivity/expansivity arguments. The geometric half
//! ([`geometry`], [`horseshoe`], [`conjugacy`], [`stability`]) is generic
//! over the scalar type via [`scalar::Real`] and builds an explicit 2N-branch
//! horseshoe, verifies the strip and cone conditions, refines the invariant
//! set, and checks the finite-depth conjugacy with the zip shift, including
//! under small perturbations.

pub mod conjugacy;
pub mod geometry;
pub mod horseshoe;
pub mod report;
pub mod scalar;
pub mod stability;
pub mod symbolic;

pub use scalar::Real;

/// Concrete `f64` aliases for the generic geometric types.
pub type Point64 = geometry::Point<f64>;
pub type Interval64 = geometry::Interval<f64>;
pub type Rect64 = geometry::Rect<f64>;
pub type Curve64 = geometry::LipschitzCurve<f64>;
pub type Strip64 = geometry::Strip<f64>;
pub type Params64 = horseshoe::HorseshoeParams<f64>;
pub type Model64 = horseshoe::HorseshoeModel<f64>;
pub type Tree64 = horseshoe::RefinementTree<f64>;
pub type Perturbed64 = stability::PerturbedModel<f64>;
