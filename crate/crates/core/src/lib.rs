//! Density ridge estimation from point clouds.
//!
//! The crate estimates d-dimensional ridges of a probability density from
//! samples: a Gaussian kernel density estimator (or an analytic Gaussian
//! mixture oracle) supplies value, gradient, Hessian and third-derivative
//! information; the subspace-constrained mean shift iteration walks mesh
//! points onto the ridge; and the experiment harnesses measure stability,
//! bias and convergence behaviour against known reference manifolds.
//!
//! Module map:
//! - [`geometry`]: point clouds, Hausdorff distance, dilation connectivity
//! - [`density`]: evaluatable density models and their derivatives
//! - [`spectral`]: symmetric eigendecomposition and projector diagnostics
//! - [`ridge`]: SCMS iteration, the full pipeline, integral-curve oracle
//! - [`synth`]: reproducible hidden-manifold data generators
//! - [`experiments`]: scaling studies with structured reports

// parameter guards are written `!(x > 0.0)` so NaN is rejected; the
// rewrite clippy suggests would let NaN through
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod mat;
pub mod ridge;
pub mod rng;
pub mod spectral;
pub mod synth;

pub use error::{Error, Result};
