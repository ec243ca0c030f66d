//! Conjugate gradient with subspace optimization (CGSO) for smooth,
//! strongly convex minimization.
//!
//! The crate is organized bottom-up:
//!
//! - [`objectives`]: the [`Objective`](objectives::Objective) trait, the
//!   log-barrier, log-det and even-power test families, quadratics, and
//!   seeded instance generation.
//! - [`subspace`] and [`ellipsoid`]: the per-iteration reduced problem,
//!   solved by Newton's method with an ellipsoid-method fallback.
//! - [`cgso`]: the outer iteration with block certificates and correction
//!   steps.
//! - [`baselines`]: linear CG and nonlinear CG (FR, PR, HZ) with a Wolfe
//!   line search.
//! - [`bench`]: instance/solver matrices and report files.

// `!(x > 0.0)` is used on purpose so that NaN takes the failure branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod bench;
pub mod cgso;
pub mod ellipsoid;
pub mod error;
pub mod linalg;
pub mod objectives;
pub mod report;
pub mod subspace;

pub use cgso::{run, SolverOptions};
pub use error::{Error, Result};
pub use objectives::{generate_instance, InstanceSpec, Objective};
pub use report::SolveReport;
