//! Reference solvers: linear CG on quadratics, nonlinear CG variants with a
//! strong Wolfe line search, and steepest descent.

mod line_search;
mod linear;
mod nonlinear;

pub use line_search::{exact_quadratic_step, wolfe_line_search, LineSearchResult, WolfeParams};
pub use linear::{linear_cg, LinearCgTrace};
pub use nonlinear::{nonlinear_cg, LineSearchKind, NonlinearCgOptions, Variant};
