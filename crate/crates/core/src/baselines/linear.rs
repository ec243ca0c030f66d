use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone)]
pub struct LinearCgTrace {
    /// `x⁰, x¹, …`; the last entry is the returned point.
    pub iterates: Vec<DVector<f64>>,
    /// `‖rʲ‖` for each iterate.
    pub residual_norms: Vec<f64>,
    pub converged: bool,
}

impl LinearCgTrace {
    pub fn solution(&self) -> &DVector<f64> {
        self.iterates.last().expect("trace always holds x0")
    }

    pub fn iterations(&self) -> usize {
        self.iterates.len() - 1
    }
}

/// Classical CG for `Ax = b` with `r = Ax − b`, `d⁰ = −r⁰`.
///
/// Stops at `‖r‖ ≤ tol` or after `max_iters` steps. A direction with
/// `dᵀAd ≤ 0` means `A` is not positive definite and is reported as a
/// contract violation.
pub fn linear_cg(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    x0: &DVector<f64>,
    tol: f64,
    max_iters: usize,
) -> Result<LinearCgTrace> {
    let n = a.nrows();
    check_dim(n, a.ncols())?;
    check_dim(n, b.len())?;
    check_dim(n, x0.len())?;

    let mut x = x0.clone();
    let mut r = a * &x - b;
    let mut d = -&r;
    let mut rr = r.norm_squared();
    let mut trace = LinearCgTrace { iterates: vec![x.clone()], residual_norms: vec![rr.sqrt()], converged: false };

    for _ in 0..max_iters {
        if rr.sqrt() <= tol {
            break;
        }
        let ad = a * &d;
        let curvature = d.dot(&ad);
        if !(curvature > 0.0) {
            return Err(Error::Contract(format!("matrix is not positive definite (dᵀAd = {curvature:e})")));
        }
        let alpha = rr / curvature;
        x.axpy(alpha, &d, 1.0);
        r.axpy(alpha, &ad, 1.0);
        let rr_next = r.norm_squared();
        let beta = rr_next / rr;
        d = &d * beta - &r;
        rr = rr_next;
        trace.iterates.push(x.clone());
        trace.residual_norms.push(rr.sqrt());
    }
    trace.converged = rr.sqrt() <= tol;
    Ok(trace)
}
