//! Per-exponent accumulators for the two block certificates.
//!
//! For a block `[r_p, j]` of exponent `p` the ledger keeps
//! `Σλ`, `Σλ⟨g, x − x^{r_p}⟩`, `q = Σλg` and `Σλ²‖g‖²`, which is all the
//! checks at the block boundary need.

use std::collections::BTreeSet;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::Objective;

/// Relative size below which `f_old − f_new` is recomputed from the
/// second-order model; the value is in units of machine epsilon.
pub const DIRECT_DIFFERENCE_ULPS: f64 = 1e3;

#[derive(Debug, Clone)]
pub struct BlockLedger {
    exponent: u32,
    start: usize,
    anchor: DVector<f64>,
    anchor_value: f64,
    anchor_gradient: DVector<f64>,
    sum_lambda: f64,
    sum_lambda_inner: f64,
    weighted_gradient_sum: DVector<f64>,
    sum_squares: f64,
    sum_cross: f64,
    updates: usize,
    max_displacement: f64,
    max_tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockStatus {
    Pass,
    FailEq1,
    FailEq2,
    FailBoth,
}

/// Outcome of the boundary check, with the raw quantities behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockCheck {
    /// `((f_end − f(x^{r_p}))/4)·Σλ + Σλ⟨g, x − x^{r_p}⟩`; must be `< 0`.
    pub descent_value: f64,
    /// `‖Σλg‖`.
    pub q_norm: f64,
    /// `√(Σλ²‖g‖²)`.
    pub weighted_norm: f64,
    pub rho: f64,
    pub descent_ok: bool,
    pub alignment_ok: bool,
}

impl BlockCheck {
    pub fn passed(&self) -> bool {
        self.descent_ok && self.alignment_ok
    }

    pub fn status(&self) -> BlockStatus {
        match (self.descent_ok, self.alignment_ok) {
            (true, true) => BlockStatus::Pass,
            (false, true) => BlockStatus::FailEq1,
            (true, false) => BlockStatus::FailEq2,
            (false, false) => BlockStatus::FailBoth,
        }
    }
}

impl BlockLedger {
    pub fn new(exponent: u32, start: usize, anchor: DVector<f64>, anchor_value: f64, anchor_gradient: DVector<f64>) -> Self {
        let n = anchor.len();
        BlockLedger {
            exponent,
            start,
            anchor,
            anchor_value,
            anchor_gradient,
            sum_lambda: 0.0,
            sum_lambda_inner: 0.0,
            weighted_gradient_sum: DVector::zeros(n),
            sum_squares: 0.0,
            sum_cross: 0.0,
            updates: 0,
            max_displacement: 0.0,
            max_tolerance: 0.0,
        }
    }

    /// A copy tracking exponent `p` instead; used when a larger exponent
    /// starts from the same anchor.
    pub fn with_exponent(&self, exponent: u32) -> Self {
        BlockLedger { exponent, ..self.clone() }
    }

    pub fn restart(&mut self, start: usize, anchor: DVector<f64>, anchor_value: f64, anchor_gradient: DVector<f64>) {
        *self = BlockLedger::new(self.exponent, start, anchor, anchor_value, anchor_gradient);
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    /// `r_p`.
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn block_len(&self) -> usize {
        1usize << self.exponent
    }

    pub fn anchor(&self) -> &DVector<f64> {
        &self.anchor
    }

    pub fn anchor_value(&self) -> f64 {
        self.anchor_value
    }

    pub fn anchor_gradient(&self) -> &DVector<f64> {
        &self.anchor_gradient
    }

    pub fn sum_lambda(&self) -> f64 {
        self.sum_lambda
    }

    pub fn sum_lambda_inner(&self) -> f64 {
        self.sum_lambda_inner
    }

    /// `q_p = Σ λⁱ gⁱ` over the iterations seen so far.
    pub fn weighted_gradient_sum(&self) -> &DVector<f64> {
        &self.weighted_gradient_sum
    }

    pub fn sum_squares(&self) -> f64 {
        self.sum_squares
    }

    /// `Σ_{i<k} λⁱλᵏ⟨gⁱ, gᵏ⟩`, accumulated separately from `q`.
    pub fn sum_cross(&self) -> f64 {
        self.sum_cross
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    pub fn max_displacement(&self) -> f64 {
        self.max_displacement
    }

    pub fn max_tolerance(&self) -> f64 {
        self.max_tolerance
    }

    /// Adds iteration `(λ, g, x)`; `inner_tolerance` is the subproblem
    /// tolerance used at that iteration, kept for diagnostics.
    pub fn update(&mut self, lambda: f64, g: &DVector<f64>, x: &DVector<f64>, inner_tolerance: f64) {
        let displacement = x - &self.anchor;
        self.sum_lambda += lambda;
        self.sum_lambda_inner += lambda * g.dot(&displacement);
        self.sum_cross += lambda * self.weighted_gradient_sum.dot(g);
        self.weighted_gradient_sum.axpy(lambda, g, 1.0);
        self.sum_squares += lambda * lambda * g.norm_squared();
        self.updates += 1;
        self.max_displacement = self.max_displacement.max(displacement.norm());
        self.max_tolerance = self.max_tolerance.max(inner_tolerance);
    }

    /// Checks both certificates. `decrease` is `f(x^{r_p}) − f_end`,
    /// ideally from [`stable_delta`].
    pub fn check(&self, decrease: f64, rho: f64) -> BlockCheck {
        let descent_value = (-decrease / 4.0) * self.sum_lambda + self.sum_lambda_inner;
        let q_norm = self.weighted_gradient_sum.norm();
        let weighted_norm = self.sum_squares.sqrt();
        BlockCheck {
            descent_value,
            q_norm,
            weighted_norm,
            rho,
            descent_ok: descent_value < 0.0,
            alignment_ok: q_norm <= rho * weighted_norm,
        }
    }

    /// `‖q‖ / √(Σλ²‖g‖²)`, absent when the denominator is zero.
    pub fn rho_observed(&self) -> Option<f64> {
        let denom = self.sum_squares.sqrt();
        (denom > 0.0).then(|| self.weighted_gradient_sum.norm() / denom)
    }
}

pub fn update_ledgers<'a>(
    ledgers: impl IntoIterator<Item = &'a mut BlockLedger>,
    lambda: f64,
    g: &DVector<f64>,
    x: &DVector<f64>,
    inner_tolerance: f64,
) {
    for ledger in ledgers {
        ledger.update(lambda, g, x, inner_tolerance);
    }
}

/// Exponents currently taking correction steps.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorrectionSet {
    active: BTreeSet<u32>,
}

impl CorrectionSet {
    pub fn contains(&self, p: u32) -> bool {
        self.active.contains(&p)
    }

    pub fn insert(&mut self, p: u32) -> bool {
        self.active.insert(p)
    }

    pub fn remove(&mut self, p: u32) -> bool {
        self.active.remove(&p)
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.active.iter().copied()
    }
}

/// `λ = √(max(δ, 0) / ‖g‖²)`.
pub fn compute_lambda(delta: f64, g: &DVector<f64>) -> Result<f64> {
    let gg = g.norm_squared();
    if !(gg > 0.0) {
        return Err(Error::Contract("lambda needs a nonzero gradient".into()));
    }
    Ok((delta.max(0.0) / gg).sqrt())
}

/// `f_old − f_new`, switching to `−(gᵀΔ + ½ΔᵀHΔ)` at `x_old` once the
/// direct difference is within [`DIRECT_DIFFERENCE_ULPS`] ulps of `f_old`.
pub fn stable_delta<O: Objective + ?Sized>(
    objective: &O,
    x_old: &DVector<f64>,
    f_old: f64,
    g_old: &DVector<f64>,
    x_new: &DVector<f64>,
    f_new: f64,
) -> Result<f64> {
    let direct = f_old - f_new;
    if direct.abs() > DIRECT_DIFFERENCE_ULPS * f64::EPSILON * f_old.abs() {
        return Ok(direct);
    }
    let step = x_new - x_old;
    if step.iter().all(|&s| s == 0.0) {
        return Ok(0.0);
    }
    let curvature = objective.hvp(x_old, &step)?;
    Ok(-(g_old.dot(&step) + 0.5 * step.dot(&curvature)))
}
