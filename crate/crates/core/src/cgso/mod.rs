//! The outer CGSO iteration.
//!
//! Each iterate minimizes `f` over `xʲ + span{gʲ, dʲ, corrections}`. After
//! every step, λʲ is folded into one ledger per tracked exponent `p`; at
//! iterations `j+1 = k·2ᵖ` the two block certificates are checked for every
//! `p ∈ {P_l, …, ⌈log₂ j⌉}`. A failed check puts `p` in correction mode for
//! exactly the next block of that exponent, widening the subspace with the
//! block's `q_p` and `xʲ − x^{r_p}`.

mod ledger;

pub use ledger::{
    compute_lambda, stable_delta, update_ledgers, BlockCheck, BlockLedger, BlockStatus, CorrectionSet,
    DIRECT_DIFFERENCE_ULPS,
};

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::objectives::Objective;
use crate::report::{BlockRecord, CorrectionRecord, IterationRecord, SolveReport, Termination};
use crate::subspace::{build_basis, solve_subproblem, SubsolverOptions};

/// Which extra directions a correction block contributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionBasis {
    /// `q_p` and `xʲ − x^{r_p}`.
    #[default]
    Full,
    /// Only `xʲ − x^{r_p}`.
    DisplacementOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Stop once `‖∇f‖ ≤ tolerance`.
    pub tolerance: f64,
    /// Constant of the alignment certificate, `≥ 1`.
    pub rho: f64,
    /// Smallest block exponent `P_l`.
    pub min_exponent: u32,
    /// `None` means `200·n`.
    pub max_iters: Option<usize>,
    pub correction_basis: CorrectionBasis,
    /// Grow ρ after repeated alignment failures and relax it back when the
    /// observed ratio stays well below it.
    pub adaptive_rho: bool,
    /// Exponents put in correction mode at their first checked boundary
    /// regardless of the outcome.
    pub forced_corrections: Vec<u32>,
    pub keep_iterates: bool,
    pub newton_max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-8,
            rho: 2.0,
            min_exponent: 4,
            max_iters: None,
            correction_basis: CorrectionBasis::Full,
            adaptive_rho: false,
            forced_corrections: Vec::new(),
            keep_iterates: false,
            newton_max_iters: crate::subspace::NEWTON_MAX_ITERS,
        }
    }
}

impl SolverOptions {
    pub fn with_tolerance(tolerance: f64) -> Self {
        SolverOptions { tolerance, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho >= 1.0) {
            return Err(Error::Contract(format!("rho must be >= 1, got {}", self.rho)));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::Contract(format!("tolerance must be nonnegative, got {}", self.tolerance)));
        }
        Ok(())
    }
}

/// The iterate `xʲ` with its gradient, value and previous step.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub iteration: usize,
    pub x: DVector<f64>,
    pub gradient: DVector<f64>,
    pub value: f64,
    /// `dʲ = xʲ − xʲ⁻¹`; absent at `j = 0`.
    pub step: Option<DVector<f64>>,
}

/// `⌈log₂ j⌉` for `j ≥ 1`.
pub fn ceil_log2(j: usize) -> u32 {
    if j <= 1 {
        0
    } else {
        usize::BITS - (j - 1).leading_zeros()
    }
}

/// Upper bound on the subspace dimension at iteration `j`.
pub fn subspace_dim_bound(j: usize, min_exponent: u32) -> usize {
    let top = ceil_log2(j.max(1)) as i64;
    let exponents = (top - min_exponent as i64 + 1).max(0) as usize;
    2 + 2 * exponents
}

struct RhoPolicy {
    default: f64,
    current: f64,
    adaptive: bool,
    alignment_failures: BTreeMap<u32, u32>,
    low_streak: u32,
}

impl RhoPolicy {
    fn observe(&mut self, p: u32, check: &BlockCheck, observed: Option<f64>) {
        if !self.adaptive {
            return;
        }
        let streak = self.alignment_failures.entry(p).or_default();
        if check.alignment_ok {
            *streak = 0;
        } else {
            *streak += 1;
            if *streak >= 2 {
                self.current *= 1.5;
                *streak = 0;
            }
        }
        match observed {
            Some(r) if r < self.current / 2.0 => {
                self.low_streak += 1;
                if self.low_streak >= 2 {
                    self.current = (self.current / 1.5).max(self.default);
                    self.low_streak = 0;
                }
            }
            _ => self.low_streak = 0,
        }
    }
}

/// Minimizes `objective` from a strictly feasible `x0`.
pub fn run<O: Objective + ?Sized>(objective: &O, x0: &DVector<f64>, options: &SolverOptions) -> Result<SolveReport> {
    options.validate()?;
    check_dim(objective.dim(), x0.len())?;
    let (f0, g0) = objective.value_and_gradient(x0).map_err(|e| match e {
        Error::Infeasible => Error::Contract("starting point is infeasible".into()),
        other => other,
    })?;
    if !f0.is_finite() || !g0.iter().all(|v| v.is_finite()) {
        return Err(Error::Contract(format!("objective is not finite at the starting point ({f0})")));
    }

    let n = objective.dim();
    let max_iters = options.max_iters.unwrap_or(200 * n);
    let mut report = SolveReport::new("cgso");
    let mut iterates = options.keep_iterates.then(|| vec![x0.as_slice().to_vec()]);
    let mut state = SolverState { iteration: 0, x: x0.clone(), gradient: g0.clone(), value: f0, step: None };
    let mut ledgers = BTreeMap::new();
    ledgers.insert(options.min_exponent, BlockLedger::new(options.min_exponent, 0, x0.clone(), f0, g0));
    let mut active = CorrectionSet::default();
    let mut rho = RhoPolicy {
        default: options.rho,
        current: options.rho,
        adaptive: options.adaptive_rho,
        alignment_failures: BTreeMap::new(),
        low_streak: 0,
    };
    let mut previous_tolerance = 0.0;

    let termination = loop {
        if state.gradient.norm() <= options.tolerance {
            break Termination::Converged;
        }
        if state.iteration >= max_iters {
            break Termination::IterationLimit;
        }
        let j = state.iteration;

        let corrections: Vec<&BlockLedger> = active.iter().map(|p| &ledgers[&p]).collect();
        for ledger in &corrections {
            let displacement = &state.x - ledger.anchor();
            report.corrections.push(CorrectionRecord {
                iteration: j,
                exponent: ledger.exponent(),
                displacement_inner: state.gradient.dot(&displacement),
                displacement_norm: displacement.norm(),
                accumulated_inner: state.gradient.dot(ledger.weighted_gradient_sum()),
                accumulated_norm: ledger.weighted_gradient_sum().norm(),
                inner_tolerance: previous_tolerance,
            });
        }
        let problem = build_basis(objective, &state, &corrections, options.correction_basis);
        let radius = state.step.as_ref().map_or(1.0, |d| (10.0 * d.norm()).max(1.0));
        let sub_options = SubsolverOptions {
            newton_max_iters: options.newton_max_iters,
            ellipsoid_radius: radius,
            ellipsoid_max_iters: None,
        };
        let result = solve_subproblem(&problem, &sub_options);
        let k = problem.dim();
        let inner_tolerance = problem.tolerance();
        drop(corrections);

        let delta = stable_delta(objective, &state.x, state.value, &state.gradient, &result.x_new, result.f_new)?;
        if !result.f_new.is_finite() || !(delta >= 0.0) {
            break Termination::Failed(format!("subproblem increased the objective by {:e}", -delta));
        }
        let lambda = compute_lambda(delta, &state.gradient)?;

        report.trace.push(IterationRecord {
            iteration: j,
            value: state.value,
            grad_norm: state.gradient.norm(),
            subspace_dim: k,
            method: result.method.as_str().to_string(),
            inner_iterations: result.inner_iterations(),
            inner_tolerance: Some(inner_tolerance),
            lambda: Some(lambda),
            decrease: delta,
        });
        report.newton_iterations += result.newton_iterations;
        report.ellipsoid_iterations += result.ellipsoid_iterations;
        report.max_subspace_dim = report.max_subspace_dim.max(k);

        update_ledgers(ledgers.values_mut(), lambda, &state.gradient, &state.x, inner_tolerance);

        let next = j + 1;
        let exponents: Vec<u32> = ledgers.keys().copied().collect();
        for p in exponents {
            if !next.is_multiple_of(1usize << p) {
                continue;
            }
            let ledger = &ledgers[&p];
            let first_block = ledger.start() == 0;
            if first_block && !ledgers.contains_key(&(p + 1)) {
                let larger = ledger.with_exponent(p + 1);
                ledgers.insert(p + 1, larger);
            }
            let ledger = &ledgers[&p];
            let checkable = j >= 1 && p <= ceil_log2(j);
            let in_correction = active.contains(p);
            if checkable || in_correction {
                let decrease = stable_delta(
                    objective,
                    ledger.anchor(),
                    ledger.anchor_value(),
                    ledger.anchor_gradient(),
                    &result.x_new,
                    result.f_new,
                )?;
                let check = ledger.check(decrease, rho.current);
                let observed = ledger.rho_observed();
                let mut triggered = false;
                if in_correction {
                    active.remove(p);
                } else {
                    let forced = first_block && options.forced_corrections.contains(&p);
                    if !check.passed() || forced {
                        active.insert(p);
                        report.correction_blocks += 1;
                        triggered = true;
                    }
                    rho.observe(p, &check, observed);
                }
                report.blocks.push(BlockRecord {
                    exponent: p,
                    start: ledger.start(),
                    end: next,
                    correction_block: in_correction,
                    triggered_correction: triggered,
                    eq1_pass: check.descent_ok,
                    eq2_pass: check.alignment_ok,
                    eq1_value: check.descent_value,
                    sum_lambda: ledger.sum_lambda(),
                    sum_lambda_inner: ledger.sum_lambda_inner(),
                    q_norm: check.q_norm,
                    weighted_norm: check.weighted_norm,
                    rho: check.rho,
                    rho_observed: observed,
                    sum_cross: ledger.sum_cross(),
                    max_displacement: ledger.max_displacement(),
                    max_inner_tolerance: ledger.max_tolerance(),
                });
            }
            if let Some(ledger) = ledgers.get_mut(&p) {
                ledger.restart(next, result.x_new.clone(), result.f_new, result.g_new.clone());
            }
        }

        let step = &result.x_new - &state.x;
        let stalled = step.iter().all(|&s| s == 0.0);
        state = SolverState {
            iteration: next,
            x: result.x_new,
            gradient: result.g_new,
            value: result.f_new,
            step: Some(step),
        };
        previous_tolerance = inner_tolerance;
        if let Some(it) = iterates.as_mut() {
            it.push(state.x.as_slice().to_vec());
        }
        if stalled {
            break Termination::Stalled;
        }
    };

    report.termination = termination;
    report.iterations = state.iteration;
    report.value = state.value;
    report.grad_norm = state.gradient.norm();
    report.x = state.x.as_slice().to_vec();
    report.iterates = iterates;
    Ok(report)
}
