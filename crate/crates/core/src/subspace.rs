//! Per-iteration subspace minimization `min_y f(xʲ + B y)`.
//!
//! Candidate directions are orthonormalized in order (gradient, last step,
//! then the correction directions of every active block). A candidate is
//! dropped when its component orthogonal to the columns already kept is
//! below [`DROP_TOLERANCE`] of its own norm. The reduced problem is solved
//! by plain Newton steps from `y = 0`; any failure hands over to the
//! ellipsoid method.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cgso::{stable_delta, BlockLedger, CorrectionBasis, SolverState};
use crate::ellipsoid::{ellipsoid_minimize, EllipsoidOptions};
use crate::error::{Error, Result};
use crate::linalg::{symmetrize, Cholesky};
use crate::objectives::Objective;

pub const DROP_TOLERANCE: f64 = 1e-10;

/// Default inner tolerance is this fraction of `‖Bᵀ∇f(xʲ)‖`.
pub const INNER_TOLERANCE_FRACTION: f64 = 0.01;

pub const NEWTON_MAX_ITERS: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKind {
    Gradient,
    Step,
    /// `Σ λⁱ gⁱ` over the current block of exponent `p`.
    Accumulated(u32),
    /// `xʲ − x^{r_p}` for exponent `p`.
    Displacement(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerMethod {
    Newton,
    Ellipsoid,
}

impl InnerMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            InnerMethod::Newton => "newton",
            InnerMethod::Ellipsoid => "ellipsoid",
        }
    }
}

/// The reduced problem at one outer iterate. Immutable once built.
#[derive(Debug, Clone)]
pub struct SubspaceProblem<'a, O: Objective + ?Sized> {
    objective: &'a O,
    base: DVector<f64>,
    base_value: f64,
    base_gradient: DVector<f64>,
    columns: Vec<DVector<f64>>,
    kinds: Vec<ColumnKind>,
    tolerance: f64,
}

/// Value, gradient and Hessian of `f̃(y) = f(xʲ + B y)`.
#[derive(Debug, Clone)]
pub struct ReducedEval {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
    /// Full-space gradient at `xʲ + B y`.
    pub full_gradient: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct SubspaceResult {
    pub y: DVector<f64>,
    pub x_new: DVector<f64>,
    pub f_new: f64,
    pub g_new: DVector<f64>,
    pub method: InnerMethod,
    pub newton_iterations: usize,
    pub ellipsoid_iterations: usize,
}

impl SubspaceResult {
    pub fn inner_iterations(&self) -> usize {
        self.newton_iterations + self.ellipsoid_iterations
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NewtonFailureReason {
    Infeasible,
    NotPositiveDefinite,
    IterationLimit,
    NonDecrease,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NewtonFailure {
    pub reason: NewtonFailureReason,
    pub iterations: usize,
}

impl<'a, O: Objective + ?Sized> SubspaceProblem<'a, O> {
    /// Orthonormalizes `candidates` in order, dropping near-dependent ones.
    ///
    /// `base_gradient` must be `∇f(base)`. The inner tolerance defaults to
    /// `‖Bᵀ∇f(base)‖ / 100`.
    pub fn new(
        objective: &'a O,
        base: DVector<f64>,
        base_value: f64,
        base_gradient: DVector<f64>,
        candidates: impl IntoIterator<Item = (ColumnKind, DVector<f64>)>,
    ) -> Self {
        let mut columns: Vec<DVector<f64>> = Vec::new();
        let mut kinds = Vec::new();
        for (kind, c) in candidates {
            if let Some(q) = orthonormal_residual(&columns, &c) {
                columns.push(q);
                kinds.push(kind);
            }
        }
        let reduced_norm = columns.iter().map(|q| q.dot(&base_gradient).powi(2)).sum::<f64>().sqrt();
        SubspaceProblem {
            objective,
            base,
            base_value,
            base_gradient,
            columns,
            kinds,
            tolerance: INNER_TOLERANCE_FRACTION * reduced_norm,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn objective(&self) -> &'a O {
        self.objective
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[DVector<f64>] {
        &self.columns
    }

    pub fn kinds(&self) -> &[ColumnKind] {
        &self.kinds
    }

    pub fn base(&self) -> &DVector<f64> {
        &self.base
    }

    pub fn base_value(&self) -> f64 {
        self.base_value
    }

    pub fn base_gradient(&self) -> &DVector<f64> {
        &self.base_gradient
    }

    /// The inner stopping tolerance `ε_N`.
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// `xʲ + B y`.
    pub fn point(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut x = self.base.clone();
        for (q, &yk) in self.columns.iter().zip(y.iter()) {
            x.axpy(yk, q, 1.0);
        }
        x
    }

    /// `Bᵀ v`.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.columns.iter().map(|q| q.dot(v)))
    }

    /// Reduced value and gradient; `Err(Infeasible)` off the domain.
    pub fn value_gradient(&self, y: &DVector<f64>) -> Result<(f64, DVector<f64>, DVector<f64>)> {
        crate::error::check_dim(self.dim(), y.len())?;
        let x = self.point(y);
        let (value, g) = self.objective.value_and_gradient(&x)?;
        Ok((value, self.project(&g), g))
    }

    /// Value, `Bᵀ∇f` and `Bᵀ∇²f B` (from `K` Hessian-vector products).
    pub fn reduced_eval(&self, y: &DVector<f64>) -> Result<ReducedEval> {
        crate::error::check_dim(self.dim(), y.len())?;
        let x = self.point(y);
        let (value, full_gradient) = self.objective.value_and_gradient(&x)?;
        let hv = self.objective.hvp_columns(&x, &self.columns)?;
        let k = self.dim();
        let mut hessian = DMatrix::<f64>::zeros(k, k);
        for (c, hq) in hv.iter().enumerate() {
            for (r, q) in self.columns.iter().enumerate() {
                hessian[(r, c)] = q.dot(hq);
            }
        }
        symmetrize(&mut hessian);
        Ok(ReducedEval { value, gradient: self.project(&full_gradient), hessian, full_gradient })
    }

    /// `f(x_new) ≤ f(xʲ)` judged by the cancellation-safe difference.
    fn decreases(&self, x_new: &DVector<f64>, f_new: f64) -> bool {
        stable_delta(self.objective, &self.base, self.base_value, &self.base_gradient, x_new, f_new)
            .is_ok_and(|d| d >= 0.0)
    }

    fn origin_result(&self, method: InnerMethod) -> SubspaceResult {
        SubspaceResult {
            y: DVector::zeros(self.dim()),
            x_new: self.base.clone(),
            f_new: self.base_value,
            g_new: self.base_gradient.clone(),
            method,
            newton_iterations: 0,
            ellipsoid_iterations: 0,
        }
    }
}

fn orthonormal_residual(kept: &[DVector<f64>], c: &DVector<f64>) -> Option<DVector<f64>> {
    let norm = c.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return None;
    }
    let mut w = c / norm;
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for q in kept {
            let coef = q.dot(&w);
            w.axpy(-coef, q, 1.0);
        }
    }
    let residual = w.norm();
    if residual <= DROP_TOLERANCE {
        None
    } else {
        Some(w / residual)
    }
}

/// Candidate directions for iteration `j`: `gʲ`, `dʲ`, then for each active
/// block either `(q_p, xʲ − x^{r_p})` or only the displacement.
pub fn build_basis<'a, O: Objective + ?Sized>(
    objective: &'a O,
    state: &SolverState,
    corrections: &[&BlockLedger],
    mode: CorrectionBasis,
) -> SubspaceProblem<'a, O> {
    let mut candidates = vec![(ColumnKind::Gradient, state.gradient.clone())];
    if let Some(step) = &state.step {
        candidates.push((ColumnKind::Step, step.clone()));
    }
    for ledger in corrections {
        if mode == CorrectionBasis::Full {
            candidates.push((ColumnKind::Accumulated(ledger.exponent()), ledger.weighted_gradient_sum().clone()));
        }
        candidates.push((ColumnKind::Displacement(ledger.exponent()), &state.x - ledger.anchor()));
    }
    SubspaceProblem::new(objective, state.x.clone(), state.value, state.gradient.clone(), candidates)
}

/// Full Newton steps from `y = 0` until `‖∇f̃‖ ≤ ε_N`.
pub fn newton_solve<O: Objective + ?Sized>(
    problem: &SubspaceProblem<'_, O>,
    max_iters: usize,
) -> std::result::Result<SubspaceResult, NewtonFailure> {
    let k = problem.dim();
    let fail = |reason, iterations| NewtonFailure { reason, iterations };
    let mut y = DVector::<f64>::zeros(k);
    let mut value = problem.base_value;
    let mut gradient = problem.project(&problem.base_gradient);
    let mut full_gradient = problem.base_gradient.clone();
    let mut hessian: Option<DMatrix<f64>> = None;
    let mut iterations = 0;
    loop {
        if gradient.norm() <= problem.tolerance {
            let x_new = problem.point(&y);
            if !problem.decreases(&x_new, value) {
                return Err(fail(NewtonFailureReason::NonDecrease, iterations));
            }
            return Ok(SubspaceResult {
                x_new,
                y,
                f_new: value,
                g_new: full_gradient,
                method: InnerMethod::Newton,
                newton_iterations: iterations,
                ellipsoid_iterations: 0,
            });
        }
        if iterations == max_iters {
            return Err(fail(NewtonFailureReason::IterationLimit, iterations));
        }
        let h = match hessian.take() {
            Some(h) => h,
            None => match problem.reduced_eval(&y) {
                Ok(e) => e.hessian,
                Err(_) => return Err(fail(NewtonFailureReason::Infeasible, iterations)),
            },
        };
        let chol = match Cholesky::factor(&h) {
            Ok(c) => c,
            Err(_) => return Err(fail(NewtonFailureReason::NotPositiveDefinite, iterations)),
        };
        y -= chol.solve(&gradient);
        iterations += 1;
        match problem.reduced_eval(&y) {
            Ok(e) if e.value.is_finite() => {
                value = e.value;
                gradient = e.gradient;
                full_gradient = e.full_gradient;
                hessian = Some(e.hessian);
            }
            _ => return Err(fail(NewtonFailureReason::Infeasible, iterations)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsolverOptions {
    pub newton_max_iters: usize,
    /// Radius of the initial ellipsoid ball.
    pub ellipsoid_radius: f64,
    /// `None` means `200·K`.
    pub ellipsoid_max_iters: Option<usize>,
}

impl Default for SubsolverOptions {
    fn default() -> Self {
        SubsolverOptions { newton_max_iters: NEWTON_MAX_ITERS, ellipsoid_radius: 1.0, ellipsoid_max_iters: None }
    }
}

/// Newton first, the ellipsoid method on failure, and `y = 0` if neither
/// decreases `f` by the cancellation-safe difference.
pub fn solve_subproblem<O: Objective + ?Sized>(
    problem: &SubspaceProblem<'_, O>,
    options: &SubsolverOptions,
) -> SubspaceResult {
    let newton = newton_solve(problem, options.newton_max_iters);
    let failure = match newton {
        Ok(result) => return result,
        Err(failure) => failure,
    };
    let k = problem.dim();
    let ellipsoid_options = EllipsoidOptions {
        radius: options.ellipsoid_radius,
        max_iters: options.ellipsoid_max_iters.unwrap_or(200 * k),
        volume_tolerance: 1e-12 * (1.0 + problem.base_value.abs()),
    };
    let mut result = ellipsoid_minimize(problem, &ellipsoid_options);
    if !problem.decreases(&result.x_new, result.f_new) {
        result = problem.origin_result(InnerMethod::Ellipsoid);
    }
    result.newton_iterations = failure.iterations;
    result
}

/// Checks the subspace optimality residuals `|⟨∇f(x_new), qₖ⟩|`.
pub fn orthogonality_residual<O: Objective + ?Sized>(problem: &SubspaceProblem<'_, O>, g_new: &DVector<f64>) -> f64 {
    problem.project(g_new).amax()
}

impl From<NewtonFailure> for Error {
    fn from(f: NewtonFailure) -> Self {
        Error::Contract(format!("newton failed: {:?} after {} iterations", f.reason, f.iterations))
    }
}
