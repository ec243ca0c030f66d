use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::line_search::{exact_quadratic_step, wolfe_line_search, LineSearchResult, WolfeParams};
use crate::error::{check_dim, Error, Result};
use crate::objectives::Objective;
use crate::report::{IterationRecord, SolveReport, Termination};

/// The β rule of `dʲ⁺¹ = −gʲ⁺¹ + βʲdʲ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Fletcher–Reeves, `‖gʲ⁺¹‖² / ‖gʲ‖²`.
    FletcherReeves,
    /// Polak–Ribière, `⟨gʲ⁺¹, gʲ⁺¹ − gʲ⟩ / ‖gʲ‖²`.
    PolakRibiere,
    /// Hager–Zhang with the lower truncation of CG_DESCENT.
    HagerZhang,
    /// `β = 0`.
    SteepestDescent,
}

/// Truncation constant of the Hager–Zhang β.
const HZ_ETA: f64 = 0.01;
/// Initial-step constants of CG_DESCENT: first step scale, quadratic
/// probe fraction and growth factor.
const HZ_PSI0: f64 = 0.01;
const HZ_PSI1: f64 = 0.1;
const HZ_PSI2: f64 = 2.0;

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::FletcherReeves => "cg_fr",
            Variant::PolakRibiere => "cg_pr",
            Variant::HagerZhang => "cg_hz",
            Variant::SteepestDescent => "steepest_descent",
        }
    }

    fn beta(self, g: &DVector<f64>, g_next: &DVector<f64>, d: &DVector<f64>) -> f64 {
        let gg = g.norm_squared();
        match self {
            Variant::FletcherReeves => g_next.norm_squared() / gg,
            Variant::PolakRibiere => g_next.dot(&(g_next - g)) / gg,
            Variant::HagerZhang => {
                let y = g_next - g;
                let dy = d.dot(&y);
                if dy == 0.0 {
                    return 0.0;
                }
                let beta = (y.dot(g_next) - 2.0 * y.norm_squared() / dy * d.dot(g_next)) / dy;
                let floor = -1.0 / (d.norm() * HZ_ETA.min(gg.sqrt()));
                beta.max(floor)
            }
            Variant::SteepestDescent => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineSearchKind {
    #[default]
    Wolfe,
    /// `α = −⟨g,d⟩/⟨d,∇²f d⟩`; exact on quadratics.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NonlinearCgOptions {
    pub tolerance: f64,
    /// `None` means `200·n`.
    pub max_iters: Option<usize>,
    pub wolfe: WolfeParams,
    pub line_search: LineSearchKind,
    pub keep_iterates: bool,
}

impl Default for NonlinearCgOptions {
    fn default() -> Self {
        NonlinearCgOptions {
            tolerance: 1e-8,
            max_iters: None,
            wolfe: WolfeParams::default(),
            line_search: LineSearchKind::Wolfe,
            keep_iterates: false,
        }
    }
}

impl NonlinearCgOptions {
    pub fn with_tolerance(tolerance: f64) -> Self {
        NonlinearCgOptions { tolerance, ..Default::default() }
    }
}

/// First trial step of CG_DESCENT.
fn initial_step(x: &DVector<f64>, value: f64, g: &DVector<f64>) -> f64 {
    let x_inf = x.amax();
    if x_inf > 0.0 {
        HZ_PSI0 * x_inf / g.amax()
    } else if value != 0.0 {
        HZ_PSI0 * value.abs() / g.norm_squared()
    } else {
        1.0
    }
}

/// CG_DESCENT's later trial steps: the minimizer of the quadratic through
/// `φ(0)`, `φ'(0)` and `φ(ψ₁α_prev)` when that probe decreases `f` and the
/// quadratic is convex, else `ψ₂α_prev`. Returns the step and the number of
/// function evaluations spent.
fn hz_trial_step<O: Objective + ?Sized>(
    objective: &O,
    x: &DVector<f64>,
    value: f64,
    slope: f64,
    d: &DVector<f64>,
    alpha_prev: f64,
) -> Result<(f64, usize)> {
    let t = HZ_PSI1 * alpha_prev;
    match objective.value(&(x + d * t)) {
        Ok(f) if f.is_finite() && f <= value => {
            let curvature = (f - value - slope * t) / (t * t);
            if curvature > 0.0 {
                return Ok((-slope / (2.0 * curvature), 1));
            }
        }
        Ok(_) | Err(Error::Infeasible) => {}
        Err(e) => return Err(e),
    }
    Ok((HZ_PSI2 * alpha_prev, 1))
}

/// Nonlinear CG from a feasible `x0`.
///
/// A direction that fails to descend, or a failed line search, restarts
/// from `−g`; a failed search along `−g` ends the run.
pub fn nonlinear_cg<O: Objective + ?Sized>(
    objective: &O,
    x0: &DVector<f64>,
    variant: Variant,
    options: &NonlinearCgOptions,
) -> Result<SolveReport> {
    check_dim(objective.dim(), x0.len())?;
    let (mut value, mut g) = objective.value_and_gradient(x0).map_err(|e| match e {
        Error::Infeasible => Error::Contract("starting point is infeasible".into()),
        other => other,
    })?;
    let max_iters = options.max_iters.unwrap_or(200 * objective.dim());
    let mut report = SolveReport::new(variant.name());
    let mut iterates = options.keep_iterates.then(|| vec![x0.as_slice().to_vec()]);
    let mut x = x0.clone();
    let mut d = -&g;
    let mut previous: Option<(f64, f64)> = None;
    let mut iteration = 0;

    let termination = loop {
        if g.norm() <= options.tolerance {
            break Termination::Converged;
        }
        if iteration >= max_iters {
            break Termination::IterationLimit;
        }
        let mut slope = g.dot(&d);
        if !(slope < 0.0) {
            d = -&g;
            slope = -g.norm_squared();
        }
        let mut probes = 0;
        let mut alpha0 = match (previous, variant) {
            (Some((alpha, _)), Variant::HagerZhang) if options.line_search == LineSearchKind::Wolfe => {
                let (step, evals) = hz_trial_step(objective, &x, value, slope, &d, alpha)?;
                probes += evals;
                step
            }
            (Some((alpha, prev_slope)), _) => alpha * prev_slope / slope,
            (None, _) => initial_step(&x, value, &g),
        };
        if !(alpha0 > 0.0 && alpha0.is_finite()) {
            alpha0 = initial_step(&x, value, &g);
        }

        let step = loop {
            let attempt = match options.line_search {
                LineSearchKind::Wolfe => wolfe_line_search(objective, &x, value, &g, &d, alpha0, &options.wolfe),
                LineSearchKind::Exact => exact_quadratic_step(objective, &x, &g, &d),
            };
            match attempt {
                Ok(r) => {
                    probes += r.function_evals;
                    break Ok(r);
                }
                Err(Error::LineSearch { probes: p }) => {
                    probes += p;
                    let is_gradient = d.iter().zip(g.iter()).all(|(di, gi)| *di == -gi);
                    if is_gradient {
                        break Err(format!("line search failed along −g after {p} probes"));
                    }
                    d = -&g;
                    slope = -g.norm_squared();
                    alpha0 = initial_step(&x, value, &g);
                }
                Err(e) => return Err(e),
            }
        };
        report.line_search_iterations += probes;
        let LineSearchResult { step: alpha, x: x_next, value: value_next, gradient: g_next, decrease, .. } = match step {
            Ok(r) => r,
            Err(msg) => break Termination::Failed(msg),
        };

        report.trace.push(IterationRecord {
            iteration,
            value,
            grad_norm: g.norm(),
            subspace_dim: 1,
            method: variant.name().to_string(),
            inner_iterations: probes,
            inner_tolerance: None,
            lambda: None,
            decrease,
        });

        let beta = variant.beta(&g, &g_next, &d);
        d = &d * beta - &g_next;
        let stalled = x_next == x;
        x = x_next;
        value = value_next;
        g = g_next;
        previous = Some((alpha, slope));
        iteration += 1;
        if let Some(it) = iterates.as_mut() {
            it.push(x.as_slice().to_vec());
        }
        if stalled {
            break Termination::Stalled;
        }
    };

    report.termination = termination;
    report.iterations = iteration;
    report.max_subspace_dim = 1;
    report.value = value;
    report.grad_norm = g.norm();
    report.x = x.as_slice().to_vec();
    report.iterates = iterates;
    Ok(report)
}
