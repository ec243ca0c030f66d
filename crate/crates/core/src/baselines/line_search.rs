use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::cgso::DIRECT_DIFFERENCE_ULPS;
use crate::error::{Error, Result};
use crate::objectives::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WolfeParams {
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub max_probes: usize,
}

impl Default for WolfeParams {
    fn default() -> Self {
        WolfeParams { c1: 1e-4, c2: 0.1, max_probes: 60 }
    }
}

#[derive(Debug, Clone)]
pub struct LineSearchResult {
    pub step: f64,
    pub x: DVector<f64>,
    pub value: f64,
    pub gradient: DVector<f64>,
    /// Probes that evaluated `f`, including infeasible ones.
    pub function_evals: usize,
    pub gradient_evals: usize,
    /// Cancellation-safe estimate of `f(x) − f(x+αd)`.
    pub decrease: f64,
}

#[derive(Debug, Clone)]
struct Probe {
    alpha: f64,
    value: f64,
    /// `f(x+αd) − f(x)`, from the slopes when the difference is rounding noise.
    change: f64,
    slope: f64,
    x: DVector<f64>,
    gradient: DVector<f64>,
}

enum Upper {
    Unbounded,
    Infeasible(f64),
    Point(Probe),
}

/// Bracketing and zoom for the strong Wolfe conditions
/// `f(x+αd) ≤ f + c₁α⟨g,d⟩` and `|⟨∇f(x+αd), d⟩| ≤ c₂|⟨g,d⟩|`.
///
/// A probe outside the objective's domain becomes the upper end of the
/// bracket, so the search backtracks into the feasible segment.
pub fn wolfe_line_search<O: Objective + ?Sized>(
    objective: &O,
    x: &DVector<f64>,
    value: f64,
    gradient: &DVector<f64>,
    direction: &DVector<f64>,
    initial_step: f64,
    params: &WolfeParams,
) -> Result<LineSearchResult> {
    let slope0 = gradient.dot(direction);
    if !(slope0 < 0.0) {
        return Err(Error::Contract(format!("line search direction is not a descent direction (⟨g,d⟩ = {slope0:e})")));
    }
    if !(initial_step > 0.0 && initial_step.is_finite()) {
        return Err(Error::Contract(format!("initial step must be positive, got {initial_step}")));
    }

    let mut lo = Probe { alpha: 0.0, value, change: 0.0, slope: slope0, x: x.clone(), gradient: gradient.clone() };
    let mut hi = Upper::Unbounded;
    let mut alpha = initial_step;
    let mut probes = 0;

    while probes < params.max_probes {
        probes += 1;
        let trial = x + direction * alpha;
        let probe = match objective.value_and_gradient(&trial) {
            Ok((f, g)) if f.is_finite() => {
                let slope = g.dot(direction);
                let change = value_change(value, f, alpha, slope0, slope);
                Some(Probe { alpha, value: f, change, slope, x: trial, gradient: g })
            }
            Ok(_) | Err(Error::Infeasible) => None,
            Err(e) => return Err(e),
        };
        match probe {
            None => hi = Upper::Infeasible(alpha),
            Some(p) if p.change > params.c1 * alpha * slope0 || p.change >= lo.change => hi = Upper::Point(p),
            Some(p) => {
                if p.slope.abs() <= -params.c2 * slope0 {
                    return Ok(LineSearchResult {
                        step: p.alpha,
                        x: p.x,
                        value: p.value,
                        gradient: p.gradient,
                        function_evals: probes,
                        gradient_evals: probes,
                        decrease: -p.change,
                    });
                }
                let hi_alpha = match &hi {
                    Upper::Unbounded => f64::INFINITY,
                    Upper::Infeasible(a) => *a,
                    Upper::Point(q) => q.alpha,
                };
                if p.slope * (hi_alpha - p.alpha) >= 0.0 {
                    hi = Upper::Point(std::mem::replace(&mut lo, p));
                } else {
                    lo = p;
                }
            }
        }

        alpha = match &hi {
            Upper::Unbounded => 2.0 * lo.alpha.max(alpha),
            Upper::Infeasible(a) => 0.5 * (lo.alpha + a),
            Upper::Point(q) => interpolate(&lo, q),
        };
        let width = match &hi {
            Upper::Unbounded => f64::INFINITY,
            Upper::Infeasible(a) => (a - lo.alpha).abs(),
            Upper::Point(q) => (q.alpha - lo.alpha).abs(),
        };
        if width <= f64::EPSILON * lo.alpha.max(f64::MIN_POSITIVE) || !alpha.is_finite() {
            break;
        }
    }
    Err(Error::LineSearch { probes })
}

/// Near convergence `f(x+αd) − f(x)` is lost to cancellation; there the
/// trapezoid estimate `α(φ'(0) + φ'(α))/2` replaces it, as in the
/// approximate Wolfe conditions of CG_DESCENT.
fn value_change(f0: f64, f: f64, alpha: f64, slope0: f64, slope: f64) -> f64 {
    let direct = f - f0;
    if direct.abs() > DIRECT_DIFFERENCE_ULPS * f64::EPSILON * f0.abs() {
        direct
    } else {
        0.5 * alpha * (slope0 + slope)
    }
}

/// Safeguarded cubic interpolation inside the bracket, bisection if the
/// cubic has no usable minimizer.
fn interpolate(lo: &Probe, hi: &Probe) -> f64 {
    let (a, b) = (lo.alpha, hi.alpha);
    let d1 = lo.slope + hi.slope - 3.0 * (lo.value - hi.value) / (a - b);
    let disc = d1 * d1 - lo.slope * hi.slope;
    let width = (b - a).abs();
    let (left, right) = (a.min(b) + 0.1 * width, a.max(b) - 0.1 * width);
    if disc >= 0.0 {
        let d2 = (b - a).signum() * disc.sqrt();
        let c = b - (b - a) * (hi.slope + d2 - d1) / (hi.slope - lo.slope + 2.0 * d2);
        if c.is_finite() {
            return c.clamp(left, right);
        }
    }
    0.5 * (a + b)
}

/// The exact minimizing step `−⟨g,d⟩ / ⟨d, ∇²f d⟩` along `d`; exact for
/// quadratics. Falls back to an error if the point is infeasible.
pub fn exact_quadratic_step<O: Objective + ?Sized>(
    objective: &O,
    x: &DVector<f64>,
    gradient: &DVector<f64>,
    direction: &DVector<f64>,
) -> Result<LineSearchResult> {
    let curvature = direction.dot(&objective.hvp(x, direction)?);
    if !(curvature > 0.0) {
        return Err(Error::Contract(format!("nonpositive curvature {curvature:e} along the search direction")));
    }
    let slope0 = gradient.dot(direction);
    let step = -slope0 / curvature;
    let x_new = x + direction * step;
    let f0 = objective.value(x)?;
    let (value, gradient) = objective.value_and_gradient(&x_new)?;
    let decrease = -value_change(f0, value, step, slope0, gradient.dot(direction));
    Ok(LineSearchResult { step, x: x_new, value, gradient, function_evals: 1, gradient_evals: 1, decrease })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use nalgebra_sparse::{CooMatrix, CsrMatrix};

    use crate::objectives::{LogBarrier, Quadratic};

    fn quadratic() -> Quadratic {
        Quadratic::new(
            DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]),
            DVector::from_vec(vec![1.0, -1.0]),
        )
        .unwrap()
    }

    #[test]
    fn quadratic_step_is_near_exact_minimizer() {
        let q = quadratic();
        let x = DVector::from_vec(vec![2.0, 1.0]);
        let (f, g) = q.value_and_gradient(&x).unwrap();
        let d = -&g;
        let exact = exact_quadratic_step(&q, &x, &g, &d).unwrap().step;
        let r = wolfe_line_search(&q, &x, f, &g, &d, 1.0, &WolfeParams::default()).unwrap();
        assert!(r.step >= 0.9 * exact && r.step <= 1.1 * exact, "{} vs {}", r.step, exact);
    }

    #[test]
    fn ascent_direction_is_a_contract_violation() {
        let q = quadratic();
        let x = DVector::from_vec(vec![2.0, 1.0]);
        let (f, g) = q.value_and_gradient(&x).unwrap();
        let r = wolfe_line_search(&q, &x, f, &g, &g, 1.0, &WolfeParams::default());
        assert!(matches!(r, Err(Error::Contract(_))));
    }

    #[test]
    fn barrier_crossing_probes_backtrack() {
        // Domain x ∈ (−1, 1); a unit step along −g overshoots the wall.
        let mut coo = CooMatrix::new(2, 1);
        coo.push(0, 0, 1.0);
        coo.push(1, 0, -1.0);
        let f = LogBarrier::new(CsrMatrix::from(&coo), DVector::from_vec(vec![-1.0, -1.0])).unwrap();
        let x = DVector::from_vec(vec![0.5]);
        let (v, g) = f.value_and_gradient(&x).unwrap();
        let d = -&g;
        let r = wolfe_line_search(&f, &x, v, &g, &d, 10.0, &WolfeParams::default()).unwrap();
        assert!(f.is_feasible(&r.x));
        assert!(r.function_evals > 1);
        assert!(r.value < v);
    }

    #[test]
    fn looser_curvature_never_needs_more_probes() {
        let n = 30;
        let diag = DVector::from_fn(n, |i, _| 1.0 + i as f64 * 10.0);
        let q = Quadratic::new(DMatrix::from_diagonal(&diag), DVector::from_element(n, 1.0)).unwrap();
        let x = DVector::from_fn(n, |i, _| (i as f64).sin());
        let (f, g) = q.value_and_gradient(&x).unwrap();
        let d = -&g;
        for start in [1e-4, 1e-2, 1.0, 10.0] {
            let tight = wolfe_line_search(&q, &x, f, &g, &d, start, &WolfeParams { c2: 0.1, ..Default::default() })
                .unwrap();
            let loose = wolfe_line_search(&q, &x, f, &g, &d, start, &WolfeParams { c2: 0.9, ..Default::default() })
                .unwrap();
            assert!(loose.function_evals <= tight.function_evals);
        }
    }
}
