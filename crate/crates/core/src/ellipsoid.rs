//! Central-cut ellipsoid method over the reduced space.
//!
//! The ellipsoid is `{y : (y − c)ᵀ P⁻¹ (y − c) ≤ 1}`. Feasible centers are
//! cut with the reduced gradient; infeasible centers are cut with the
//! objective's separating direction pulled back through `B`. The incumbent
//! is the best feasible center seen, starting from `y = 0`.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::linalg::symmetrize;
use crate::objectives::Objective;
use crate::subspace::{InnerMethod, SubspaceProblem, SubspaceResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidOptions {
    pub radius: f64,
    pub max_iters: usize,
    /// Stop once `√(gᵀPg)`, the largest decrease the linear model allows
    /// inside the ellipsoid, falls below this.
    pub volume_tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EllipsoidExit {
    Converged,
    VolumeTolerance,
    IterationLimit,
    Breakdown,
}

#[derive(Debug, Clone)]
pub struct EllipsoidState {
    center: DVector<f64>,
    shape: DMatrix<f64>,
    best_y: DVector<f64>,
    best_value: f64,
    best_gradient: DVector<f64>,
    iterations: usize,
}

impl EllipsoidState {
    /// Ball of `radius` around the origin; the origin is the first incumbent.
    pub fn ball(dim: usize, radius: f64, origin_value: f64, origin_gradient: DVector<f64>) -> Self {
        EllipsoidState {
            center: DVector::zeros(dim),
            shape: DMatrix::identity(dim, dim) * (radius * radius),
            best_y: DVector::zeros(dim),
            best_value: origin_value,
            best_gradient: origin_gradient,
            iterations: 0,
        }
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn shape(&self) -> &DMatrix<f64> {
        &self.shape
    }

    pub fn best_value(&self) -> f64 {
        self.best_value
    }

    pub fn best_point(&self) -> &DVector<f64> {
        &self.best_y
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// `√(hᵀPh)`.
    pub fn width(&self, h: &DVector<f64>) -> f64 {
        h.dot(&(&self.shape * h)).sqrt()
    }

    fn offer(&mut self, y: &DVector<f64>, value: f64, full_gradient: &DVector<f64>) {
        if value < self.best_value {
            self.best_value = value;
            self.best_y = y.clone();
            self.best_gradient = full_gradient.clone();
        }
    }

    /// Keeps the half `{y : ⟨h, y − c⟩ ≤ 0}` and replaces the ellipsoid by
    /// the minimum-volume one containing it. Returns `false` when the update
    /// breaks down numerically; the state is then left unchanged.
    pub fn cut(&mut self, h: &DVector<f64>) -> bool {
        let k = self.center.len();
        let ph = &self.shape * h;
        let hph = h.dot(&ph);
        if !(hph > 0.0) || !hph.is_finite() {
            return false;
        }
        let width = hph.sqrt();
        let kf = k as f64;
        let center = &self.center - &ph * (1.0 / ((kf + 1.0) * width));
        let shape = if k == 1 {
            // bisection: the interval halves
            &self.shape * 0.25
        } else {
            let scale = kf * kf / (kf * kf - 1.0);
            let mut s = (&self.shape - (&ph * ph.transpose()) * (2.0 / ((kf + 1.0) * hph))) * scale;
            symmetrize(&mut s);
            s
        };
        if !center.iter().all(|v| v.is_finite()) || !(shape.diagonal().min() > 0.0) {
            return false;
        }
        self.center = center;
        self.shape = shape;
        self.iterations += 1;
        true
    }
}

/// Reduced separating direction `Bᵀh` at an infeasible `y`.
pub fn feasibility_cut<O: Objective + ?Sized>(problem: &SubspaceProblem<'_, O>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let x = problem.point(y);
    let h = problem.objective().separating_direction(&x)?;
    Ok(problem.project(&h))
}

pub fn ellipsoid_minimize<O: Objective + ?Sized>(
    problem: &SubspaceProblem<'_, O>,
    options: &EllipsoidOptions,
) -> SubspaceResult {
    ellipsoid_minimize_traced(problem, options, |_, _| {}).0
}

/// [`ellipsoid_minimize`] with a hook that sees the state before and after
/// every successful cut.
pub fn ellipsoid_minimize_traced<O, F>(
    problem: &SubspaceProblem<'_, O>,
    options: &EllipsoidOptions,
    mut on_cut: F,
) -> (SubspaceResult, EllipsoidExit)
where
    O: Objective + ?Sized,
    F: FnMut(&EllipsoidState, &EllipsoidState),
{
    let k = problem.dim();
    let mut state =
        EllipsoidState::ball(k, options.radius, problem.base_value(), problem.base_gradient().clone());
    let mut pending = Some((problem.base_value(), problem.project(problem.base_gradient())));

    let exit = loop {
        let y = state.center.clone();
        let evaluated = match pending.take() {
            Some(known) => Some(known),
            None => match problem.value_gradient(&y) {
                Ok((value, reduced, full)) if value.is_finite() => {
                    state.offer(&y, value, &full);
                    Some((value, reduced))
                }
                Ok(_) => break EllipsoidExit::Breakdown,
                Err(e) if e.is_infeasible() => None,
                Err(_) => break EllipsoidExit::Breakdown,
            },
        };
        let h = match evaluated {
            Some((_, reduced)) => {
                if reduced.norm() <= problem.tolerance() {
                    break EllipsoidExit::Converged;
                }
                if state.width(&reduced) <= options.volume_tolerance {
                    break EllipsoidExit::VolumeTolerance;
                }
                reduced
            }
            None => match feasibility_cut(problem, &y) {
                Ok(h) => h,
                Err(_) => break EllipsoidExit::Breakdown,
            },
        };
        if state.iterations >= options.max_iters {
            break EllipsoidExit::IterationLimit;
        }
        let before = state.clone();
        if !state.cut(&h) {
            break EllipsoidExit::Breakdown;
        }
        on_cut(&before, &state);
    };

    let result = SubspaceResult {
        x_new: problem.point(&state.best_y),
        y: state.best_y.clone(),
        f_new: state.best_value,
        g_new: state.best_gradient.clone(),
        method: InnerMethod::Ellipsoid,
        newton_iterations: 0,
        ellipsoid_iterations: state.iterations,
    };
    (result, exit)
}
