//! Objective functions: the evaluation interface, the three test families
//! (log-barrier, log-det barrier, even-power residual), a quadratic family
//! used by the oracles, and seeded instance generation.

mod families;
mod instance;

pub use families::{LogBarrier, LogDetBarrier, PowerResidual, Quadratic};
pub use instance::{generate_instance, Family, GeneratedInstance, InstanceFile, InstanceSpec};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Known convexity constants: `l·I ⪯ ∇²f ⪯ L·I` on the whole domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convexity {
    pub strong_convexity: f64,
    pub lipschitz: f64,
}

/// A smooth convex function with an implicit open domain.
///
/// Every method that needs a point in the domain returns
/// [`Error::Infeasible`] when a hidden constraint is violated or active.
/// Implementations must be safe to evaluate from several threads at once.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &DVector<f64>) -> Result<f64>;

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>>;

    fn value_and_gradient(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        Ok((self.value(x)?, self.gradient(x)?))
    }

    /// Hessian-vector product `∇²f(x)·v`.
    fn hvp(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>>;

    /// `∇²f(x)·vₖ` for several directions at one point. Override when the
    /// per-point work (factorizations, slacks) can be shared.
    fn hvp_columns(&self, x: &DVector<f64>, vs: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        vs.iter().map(|v| self.hvp(x, v)).collect()
    }

    fn is_feasible(&self, x: &DVector<f64>) -> bool {
        let _ = x;
        true
    }

    /// For an infeasible `x`, a direction `h` such that every feasible `x'`
    /// satisfies `⟨h, x' − x⟩ < 0`.
    fn separating_direction(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let _ = x;
        Err(Error::Contract("objective has no hidden constraints".into()))
    }

    fn convexity(&self) -> Option<Convexity> {
        None
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        (**self).value(x)
    }
    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        (**self).gradient(x)
    }
    fn value_and_gradient(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        (**self).value_and_gradient(x)
    }
    fn hvp(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        (**self).hvp(x, v)
    }
    fn hvp_columns(&self, x: &DVector<f64>, vs: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        (**self).hvp_columns(x, vs)
    }
    fn is_feasible(&self, x: &DVector<f64>) -> bool {
        (**self).is_feasible(x)
    }
    fn separating_direction(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        (**self).separating_direction(x)
    }
    fn convexity(&self) -> Option<Convexity> {
        (**self).convexity()
    }
}

/// One of the built-in families, dispatched statically.
#[derive(Debug, Clone)]
pub enum Problem {
    LogBarrier(LogBarrier),
    LogDet(LogDetBarrier),
    Power(PowerResidual),
    Quadratic(Quadratic),
}

macro_rules! dispatch {
    ($self:ident, $inner:ident => $e:expr) => {
        match $self {
            Problem::LogBarrier($inner) => $e,
            Problem::LogDet($inner) => $e,
            Problem::Power($inner) => $e,
            Problem::Quadratic($inner) => $e,
        }
    };
}

impl Objective for Problem {
    fn dim(&self) -> usize {
        dispatch!(self, p => p.dim())
    }
    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        dispatch!(self, p => p.value(x))
    }
    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        dispatch!(self, p => p.gradient(x))
    }
    fn value_and_gradient(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        dispatch!(self, p => p.value_and_gradient(x))
    }
    fn hvp(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        dispatch!(self, p => p.hvp(x, v))
    }
    fn hvp_columns(&self, x: &DVector<f64>, vs: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        dispatch!(self, p => p.hvp_columns(x, vs))
    }
    fn is_feasible(&self, x: &DVector<f64>) -> bool {
        dispatch!(self, p => p.is_feasible(x))
    }
    fn separating_direction(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        dispatch!(self, p => p.separating_direction(x))
    }
    fn convexity(&self) -> Option<Convexity> {
        dispatch!(self, p => p.convexity())
    }
}
