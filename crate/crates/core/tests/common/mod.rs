//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use cgso::objectives::{generate_instance, Family, GeneratedInstance, InstanceSpec, Objective, Problem};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Central-difference step used throughout.
pub fn fd_step(x: &DVector<f64>) -> f64 {
    1e-6 * (1.0 + x.norm())
}

pub fn fd_gradient<O: Objective + ?Sized>(obj: &O, x: &DVector<f64>) -> DVector<f64> {
    let h = fd_step(x);
    DVector::from_fn(x.len(), |i, _| {
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus[i] += h;
        minus[i] -= h;
        (obj.value(&plus).unwrap() - obj.value(&minus).unwrap()) / (2.0 * h)
    })
}

pub fn fd_hvp<O: Objective + ?Sized>(obj: &O, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let h = fd_step(x) / v.norm().max(f64::MIN_POSITIVE);
    let plus = obj.gradient(&(x + v * h)).unwrap();
    let minus = obj.gradient(&(x - v * h)).unwrap();
    (plus - minus) / (2.0 * h)
}

pub fn relative_error(approx: &DVector<f64>, exact: &DVector<f64>) -> f64 {
    (approx - exact).norm() / exact.norm().max(1e-12)
}

/// Small instances of every family for derivative checks.
pub fn derivative_instances(seed: u64) -> Vec<(&'static str, GeneratedInstance)> {
    [
        ("f1", InstanceSpec::f1(20, 6, 0.7, seed, 1e-8)),
        ("f2", InstanceSpec::f2(6, 10.0, 0.6, seed, 1e-8)),
        ("f3", InstanceSpec::f3(15, 8, 4, 0.7, seed, 1e-8)),
        ("quadratic", InstanceSpec::quadratic(10, 1.0, 100.0, seed, 1e-8)),
    ]
    .into_iter()
    .map(|(name, spec)| (name, generate_instance(&spec).unwrap()))
    .collect()
}

/// A random point well inside the domain, so that finite-difference probes
/// stay feasible.
pub fn random_interior_point(inst: &GeneratedInstance, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let n = inst.problem.dim();
    match inst.spec.family {
        Family::F2 => DVector::from_fn(n, |_, _| -1.0 - rng.random::<f64>()),
        Family::F1 => {
            let Problem::LogBarrier(f) = &inst.problem else { unreachable!() };
            let dir = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let mut t = 1.0;
            loop {
                let x = &inst.x0 + &dir * t;
                if f.slacks(&x).map(|s| s.min() > 0.05).unwrap_or(false) {
                    return x;
                }
                t *= 0.5;
            }
        }
        Family::F3 | Family::Quadratic => DVector::from_fn(n, |_, _| 0.3 * rng.sample::<f64, _>(StandardNormal)),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
