//! Seeded random instances and their JSON file format.
//!
//! Every generator is a pure function of its [`InstanceSpec`]: the same
//! seed yields bit-identical problem data.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Convexity, LogBarrier, LogDetBarrier, PowerResidual, Problem, Quadratic};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Log-barrier `−Σ log(aᵢᵀx − bᵢ)`.
    F1,
    /// Log-det barrier `−cᵀx − log det(C − Diag(x))`.
    F2,
    /// Even-power residual `Σ (aᵢᵀx − bᵢ)^d`.
    F3,
    Quadratic,
}

fn default_density() -> f64 {
    1.0
}

/// Parameters of one random instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub family: Family,
    /// Row count of `A` (f1, f3).
    #[serde(default)]
    pub m: usize,
    pub n: usize,
    /// Degree for f3.
    #[serde(default)]
    pub d: Option<u32>,
    /// f2 linear term scale, `c = m_f·e`.
    #[serde(default)]
    pub m_f: Option<f64>,
    /// Fraction of nonzero entries in `A` (f1, f3) or in the factor of `C` (f2).
    #[serde(default = "default_density")]
    pub ds: f64,
    pub seed: u64,
    /// Outer gradient-norm tolerance.
    pub epsilon: f64,
    /// Quadratic spectrum bounds `[l, L]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strong_convexity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    /// Condition number of a dense `A` with geometrically spaced singular
    /// values (f1, f3 with `ds = 1`); `None` keeps i.i.d. Gaussian entries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<f64>,
}

impl InstanceSpec {
    pub fn f1(m: usize, n: usize, ds: f64, seed: u64, epsilon: f64) -> Self {
        InstanceSpec { family: Family::F1, m, n, d: None, m_f: None, ds, seed, epsilon, strong_convexity: None, lipschitz: None, condition: None }
    }

    pub fn f2(n: usize, m_f: f64, ds: f64, seed: u64, epsilon: f64) -> Self {
        InstanceSpec { family: Family::F2, m: 0, n, d: None, m_f: Some(m_f), ds, seed, epsilon, strong_convexity: None, lipschitz: None, condition: None }
    }

    pub fn f3(m: usize, n: usize, d: u32, ds: f64, seed: u64, epsilon: f64) -> Self {
        InstanceSpec { family: Family::F3, m, n, d: Some(d), m_f: None, ds, seed, epsilon, strong_convexity: None, lipschitz: None, condition: None }
    }

    pub fn quadratic(n: usize, l: f64, big_l: f64, seed: u64, epsilon: f64) -> Self {
        InstanceSpec {
            family: Family::Quadratic,
            m: 0,
            n,
            d: None,
            m_f: None,
            ds: 1.0,
            seed,
            epsilon,
            strong_convexity: Some(l),
            lipschitz: Some(big_l),
            condition: None,
        }
    }

    pub fn with_condition(mut self, condition: f64) -> Self {
        self.condition = Some(condition);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.n == 0 {
            return bad("n must be >= 1".into());
        }
        if !(self.ds > 0.0 && self.ds <= 1.0) {
            return bad(format!("density must lie in (0, 1], got {}", self.ds));
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        match self.family {
            Family::F1 | Family::F3 if self.m == 0 => return bad("m must be >= 1".into()),
            _ => {}
        }
        if self.family == Family::F3 {
            match self.d {
                Some(d) if d >= 2 && d % 2 == 0 => {}
                other => return bad(format!("f3 needs an even degree >= 2, got {other:?}")),
            }
        }
        if self.family == Family::F2 {
            match self.m_f {
                Some(mf) if mf.is_finite() => {}
                other => return bad(format!("f2 needs a finite m_f, got {other:?}")),
            }
        }
        if let Some(k) = self.condition {
            if !matches!(self.family, Family::F1 | Family::F3) || self.ds < 1.0 {
                return bad("a prescribed condition number needs f1 or f3 with ds = 1".into());
            }
            if !(k >= 1.0 && k.is_finite()) {
                return bad(format!("condition number must be finite and >= 1, got {k}"));
            }
        }
        if self.family == Family::Quadratic {
            match (self.strong_convexity, self.lipschitz) {
                (Some(l), Some(big_l)) if l > 0.0 && l <= big_l => {}
                other => return bad(format!("quadratic needs 0 < l <= L, got {other:?}")),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub spec: InstanceSpec,
    pub problem: Problem,
    pub x0: DVector<f64>,
}

/// Sparse `m×n` matrix with Bernoulli(ds) pattern and standard normal values.
/// Each row gets at least one nonzero.
fn random_sparse(rng: &mut ChaCha8Rng, m: usize, n: usize, ds: f64) -> CsrMatrix<f64> {
    let mut coo = CooMatrix::new(m, n);
    for i in 0..m {
        let mut any = false;
        for j in 0..n {
            if ds >= 1.0 || rng.random::<f64>() < ds {
                coo.push(i, j, rng.sample::<f64, _>(StandardNormal));
                any = true;
            }
        }
        if !any {
            let j = rng.random_range(0..n);
            coo.push(i, j, rng.sample::<f64, _>(StandardNormal));
        }
    }
    CsrMatrix::from(&coo)
}

/// Dense `m×n` matrix `U Σ Vᵀ` with Haar-random orthonormal factors and
/// singular values spaced geometrically from `√m + √n` (the typical top
/// singular value of a Gaussian matrix) down by a factor `condition`.
fn conditioned_dense(rng: &mut ChaCha8Rng, m: usize, n: usize, condition: f64) -> CsrMatrix<f64> {
    let r = m.min(n);
    let u = DMatrix::<f64>::from_fn(m, r, |_, _| rng.sample(StandardNormal)).qr().q();
    let v = DMatrix::<f64>::from_fn(n, r, |_, _| rng.sample(StandardNormal)).qr().q();
    let top = (m as f64).sqrt() + (n as f64).sqrt();
    let sigma = DVector::from_fn(r, |i, _| {
        let t = if r == 1 { 0.0 } else { i as f64 / (r - 1) as f64 };
        top * condition.powf(-t)
    });
    let a = u * DMatrix::from_diagonal(&sigma) * v.transpose();
    CsrMatrix::from(&a)
}

fn design_matrix(rng: &mut ChaCha8Rng, spec: &InstanceSpec) -> CsrMatrix<f64> {
    match spec.condition {
        Some(k) => conditioned_dense(rng, spec.m, spec.n, k),
        None => random_sparse(rng, spec.m, spec.n, spec.ds),
    }
}

fn positive_slacks(rng: &mut ChaCha8Rng, m: usize) -> DVector<f64> {
    DVector::from_fn(m, |_, _| -(0.1 + rng.random::<f64>()))
}

pub fn generate_instance(spec: &InstanceSpec) -> Result<GeneratedInstance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;
    let (problem, x0) = match spec.family {
        Family::F1 => {
            let a = design_matrix(&mut rng, spec);
            let b = positive_slacks(&mut rng, spec.m);
            (Problem::LogBarrier(LogBarrier::new(a, b)?), DVector::zeros(n))
        }
        Family::F3 => {
            let a = design_matrix(&mut rng, spec);
            let b = positive_slacks(&mut rng, spec.m);
            let d = spec.d.expect("validated");
            (Problem::Power(PowerResidual::new(a, b, d)?), DVector::zeros(n))
        }
        Family::F2 => {
            let mut m_factor = DMatrix::<f64>::zeros(n, n);
            for j in 0..n {
                for i in 0..n {
                    if spec.ds >= 1.0 || rng.random::<f64>() < spec.ds {
                        m_factor[(i, j)] = rng.sample(StandardNormal);
                    }
                }
            }
            let mut c = m_factor.tr_mul(&m_factor) / n as f64;
            for i in 0..n {
                c[(i, i)] += 1.0;
            }
            let c_vec = DVector::from_element(n, spec.m_f.expect("validated"));
            (Problem::LogDet(LogDetBarrier::new(c, c_vec)?), DVector::from_element(n, -1.0))
        }
        Family::Quadratic => {
            let l = spec.strong_convexity.expect("validated");
            let big_l = spec.lipschitz.expect("validated");
            let gauss = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
            let q = gauss.qr().q();
            let spectrum = DVector::from_fn(n, |i, _| match i {
                0 => l,
                i if i == n - 1 => big_l,
                _ => l + (big_l - l) * rng.random::<f64>(),
            });
            let mut a = q.transpose() * DMatrix::from_diagonal(&spectrum) * &q;
            crate::linalg::symmetrize(&mut a);
            let b = DVector::from_fn(n, |_, _| rng.sample(StandardNormal));
            let convexity = Convexity { strong_convexity: l, lipschitz: if n == 1 { l } else { big_l } };
            (Problem::Quadratic(Quadratic::with_convexity(a, b, convexity)?), DVector::zeros(n))
        }
    };
    Ok(GeneratedInstance { spec: spec.clone(), problem, x0 })
}

/// On-disk instance: the spec header plus explicit data. Matrices are
/// 0-indexed `(row, col, value)` triplets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(flatten)]
    pub spec: InstanceSpec,
    pub rows: usize,
    pub cols: usize,
    pub triplets: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub c: Vec<f64>,
    pub x0: Vec<f64>,
}

fn csr_triplets(a: &CsrMatrix<f64>) -> Vec<(usize, usize, f64)> {
    a.triplet_iter().map(|(i, j, &v)| (i, j, v)).collect()
}

fn dense_triplets(a: &DMatrix<f64>) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if a[(i, j)] != 0.0 {
                out.push((i, j, a[(i, j)]));
            }
        }
    }
    out
}

impl InstanceFile {
    pub fn from_instance(inst: &GeneratedInstance) -> Self {
        let (rows, cols, triplets, b, c) = match &inst.problem {
            Problem::LogBarrier(p) => {
                (p.matrix().nrows(), p.matrix().ncols(), csr_triplets(p.matrix()), p.rhs().as_slice().to_vec(), vec![])
            }
            Problem::Power(p) => {
                (p.matrix().nrows(), p.matrix().ncols(), csr_triplets(p.matrix()), p.rhs().as_slice().to_vec(), vec![])
            }
            Problem::LogDet(p) => (
                p.matrix().nrows(),
                p.matrix().ncols(),
                dense_triplets(p.matrix()),
                vec![],
                p.linear_term().as_slice().to_vec(),
            ),
            Problem::Quadratic(p) => {
                (p.matrix().nrows(), p.matrix().ncols(), dense_triplets(p.matrix()), p.rhs().as_slice().to_vec(), vec![])
            }
        };
        InstanceFile { spec: inst.spec.clone(), rows, cols, triplets, b, c, x0: inst.x0.as_slice().to_vec() }
    }

    pub fn into_instance(self) -> Result<GeneratedInstance> {
        self.spec.validate()?;
        for &(i, j, _) in &self.triplets {
            if i >= self.rows || j >= self.cols {
                return Err(Error::InvalidSpec(format!("triplet ({i}, {j}) outside {}x{}", self.rows, self.cols)));
            }
        }
        if self.cols != self.spec.n || self.x0.len() != self.spec.n {
            return Err(Error::DimensionMismatch { expected: self.spec.n, got: self.cols.min(self.x0.len()) });
        }
        let sparse = || {
            let mut coo = CooMatrix::new(self.rows, self.cols);
            for &(i, j, v) in &self.triplets {
                coo.push(i, j, v);
            }
            CsrMatrix::from(&coo)
        };
        let dense = || {
            let mut m = DMatrix::<f64>::zeros(self.rows, self.cols);
            for &(i, j, v) in &self.triplets {
                m[(i, j)] += v;
            }
            m
        };
        let b = DVector::from_column_slice(&self.b);
        let problem = match self.spec.family {
            Family::F1 => Problem::LogBarrier(LogBarrier::new(sparse(), b)?),
            Family::F3 => Problem::Power(PowerResidual::new(sparse(), b, self.spec.d.unwrap_or(0))?),
            Family::F2 => Problem::LogDet(LogDetBarrier::new(dense(), DVector::from_column_slice(&self.c))?),
            Family::Quadratic => {
                let convexity = Convexity {
                    strong_convexity: self.spec.strong_convexity.unwrap_or(0.0),
                    lipschitz: self.spec.lipschitz.unwrap_or(0.0),
                };
                Problem::Quadratic(Quadratic::with_convexity(dense(), b, convexity)?)
            }
        };
        Ok(GeneratedInstance { spec: self.spec, problem, x0: DVector::from_vec(self.x0) })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}
