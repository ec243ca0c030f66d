//! Small dense kernels that the objectives and subsolvers share.
//!
//! The Cholesky factorization here reports *where* it broke down. The
//! log-det barrier needs that pivot to build a direction of nonpositive
//! curvature when a trial point leaves the positive definite cone.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Lower-triangular factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DMatrix<f64>,
}

/// A Cholesky factorization that hit a nonpositive pivot.
#[derive(Debug, Clone)]
pub struct CholeskyFailure {
    /// Index of the first pivot that was not strictly positive.
    pub pivot: usize,
    /// The Schur complement value at that pivot (`<= 0` or NaN).
    pub schur: f64,
    partial: DMatrix<f64>,
}

impl Cholesky {
    /// Factors a symmetric matrix, reading only its lower triangle.
    ///
    /// A pivot counts as failed unless it is strictly positive and finite.
    pub fn factor(a: &DMatrix<f64>) -> std::result::Result<Self, CholeskyFailure> {
        let n = a.nrows();
        debug_assert_eq!(n, a.ncols());
        let mut l = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut sum = a[(i, j)];
                for k in 0..j {
                    sum -= l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if !(sum > 0.0 && sum.is_finite()) {
                        return Err(CholeskyFailure { pivot: i, schur: sum, partial: l });
                    }
                    l[(i, i)] = sum.sqrt();
                } else {
                    l[(i, j)] = sum / l[(j, j)];
                }
            }
        }
        Ok(Cholesky { l })
    }

    pub fn factor_or_err(a: &DMatrix<f64>) -> Result<Self> {
        Self::factor(a).map_err(|f| Error::NotPositiveDefinite { pivot: f.pivot })
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut z = b.clone();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= self.l[(i, k)] * z[k];
            }
            z[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * z[k];
            }
            z[i] = s / self.l[(i, i)];
        }
        z
    }

    /// `L⁻¹`, lower triangular.
    pub fn l_inverse(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut inv = DMatrix::<f64>::zeros(n, n);
        for col in 0..n {
            inv[(col, col)] = 1.0 / self.l[(col, col)];
            for i in col + 1..n {
                let mut s = 0.0;
                for k in col..i {
                    s -= self.l[(i, k)] * inv[(k, col)];
                }
                inv[(i, col)] = s / self.l[(i, i)];
            }
        }
        inv
    }

    /// `A⁻¹ = L⁻ᵀ L⁻¹`.
    pub fn inverse(&self) -> DMatrix<f64> {
        let linv = self.l_inverse();
        linv.tr_mul(&linv)
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }
}

impl CholeskyFailure {
    /// A vector `v` with `vᵀ A v = schur <= 0`.
    ///
    /// `v = [-A₁₁⁻¹ a₁ₖ; 1; 0]` where `A₁₁` is the leading block that did
    /// factor. The partial factor already holds `L₁₁⁻¹ a₁ₖ` in row `pivot`.
    pub fn curvature_direction(&self) -> DVector<f64> {
        let n = self.partial.nrows();
        let k = self.pivot;
        let mut v = DVector::<f64>::zeros(n);
        v[k] = 1.0;
        // back-substitute L₁₁ᵀ w = z, v₁ = -w
        for i in (0..k).rev() {
            let mut s = self.partial[(k, i)];
            for r in i + 1..k {
                s -= self.partial[(r, i)] * (-v[r]);
            }
            v[i] = -(s / self.partial[(i, i)]);
        }
        v
    }
}

/// Symmetrizes in place as `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

pub fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}
