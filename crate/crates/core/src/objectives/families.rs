use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::CsrMatrix;

use super::{Convexity, Objective};
use crate::error::{check_dim, Error, Result};
use crate::linalg::Cholesky;

fn spmv(a: &CsrMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(
        a.nrows(),
        a.row_iter().map(|row| {
            row.col_indices()
                .iter()
                .zip(row.values())
                .map(|(&j, &v)| v * x[j])
                .sum::<f64>()
        }),
    )
}

fn spmv_t(a: &CsrMatrix<f64>, w: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::<f64>::zeros(a.ncols());
    for (i, row) in a.row_iter().enumerate() {
        let wi = w[i];
        if wi == 0.0 {
            continue;
        }
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            out[j] += v * wi;
        }
    }
    out
}

fn dense_row(a: &CsrMatrix<f64>, i: usize) -> DVector<f64> {
    let mut out = DVector::<f64>::zeros(a.ncols());
    let row = a.row(i);
    for (&j, &v) in row.col_indices().iter().zip(row.values()) {
        out[j] = v;
    }
    out
}

/// `f(x) = −Σᵢ log(aᵢᵀx − bᵢ)` with domain `aᵢᵀx − bᵢ > 0` for all rows.
#[derive(Debug, Clone)]
pub struct LogBarrier {
    a: CsrMatrix<f64>,
    b: DVector<f64>,
}

impl LogBarrier {
    pub fn new(a: CsrMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        check_dim(a.nrows(), b.len())?;
        Ok(LogBarrier { a, b })
    }

    pub fn matrix(&self) -> &CsrMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }

    /// Row slacks `Ax − b`.
    pub fn slacks(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.a.ncols(), x.len())?;
        Ok(spmv(&self.a, x) - &self.b)
    }

    fn feasible_slacks(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let r = self.slacks(x)?;
        if r.iter().all(|&ri| ri > 0.0) {
            Ok(r)
        } else {
            Err(Error::Infeasible)
        }
    }
}

impl Objective for LogBarrier {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        let r = self.feasible_slacks(x)?;
        Ok(-r.iter().map(|ri| ri.ln()).sum::<f64>())
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let r = self.feasible_slacks(x)?;
        Ok(-spmv_t(&self.a, &r.map(|ri| 1.0 / ri)))
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let r = self.feasible_slacks(x)?;
        let value = -r.iter().map(|ri| ri.ln()).sum::<f64>();
        Ok((value, -spmv_t(&self.a, &r.map(|ri| 1.0 / ri))))
    }

    fn hvp(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), v.len())?;
        let r = self.feasible_slacks(x)?;
        let av = spmv(&self.a, v);
        Ok(spmv_t(&self.a, &av.zip_map(&r, |avi, ri| avi / (ri * ri))))
    }

    fn hvp_columns(&self, x: &DVector<f64>, vs: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        let r = self.feasible_slacks(x)?;
        let w = r.map(|ri| 1.0 / (ri * ri));
        vs.iter()
            .map(|v| {
                check_dim(self.dim(), v.len())?;
                Ok(spmv_t(&self.a, &spmv(&self.a, v).component_mul(&w)))
            })
            .collect()
    }

    fn is_feasible(&self, x: &DVector<f64>) -> bool {
        self.feasible_slacks(x).is_ok()
    }

    /// `−aᵢ` for the row with the smallest slack.
    fn separating_direction(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let r = self.slacks(x)?;
        let (worst, slack) = r
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, &ri)| {
                // NaN slacks count as most violated
                if ri.is_nan() || ri < best.1 {
                    (i, if ri.is_nan() { f64::NEG_INFINITY } else { ri })
                } else {
                    best
                }
            });
        if slack > 0.0 {
            return Err(Error::Contract("separating direction requested at a feasible point".into()));
        }
        Ok(-dense_row(&self.a, worst))
    }
}

/// `f(x) = Σᵢ (aᵢᵀx − bᵢ)^d` for an even degree `d ≥ 2`. No hidden constraints.
#[derive(Debug, Clone)]
pub struct PowerResidual {
    a: CsrMatrix<f64>,
    b: DVector<f64>,
    degree: u32,
}

impl PowerResidual {
    pub fn new(a: CsrMatrix<f64>, b: DVector<f64>, degree: u32) -> Result<Self> {
        check_dim(a.nrows(), b.len())?;
        if degree < 2 || !degree.is_multiple_of(2) {
            return Err(Error::InvalidSpec(format!("degree must be even and >= 2, got {degree}")));
        }
        Ok(PowerResidual { a, b, degree })
    }

    pub fn matrix(&self) -> &CsrMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    fn residuals(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.a.ncols(), x.len())?;
        Ok(spmv(&self.a, x) - &self.b)
    }
}

impl Objective for PowerResidual {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        let d = self.degree as i32;
        Ok(self.residuals(x)?.iter().map(|r| r.powi(d)).sum())
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let d = self.degree as i32;
        let r = self.residuals(x)?;
        Ok(spmv_t(&self.a, &r.map(|ri| d as f64 * ri.powi(d - 1))))
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let d = self.degree as i32;
        let r = self.residuals(x)?;
        let value = r.iter().map(|ri| ri.powi(d)).sum();
        Ok((value, spmv_t(&self.a, &r.map(|ri| d as f64 * ri.powi(d - 1)))))
    }

    fn hvp(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.hvp_columns(x, std::slice::from_ref(v))?.remove(0))
    }

    fn hvp_columns(&self, x: &DVector<f64>, vs: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        let d = self.degree as i32;
        let scale = (d * (d - 1)) as f64;
        let w = self.residuals(x)?.map(|ri| scale * ri.powi(d - 2));
        vs.iter()
            .map(|v| {
                check_dim(self.dim(), v.len())?;
                Ok(spmv_t(&self.a, &spmv(&self.a, v).component_mul(&w)))
            })
            .collect()
    }
}

/// `f(x) = −cᵀx − log det(C − Diag(x))` with domain `C − Diag(x) ≻ 0`.
#[derive(Debug, Clone)]
pub struct LogDetBarrier {
    c_mat: DMatrix<f64>,
    c_vec: DVector<f64>,
}

impl LogDetBarrier {
    pub fn new(c_mat: DMatrix<f64>, c_vec: DVector<f64>) -> Result<Self> {
        if !c_mat.is_square() {
            return Err(Error::InvalidSpec("C must be square".into()));
        }
        check_dim(c_mat.nrows(), c_vec.len())?;
        Ok(LogDetBarrier { c_mat, c_vec })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c_mat
    }

    pub fn linear_term(&self) -> &DVector<f64> {
        &self.c_vec
    }

    fn shifted(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim(self.c_mat.nrows(), x.len())?;
        let mut s = self.c_mat.clone();
        for i in 0..x.len() {
            s[(i, i)] -= x[i];
        }
        Ok(s)
    }

    fn factor(&self, x: &DVector<f64>) -> Result<Cholesky> {
        Cholesky::factor(&self.shifted(x)?).map_err(|_| Error::Infeasible)
    }

    /// `diag(S⁻¹)` from `L⁻¹` without forming the full inverse.
    fn inverse_diagonal(chol: &Cholesky) -> DVector<f64> {
        let linv = chol.l_inverse();
        DVector::from_iterator(linv.ncols(), linv.column_iter().map(|col| col.norm_squared()))
    }
}

impl Objective for LogDetBarrier {
    fn dim(&self) -> usize {
        self.c_vec.len()
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        let chol = self.factor(x)?;
        Ok(-self.c_vec.dot(x) - chol.log_det())
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let chol = self.factor(x)?;
        Ok(Self::inverse_diagonal(&chol) - &self.c_vec)
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let chol = self.factor(x)?;
        let value = -self.c_vec.dot(x) - chol.log_det();
        Ok((value, Self::inverse_diagonal(&chol) - &self.c_vec))
    }

    fn hvp(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.hvp_columns(x, std::slice::from_ref(v))?.remove(0))
    }

    /// `(Hv)ᵢ = Σⱼ (S⁻¹)ᵢⱼ² vⱼ`, sharing one explicit inverse across columns.
    fn hvp_columns(&self, x: &DVector<f64>, vs: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        let inv = self.factor(x)?.inverse();
        let squared = inv.component_mul(&inv);
        vs.iter()
            .map(|v| {
                check_dim(self.dim(), v.len())?;
                Ok(&squared * v)
            })
            .collect()
    }

    fn is_feasible(&self, x: &DVector<f64>) -> bool {
        self.factor(x).is_ok()
    }

    /// `v∘v` where `v` is the nonpositive-curvature direction recovered
    /// from the failed pivot of `C − Diag(x)`.
    fn separating_direction(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        match Cholesky::factor(&self.shifted(x)?) {
            Ok(_) => Err(Error::Contract("separating direction requested at a feasible point".into())),
            Err(failure) => Ok(failure.curvature_direction().map(|vi| vi * vi)),
        }
    }
}

/// `f(x) = ½xᵀAx − bᵀx` for symmetric positive definite `A`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    a: DMatrix<f64>,
    b: DVector<f64>,
    convexity: Option<Convexity>,
}

impl Quadratic {
    /// Computes `(l, L)` from the eigenvalues of `A`.
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidSpec("quadratic matrix must be square".into()));
        }
        check_dim(a.nrows(), b.len())?;
        let eig = a.clone().symmetric_eigenvalues();
        let lo = eig.min();
        let hi = eig.max();
        if !(lo > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: 0 });
        }
        Ok(Quadratic { a, b, convexity: Some(Convexity { strong_convexity: lo, lipschitz: hi }) })
    }

    pub fn with_convexity(a: DMatrix<f64>, b: DVector<f64>, convexity: Convexity) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidSpec("quadratic matrix must be square".into()));
        }
        check_dim(a.nrows(), b.len())?;
        Ok(Quadratic { a, b, convexity: Some(convexity) })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }

    /// `x* = A⁻¹b`.
    pub fn minimizer(&self) -> Result<DVector<f64>> {
        Ok(Cholesky::factor_or_err(&self.a)?.solve(&self.b))
    }

    pub fn optimal_value(&self) -> Result<f64> {
        Ok(-0.5 * self.b.dot(&self.minimizer()?))
    }

    /// `f(x) − f* = ½(x − x*)ᵀA(x − x*)`, free of the cancellation in `f(x) − f*`.
    pub fn residual(&self, x: &DVector<f64>, minimizer: &DVector<f64>) -> f64 {
        let e = x - minimizer;
        0.5 * e.dot(&(&self.a * &e))
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(0.5 * x.dot(&(&self.a * x)) - self.b.dot(x))
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(&self.a * x - &self.b)
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        check_dim(self.dim(), x.len())?;
        let ax = &self.a * x;
        Ok((0.5 * x.dot(&ax) - self.b.dot(x), ax - &self.b))
    }

    fn hvp(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), v.len())?;
        Ok(&self.a * v)
    }

    fn convexity(&self) -> Option<Convexity> {
        self.convexity
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra_sparse::CooMatrix;

    fn identity_csr(n: usize) -> CsrMatrix<f64> {
        CsrMatrix::identity(n)
    }

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    #[test]
    fn log_barrier_examples() {
        let f = LogBarrier::new(identity_csr(2), v(&[0.0, 0.0])).unwrap();
        assert_eq!(f.value(&v(&[1.0, 1.0])).unwrap(), 0.0);
        assert_eq!(f.gradient(&v(&[1.0, 1.0])).unwrap(), v(&[-1.0, -1.0]));
        assert!(f.value(&v(&[1.0, -1.0])).unwrap_err().is_infeasible());
        assert!(f.value(&v(&[1.0, 0.0])).unwrap_err().is_infeasible());
        assert!(f.is_feasible(&v(&[1.0, 1.0])));
        assert!(!f.is_feasible(&v(&[1.0, -1.0])));
    }

    #[test]
    fn log_barrier_cut_uses_most_violated_row() {
        let f = LogBarrier::new(identity_csr(2), v(&[0.0, 0.0])).unwrap();
        let h = f.separating_direction(&v(&[-2.0, 0.5])).unwrap();
        assert_eq!(h, v(&[-1.0, 0.0]));
        assert!(f.separating_direction(&v(&[1.0, 1.0])).is_err());
    }

    #[test]
    fn log_det_examples() {
        let f = LogDetBarrier::new(DMatrix::identity(2, 2) * 2.0, v(&[0.0, 0.0])).unwrap();
        assert!(f.value(&v(&[1.0, 1.0])).unwrap().abs() < 1e-15);
        assert!((f.gradient(&v(&[1.0, 1.0])).unwrap() - v(&[1.0, 1.0])).norm() < 1e-15);

        let g = LogDetBarrier::new(DMatrix::identity(2, 2), v(&[0.0, 0.0])).unwrap();
        assert!(!g.is_feasible(&v(&[2.0, 0.0])));
        assert!(g.value(&v(&[2.0, 0.0])).unwrap_err().is_infeasible());
        // 1x1 failure at the first pivot: v = e₁, cut = e₁
        assert_eq!(g.separating_direction(&v(&[2.0, 0.0])).unwrap(), v(&[1.0, 0.0]));
    }

    #[test]
    fn power_residual_examples() {
        let f = PowerResidual::new(identity_csr(2), v(&[0.0, 0.0]), 2).unwrap();
        assert_eq!(f.value(&v(&[3.0, 4.0])).unwrap(), 25.0);
        assert_eq!(f.gradient(&v(&[3.0, 4.0])).unwrap(), v(&[6.0, 8.0]));
        assert_eq!(f.hvp(&v(&[-7.0, 0.3]), &v(&[1.0, 0.0])).unwrap(), v(&[2.0, 0.0]));
        assert!(f.is_feasible(&v(&[1e30, -1e30])));
        assert!(PowerResidual::new(identity_csr(2), v(&[0.0, 0.0]), 3).is_err());
    }

    #[test]
    fn quadratic_hvp_is_matrix_product() {
        let q = Quadratic::new(DMatrix::from_diagonal(&v(&[1.0, 10.0])), v(&[0.0, 0.0])).unwrap();
        assert_eq!(q.hvp(&v(&[5.0, -2.0]), &v(&[1.0, 1.0])).unwrap(), v(&[1.0, 10.0]));
        let c = q.convexity().unwrap();
        assert_eq!((c.strong_convexity, c.lipschitz), (1.0, 10.0));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let f = LogBarrier::new(identity_csr(2), v(&[0.0, 0.0])).unwrap();
        assert!(matches!(
            f.value(&v(&[1.0, 1.0, 1.0])),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn sparse_products_match_dense() {
        let mut coo = CooMatrix::new(3, 2);
        coo.push(0, 0, 1.5);
        coo.push(1, 1, -2.0);
        coo.push(2, 0, 0.5);
        coo.push(2, 1, 4.0);
        let a = CsrMatrix::from(&coo);
        let dense = DMatrix::from(&a);
        let x = v(&[0.3, -1.1]);
        let w = v(&[1.0, 2.0, -0.5]);
        assert!((spmv(&a, &x) - &dense * &x).norm() < 1e-15);
        assert!((spmv_t(&a, &w) - dense.transpose() * &w).norm() < 1e-15);
    }
}
