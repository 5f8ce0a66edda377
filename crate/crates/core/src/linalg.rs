//! Small linear-algebra helpers: symmetric tridiagonal storage and the
//! factorizations used by the Newton solves.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix. `off[i]` couples rows `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn zeros(n: usize) -> Self {
        SymTridiag { diag: vec![0.0; n], off: vec![0.0; n.saturating_sub(1)] }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.abs_diff(j) {
            0 => self.diag[i],
            1 => self.off[i.min(j)],
            _ => 0.0,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
        }
        for (i, &o) in self.off.iter().enumerate() {
            m[(i, i + 1)] = o;
            m[(i + 1, i)] = o;
        }
        m
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.dim());
        self.mul_vec_into(x.as_slice(), y.as_mut_slice());
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * x[i + 1];
            }
            y[i] = s;
        }
    }

    /// `self + c * other`
    pub fn add_scaled(&self, c: f64, other: &SymTridiag) -> SymTridiag {
        SymTridiag {
            diag: self.diag.iter().zip(&other.diag).map(|(a, b)| a + c * b).collect(),
            off: self.off.iter().zip(&other.off).map(|(a, b)| a + c * b).collect(),
        }
    }

    /// Principal submatrix on the sorted index list `ids`. Couplings between
    /// non-adjacent kept indices are zero.
    pub fn restrict(&self, ids: &[usize]) -> SymTridiag {
        let diag = ids.iter().map(|&i| self.diag[i]).collect();
        let off = ids.windows(2).map(|w| if w[1] == w[0] + 1 { self.off[w[0]] } else { 0.0 }).collect();
        SymTridiag { diag, off }
    }

    /// Dense Galerkin projection `Φᵀ A Φ`.
    pub fn project(&self, phi: &DMatrix<f64>) -> DMatrix<f64> {
        let mut ap = DMatrix::zeros(phi.nrows(), phi.ncols());
        for j in 0..phi.ncols() {
            self.mul_vec_into(phi.column(j).as_slice(), ap.column_mut(j).as_mut_slice());
        }
        phi.tr_mul(&ap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearSolver {
    /// Tridiagonal LDLᵀ, falling back to a dense factorization on a vanishing pivot.
    #[default]
    Auto,
    Dense,
    Banded,
}

pub trait Factorization: Send {
    fn dim(&self) -> usize;
    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64>;
}

/// LDLᵀ of a symmetric tridiagonal matrix (no pivoting).
#[derive(Debug, Clone)]
pub struct TridiagLdl {
    d: Vec<f64>,
    l: Vec<f64>,
}

impl TridiagLdl {
    pub fn new(a: &SymTridiag) -> Result<Self> {
        let n = a.dim();
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n.saturating_sub(1)];
        let scale = a.diag.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for i in 0..n {
            let mut di = a.diag[i];
            if i > 0 {
                l[i - 1] = a.off[i - 1] / d[i - 1];
                di -= l[i - 1] * a.off[i - 1];
            }
            if !di.is_finite() || di.abs() <= f64::EPSILON * scale {
                return Err(Error::Singular(format!("zero pivot at row {i} of tridiagonal system")));
            }
            d[i] = di;
        }
        Ok(TridiagLdl { d, l })
    }
}

impl Factorization for TridiagLdl {
    fn dim(&self) -> usize {
        self.d.len()
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let n = self.d.len();
        let mut x = rhs.clone();
        for i in 1..n {
            x[i] -= self.l[i - 1] * x[i - 1];
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= self.l[i] * x[i + 1];
        }
        x
    }
}

/// Dense symmetric factorization: Cholesky, with an LU fallback for
/// symmetric indefinite matrices.
pub enum DenseFactor {
    Cholesky(nalgebra::linalg::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::linalg::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl DenseFactor {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Dimension("dense factorization of a non-square matrix".into()));
        }
        match a.clone().cholesky() {
            Some(c) => Ok(DenseFactor::Cholesky(c)),
            None => {
                let lu = a.lu();
                if lu.is_invertible() {
                    Ok(DenseFactor::Lu(lu))
                } else {
                    Err(Error::Singular("dense matrix is singular".into()))
                }
            }
        }
    }
}

impl Factorization for DenseFactor {
    fn dim(&self) -> usize {
        match self {
            DenseFactor::Cholesky(c) => c.l_dirty().nrows(),
            DenseFactor::Lu(l) => l.p().len(),
        }
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        match self {
            DenseFactor::Cholesky(c) => c.solve(rhs),
            DenseFactor::Lu(l) => l.solve(rhs).expect("invertibility checked at construction"),
        }
    }
}

/// Factorizes a symmetric tridiagonal system with the requested strategy.
pub fn factor_tridiag(a: &SymTridiag, solver: LinearSolver) -> Result<Box<dyn Factorization>> {
    match solver {
        LinearSolver::Dense => Ok(Box::new(DenseFactor::new(a.to_dense())?)),
        LinearSolver::Banded => Ok(Box::new(TridiagLdl::new(a)?)),
        LinearSolver::Auto => match TridiagLdl::new(a) {
            Ok(f) => Ok(Box::new(f)),
            Err(Error::Singular(_)) => Ok(Box::new(DenseFactor::new(a.to_dense())?)),
            Err(e) => Err(e),
        },
    }
}
