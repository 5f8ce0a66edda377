//! Lawson–Hanson active-set solver for min ‖Cx − d‖₂ subject to x ≥ 0.
//!
//! Passive-set least-squares problems are solved through the Gram matrix
//! CᵀC (formed once) with one step of iterative refinement against the
//! original residual, falling back to an SVD solve when the Cholesky factor
//! breaks down.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NnlsOptions {
    /// Stop when an outer iteration moves the solution by less than this in
    /// max-norm. `None` disables the rule.
    pub step_tolerance: Option<f64>,
    /// Dual feasibility tolerance; `None` selects 10·ε·‖C‖₁·max(m, n).
    pub kkt_tolerance: Option<f64>,
    /// Outer plus inner iterations allowed; `None` selects 3n.
    pub max_iters: Option<usize>,
}

impl Default for NnlsOptions {
    fn default() -> Self {
        NnlsOptions { step_tolerance: None, kkt_tolerance: None, max_iters: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NnlsTermination {
    Kkt,
    StepTolerance,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsSolution {
    pub x: DVector<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub termination: NnlsTermination,
    /// Max-norm change of the last outer iteration.
    pub last_step: f64,
}

struct Problem<'a> {
    c: &'a DMatrix<f64>,
    d: &'a DVector<f64>,
    gram: DMatrix<f64>,
    ctd: DVector<f64>,
}

impl Problem<'_> {
    /// Unconstrained least squares restricted to the columns in `p`.
    fn solve_passive(&self, p: &[usize]) -> DVector<f64> {
        let n = self.c.ncols();
        let mut z = DVector::zeros(n);
        if p.is_empty() {
            return z;
        }
        let g = self.gram.select_rows(p.iter()).select_columns(p.iter());
        let rhs = DVector::from_iterator(p.len(), p.iter().map(|&j| self.ctd[j]));
        let sol = match g.cholesky() {
            Some(ch) => {
                let mut zp = ch.solve(&rhs);
                let mut full = DVector::zeros(n);
                for (k, &j) in p.iter().enumerate() {
                    full[j] = zp[k];
                }
                let r = self.d - self.c * &full;
                let corr = self.c.tr_mul(&r);
                let corr = DVector::from_iterator(p.len(), p.iter().map(|&j| corr[j]));
                zp += ch.solve(&corr);
                zp
            }
            None => {
                let cp = self.c.select_columns(p.iter());
                let svd = cp.svd(true, true);
                let eps = f64::EPSILON * (self.c.nrows().max(p.len()) as f64) * svd.singular_values.max();
                svd.solve(self.d, eps).expect("both singular vector sets computed")
            }
        };
        for (k, &j) in p.iter().enumerate() {
            z[j] = sol[k];
        }
        z
    }
}

pub fn nnls(c: &DMatrix<f64>, d: &DVector<f64>, opts: &NnlsOptions) -> Result<NnlsSolution> {
    let (m, n) = c.shape();
    if d.len() != m {
        return Err(Error::Dimension(format!("C is {m}x{n} but d has length {}", d.len())));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("NNLS with no columns".into()));
    }
    if let Some(s) = opts.step_tolerance {
        if !(s > 0.0) {
            return Err(Error::InvalidArgument("step tolerance must be positive".into()));
        }
    }
    let norm1 = c.column_iter().map(|col| col.lp_norm(1)).fold(0.0, f64::max);
    let tol = opts.kkt_tolerance.unwrap_or(10.0 * f64::EPSILON * norm1 * m.max(n) as f64);
    let max_iters = opts.max_iters.unwrap_or(3 * n);
    let prob = Problem { c, d, gram: c.tr_mul(c), ctd: c.tr_mul(d) };

    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let mut w = prob.ctd.clone();
    let mut iterations = 0;
    let mut last_step = f64::INFINITY;
    // columns whose entry into the passive set failed to produce a positive
    // coefficient; cleared whenever x changes
    let mut rejected = vec![false; n];

    let termination = loop {
        let cand = (0..n)
            .filter(|&j| !passive[j] && !rejected[j] && w[j] > tol)
            .max_by(|&a, &b| w[a].total_cmp(&w[b]).then(b.cmp(&a)));
        let Some(j) = cand else { break NnlsTermination::Kkt };
        if iterations >= max_iters {
            break NnlsTermination::MaxIterations;
        }
        iterations += 1;
        passive[j] = true;
        let mut p: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
        let mut z = prob.solve_passive(&p);
        if z[j] <= 0.0 {
            passive[j] = false;
            rejected[j] = true;
            continue;
        }
        let mut exhausted = false;
        while p.iter().any(|&k| z[k] <= 0.0) {
            if iterations >= max_iters {
                exhausted = true;
                break;
            }
            iterations += 1;
            let (blocking, alpha) = p
                .iter()
                .filter(|&&k| z[k] <= 0.0)
                .map(|&k| (k, x[k] / (x[k] - z[k])))
                .fold((usize::MAX, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
            x += alpha * (&z - &x);
            let tiny = f64::EPSILON * x.amax();
            for &k in &p {
                if k == blocking || x[k] <= tiny {
                    passive[k] = false;
                    x[k] = 0.0;
                }
            }
            p = (0..n).filter(|&k| passive[k]).collect();
            z = prob.solve_passive(&p);
        }
        if exhausted {
            break NnlsTermination::MaxIterations;
        }
        last_step = (&z - &x).amax();
        x = z;
        rejected.iter_mut().for_each(|r| *r = false);
        w = &prob.ctd - &prob.gram * &x;
        if opts.step_tolerance.is_some_and(|s| last_step < s) {
            break NnlsTermination::StepTolerance;
        }
    };
    let residual_norm = (d - c * &x).norm();
    Ok(NnlsSolution { x, residual_norm, iterations, termination, last_step })
}
