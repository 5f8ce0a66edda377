//! Proper orthogonal decomposition of snapshot matrices.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};
use crate::fem::{Field, KinematicState};

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    /// N × S, one snapshot per column.
    pub data: DMatrix<f64>,
    pub field: Field,
    pub times: Vec<f64>,
}

impl SnapshotMatrix {
    pub fn new(data: DMatrix<f64>, field: Field, times: Vec<f64>) -> Result<Self> {
        if data.ncols() != times.len() {
            return Err(Error::Dimension(format!("{} columns but {} time stamps", data.ncols(), times.len())));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("snapshot times must be strictly increasing".into()));
        }
        Ok(SnapshotMatrix { data, field, times })
    }

    pub fn dofs(&self) -> usize {
        self.data.nrows()
    }

    pub fn count(&self) -> usize {
        self.data.ncols()
    }

    /// Columns at the given indices.
    pub fn select(&self, idx: &[usize]) -> Result<SnapshotMatrix> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.count()) {
            return Err(Error::InvalidArgument(format!("snapshot index {bad} out of range")));
        }
        let data = self.data.select_columns(idx.iter());
        SnapshotMatrix::new(data, self.field, idx.iter().map(|&i| self.times[i]).collect())
    }
}

/// Every `stride`-th state starting with the first, one matrix per field
/// (displacement, velocity, acceleration).
pub fn collect_snapshots(run: &[KinematicState], stride: usize) -> Result<[SnapshotMatrix; 3]> {
    if run.is_empty() {
        return Err(Error::InvalidArgument("empty run".into()));
    }
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be positive".into()));
    }
    let picked: Vec<&KinematicState> = run.iter().step_by(stride).collect();
    let n = run[0].len();
    if picked.iter().any(|s| s.len() != n) {
        return Err(Error::Dimension("states of different length".into()));
    }
    let times: Vec<f64> = picked.iter().map(|s| s.t).collect();
    let build = |f: Field| {
        let data = DMatrix::from_fn(n, picked.len(), |i, j| picked[j].field(f)[i]);
        SnapshotMatrix::new(data, f, times.clone())
    };
    Ok([build(Field::Displacement)?, build(Field::Velocity)?, build(Field::Acceleration)?])
}

#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis {
    /// N × M with orthonormal columns and zero rows at `dirichlet_ids`.
    pub modes: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub dirichlet_ids: Vec<usize>,
    /// Set when fewer modes than requested were available.
    pub truncated: bool,
}

impl PodBasis {
    pub fn size(&self) -> usize {
        self.modes.ncols()
    }

    pub fn dofs(&self) -> usize {
        self.modes.nrows()
    }

    /// Leading `m` modes of this basis.
    pub fn truncate(&self, m: usize) -> Result<PodBasis> {
        if m == 0 || m > self.size() {
            return Err(Error::InvalidArgument(format!("cannot take {m} of {} modes", self.size())));
        }
        Ok(PodBasis { modes: self.modes.columns(0, m).into_owned(), ..self.clone() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PodSize {
    Count(usize),
    /// Smallest basis whose energy fraction reaches the target.
    Energy(f64),
}

fn numerical_rank(sv: &[f64], rows: usize, cols: usize) -> usize {
    let smax = sv.first().copied().unwrap_or(0.0);
    let tol = smax * (rows.max(cols) as f64) * f64::EPSILON;
    sv.iter().take_while(|&&s| s > tol).count()
}

/// Thin SVD of the rows of `w` not in `zero_rows`, with singular values in
/// non-increasing order and each left singular vector signed so that its
/// largest-magnitude entry is positive. The returned modes have exact zeros
/// at `zero_rows`; every column is orthonormal, including those beyond the
/// numerical rank.
fn sorted_left_svd(w: &DMatrix<f64>, zero_rows: &[usize]) -> (DMatrix<f64>, Vec<f64>) {
    let n = w.nrows();
    let keep: Vec<usize> = (0..n).filter(|i| !zero_rows.contains(i)).collect();
    let wf = w.select_rows(keep.iter());
    let (nf, s) = wf.shape();
    let svd = if nf >= s {
        SVD::new(wf, true, false)
    } else {
        // the wide case is cheaper through the transpose
        let t = SVD::new(wf.transpose(), false, true);
        SVD { u: t.v_t.map(|vt| vt.transpose()), v_t: None, singular_values: t.singular_values }
    };
    let u = svd.u.expect("left singular vectors requested");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));
    let mut modes = DMatrix::zeros(n, order.len());
    for (c, &k) in order.iter().enumerate() {
        let mut col = u.column(k).into_owned();
        let imax = col.iamax();
        if col[imax] < 0.0 {
            col.neg_mut();
        }
        for (r, &i) in keep.iter().enumerate() {
            modes[(i, c)] = col[r];
        }
    }
    (modes, order.iter().map(|&k| sv[k]).collect())
}

/// Σ_{i≤m} σ_i² / Σ σ_i².
pub fn pod_energy(singular_values: &[f64], m: usize) -> Result<f64> {
    if m == 0 || m > singular_values.len() {
        return Err(Error::InvalidArgument(format!("energy of {m} modes out of {}", singular_values.len())));
    }
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return Err(Error::Undefined("POD energy of an all-zero snapshot set".into()));
    }
    Ok(singular_values[..m].iter().map(|s| s * s).sum::<f64>() / total)
}

/// Smallest M whose energy fraction reaches `target`.
pub fn modes_for_energy(singular_values: &[f64], target: f64) -> Result<usize> {
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return Err(Error::Undefined("POD energy of an all-zero snapshot set".into()));
    }
    let mut cum = 0.0;
    for (i, s) in singular_values.iter().enumerate() {
        cum += s * s;
        if cum >= target * total || i + 1 == singular_values.len() {
            return Ok(i + 1);
        }
    }
    unreachable!("non-empty singular values")
}

fn build_basis(w: DMatrix<f64>, dirichlet_ids: &[usize], size: PodSize) -> Result<PodBasis> {
    let n = w.nrows();
    if let Some(&bad) = dirichlet_ids.iter().find(|&&i| i >= n) {
        return Err(Error::Dimension(format!("Dirichlet id {bad} outside {n} rows")));
    }
    let (modes, sv) = sorted_left_svd(&w, dirichlet_ids);
    let available = modes.ncols();
    let rank = numerical_rank(&sv, n, w.ncols());
    if rank == 0 {
        return Err(Error::Undefined("snapshot matrix is zero after Dirichlet zeroing".into()));
    }
    let requested = match size {
        PodSize::Count(m) => {
            if m == 0 {
                return Err(Error::InvalidArgument("zero POD modes requested".into()));
            }
            m
        }
        PodSize::Energy(e) => {
            if !(e > 0.0 && e <= 1.0) {
                return Err(Error::InvalidArgument(format!("energy target {e} outside (0, 1]")));
            }
            modes_for_energy(&sv, e)?
        }
    };
    let m = requested.min(available);
    if m > rank {
        log::warn!("{m} POD modes exceed the numerical rank {rank} of the snapshots");
    }
    if m < requested {
        log::warn!("requested {requested} POD modes but only {available} exist");
    }
    Ok(PodBasis {
        modes: modes.columns(0, m).into_owned(),
        singular_values: sv,
        dirichlet_ids: dirichlet_ids.to_vec(),
        truncated: m < requested,
    })
}

/// POD basis of the snapshots after zeroing the Dirichlet rows.
pub fn compute_pod(snapshots: &SnapshotMatrix, dirichlet_ids: &[usize], size: PodSize) -> Result<PodBasis> {
    build_basis(snapshots.data.clone(), dirichlet_ids, size)
}

/// Orthonormal basis for the span of two bases, via the SVD of the
/// concatenated mode matrices.
pub fn combine_bases(phi_u: &PodBasis, phi_a: &PodBasis, size: usize) -> Result<PodBasis> {
    if phi_u.dofs() != phi_a.dofs() || phi_u.dirichlet_ids != phi_a.dirichlet_ids {
        return Err(Error::Dimension("bases differ in dofs or Dirichlet set".into()));
    }
    let mut w = DMatrix::zeros(phi_u.dofs(), phi_u.size() + phi_a.size());
    w.columns_mut(0, phi_u.size()).copy_from(&phi_u.modes);
    w.columns_mut(phi_u.size(), phi_a.size()).copy_from(&phi_a.modes);
    build_basis(w, &phi_u.dirichlet_ids, PodSize::Count(size))
}

fn zeroed(snapshots: &SnapshotMatrix, basis: &PodBasis) -> Result<DMatrix<f64>> {
    if snapshots.dofs() != basis.dofs() {
        return Err(Error::Dimension("snapshot and basis dofs differ".into()));
    }
    let mut w = snapshots.data.clone();
    for &i in &basis.dirichlet_ids {
        w.row_mut(i).fill(0.0);
    }
    if w.norm() == 0.0 {
        return Err(Error::Undefined("projection error of zero snapshots".into()));
    }
    Ok(w)
}

/// Relative residual ‖W − ΦΦᵀW‖ / ‖W‖ over all snapshot columns stacked,
/// measured on the free rows (Dirichlet rows are carried by the reference
/// state, not the basis).
pub fn projection_error(snapshots: &SnapshotMatrix, basis: &PodBasis) -> Result<f64> {
    let w = zeroed(snapshots, basis)?;
    let r = &w - &basis.modes * basis.modes.tr_mul(&w);
    Ok(r.norm() / w.norm())
}

/// Projection error for each leading sub-basis size in `sizes` (ascending or
/// not), computed by successive rank-one deflation to avoid cancellation.
pub fn projection_error_curve(snapshots: &SnapshotMatrix, basis: &PodBasis, sizes: &[usize]) -> Result<Vec<f64>> {
    let mut r = zeroed(snapshots, basis)?;
    let wn = r.norm();
    let max = sizes.iter().copied().max().unwrap_or(0);
    if max > basis.size() {
        return Err(Error::InvalidArgument(format!("curve up to {max} modes with a basis of {}", basis.size())));
    }
    let mut err = vec![1.0; max + 1];
    for k in 0..max {
        let phi: DVector<f64> = basis.modes.column(k).into_owned();
        let c = r.tr_mul(&phi);
        r.ger(-1.0, &phi, &c, 1.0);
        err[k + 1] = r.norm() / wn;
    }
    Ok(sizes.iter().map(|&m| err[m]).collect())
}
