//! Energy-conserving sampling and weighting (ECSW) hyper-reduction.
//!
//! Training gathers, for every snapshot, the reduced force contribution of
//! each element; a non-negative least-squares fit then selects a sparse set
//! of weighted elements that reproduces the summed reduced forces.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fem::{element_stretch, stress_and_tangent, ConstitutiveModel, Mesh1D};
use crate::nnls::{nnls, NnlsOptions, NnlsTermination};
use crate::pod::{PodBasis, SnapshotMatrix};
use crate::rom::{ReferenceState, RomOperators};

#[derive(Debug, Clone, PartialEq)]
pub struct EcswTrainingSystem {
    /// (M·N_h) × N_el.
    pub c: DMatrix<f64>,
    pub d: DVector<f64>,
    pub snapshot_count: usize,
    pub mode_count: usize,
}

impl EcswTrainingSystem {
    /// ‖C·1 − d‖ / ‖d‖.
    pub fn unit_weight_residual(&self) -> f64 {
        let ones = DVector::from_element(self.c.ncols(), 1.0);
        (&self.c * ones - &self.d).norm() / self.d.norm()
    }
}

/// Builds C and d from displacement snapshots. Each snapshot is projected
/// onto the basis around its reference state before the element forces are
/// evaluated. `refstates` holds one reference state per snapshot column, or
/// a single state used for all of them. The constitutive models here are
/// rate independent, so velocity snapshots do not enter.
pub fn build_training_system(
    mesh: &Mesh1D,
    model: &ConstitutiveModel,
    basis: &PodBasis,
    refstates: &[ReferenceState],
    displacements: &SnapshotMatrix,
) -> Result<EcswTrainingSystem> {
    let n_h = displacements.count();
    if n_h == 0 {
        return Err(Error::InvalidArgument("no training snapshots".into()));
    }
    if displacements.dofs() != mesh.node_count() || basis.dofs() != mesh.node_count() {
        return Err(Error::Dimension("snapshots, basis and mesh disagree in size".into()));
    }
    if refstates.len() != 1 && refstates.len() != n_h {
        return Err(Error::Dimension(format!("{} reference states for {n_h} snapshots", refstates.len())));
    }
    let m = basis.size();
    let n_el = mesh.element_count();
    let phi = &basis.modes;
    let mut b = DMatrix::zeros(n_el, m);
    for (e, &[i, j]) in mesh.elements().iter().enumerate() {
        for k in 0..m {
            b[(e, k)] = phi[(j, k)] - phi[(i, k)];
        }
    }
    let mut c = DMatrix::zeros(m * n_h, n_el);
    let mut d = DVector::zeros(m * n_h);
    for s in 0..n_h {
        let rs = &refstates[if refstates.len() == 1 { 0 } else { s }];
        let w = displacements.data.column(s) - &rs.u_bar;
        let u = phi * phi.tr_mul(&w) + &rs.u_bar;
        for e in 0..n_el {
            let (p, _) = stress_and_tangent(model, element_stretch(mesh, u.as_slice(), e)).map_err(|x| x.with_element(e))?;
            for k in 0..m {
                let v = p * b[(e, k)];
                c[(s * m + k, e)] = v;
                d[s * m + k] += v;
            }
        }
    }
    Ok(EcswTrainingSystem { c, d, snapshot_count: n_h, mode_count: m })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EcswSampleSet {
    /// One weight per element of the mesh, zero outside the sample.
    pub weights: Vec<f64>,
    /// Elements with positive weight plus any forced boundary elements.
    pub sampled_ids: Vec<usize>,
    pub termination: NnlsTermination,
    /// ‖Cξ − d‖ / ‖d‖ on the training system.
    pub training_residual: f64,
}

impl EcswSampleSet {
    pub fn from_weights(weights: Vec<f64>, forced: &[usize]) -> Result<Self> {
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidArgument("ECSW weights must be non-negative".into()));
        }
        let mut ids: Vec<usize> = (0..weights.len()).filter(|&e| weights[e] > 0.0).collect();
        for &e in forced {
            if e >= weights.len() {
                return Err(Error::InvalidArgument(format!("forced element {e} out of range")));
            }
            ids.push(e);
        }
        ids.sort_unstable();
        ids.dedup();
        Ok(EcswSampleSet {
            weights,
            sampled_ids: ids,
            termination: NnlsTermination::Kkt,
            training_residual: f64::NAN,
        })
    }

    /// N_e: number of elements carrying a positive weight.
    pub fn count(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }

    pub fn element_count(&self) -> usize {
        self.weights.len()
    }

    /// All elements with unit weight (the unsampled model).
    pub fn full(n_el: usize) -> Self {
        Self::from_weights(vec![1.0; n_el], &[]).expect("unit weights are valid")
    }
}

/// Elements adjacent to any of `nodes`.
pub fn boundary_elements(mesh: &Mesh1D, nodes: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = mesh
        .elements()
        .iter()
        .enumerate()
        .filter(|(_, el)| el.iter().any(|n| nodes.contains(n)))
        .map(|(e, _)| e)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Sparse non-negative weights for the training system, terminated either
/// by the optimality conditions or by the max-norm step rule.
pub fn nnls_solve(
    system: &EcswTrainingSystem,
    step_tolerance: f64,
    max_iters: Option<usize>,
    forced: &[usize],
) -> Result<EcswSampleSet> {
    let opts = NnlsOptions { step_tolerance: Some(step_tolerance), kkt_tolerance: None, max_iters };
    let sol = nnls(&system.c, &system.d, &opts)?;
    if sol.termination == NnlsTermination::MaxIterations {
        log::warn!("NNLS stopped at the iteration limit ({} iterations)", sol.iterations);
    }
    let mut set = EcswSampleSet::from_weights(sol.x.iter().map(|&x| x.max(0.0)).collect(), forced)?;
    set.termination = sol.termination;
    set.training_residual = sol.residual_norm / system.d.norm();
    Ok(set)
}

/// Precomputed data for weighted assembly over the sampled elements.
#[derive(Debug, Clone)]
pub struct SampledMesh {
    elements: Vec<usize>,
    weights: Vec<f64>,
    /// Rows of the element difference matrix for `elements`.
    b: DMatrix<f64>,
    bt: DMatrix<f64>,
}

impl SampledMesh {
    pub fn new(ops: &RomOperators, sample: &EcswSampleSet) -> Result<Self> {
        if sample.element_count() != ops.mesh.element_count() {
            return Err(Error::Dimension("sample set built for a different mesh".into()));
        }
        let elements: Vec<usize> = sample.sampled_ids.iter().copied().filter(|&e| sample.weights[e] > 0.0).collect();
        let weights = elements.iter().map(|&e| sample.weights[e]).collect();
        let b = ops.b.select_rows(elements.iter());
        Ok(SampledMesh { elements, weights, bt: b.transpose(), b })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Stress and stiffness factor dP/dλ / h on each sampled element.
    fn element_response(&self, ops: &RomOperators, refstate: &ReferenceState, q: &DVector<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
        let du = &self.b * q;
        let mut p = Vec::with_capacity(self.len());
        let mut k = Vec::with_capacity(self.len());
        for (s, &e) in self.elements.iter().enumerate() {
            let [i, j] = ops.mesh.elements()[e];
            let h = ops.mesh.element_length(e);
            let stretch = 1.0 + (refstate.u_bar[j] - refstate.u_bar[i] + du[s]) / h;
            let (pe, dpe) = stress_and_tangent(&ops.model, stretch).map_err(|x| x.with_element(e))?;
            p.push(pe);
            k.push(dpe / h);
        }
        Ok((p, k))
    }

    /// Σ ξ_e P_e B_eᵀ.
    pub fn reduced_force(&self, ops: &RomOperators, refstate: &ReferenceState, q: &DVector<f64>) -> Result<DVector<f64>> {
        let (p, _) = self.element_response(ops, refstate, q)?;
        let wp = DVector::from_iterator(self.len(), p.iter().zip(&self.weights).map(|(p, w)| p * w));
        Ok(&self.bt * wp)
    }

    /// Σ ξ_e (dP_e/h_e) B_eᵀ B_e.
    pub fn reduced_tangent(&self, ops: &RomOperators, refstate: &ReferenceState, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        let (_, k) = self.element_response(ops, refstate, q)?;
        let mut wb = self.b.clone();
        for (s, (kk, w)) in k.iter().zip(&self.weights).enumerate() {
            wb.row_mut(s).scale_mut(kk * w);
        }
        Ok(&self.bt * wb)
    }
}

/// Weighted reduced internal force and tangent over the sampled elements.
pub fn hrom_assemble(
    ops: &RomOperators,
    sample: &EcswSampleSet,
    refstate: &ReferenceState,
    u_hat: &DVector<f64>,
    _v_hat: &DVector<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let s = SampledMesh::new(ops, sample)?;
    Ok((s.reduced_force(ops, refstate, u_hat)?, s.reduced_tangent(ops, refstate, u_hat)?))
}
