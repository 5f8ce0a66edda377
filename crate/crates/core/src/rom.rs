//! Galerkin reduced-order models with strongly enforced Dirichlet data.
//!
//! A reduced state (û, v̂, â) is lifted by ũ = ū + Φû where the reference
//! state ū is zero on free nodes and carries the Dirichlet values. Basis rows
//! at Dirichlet nodes are zero, so ũ matches the prescribed data exactly.

use nalgebra::{DMatrix, DVector};

use crate::ecsw::SampledMesh;
use crate::error::{Error, Result};
use crate::fem::{assemble_mass, element_stretch, internal_force, stress_and_tangent, ConstitutiveModel, Mesh1D};
use crate::linalg::{DenseFactor, Factorization, SymTridiag};
use crate::newmark::{DirichletData, GenState, SecondOrderSystem};
use crate::pod::PodBasis;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceState {
    pub u_bar: DVector<f64>,
    pub v_bar: DVector<f64>,
    pub a_bar: DVector<f64>,
}

/// Reference state carrying `data` at the mesh's Dirichlet nodes.
pub fn set_reference_state(mesh: &Mesh1D, data: &DirichletData) -> Result<ReferenceState> {
    let ids = mesh.dirichlet_ids();
    if data.len() != ids.len() {
        return Err(Error::Dimension(format!("{} Dirichlet values for {} nodes", data.len(), ids.len())));
    }
    let n = mesh.node_count();
    let mut r = ReferenceState { u_bar: DVector::zeros(n), v_bar: DVector::zeros(n), a_bar: DVector::zeros(n) };
    for (k, &i) in ids.iter().enumerate() {
        r.u_bar[i] = data.u[k];
        r.v_bar[i] = data.v[k];
        r.a_bar[i] = data.a[k];
    }
    Ok(r)
}

#[derive(Debug, Clone)]
pub struct RomOperators {
    pub mesh: Mesh1D,
    pub model: ConstitutiveModel,
    pub basis: PodBasis,
    /// Full-order mass matrix (possibly with interface added mass).
    pub mass: SymTridiag,
    /// Φᵀ M Φ.
    pub m_hat: DMatrix<f64>,
    /// Row e holds Φ(j, :) − Φ(i, :) for element e = (i, j).
    pub b: DMatrix<f64>,
    /// Bᵀ, kept so that BᵀWB runs as a blocked product.
    bt: DMatrix<f64>,
    /// Φᵀ, for the same reason.
    phi_t: DMatrix<f64>,
}

fn element_differences(mesh: &Mesh1D, phi: &DMatrix<f64>) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(mesh.element_count(), phi.ncols());
    for (e, &[i, j]) in mesh.elements().iter().enumerate() {
        for k in 0..phi.ncols() {
            b[(e, k)] = phi[(j, k)] - phi[(i, k)];
        }
    }
    b
}

pub fn build_rom_operators(mesh: &Mesh1D, model: &ConstitutiveModel, basis: &PodBasis) -> Result<RomOperators> {
    build_rom_operators_with_mass(mesh, model, basis, assemble_mass(mesh, model))
}

pub fn build_rom_operators_with_mass(
    mesh: &Mesh1D,
    model: &ConstitutiveModel,
    basis: &PodBasis,
    mass: SymTridiag,
) -> Result<RomOperators> {
    if basis.dofs() != mesh.node_count() || mass.dim() != mesh.node_count() {
        return Err(Error::Config("basis or mass does not match the mesh".into()));
    }
    if basis.dirichlet_ids != mesh.dirichlet_ids() {
        return Err(Error::Config(format!(
            "basis Dirichlet set {:?} differs from mesh Dirichlet set {:?}",
            basis.dirichlet_ids,
            mesh.dirichlet_ids()
        )));
    }
    if mesh.dirichlet_ids().iter().any(|&i| basis.modes.row(i).iter().any(|&x| x != 0.0)) {
        return Err(Error::Config("basis rows at Dirichlet nodes must be zero".into()));
    }
    let m_hat = mass.project(&basis.modes);
    let m_hat = (&m_hat + m_hat.transpose()) * 0.5;
    let b = element_differences(mesh, &basis.modes);
    Ok(RomOperators {
        mesh: mesh.clone(),
        model: *model,
        bt: b.transpose(),
        phi_t: basis.modes.transpose(),
        b,
        basis: basis.clone(),
        mass,
        m_hat,
    })
}

impl RomOperators {
    pub fn size(&self) -> usize {
        self.basis.size()
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.basis.modes
    }

    /// Φᵀ x.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.phi_t * x
    }

    /// Φᵀ(f_ext − M ā): reduced external force including the Dirichlet
    /// acceleration coupling.
    pub fn reduced_external_force(&self, refstate: &ReferenceState, f_ext: &DVector<f64>) -> DVector<f64> {
        let mut w = self.mass.mul_vec(&refstate.a_bar);
        w -= f_ext;
        let mut f = DVector::zeros(self.size());
        for (i, &wi) in w.iter().enumerate() {
            if wi != 0.0 {
                f.axpy(-wi, &self.phi().row(i).transpose(), 1.0);
            }
        }
        f
    }

    /// ū + Φ x̂ for any of the three fields.
    pub fn reconstruct(&self, bar: &DVector<f64>, x_hat: &DVector<f64>) -> DVector<f64> {
        let mut x = bar.clone();
        x.gemv(1.0, self.phi(), x_hat, 1.0);
        x
    }

    /// Value of ū + Φ x̂ at one node.
    pub fn reconstruct_node(&self, bar: &DVector<f64>, x_hat: &DVector<f64>, node: usize) -> f64 {
        bar[node] + self.phi().row(node).dot(&x_hat.transpose())
    }

    /// Φᵀ K(ũ) Φ via the element difference rows.
    pub fn reduced_tangent(&self, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        let us = u.as_slice();
        let mut wb = self.b.clone();
        for e in 0..self.mesh.element_count() {
            let (_, dp) = stress_and_tangent(&self.model, element_stretch(&self.mesh, us, e))
                .map_err(|x| x.with_element(e))?;
            let c = dp / self.mesh.element_length(e);
            wb.row_mut(e).scale_mut(c);
        }
        Ok(&self.bt * wb)
    }
}

/// Reduced residual M̂â + Φᵀf_int(ũ) − Φᵀ(f_ext − Mā) and Jacobian
/// `mass_coeff·M̂ + ΦᵀKΦ`, evaluated through the full-order force.
pub fn rom_residual(
    ops: &RomOperators,
    refstate: &ReferenceState,
    u_hat: &DVector<f64>,
    v_hat: &DVector<f64>,
    a_hat: &DVector<f64>,
    f_ext: &DVector<f64>,
    mass_coeff: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let f_hat = ops.reduced_external_force(refstate, f_ext);
    let sys = RomSystem::new(ops, refstate, f_hat, None);
    let r = sys.residual(u_hat, v_hat, a_hat)?;
    let u = ops.reconstruct(&refstate.u_bar, u_hat);
    let j = ops.reduced_tangent(&u)? + &ops.m_hat * mass_coeff;
    Ok((r, j))
}

/// Reduced second-order system for the Newmark integrator. With a sampled
/// mesh the internal force is the ECSW weighted sum, otherwise it is the
/// projected full-order force.
pub struct RomSystem<'a> {
    ops: &'a RomOperators,
    refstate: &'a ReferenceState,
    f_hat_ext: DVector<f64>,
    sample: Option<&'a SampledMesh>,
}

impl<'a> RomSystem<'a> {
    pub fn new(
        ops: &'a RomOperators,
        refstate: &'a ReferenceState,
        f_hat_ext: DVector<f64>,
        sample: Option<&'a SampledMesh>,
    ) -> Self {
        RomSystem { ops, refstate, f_hat_ext, sample }
    }
}

impl SecondOrderSystem for RomSystem<'_> {
    fn dim(&self) -> usize {
        self.ops.size()
    }

    fn residual(&self, q: &DVector<f64>, qd: &DVector<f64>, qdd: &DVector<f64>) -> Result<DVector<f64>> {
        let ops = self.ops;
        let mut r = match self.sample {
            Some(s) => s.reduced_force(ops, self.refstate, q)?,
            None => {
                let u = ops.reconstruct(&self.refstate.u_bar, q);
                let v = ops.reconstruct(&self.refstate.v_bar, qd);
                let f = internal_force(&ops.mesh, &ops.model, &u, &v)?;
                ops.project(&f)
            }
        };
        r.gemv(1.0, &ops.m_hat, qdd, 1.0);
        r -= &self.f_hat_ext;
        Ok(r)
    }

    fn factor_jacobian(&self, q: &DVector<f64>, mass_coeff: f64) -> Result<Box<dyn Factorization>> {
        let ops = self.ops;
        let k = match self.sample {
            Some(s) => s.reduced_tangent(ops, self.refstate, q)?,
            None => ops.reduced_tangent(&ops.reconstruct(&self.refstate.u_bar, q))?,
        };
        Ok(Box::new(DenseFactor::new(k + &ops.m_hat * mass_coeff)?))
    }

    fn factor_mass(&self) -> Result<Box<dyn Factorization>> {
        Ok(Box::new(DenseFactor::new(self.ops.m_hat.clone())?))
    }
}

/// Reduced coordinates of a full-order state: Φᵀ(x − x̄) for each field.
pub fn project_state(ops: &RomOperators, refstate: &ReferenceState, u: &DVector<f64>, v: &DVector<f64>, a: &DVector<f64>) -> GenState {
    let p = |x: &DVector<f64>, bar: &DVector<f64>| ops.phi().tr_mul(&(x - bar));
    GenState { q: p(u, &refstate.u_bar), qd: p(v, &refstate.v_bar), qdd: p(a, &refstate.a_bar) }
}
