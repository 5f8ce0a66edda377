//! Implicit Newmark-β integration with a displacement-form Newton solve.
//!
//! The integrator works on generalized coordinates `q` (free nodal
//! displacements for a full model, modal amplitudes for a reduced one). A
//! system supplies the residual `M q'' + f(q) - f_ext` and a factorized
//! effective Jacobian `c_m M + K(q)`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{assemble_mass, internal_force, tangent_stiffness, ConstitutiveModel, KinematicState, Mesh1D};
use crate::linalg::{factor_tridiag, Factorization, LinearSolver, SymTridiag};

/// When the effective Jacobian is refactorized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianUpdate {
    /// Full Newton: new tangent at every iterate.
    #[default]
    EveryIteration,
    /// Keep the factorization held by the caller's `JacobianCache` until the
    /// cache is cleared, refreshing only when the contraction stalls.
    Reuse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewmarkParams {
    pub beta: f64,
    pub gamma: f64,
    pub dt: f64,
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    #[serde(default)]
    pub jacobian: JacobianUpdate,
}

impl NewmarkParams {
    pub fn new(beta: f64, gamma: f64, dt: f64) -> Result<Self> {
        let p = NewmarkParams { beta, gamma, dt, ..Default::default() };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 0.5) {
            return Err(Error::Config(format!("beta={} outside (0, 0.5]", self.beta)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma={} outside [0, 1]", self.gamma)));
        }
        if !(self.dt > 0.0) || !(self.newton_tol > 0.0) || self.newton_max_iters == 0 {
            return Err(Error::Config("dt, newton_tol and newton_max_iters must be positive".into()));
        }
        Ok(())
    }

    /// Coefficient of the mass matrix in the effective Jacobian.
    pub fn mass_coefficient(&self) -> f64 {
        1.0 / (self.beta * self.dt * self.dt)
    }
}

impl Default for NewmarkParams {
    fn default() -> Self {
        NewmarkParams {
            beta: 0.49,
            gamma: 0.9,
            dt: 1e-7,
            newton_tol: 1e-10,
            newton_max_iters: 25,
            jacobian: JacobianUpdate::EveryIteration,
        }
    }
}

/// Δt = Δx / c with c = sqrt(E/ρ).
pub fn cfl_timestep(dx: f64, model: &ConstitutiveModel) -> f64 {
    dx / model.wave_speed()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenState {
    pub q: DVector<f64>,
    pub qd: DVector<f64>,
    pub qdd: DVector<f64>,
}

impl GenState {
    pub fn zeros(n: usize) -> Self {
        GenState { q: DVector::zeros(n), qd: DVector::zeros(n), qdd: DVector::zeros(n) }
    }
}

pub trait SecondOrderSystem {
    fn dim(&self) -> usize;
    /// `M qdd + f(q, qd) - f_ext`.
    fn residual(&self, q: &DVector<f64>, qd: &DVector<f64>, qdd: &DVector<f64>) -> Result<DVector<f64>>;
    /// Factorization of `mass_coeff * M + K(q)`.
    fn factor_jacobian(&self, q: &DVector<f64>, mass_coeff: f64) -> Result<Box<dyn Factorization>>;
    fn factor_mass(&self) -> Result<Box<dyn Factorization>>;
}

/// Holds a Jacobian factorization between Newton solves under
/// `JacobianUpdate::Reuse`. The owner clears it when the factorization should
/// no longer be trusted (typically at every new time step).
#[derive(Default)]
pub struct JacobianCache {
    fact: Option<Box<dyn Factorization>>,
}

impl JacobianCache {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn clear(&mut self) {
        self.fact = None;
    }
    pub fn is_empty(&self) -> bool {
        self.fact.is_none()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    pub factorizations: usize,
    pub initial_residual: f64,
    pub final_residual: f64,
}

/// Solves `M qdd + f = f_ext` for the initial acceleration.
pub fn initial_acceleration<S: SecondOrderSystem + ?Sized>(
    sys: &S,
    q: &DVector<f64>,
    qd: &DVector<f64>,
) -> Result<DVector<f64>> {
    let r = sys.residual(q, qd, &DVector::zeros(sys.dim()))?;
    Ok(-sys.factor_mass()?.solve(&r))
}

/// One Newmark step from `state`. The returned state satisfies both Newmark
/// update formulas exactly (up to rounding) and the equation of motion to the
/// Newton tolerance.
pub fn newmark_step<S: SecondOrderSystem + ?Sized>(
    sys: &S,
    state: &GenState,
    params: &NewmarkParams,
    cache: &mut JacobianCache,
) -> Result<(GenState, NewtonReport)> {
    let n = sys.dim();
    if state.q.len() != n || state.qd.len() != n || state.qdd.len() != n {
        return Err(Error::Dimension(format!("state length {} for system of dimension {n}", state.q.len())));
    }
    let NewmarkParams { beta, gamma, dt, .. } = *params;
    let q_pred = &state.q + dt * &state.qd + (0.5 * dt * dt * (1.0 - 2.0 * beta)) * &state.qdd;
    let qd_pred = &state.qd + (dt * (1.0 - gamma)) * &state.qdd;
    let c_m = params.mass_coefficient();

    if params.jacobian == JacobianUpdate::EveryIteration {
        cache.clear();
    }
    let mut report = NewtonReport::default();
    let mut q = q_pred.clone();
    let mut prev_norm = f64::INFINITY;
    let mut fresh = false;
    let mut stagnated = false;
    for it in 0..=params.newton_max_iters {
        let qdd = (&q - &q_pred) * c_m;
        let qd = &qd_pred + (gamma * dt) * &qdd;
        let r = sys.residual(&q, &qd, &qdd)?;
        let rn = r.norm();
        if !rn.is_finite() {
            return Err(Error::NewtonDivergence { iterations: it, residual: rn });
        }
        if it == 0 {
            report.initial_residual = rn;
        }
        report.iterations = it;
        report.final_residual = rn;
        // a full Newton step that fails to halve an already tiny residual
        // means the residual has hit its rounding floor
        let floor = fresh && rn > 0.5 * prev_norm && rn <= f64::EPSILON.sqrt() * report.initial_residual;
        if rn <= params.newton_tol * report.initial_residual || stagnated || floor {
            return Ok((GenState { q, qd, qdd }, report));
        }
        if it == params.newton_max_iters {
            break;
        }
        if params.jacobian == JacobianUpdate::EveryIteration || (!fresh && rn > 0.25 * prev_norm) {
            cache.clear();
        }
        fresh = cache.fact.is_none();
        if fresh {
            cache.fact = Some(sys.factor_jacobian(&q, c_m)?);
            report.factorizations += 1;
        }
        let dq = cache.fact.as_ref().unwrap().solve(&r);
        q -= &dq;
        stagnated = dq.norm() <= 4.0 * f64::EPSILON * q.norm();
        prev_norm = rn;
    }
    Err(Error::NewtonDivergence { iterations: params.newton_max_iters, residual: report.final_residual })
}

/// Prescribed values at a mesh's Dirichlet nodes, aligned with
/// `Mesh1D::dirichlet_ids`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DirichletData {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
}

impl DirichletData {
    pub fn homogeneous(n: usize) -> Self {
        DirichletData { u: vec![0.0; n], v: vec![0.0; n], a: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn set(&mut self, k: usize, values: [f64; 3]) {
        self.u[k] = values[0];
        self.v[k] = values[1];
        self.a[k] = values[2];
    }
}

/// Full-order model of one (sub)domain.
#[derive(Debug, Clone)]
pub struct FomModel {
    pub mesh: Mesh1D,
    pub model: ConstitutiveModel,
    pub mass: SymTridiag,
    pub solver: LinearSolver,
}

impl FomModel {
    pub fn new(mesh: Mesh1D, model: ConstitutiveModel, solver: LinearSolver) -> Self {
        let mass = assemble_mass(&mesh, &model);
        FomModel { mesh, model, mass, solver }
    }

    fn check(&self, dirichlet: &DirichletData, f_ext: &DVector<f64>) -> Result<()> {
        if dirichlet.len() != self.mesh.dirichlet_ids().len() || f_ext.len() != self.mesh.node_count() {
            return Err(Error::Dimension("Dirichlet data or external force does not match the mesh".into()));
        }
        Ok(())
    }

    pub fn system<'a>(&'a self, dirichlet: &'a DirichletData, f_ext: &'a DVector<f64>) -> FomSystem<'a> {
        FomSystem { fom: self, dirichlet, f_ext }
    }

    /// Initial state from nodal `u0`, `v0`: Dirichlet entries replaced by the
    /// prescribed data and `a0` solved from the equation of motion.
    pub fn initial_state(
        &self,
        u0: &DVector<f64>,
        v0: &DVector<f64>,
        dirichlet: &DirichletData,
        f_ext: &DVector<f64>,
        t0: f64,
    ) -> Result<KinematicState> {
        self.check(dirichlet, f_ext)?;
        let sys = self.system(dirichlet, f_ext);
        let g = GenState { q: gather(u0, self.mesh.free_ids()), qd: gather(v0, self.mesh.free_ids()), qdd: DVector::zeros(0) };
        let qdd = initial_acceleration(&sys, &g.q, &g.qd)?;
        Ok(sys.expand(&GenState { qdd, ..g }, t0))
    }

    pub fn step(
        &self,
        state: &KinematicState,
        dirichlet: &DirichletData,
        f_ext: &DVector<f64>,
        params: &NewmarkParams,
        cache: &mut JacobianCache,
    ) -> Result<(KinematicState, NewtonReport)> {
        self.check(dirichlet, f_ext)?;
        if state.len() != self.mesh.node_count() {
            return Err(Error::Dimension("state does not match the mesh".into()));
        }
        let free = self.mesh.free_ids();
        let g = GenState { q: gather(&state.u, free), qd: gather(&state.v, free), qdd: gather(&state.a, free) };
        let sys = self.system(dirichlet, f_ext);
        let (g1, rep) = newmark_step(&sys, &g, params, cache)?;
        Ok((sys.expand(&g1, state.t + params.dt), rep))
    }
}

pub fn gather(x: &DVector<f64>, ids: &[usize]) -> DVector<f64> {
    DVector::from_iterator(ids.len(), ids.iter().map(|&i| x[i]))
}

pub struct FomSystem<'a> {
    fom: &'a FomModel,
    dirichlet: &'a DirichletData,
    f_ext: &'a DVector<f64>,
}

impl FomSystem<'_> {
    fn scatter(&self, q: &DVector<f64>, prescribed: &[f64]) -> DVector<f64> {
        let mesh = &self.fom.mesh;
        let mut x = DVector::zeros(mesh.node_count());
        for (k, &i) in mesh.free_ids().iter().enumerate() {
            x[i] = q[k];
        }
        for (k, &i) in mesh.dirichlet_ids().iter().enumerate() {
            x[i] = prescribed[k];
        }
        x
    }

    pub fn expand(&self, g: &GenState, t: f64) -> KinematicState {
        KinematicState {
            u: self.scatter(&g.q, &self.dirichlet.u),
            v: self.scatter(&g.qd, &self.dirichlet.v),
            a: self.scatter(&g.qdd, &self.dirichlet.a),
            t,
        }
    }
}

impl SecondOrderSystem for FomSystem<'_> {
    fn dim(&self) -> usize {
        self.fom.mesh.free_ids().len()
    }

    fn residual(&self, q: &DVector<f64>, qd: &DVector<f64>, qdd: &DVector<f64>) -> Result<DVector<f64>> {
        let fom = self.fom;
        let u = self.scatter(q, &self.dirichlet.u);
        let v = self.scatter(qd, &self.dirichlet.v);
        let a = self.scatter(qdd, &self.dirichlet.a);
        let mut r = internal_force(&fom.mesh, &fom.model, &u, &v)?;
        r += fom.mass.mul_vec(&a);
        r -= self.f_ext;
        Ok(gather(&r, fom.mesh.free_ids()))
    }

    fn factor_jacobian(&self, q: &DVector<f64>, mass_coeff: f64) -> Result<Box<dyn Factorization>> {
        let fom = self.fom;
        let u = self.scatter(q, &self.dirichlet.u);
        let k = tangent_stiffness(&fom.mesh, &fom.model, &u)?;
        let j = k.add_scaled(mass_coeff, &fom.mass).restrict(fom.mesh.free_ids());
        factor_tridiag(&j, fom.solver)
    }

    fn factor_mass(&self) -> Result<Box<dyn Factorization>> {
        factor_tridiag(&self.fom.mass.restrict(self.fom.mesh.free_ids()), self.fom.solver)
    }
}
