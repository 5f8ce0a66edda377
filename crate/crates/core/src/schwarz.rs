//! Multiplicative Schwarz alternating coupling of two subdomains.
//!
//! Time is marched in controller intervals; inside each interval the two
//! subdomain problems are re-solved from the interval start state until the
//! transmitted data stop changing. Overlapping decompositions exchange
//! Dirichlet data both ways. Non-overlapping ones send Dirichlet data to the
//! first subdomain and an interface force to the second.

use std::time::{Duration, Instant};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::ecsw::{EcswSampleSet, SampledMesh};
use crate::error::{Error, Result};
use crate::fem::{assemble_mass, build_uniform_mesh, stress_and_tangent, ConstitutiveModel, KinematicState, Mesh1D};
use crate::linalg::LinearSolver;
use crate::newmark::{
    initial_acceleration, newmark_step, DirichletData, FomModel, GenState, JacobianCache, NewmarkParams,
};
use crate::pod::PodBasis;
use crate::rom::{build_rom_operators_with_mass, set_reference_state, ReferenceState, RomOperators, RomSystem};

#[derive(Debug, Clone)]
pub enum Variant {
    Fom,
    Rom(PodBasis),
    Hrom(PodBasis, EcswSampleSet),
}

impl Variant {
    pub fn label(&self) -> &'static str {
        match self {
            Variant::Fom => "FOM",
            Variant::Rom(_) => "ROM",
            Variant::Hrom(..) => "HROM",
        }
    }

    pub fn basis_size(&self) -> Option<usize> {
        match self {
            Variant::Fom => None,
            Variant::Rom(b) | Variant::Hrom(b, _) => Some(b.size()),
        }
    }

    pub fn sample_count(&self) -> Option<usize> {
        match self {
            Variant::Hrom(_, s) => Some(s.count()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SubdomainProblem {
    /// Dirichlet set holds the clamped ends and, for Dirichlet-receiving
    /// subdomains, the Schwarz boundary node.
    pub mesh: Mesh1D,
    pub model: ConstitutiveModel,
    pub integrator: NewmarkParams,
    pub variant: Variant,
    pub schwarz_boundary_nodes: Vec<usize>,
    pub solver: LinearSolver,
}

/// Force handed to the Neumann side of a non-overlapping interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterfaceForce {
    /// The Dirichlet side's discrete reaction: interface-element stress plus
    /// the inertia of its consistent mass coupling. The interface share of
    /// that mass is moved into the Neumann side's mass matrix, so the
    /// converged coupling reproduces the single-domain discretization.
    #[default]
    Consistent,
    /// Interface-element first Piola–Kirchhoff stress only.
    ElementStress,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    /// `gamma1` is the Schwarz boundary of the first subdomain (inside the
    /// second), `gamma2` the Schwarz boundary of the second.
    Overlapping { gamma1: f64, gamma2: f64 },
    NonOverlapping { gamma: f64, force: InterfaceForce },
}

#[derive(Debug, Clone)]
pub struct DomainDecomposition {
    pub subdomains: Vec<SubdomainProblem>,
    pub coupling: Coupling,
}

/// Node of `mesh` at an end coinciding with `x`.
fn end_node(mesh: &Mesh1D, x: f64) -> Option<usize> {
    let tol = 1e-12 * (mesh.x_right() - mesh.x_left()).abs().max(x.abs()).max(1.0);
    if (mesh.x_left() - x).abs() <= tol {
        Some(0)
    } else if (mesh.x_right() - x).abs() <= tol {
        Some(mesh.node_count() - 1)
    } else {
        None
    }
}

/// Outward unit normal at an end node.
fn outward_normal(node: usize) -> f64 {
    if node == 0 {
        -1.0
    } else {
        1.0
    }
}

/// Element adjacent to an end node and the neighbouring node inside it.
fn end_element(mesh: &Mesh1D, node: usize) -> (usize, usize) {
    if node == 0 {
        (0, 1)
    } else {
        (mesh.element_count() - 1, node - 1)
    }
}

impl DomainDecomposition {
    pub fn new(subdomains: Vec<SubdomainProblem>, coupling: Coupling) -> Result<Self> {
        let dd = DomainDecomposition { subdomains, coupling };
        dd.schwarz_nodes()?;
        Ok(dd)
    }

    /// Schwarz boundary node of each subdomain, validated against the
    /// coupling layout.
    fn schwarz_nodes(&self) -> Result<[usize; 2]> {
        if self.subdomains.len() != 2 {
            return Err(Error::Config(format!("{} subdomains; the coupler handles exactly two", self.subdomains.len())));
        }
        let (m1, m2) = (&self.subdomains[0].mesh, &self.subdomains[1].mesh);
        let nodes = match self.coupling {
            Coupling::NonOverlapping { gamma, .. } => {
                let g1 = end_node(m1, gamma).ok_or_else(|| Error::Config(format!("interface {gamma} is not an end of the first subdomain")))?;
                let g2 = end_node(m2, gamma).ok_or_else(|| Error::Config(format!("interface {gamma} is not an end of the second subdomain")))?;
                if (m1.node_coords()[g1] - m2.node_coords()[g2]).abs() > 1e-12 {
                    return Err(Error::Config("subdomain meshes do not abut at the interface".into()));
                }
                let overlap = m1.x_right().min(m2.x_right()) - m1.x_left().max(m2.x_left());
                if overlap > 1e-12 {
                    return Err(Error::Config("non-overlapping subdomains overlap".into()));
                }
                if !m1.is_dirichlet(g1) {
                    return Err(Error::Config("interface node must be a Dirichlet node of the first subdomain".into()));
                }
                if m2.is_dirichlet(g2) {
                    return Err(Error::Config("interface node must be free in the second subdomain".into()));
                }
                [g1, g2]
            }
            Coupling::Overlapping { gamma1, gamma2 } => {
                let g1 = end_node(m1, gamma1).ok_or_else(|| Error::Config(format!("{gamma1} is not an end of the first subdomain")))?;
                let g2 = end_node(m2, gamma2).ok_or_else(|| Error::Config(format!("{gamma2} is not an end of the second subdomain")))?;
                let overlap = m1.x_right().min(m2.x_right()) - m1.x_left().max(m2.x_left());
                if !(overlap > 0.0) {
                    return Err(Error::Config("overlapping subdomains do not overlap".into()));
                }
                if m2.locate(gamma1).is_none() || m1.locate(gamma2).is_none() {
                    return Err(Error::Config("each Schwarz boundary must lie inside the other subdomain".into()));
                }
                if !m1.is_dirichlet(g1) || !m2.is_dirichlet(g2) {
                    return Err(Error::Config("overlapping Schwarz boundaries must be Dirichlet nodes".into()));
                }
                [g1, g2]
            }
        };
        for (k, sd) in self.subdomains.iter().enumerate() {
            let receives_dirichlet = k == 0 || matches!(self.coupling, Coupling::Overlapping { .. });
            if receives_dirichlet && !sd.schwarz_boundary_nodes.iter().all(|&n| sd.mesh.is_dirichlet(n)) {
                return Err(Error::Config(format!("Schwarz boundary nodes of subdomain {k} must be Dirichlet nodes")));
            }
            sd.integrator.validate()?;
        }
        Ok(nodes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transfer {
    /// Displacement, velocity and acceleration.
    #[default]
    All,
    /// Displacement only, velocity and acceleration data set to zero. Only
    /// useful to measure what the other two fields contribute.
    DisplacementOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchwarzConfig {
    pub delta: f64,
    pub theta: f64,
    pub controller_dt: f64,
    pub max_schwarz_iters: usize,
    pub final_time: f64,
    #[serde(default)]
    pub transfer: Transfer,
}

impl SchwarzConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Config(format!("theta={} outside (0, 1]", self.theta)));
        }
        if !(self.delta > 0.0) || !(self.controller_dt > 0.0) || !(self.final_time >= 0.0) || self.max_schwarz_iters == 0 {
            return Err(Error::Config("delta, controller_dt, final_time and max_schwarz_iters must be positive".into()));
        }
        Ok(())
    }

    /// Number of controller intervals to reach the final time.
    pub fn interval_count(&self) -> Result<usize> {
        let r = self.final_time / self.controller_dt;
        let n = r.round();
        if (r - n).abs() > 1e-8 * r.max(1.0) {
            return Err(Error::Config("final time is not a multiple of the controller step".into()));
        }
        Ok(n as usize)
    }
}

/// λ_{n+1} = θ·new + (1 − θ)·λ_n, per field.
pub fn relax(previous: [f64; 3], new_data: [f64; 3], theta: f64) -> [f64; 3] {
    std::array::from_fn(|k| theta * new_data[k] + (1.0 - theta) * previous[k])
}

/// Linear interpolation of (u, v, a) at `x` from a full-order state.
pub fn overlapping_transmission(mesh: &Mesh1D, state: &KinematicState, x: f64) -> Result<[f64; 3]> {
    let (e, xi) = mesh.locate(x).ok_or_else(|| Error::InvalidArgument(format!("coordinate {x} outside the source mesh")))?;
    let [i, j] = mesh.elements()[e];
    let f = |v: &DVector<f64>| (1.0 - xi) * v[i] + xi * v[j];
    Ok([f(&state.u), f(&state.v), f(&state.a)])
}

/// P·N at the end node `gamma_node`, from the stress in the adjacent element.
pub fn interface_traction(
    mesh: &Mesh1D,
    model: &ConstitutiveModel,
    u: &DVector<f64>,
    gamma_node: usize,
    outward_normal: f64,
) -> Result<f64> {
    if gamma_node != 0 && gamma_node + 1 != mesh.node_count() {
        return Err(Error::InvalidArgument(format!("node {gamma_node} is not an end node")));
    }
    let (e, _) = end_element(mesh, gamma_node);
    let [i, j] = mesh.elements()[e];
    let stretch = 1.0 + (u[j] - u[i]) / mesh.element_length(e);
    let (p, _) = stress_and_tangent(model, stretch).map_err(|x| x.with_element(e))?;
    Ok(p * outward_normal)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceCheck {
    pub converged: bool,
    /// Relative (or absolute, for vanishing denominators) increments of u, v, a.
    pub increments: [f64; 3],
}

const ZERO_NORM: f64 = 1e-14;

fn decide(diff_sq: [f64; 3], prev_sq: [f64; 3], delta: f64) -> ConvergenceCheck {
    let increments = std::array::from_fn(|k| {
        let (d, p) = (diff_sq[k].sqrt(), prev_sq[k].sqrt());
        if p < ZERO_NORM {
            d
        } else {
            d / p
        }
    });
    ConvergenceCheck { converged: increments.iter().all(|&x| x < delta), increments }
}

/// True when the displacement increment is at rounding level and the
/// increments still above `delta` have stopped shrinking. Velocity and
/// acceleration are displacement differences scaled by 1/(γΔt) and 1/(βΔt²),
/// so their relative increments bottom out well above machine precision.
pub fn at_rounding_floor(increments: [f64; 3], last: [f64; 3], delta: f64) -> bool {
    increments[0] <= 16.0 * f64::EPSILON
        && increments.iter().zip(&last).all(|(&x, &l)| x < delta || x > 0.5 * l)
}

/// Relative increments of u, v, a over all subdomains concatenated.
pub fn check_convergence(prev: &[KinematicState], curr: &[KinematicState], delta: f64) -> Result<ConvergenceCheck> {
    if prev.len() != curr.len() || prev.iter().zip(curr).any(|(p, c)| p.len() != c.len()) {
        return Err(Error::Dimension("iterate shapes differ".into()));
    }
    let mut diff = [0.0; 3];
    let mut base = [0.0; 3];
    for (p, c) in prev.iter().zip(curr) {
        for (k, (pf, cf)) in [(&p.u, &c.u), (&p.v, &c.v), (&p.a, &c.a)].into_iter().enumerate() {
            diff[k] += (cf - pf).norm_squared();
            base[k] += pf.norm_squared();
        }
    }
    Ok(decide(diff, base, delta))
}

/// State of one subdomain at a time instant: nodal for full models, modal
/// plus the reference state for reduced ones.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelState {
    Full(KinematicState),
    Reduced { g: GenState, refstate: ReferenceState, t: f64 },
}

impl ModelState {
    pub fn time(&self) -> f64 {
        match self {
            ModelState::Full(s) => s.t,
            ModelState::Reduced { t, .. } => *t,
        }
    }
}

enum Engine {
    Fom(FomModel),
    Rom { ops: RomOperators, sample: Option<SampledMesh> },
}

/// Runtime form of a `SubdomainProblem`.
struct Subdomain {
    mesh: Mesh1D,
    model: ConstitutiveModel,
    params: NewmarkParams,
    engine: Engine,
    cache: JacobianCache,
    /// Position of the Schwarz node in the Dirichlet list, if it is one.
    schwarz_slot: Option<usize>,
    newton_iterations: usize,
}

impl Subdomain {
    fn new(p: &SubdomainProblem, schwarz_node: usize, added_mass: f64) -> Result<Self> {
        let mut mass = assemble_mass(&p.mesh, &p.model);
        mass.diag[schwarz_node] += added_mass;
        let engine = match &p.variant {
            Variant::Fom => Engine::Fom(FomModel { mesh: p.mesh.clone(), model: p.model, mass, solver: p.solver }),
            Variant::Rom(b) => Engine::Rom { ops: build_rom_operators_with_mass(&p.mesh, &p.model, b, mass)?, sample: None },
            Variant::Hrom(b, s) => {
                let ops = build_rom_operators_with_mass(&p.mesh, &p.model, b, mass)?;
                let sample = SampledMesh::new(&ops, s)?;
                Engine::Rom { ops, sample: Some(sample) }
            }
        };
        Ok(Subdomain {
            mesh: p.mesh.clone(),
            model: p.model,
            params: p.integrator,
            engine,
            cache: JacobianCache::new(),
            schwarz_slot: p.mesh.dirichlet_ids().iter().position(|&i| i == schwarz_node),
            newton_iterations: 0,
        })
    }

    fn dirichlet(&self, data: Option<[f64; 3]>) -> DirichletData {
        let mut d = DirichletData::homogeneous(self.mesh.dirichlet_ids().len());
        if let (Some(k), Some(v)) = (self.schwarz_slot, data) {
            d.set(k, v);
        }
        d
    }

    fn load(&self, load: Option<(usize, f64)>) -> DVector<f64> {
        let mut f = DVector::zeros(self.mesh.node_count());
        if let Some((node, value)) = load {
            f[node] += value;
        }
        f
    }

    fn initial(&self, u0: &DVector<f64>, v0: &DVector<f64>, d: &DirichletData, f: &DVector<f64>) -> Result<ModelState> {
        match &self.engine {
            Engine::Fom(fom) => Ok(ModelState::Full(fom.initial_state(u0, v0, d, f, 0.0)?)),
            Engine::Rom { ops, sample } => {
                let refstate = set_reference_state(&self.mesh, d)?;
                let q = ops.phi().tr_mul(&(u0 - &refstate.u_bar));
                let qd = ops.phi().tr_mul(&(v0 - &refstate.v_bar));
                let sys = RomSystem::new(ops, &refstate, ops.reduced_external_force(&refstate, f), sample.as_ref());
                let qdd = initial_acceleration(&sys, &q, &qd)?;
                Ok(ModelState::Reduced { g: GenState { q, qd, qdd }, refstate, t: 0.0 })
            }
        }
    }

    fn step(&mut self, start: &ModelState, d: &DirichletData, f: &DVector<f64>) -> Result<ModelState> {
        match (&self.engine, start) {
            (Engine::Fom(fom), ModelState::Full(s)) => {
                let (s1, rep) = fom.step(s, d, f, &self.params, &mut self.cache)?;
                self.newton_iterations += rep.iterations;
                Ok(ModelState::Full(s1))
            }
            (Engine::Rom { ops, sample }, ModelState::Reduced { g, t, .. }) => {
                let refstate = set_reference_state(&self.mesh, d)?;
                let sys = RomSystem::new(ops, &refstate, ops.reduced_external_force(&refstate, f), sample.as_ref());
                let (g1, rep) = newmark_step(&sys, g, &self.params, &mut self.cache)?;
                self.newton_iterations += rep.iterations;
                Ok(ModelState::Reduced { g: g1, refstate, t: t + self.params.dt })
            }
            _ => Err(Error::InvalidArgument("state kind does not match the subdomain model".into())),
        }
    }

    fn node_values(&self, st: &ModelState, node: usize) -> [f64; 3] {
        match (&self.engine, st) {
            (Engine::Rom { ops, .. }, ModelState::Reduced { g, refstate, .. }) => [
                ops.reconstruct_node(&refstate.u_bar, &g.q, node),
                ops.reconstruct_node(&refstate.v_bar, &g.qd, node),
                ops.reconstruct_node(&refstate.a_bar, &g.qdd, node),
            ],
            (_, ModelState::Full(s)) => [s.u[node], s.v[node], s.a[node]],
            _ => unreachable!("state kind checked when stepping"),
        }
    }

    fn interpolate(&self, st: &ModelState, x: f64) -> Result<[f64; 3]> {
        let (e, xi) = self.mesh.locate(x).ok_or_else(|| Error::InvalidArgument(format!("coordinate {x} outside subdomain")))?;
        let [i, j] = self.mesh.elements()[e];
        let (a, b) = (self.node_values(st, i), self.node_values(st, j));
        Ok(std::array::from_fn(|k| (1.0 - xi) * a[k] + xi * b[k]))
    }

    /// Force on the neighbouring Neumann subdomain at the shared node.
    fn interface_force(&self, st: &ModelState, node: usize, kind: InterfaceForce) -> Result<f64> {
        let (e, nbr) = end_element(&self.mesh, node);
        let u_node = self.node_values(st, node)[0];
        let nb = self.node_values(st, nbr);
        let (ui, uj) = if node == 0 { (u_node, nb[0]) } else { (nb[0], u_node) };
        let stretch = 1.0 + (uj - ui) / self.mesh.element_length(e);
        let (p, _) = stress_and_tangent(&self.model, stretch).map_err(|x| x.with_element(e))?;
        // outward normal of the neighbour is opposite to ours
        let traction = -p * outward_normal(node);
        Ok(match kind {
            InterfaceForce::ElementStress => traction,
            InterfaceForce::Consistent => {
                let m = self.model.density * self.mesh.element_length(e) / 6.0;
                traction - m * nb[2]
            }
        })
    }

    fn full(&self, st: &ModelState) -> KinematicState {
        match (&self.engine, st) {
            (Engine::Rom { ops, .. }, ModelState::Reduced { g, refstate, t }) => KinematicState {
                u: ops.reconstruct(&refstate.u_bar, &g.q),
                v: ops.reconstruct(&refstate.v_bar, &g.qd),
                a: ops.reconstruct(&refstate.a_bar, &g.qdd),
                t: *t,
            },
            (_, ModelState::Full(s)) => s.clone(),
            _ => unreachable!("state kind checked when stepping"),
        }
    }

    /// Squared norms of (u, v, a) of `b` and of `a − b`. Reduced states use
    /// the orthonormality of Φ and its zero Dirichlet rows:
    /// ‖ū + Φq‖² = ‖ū‖² + ‖q‖².
    fn sq_norms(&self, prev: &ModelState, curr: &ModelState) -> ([f64; 3], [f64; 3]) {
        match (prev, curr) {
            (ModelState::Full(p), ModelState::Full(c)) => (
                [(&c.u - &p.u).norm_squared(), (&c.v - &p.v).norm_squared(), (&c.a - &p.a).norm_squared()],
                [p.u.norm_squared(), p.v.norm_squared(), p.a.norm_squared()],
            ),
            (ModelState::Reduced { g: gp, refstate: rp, .. }, ModelState::Reduced { g: gc, refstate: rc, .. }) => {
                let pairs = [(&gp.q, &gc.q, &rp.u_bar, &rc.u_bar), (&gp.qd, &gc.qd, &rp.v_bar, &rc.v_bar), (&gp.qdd, &gc.qdd, &rp.a_bar, &rc.a_bar)];
                let diff = pairs.map(|(xp, xc, bp, bc)| (xc - xp).norm_squared() + (bc - bp).norm_squared());
                let base = pairs.map(|(xp, _, bp, _)| xp.norm_squared() + bp.norm_squared());
                (diff, base)
            }
            _ => unreachable!("state kinds are fixed per subdomain"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SchwarzStats {
    /// Total Schwarz iterations N_S (one iteration = one solve of each subdomain).
    pub total_iterations: usize,
    pub per_interval: Vec<u32>,
    /// Wall time spent in the subdomain solves and transfers.
    pub wall_time: Duration,
    pub newton_iterations: [usize; 2],
    /// Iterations of the coupled initial-acceleration solve.
    pub init_iterations: usize,
}

impl SchwarzStats {
    pub fn mean_iterations(&self) -> f64 {
        self.total_iterations as f64 / self.per_interval.len().max(1) as f64
    }
}

/// Receives the reconstructed full-order states after every interval (and at
/// t = 0).
pub trait HistorySink {
    fn record(&mut self, step: usize, states: &[KinematicState]) -> Result<()>;
}

pub struct NullSink;

impl HistorySink for NullSink {
    fn record(&mut self, _: usize, _: &[KinematicState]) -> Result<()> {
        Ok(())
    }
}

/// Sends every record to all inner sinks.
pub struct FanOut<'a>(pub Vec<&'a mut dyn HistorySink>);

impl HistorySink for FanOut<'_> {
    fn record(&mut self, step: usize, states: &[KinematicState]) -> Result<()> {
        for s in self.0.iter_mut() {
            s.record(step, states)?;
        }
        Ok(())
    }
}

/// The coupled solver with its per-subdomain runtime data.
pub struct SchwarzSolver {
    subs: Vec<Subdomain>,
    coupling: Coupling,
    nodes: [usize; 2],
    cfg: SchwarzConfig,
}

impl SchwarzSolver {
    pub fn new(dd: &DomainDecomposition, cfg: &SchwarzConfig) -> Result<Self> {
        cfg.validate()?;
        let nodes = dd.schwarz_nodes()?;
        for sd in &dd.subdomains {
            let dt = sd.integrator.dt;
            if ((dt - cfg.controller_dt) / cfg.controller_dt).abs() > 1e-12 {
                return Err(Error::Config(format!(
                    "subdomain time step {dt} differs from the controller step {}",
                    cfg.controller_dt
                )));
            }
        }
        let added = match dd.coupling {
            Coupling::NonOverlapping { force: InterfaceForce::Consistent, .. } => {
                let sd = &dd.subdomains[0];
                let (e, _) = end_element(&sd.mesh, nodes[0]);
                sd.model.density * sd.mesh.element_length(e) / 3.0
            }
            _ => 0.0,
        };
        let subs = vec![
            Subdomain::new(&dd.subdomains[0], nodes[0], 0.0)?,
            Subdomain::new(&dd.subdomains[1], nodes[1], added)?,
        ];
        Ok(SchwarzSolver { subs, coupling: dd.coupling, nodes, cfg: *cfg })
    }

    fn transfer(&self, v: [f64; 3]) -> [f64; 3] {
        match self.cfg.transfer {
            Transfer::All => v,
            Transfer::DisplacementOnly => [v[0], 0.0, 0.0],
        }
    }

    /// Consistent initial states: u0 and v0 nodal, clamped nodes zeroed,
    /// accelerations from the coupled equations of motion.
    pub fn initial_states(&mut self, u0: [&DVector<f64>; 2], v0: [&DVector<f64>; 2]) -> Result<(Vec<ModelState>, usize)> {
        let mut prev: Option<Vec<KinematicState>> = None;
        let mut a_gamma = [0.0; 3];
        let sweep = |s: &Self, data1: [f64; 3]| -> Result<Vec<ModelState>> {
            let d1 = s.subs[0].dirichlet(Some(data1));
            let st1 = s.subs[0].initial(u0[0], v0[0], &d1, &s.subs[0].load(None))?;
            let (d2, f2) = match s.coupling {
                Coupling::NonOverlapping { force, .. } => {
                    let f = s.subs[0].interface_force(&st1, s.nodes[0], force)?;
                    (s.subs[1].dirichlet(None), s.subs[1].load(Some((s.nodes[1], f))))
                }
                Coupling::Overlapping { gamma2, .. } => {
                    let data = s.transfer(s.subs[0].interpolate(&st1, gamma2)?);
                    (s.subs[1].dirichlet(Some(data)), s.subs[1].load(None))
                }
            };
            let st2 = s.subs[1].initial(u0[1], v0[1], &d2, &f2)?;
            Ok(vec![st1, st2])
        };
        for it in 1..=self.cfg.max_schwarz_iters {
            let data1 = match self.coupling {
                Coupling::NonOverlapping { .. } => {
                    let g = self.nodes[1];
                    [u0[1][g], v0[1][g], a_gamma[2]]
                }
                Coupling::Overlapping { gamma1, .. } => {
                    let m = &self.subs[1].mesh;
                    let (e, xi) = m.locate(gamma1).ok_or_else(|| Error::Config("Schwarz boundary outside neighbour".into()))?;
                    let [i, j] = m.elements()[e];
                    let lerp = |v: &DVector<f64>| (1.0 - xi) * v[i] + xi * v[j];
                    [lerp(u0[1]), lerp(v0[1]), a_gamma[2]]
                }
            };
            let states = sweep(self, self.transfer(data1))?;
            a_gamma = match self.coupling {
                Coupling::NonOverlapping { .. } => self.subs[1].node_values(&states[1], self.nodes[1]),
                Coupling::Overlapping { gamma1, .. } => self.subs[1].interpolate(&states[1], gamma1)?,
            };
            let full: Vec<KinematicState> = states.iter().zip(&self.subs).map(|(s, sd)| sd.full(s)).collect();
            let done = match &prev {
                Some(p) => check_convergence(p, &full, self.cfg.delta)?.converged,
                None => false,
            };
            if done {
                return Ok((states, it));
            }
            prev = Some(full);
        }
        Err(Error::SchwarzDivergence { interval: 0, iterations: self.cfg.max_schwarz_iters, increments: [f64::NAN; 3] })
    }

    /// One controller interval from `start`; returns the converged states and
    /// the number of Schwarz iterations used.
    pub fn interval(&mut self, start: &[ModelState], index: usize) -> Result<(Vec<ModelState>, usize)> {
        for s in self.subs.iter_mut() {
            s.cache.clear();
        }
        let mut prev: Vec<ModelState> = start.to_vec();
        let mut lambda = [0.0; 3];
        let mut last = [f64::NAN; 3];
        for n in 0..self.cfg.max_schwarz_iters {
            let s1 = match self.coupling {
                Coupling::NonOverlapping { .. } => {
                    let trace = self.subs[1].node_values(&prev[1], self.nodes[1]);
                    lambda = relax(lambda, trace, self.cfg.theta);
                    let d = self.subs[0].dirichlet(Some(self.transfer(lambda)));
                    let f = self.subs[0].load(None);
                    self.subs[0].step(&start[0], &d, &f)?
                }
                Coupling::Overlapping { gamma1, .. } => {
                    let data = self.transfer(self.subs[1].interpolate(&prev[1], gamma1)?);
                    let d = self.subs[0].dirichlet(Some(data));
                    let f = self.subs[0].load(None);
                    self.subs[0].step(&start[0], &d, &f)?
                }
            };
            let s2 = match self.coupling {
                Coupling::NonOverlapping { force, .. } => {
                    let t = self.subs[0].interface_force(&s1, self.nodes[0], force)?;
                    let d = self.subs[1].dirichlet(None);
                    let f = self.subs[1].load(Some((self.nodes[1], t)));
                    self.subs[1].step(&start[1], &d, &f)?
                }
                Coupling::Overlapping { gamma2, .. } => {
                    let data = self.transfer(self.subs[0].interpolate(&s1, gamma2)?);
                    let d = self.subs[1].dirichlet(Some(data));
                    let f = self.subs[1].load(None);
                    self.subs[1].step(&start[1], &d, &f)?
                }
            };
            let curr = vec![s1, s2];
            let mut diff = [0.0; 3];
            let mut base = [0.0; 3];
            for (k, sd) in self.subs.iter().enumerate() {
                let (d, b) = sd.sq_norms(&prev[k], &curr[k]);
                for f in 0..3 {
                    diff[f] += d[f];
                    base[f] += b[f];
                }
            }
            let check = decide(diff, base, self.cfg.delta);
            let floor = at_rounding_floor(check.increments, last, self.cfg.delta);
            last = check.increments;
            prev = curr;
            if check.converged || floor {
                if floor && !check.converged {
                    log::debug!("interval {index}: increments {last:?} at the rounding floor");
                }
                return Ok((prev, n + 1));
            }
        }
        Err(Error::SchwarzDivergence { interval: index, iterations: self.cfg.max_schwarz_iters, increments: last })
    }

    pub fn full_states(&self, states: &[ModelState]) -> Vec<KinematicState> {
        states.iter().zip(&self.subs).map(|(s, sd)| sd.full(s)).collect()
    }

    pub fn newton_iterations(&self) -> [usize; 2] {
        [self.subs[0].newton_iterations, self.subs[1].newton_iterations]
    }
}

/// Nodal initial displacement of a mesh with clamped (Dirichlet) nodes not on
/// a Schwarz boundary forced to zero.
pub fn nodal_values(mesh: &Mesh1D, f: &dyn Fn(f64) -> f64, zero_nodes: &[usize]) -> DVector<f64> {
    let mut u = DVector::from_iterator(mesh.node_count(), mesh.node_coords().iter().map(|&x| f(x)));
    for &i in zero_nodes {
        u[i] = 0.0;
    }
    u
}

/// Clamped nodes: Dirichlet nodes that do not receive Schwarz data.
pub fn clamped_nodes(p: &SubdomainProblem) -> Vec<usize> {
    p.mesh.dirichlet_ids().iter().copied().filter(|i| !p.schwarz_boundary_nodes.contains(i)).collect()
}

/// Marches the coupled problem from rest with displacement `initial(x)` to
/// the final time. States are passed to `sink` at t = 0 and after every
/// interval; on failure the sink keeps what was recorded so far.
pub fn run_coupled(
    dd: &DomainDecomposition,
    cfg: &SchwarzConfig,
    initial: &dyn Fn(f64) -> f64,
    sink: &mut dyn HistorySink,
) -> Result<SchwarzStats> {
    let mut solver = SchwarzSolver::new(dd, cfg)?;
    let steps = cfg.interval_count()?;
    let u0: Vec<DVector<f64>> = dd.subdomains.iter().map(|p| nodal_values(&p.mesh, initial, &clamped_nodes(p))).collect();
    let v0: Vec<DVector<f64>> = dd.subdomains.iter().map(|p| DVector::zeros(p.mesh.node_count())).collect();
    let mut stats = SchwarzStats::default();
    let clock = Instant::now();
    let (mut states, init_iters) = solver.initial_states([&u0[0], &u0[1]], [&v0[0], &v0[1]])?;
    stats.init_iterations = init_iters;
    let mut solve_time = clock.elapsed();
    sink.record(0, &solver.full_states(&states))?;
    for n in 0..steps {
        let clock = Instant::now();
        let (next, iters) = solver.interval(&states, n)?;
        solve_time += clock.elapsed();
        stats.total_iterations += iters;
        stats.per_interval.push(iters as u32);
        states = next;
        sink.record(n + 1, &solver.full_states(&states))?;
    }
    stats.wall_time = solve_time;
    stats.newton_iterations = solver.newton_iterations();
    Ok(stats)
}

/// Single-domain full-order run with the same integrator; the reference for
/// coupling consistency checks. Returns the wall time of the solve.
pub fn run_monolithic(
    mesh: &Mesh1D,
    model: &ConstitutiveModel,
    params: &NewmarkParams,
    solver: LinearSolver,
    final_time: f64,
    initial: &dyn Fn(f64) -> f64,
    sink: &mut dyn HistorySink,
) -> Result<Duration> {
    params.validate()?;
    let fom = FomModel::new(mesh.clone(), *model, solver);
    let steps = (final_time / params.dt).round() as usize;
    let u0 = nodal_values(mesh, initial, mesh.dirichlet_ids());
    let d = DirichletData::homogeneous(mesh.dirichlet_ids().len());
    let f = DVector::zeros(mesh.node_count());
    let clock = Instant::now();
    let mut s = fom.initial_state(&u0, &DVector::zeros(mesh.node_count()), &d, &f, 0.0)?;
    let mut elapsed = clock.elapsed();
    sink.record(0, std::slice::from_ref(&s))?;
    let mut cache = JacobianCache::new();
    for n in 0..steps {
        let clock = Instant::now();
        cache.clear();
        s = fom.step(&s, &d, &f, params, &mut cache)?.0;
        elapsed += clock.elapsed();
        sink.record(n + 1, std::slice::from_ref(&s))?;
    }
    Ok(elapsed)
}

/// Two-subdomain split of a clamped bar `[x_left, x_right]` at `split`.
/// With `overlap = Some(w)` the subdomains are `[x_left, split + w/2]` and
/// `[split − w/2, x_right]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarLayout {
    pub x_left: f64,
    pub x_right: f64,
    pub split: f64,
    #[serde(default)]
    pub overlap: Option<f64>,
    pub dx: [f64; 2],
}

impl BarLayout {
    pub fn spans(&self) -> Result<[(f64, f64); 2]> {
        if !(self.x_left < self.split && self.split < self.x_right) {
            return Err(Error::Config(format!("split {} outside ({}, {})", self.split, self.x_left, self.x_right)));
        }
        let h = 0.5 * self.overlap.unwrap_or(0.0);
        if h < 0.0 || self.split - h <= self.x_left || self.split + h >= self.x_right {
            return Err(Error::Config("overlap width does not fit the bar".into()));
        }
        Ok([(self.x_left, self.split + h), (self.split - h, self.x_right)])
    }

    pub fn build(
        &self,
        model: ConstitutiveModel,
        integrator: NewmarkParams,
        variants: [Variant; 2],
        solver: LinearSolver,
        force: InterfaceForce,
    ) -> Result<DomainDecomposition> {
        let [(a1, b1), (a2, b2)] = self.spans()?;
        let [v1, v2] = variants;
        let sub = |mesh: Mesh1D, variant: Variant, schwarz: usize| SubdomainProblem {
            mesh,
            model,
            integrator,
            variant,
            schwarz_boundary_nodes: vec![schwarz],
            solver,
        };
        match self.overlap {
            Some(_) => {
                let m1 = build_uniform_mesh(a1, b1, self.dx[0], true, true)?;
                let m2 = build_uniform_mesh(a2, b2, self.dx[1], true, true)?;
                let g1 = m1.node_count() - 1;
                DomainDecomposition::new(
                    vec![sub(m1, v1, g1), sub(m2, v2, 0)],
                    Coupling::Overlapping { gamma1: b1, gamma2: a2 },
                )
            }
            None => {
                let m1 = build_uniform_mesh(a1, b1, self.dx[0], true, true)?;
                let m2 = build_uniform_mesh(a2, b2, self.dx[1], false, true)?;
                let g1 = m1.node_count() - 1;
                DomainDecomposition::new(
                    vec![sub(m1, v1, g1), sub(m2, v2, 0)],
                    Coupling::NonOverlapping { gamma: self.split, force },
                )
            }
        }
    }
}
