//! One-dimensional finite elements: meshes, constitutive laws and assembly.
//!
//! Elements are 2-node linear bars of unit cross section, so the stretch is
//! constant per element and a single stress evaluation integrates exactly.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymTridiag;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    node_coords: Vec<f64>,
    elements: Vec<[usize; 2]>,
    lengths: Vec<f64>,
    dirichlet_ids: Vec<usize>,
    free_ids: Vec<usize>,
    /// node -> position in `free_ids`
    free_index: Vec<Option<usize>>,
}

impl Mesh1D {
    /// Builds a mesh from strictly increasing node coordinates; elements join
    /// consecutive nodes.
    pub fn new(node_coords: Vec<f64>, dirichlet_ids: &[usize]) -> Result<Self> {
        let n = node_coords.len();
        if n < 2 {
            return Err(Error::Config("a mesh needs at least two nodes".into()));
        }
        if node_coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("non-finite node coordinate".into()));
        }
        let mut lengths = Vec::with_capacity(n - 1);
        for w in node_coords.windows(2) {
            let h = w[1] - w[0];
            if h <= 0.0 {
                return Err(Error::Config("node coordinates must be strictly increasing".into()));
            }
            lengths.push(h);
        }
        let elements = (0..n - 1).map(|e| [e, e + 1]).collect();
        let mut mesh = Mesh1D {
            node_coords,
            elements,
            lengths,
            dirichlet_ids: Vec::new(),
            free_ids: Vec::new(),
            free_index: Vec::new(),
        };
        mesh.set_dirichlet(dirichlet_ids)?;
        Ok(mesh)
    }

    fn set_dirichlet(&mut self, ids: &[usize]) -> Result<()> {
        let n = self.node_count();
        let mut d = ids.to_vec();
        d.sort_unstable();
        d.dedup();
        if let Some(&bad) = d.iter().find(|&&i| i >= n) {
            return Err(Error::Config(format!("Dirichlet node {bad} outside mesh of {n} nodes")));
        }
        let mut free_index = vec![None; n];
        let mut free = Vec::with_capacity(n - d.len());
        for i in 0..n {
            if d.binary_search(&i).is_err() {
                free_index[i] = Some(free.len());
                free.push(i);
            }
        }
        self.dirichlet_ids = d;
        self.free_ids = free;
        self.free_index = free_index;
        Ok(())
    }

    /// Same nodes, different constrained set.
    pub fn with_dirichlet(&self, ids: &[usize]) -> Result<Self> {
        let mut m = self.clone();
        m.set_dirichlet(ids)?;
        Ok(m)
    }

    pub fn node_coords(&self) -> &[f64] {
        &self.node_coords
    }
    pub fn elements(&self) -> &[[usize; 2]] {
        &self.elements
    }
    pub fn element_length(&self, e: usize) -> f64 {
        self.lengths[e]
    }
    pub fn dirichlet_ids(&self) -> &[usize] {
        &self.dirichlet_ids
    }
    pub fn free_ids(&self) -> &[usize] {
        &self.free_ids
    }
    pub fn free_index(&self, node: usize) -> Option<usize> {
        self.free_index[node]
    }
    pub fn is_dirichlet(&self, node: usize) -> bool {
        self.free_index[node].is_none()
    }
    pub fn node_count(&self) -> usize {
        self.node_coords.len()
    }
    pub fn element_count(&self) -> usize {
        self.elements.len()
    }
    pub fn x_left(&self) -> f64 {
        self.node_coords[0]
    }
    pub fn x_right(&self) -> f64 {
        *self.node_coords.last().unwrap()
    }
    pub fn min_element_length(&self) -> f64 {
        self.lengths.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Index of the node at coordinate `x` (within `tol`), if any.
    pub fn node_at(&self, x: f64, tol: f64) -> Option<usize> {
        let i = self.node_coords.partition_point(|&c| c < x);
        [i.checked_sub(1), Some(i)]
            .into_iter()
            .flatten()
            .filter(|&j| j < self.node_count())
            .find(|&j| (self.node_coords[j] - x).abs() <= tol)
    }

    /// Element containing `x` and the local coordinate in [0, 1].
    pub fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let tol = 1e-12 * (self.x_right() - self.x_left()).abs().max(1.0);
        if x < self.x_left() - tol || x > self.x_right() + tol {
            return None;
        }
        let i = self.node_coords.partition_point(|&c| c <= x);
        let e = i.saturating_sub(1).min(self.element_count() - 1);
        let xi = ((x - self.node_coords[e]) / self.lengths[e]).clamp(0.0, 1.0);
        Some((e, xi))
    }
}

/// Uniform mesh on `[x_left, x_right]` with element size `dx`; clamped ends
/// become Dirichlet nodes.
pub fn build_uniform_mesh(
    x_left: f64,
    x_right: f64,
    dx: f64,
    clamped_left: bool,
    clamped_right: bool,
) -> Result<Mesh1D> {
    if !(dx > 0.0) || !(x_right > x_left) {
        return Err(Error::Config(format!("bad mesh span [{x_left}, {x_right}] with dx={dx}")));
    }
    let span = x_right - x_left;
    let ratio = span / dx;
    let n_el = ratio.round();
    if n_el < 1.0 || ((ratio - n_el) / ratio).abs() > 1e-10 {
        return Err(Error::Config(format!("span {span} is not an integer multiple of dx={dx}")));
    }
    let n_el = n_el as usize;
    let coords = (0..=n_el)
        .map(|i| if i == n_el { x_right } else { x_left + span * (i as f64) / (n_el as f64) })
        .collect();
    let mut dir = Vec::new();
    if clamped_left {
        dir.push(0);
    }
    if clamped_right {
        dir.push(n_el);
    }
    Mesh1D::new(coords, &dir)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialKind {
    Henky,
    LinearElastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstitutiveModel {
    pub kind: MaterialKind,
    pub youngs_modulus: f64,
    pub density: f64,
}

impl ConstitutiveModel {
    pub fn new(kind: MaterialKind, youngs_modulus: f64, density: f64) -> Result<Self> {
        if !(youngs_modulus > 0.0) || !(density > 0.0) {
            return Err(Error::Config("Young's modulus and density must be positive".into()));
        }
        Ok(ConstitutiveModel { kind, youngs_modulus, density })
    }

    pub fn henky(youngs_modulus: f64, density: f64) -> Result<Self> {
        Self::new(MaterialKind::Henky, youngs_modulus, density)
    }

    pub fn linear_elastic(youngs_modulus: f64, density: f64) -> Result<Self> {
        Self::new(MaterialKind::LinearElastic, youngs_modulus, density)
    }

    pub fn wave_speed(&self) -> f64 {
        (self.youngs_modulus / self.density).sqrt()
    }
}

/// First Piola-Kirchhoff stress and its derivative with respect to stretch.
pub fn stress_and_tangent(model: &ConstitutiveModel, stretch: f64) -> Result<(f64, f64)> {
    let e = model.youngs_modulus;
    match model.kind {
        MaterialKind::Henky => {
            if !(stretch > 0.0) {
                return Err(Error::InvertedElement { element: None, stretch });
            }
            let l = stretch.ln();
            Ok((e * l / stretch, e * (1.0 - l) / (stretch * stretch)))
        }
        MaterialKind::LinearElastic => Ok((e * (stretch - 1.0), e)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicState {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    pub a: DVector<f64>,
    pub t: f64,
}

impl KinematicState {
    pub fn zeros(n: usize, t: f64) -> Self {
        KinematicState { u: DVector::zeros(n), v: DVector::zeros(n), a: DVector::zeros(n), t }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn field(&self, f: Field) -> &DVector<f64> {
        match f {
            Field::Displacement => &self.u,
            Field::Velocity => &self.v,
            Field::Acceleration => &self.a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Displacement,
    Velocity,
    Acceleration,
}

impl Field {
    pub const ALL: [Field; 3] = [Field::Displacement, Field::Velocity, Field::Acceleration];

    pub fn name(self) -> &'static str {
        match self {
            Field::Displacement => "displacement",
            Field::Velocity => "velocity",
            Field::Acceleration => "acceleration",
        }
    }

    pub fn from_name(s: &str) -> Option<Field> {
        Field::ALL.into_iter().find(|f| f.name() == s)
    }
}

pub fn element_stretch(mesh: &Mesh1D, u: &[f64], e: usize) -> f64 {
    let [i, j] = mesh.elements[e];
    1.0 + (u[j] - u[i]) / mesh.lengths[e]
}

/// Consistent mass matrix for linear shape functions.
pub fn assemble_mass(mesh: &Mesh1D, model: &ConstitutiveModel) -> SymTridiag {
    let n = mesh.node_count();
    let mut m = SymTridiag::zeros(n);
    for (e, &[i, _]) in mesh.elements.iter().enumerate() {
        let c = model.density * mesh.lengths[e] / 6.0;
        m.diag[i] += 2.0 * c;
        m.diag[i + 1] += 2.0 * c;
        m.off[i] += c;
    }
    m
}

fn check_len(mesh: &Mesh1D, u: &DVector<f64>) -> Result<()> {
    if u.len() != mesh.node_count() {
        return Err(Error::Dimension(format!(
            "vector of length {} on mesh with {} nodes",
            u.len(),
            mesh.node_count()
        )));
    }
    Ok(())
}

/// Internal force vector. `v` is accepted for interface parity; both
/// constitutive models are rate independent.
pub fn internal_force(
    mesh: &Mesh1D,
    model: &ConstitutiveModel,
    u: &DVector<f64>,
    _v: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_len(mesh, u)?;
    let mut f = DVector::zeros(mesh.node_count());
    let us = u.as_slice();
    for e in 0..mesh.element_count() {
        let (p, _) = stress_and_tangent(model, element_stretch(mesh, us, e)).map_err(|x| x.with_element(e))?;
        f[e] -= p;
        f[e + 1] += p;
    }
    Ok(f)
}

pub fn tangent_stiffness(mesh: &Mesh1D, model: &ConstitutiveModel, u: &DVector<f64>) -> Result<SymTridiag> {
    check_len(mesh, u)?;
    let mut k = SymTridiag::zeros(mesh.node_count());
    let us = u.as_slice();
    for e in 0..mesh.element_count() {
        let (_, dp) = stress_and_tangent(model, element_stretch(mesh, us, e)).map_err(|x| x.with_element(e))?;
        let c = dp / mesh.lengths[e];
        k.diag[e] += c;
        k.diag[e + 1] += c;
        k.off[e] -= c;
    }
    Ok(k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementContribution {
    pub element: usize,
    pub nodes: [usize; 2],
    pub force: [f64; 2],
    pub stiffness: [[f64; 2]; 2],
}

/// Unassembled element forces and stiffness blocks, in element order.
pub fn element_contributions(
    mesh: &Mesh1D,
    model: &ConstitutiveModel,
    u: &DVector<f64>,
    _v: &DVector<f64>,
) -> Result<Vec<ElementContribution>> {
    check_len(mesh, u)?;
    let us = u.as_slice();
    (0..mesh.element_count())
        .map(|e| {
            let (p, dp) = stress_and_tangent(model, element_stretch(mesh, us, e)).map_err(|x| x.with_element(e))?;
            let c = dp / mesh.lengths[e];
            Ok(ElementContribution {
                element: e,
                nodes: mesh.elements[e],
                force: [-p, p],
                stiffness: [[c, -c], [-c, c]],
            })
        })
        .collect()
}

/// Weighted assembly of element contributions (weight 1 reproduces
/// `internal_force` / `tangent_stiffness`).
pub fn assemble_contributions(
    n_nodes: usize,
    contributions: &[ElementContribution],
    weights: Option<&[f64]>,
) -> (DVector<f64>, DMatrix<f64>) {
    let mut f = DVector::zeros(n_nodes);
    let mut k = DMatrix::zeros(n_nodes, n_nodes);
    for c in contributions {
        let w = weights.map_or(1.0, |w| w[c.element]);
        for a in 0..2 {
            f[c.nodes[a]] += w * c.force[a];
            for b in 0..2 {
                k[(c.nodes[a], c.nodes[b])] += w * c.stiffness[a][b];
            }
        }
    }
    (f, k)
}
