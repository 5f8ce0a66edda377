//! Experiment configuration read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{ConstitutiveModel, MaterialKind};
use crate::ic::InitialCondition;
use crate::linalg::LinearSolver;
use crate::newmark::{JacobianUpdate, NewmarkParams};
use crate::schwarz::{BarLayout, InterfaceForce, SchwarzConfig, Transfer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineKind {
    /// Train and evaluate on the same initial condition.
    Reproductive,
    /// Train on `training.ic`, evaluate on `evaluation.ic`.
    Predictive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// dx = 1e-3, dt = ΔT = 1e-7, T = 1e-3.
    Paper,
    /// dx = 5e-3, dt = ΔT = 5e-7, T = 2e-4.
    Desk,
}

impl Scale {
    pub fn discretization(self) -> Discretization {
        match self {
            Scale::Paper => Discretization { dx: [1e-3, 1e-3], dt: 1e-7, controller_dt: 1e-7, final_time: 1e-3 },
            Scale::Desk => Discretization { dx: [5e-3, 5e-3], dt: 5e-7, controller_dt: 5e-7, final_time: 2e-4 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub x_left: f64,
    pub x_right: f64,
    pub split: f64,
    #[serde(default)]
    pub overlap: Option<f64>,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry { x_left: 0.0, x_right: 1.0, split: 0.6, overlap: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    pub kind: MaterialKind,
    pub youngs_modulus: f64,
    pub density: f64,
}

impl Default for Material {
    fn default() -> Self {
        Material { kind: MaterialKind::Henky, youngs_modulus: 1e9, density: 1000.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    pub dx: [f64; 2],
    pub dt: f64,
    pub controller_dt: f64,
    pub final_time: f64,
}

impl Default for Discretization {
    fn default() -> Self {
        Scale::Paper.discretization()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Integrator {
    pub beta: f64,
    pub gamma: f64,
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    pub jacobian: JacobianUpdate,
    pub solver: LinearSolver,
}

impl Default for Integrator {
    fn default() -> Self {
        let p = NewmarkParams::default();
        Integrator {
            beta: p.beta,
            gamma: p.gamma,
            newton_tol: p.newton_tol,
            newton_max_iters: p.newton_max_iters,
            jacobian: JacobianUpdate::Reuse,
            solver: LinearSolver::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchwarzSection {
    pub delta: f64,
    pub theta: f64,
    pub max_iters: usize,
    pub interface_force: InterfaceForce,
    pub transfer: Transfer,
    /// Extra FOM-FOM runs, one per θ, reporting N_S.
    pub theta_sweep: Vec<f64>,
}

impl Default for SchwarzSection {
    fn default() -> Self {
        SchwarzSection {
            delta: 1e-11,
            theta: 1.0,
            max_iters: 100,
            interface_force: InterfaceForce::Consistent,
            transfer: Transfer::All,
            theta_sweep: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Training {
    pub ic: InitialCondition,
    /// Record every n-th controller step as a snapshot.
    #[serde(default = "one")]
    pub snapshot_stride: usize,
    /// Energy fraction reported alongside the bases.
    #[serde(default = "energy")]
    pub energy: f64,
    /// N_h: equally spaced snapshots (t = 0 excluded) used to train ECSW.
    #[serde(default = "twenty")]
    pub ecsw_snapshots: usize,
    #[serde(default = "ecsw_tol")]
    pub ecsw_step_tolerance: f64,
    #[serde(default)]
    pub ecsw_max_iters: Option<usize>,
}

fn one() -> usize {
    1
}
fn energy() -> f64 {
    0.9999
}
fn twenty() -> usize {
    20
}
fn ecsw_tol() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Evaluation {
    /// Required for predictive runs; ignored for reproductive ones.
    pub ic: Option<InitialCondition>,
    /// Controller steps at which solution CSVs are written.
    pub output_steps: Vec<usize>,
    /// Basis sizes for projection-error curves.
    pub projection_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Fom,
    Rom {
        #[serde(default)]
        modes: Option<usize>,
        #[serde(default)]
        energy: Option<f64>,
        #[serde(default)]
        basis_file: Option<PathBuf>,
    },
    Hrom {
        #[serde(default)]
        modes: Option<usize>,
        #[serde(default)]
        energy: Option<f64>,
        #[serde(default)]
        basis_file: Option<PathBuf>,
        #[serde(default)]
        sample_file: Option<PathBuf>,
    },
}

impl ModelSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::Fom => "FOM",
            ModelSpec::Rom { .. } => "ROM",
            ModelSpec::Hrom { .. } => "HROM",
        }
    }

    pub fn size(&self) -> Option<(Option<usize>, Option<f64>)> {
        match self {
            ModelSpec::Fom => None,
            ModelSpec::Rom { modes, energy, .. } | ModelSpec::Hrom { modes, energy, .. } => Some((*modes, *energy)),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some((m, e)) = self.size() {
            match (m, e) {
                (Some(0), _) => return Err(Error::Config("a reduced model needs at least one mode".into())),
                (Some(_), Some(_)) | (None, None) => {
                    return Err(Error::Config("give exactly one of `modes` and `energy`".into()));
                }
                (None, Some(e)) if !(e > 0.0 && e <= 1.0) => {
                    return Err(Error::Config(format!("energy {e} outside (0, 1]")));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantSpec {
    #[serde(default)]
    pub label: Option<String>,
    pub subdomains: [ModelSpec; 2],
}

impl VariantSpec {
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| {
            let sizes: Vec<String> = self
                .subdomains
                .iter()
                .map(|s| match s.size() {
                    Some((Some(m), _)) => m.to_string(),
                    Some((None, Some(e))) => format!("{e}"),
                    _ => "-".into(),
                })
                .collect();
            format!("{}-{}({})", self.subdomains[0].kind(), self.subdomains[1].kind(), sizes.join("/"))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub pipeline: PipelineKind,
    #[serde(default)]
    pub scale: Option<Scale>,
    #[serde(default)]
    pub geometry: Geometry,
    #[serde(default)]
    pub material: Material,
    #[serde(default)]
    pub discretization: Discretization,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default)]
    pub schwarz: SchwarzSection,
    pub training: Training,
    #[serde(default)]
    pub evaluation: Evaluation,
    #[serde(default)]
    pub variants: Vec<VariantSpec>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(s) = cfg.scale {
            cfg.discretization = s.discretization();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Replaces the discretization with a preset.
    pub fn with_scale(mut self, scale: Scale) -> Result<Self> {
        self.scale = Some(scale);
        self.discretization = scale.discretization();
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.model()?;
        self.layout().spans()?;
        self.newmark()?.validate()?;
        self.schwarz_config()?.validate()?;
        self.schwarz_config()?.interval_count()?;
        self.training.ic.validate()?;
        if self.training.snapshot_stride == 0 || self.training.ecsw_snapshots == 0 {
            return Err(Error::Config("snapshot stride and ECSW snapshot count must be positive".into()));
        }
        if !(self.training.ecsw_step_tolerance > 0.0) {
            return Err(Error::Config("ECSW step tolerance must be positive".into()));
        }
        if !(self.training.energy > 0.0 && self.training.energy <= 1.0) {
            return Err(Error::Config("energy target outside (0, 1]".into()));
        }
        match (self.pipeline, &self.evaluation.ic) {
            (PipelineKind::Predictive, None) => {
                return Err(Error::Config("predictive pipeline needs evaluation.ic".into()));
            }
            (_, Some(ic)) => ic.validate()?,
            _ => {}
        }
        for &t in &self.schwarz.theta_sweep {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::Config(format!("theta {t} in sweep outside (0, 1]")));
            }
        }
        for v in &self.variants {
            for s in &v.subdomains {
                s.validate()?;
            }
        }
        Ok(())
    }

    pub fn model(&self) -> Result<ConstitutiveModel> {
        ConstitutiveModel::new(self.material.kind, self.material.youngs_modulus, self.material.density)
    }

    pub fn layout(&self) -> BarLayout {
        let g = self.geometry;
        BarLayout { x_left: g.x_left, x_right: g.x_right, split: g.split, overlap: g.overlap, dx: self.discretization.dx }
    }

    pub fn newmark(&self) -> Result<NewmarkParams> {
        let i = self.integrator;
        let p = NewmarkParams {
            beta: i.beta,
            gamma: i.gamma,
            dt: self.discretization.dt,
            newton_tol: i.newton_tol,
            newton_max_iters: i.newton_max_iters,
            jacobian: i.jacobian,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn schwarz_config(&self) -> Result<SchwarzConfig> {
        self.schwarz_with_theta(self.schwarz.theta)
    }

    pub fn schwarz_with_theta(&self, theta: f64) -> Result<SchwarzConfig> {
        let cfg = SchwarzConfig {
            delta: self.schwarz.delta,
            theta,
            controller_dt: self.discretization.controller_dt,
            max_schwarz_iters: self.schwarz.max_iters,
            final_time: self.discretization.final_time,
            transfer: self.schwarz.transfer,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Initial condition of the evaluation runs.
    pub fn evaluation_ic(&self) -> InitialCondition {
        match self.pipeline {
            PipelineKind::Reproductive => self.training.ic,
            PipelineKind::Predictive => self.evaluation.ic.unwrap_or(self.training.ic),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
pipeline = "reproductive"

[training]
ic = { kind = "symmetric_gaussian", a = 1e-3, b = 0.5, s = 0.02 }

[[variants]]
subdomains = [{ model = "fom" }, { model = "rom", modes = 200 }]
"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.geometry.split, 0.6);
        assert_eq!(c.discretization.dx, [1e-3, 1e-3]);
        assert_eq!(c.integrator.beta, 0.49);
        assert_eq!(c.integrator.gamma, 0.9);
        assert_eq!(c.schwarz.delta, 1e-11);
        assert_eq!(c.training.ecsw_snapshots, 20);
        assert_eq!(c.variants[0].label(), "FOM-ROM(-/200)");
        assert_eq!(c.schwarz_config().unwrap().interval_count().unwrap(), 10_000);
    }

    #[test]
    fn scale_preset_overrides() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap().with_scale(Scale::Desk).unwrap();
        assert_eq!(c.discretization.dt, 5e-7);
        assert_eq!(c.schwarz_config().unwrap().interval_count().unwrap(), 400);
    }

    #[test]
    fn toml_round_trip() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn invalid_configs() {
        let bad_split = MINIMAL.replace("pipeline = \"reproductive\"", "pipeline = \"reproductive\"\n[geometry]\nx_left = 0.0\nx_right = 1.0\nsplit = 1.5");
        assert!(ExperimentConfig::from_toml(&bad_split).is_err());
        let predictive = MINIMAL.replace("reproductive", "predictive");
        assert!(ExperimentConfig::from_toml(&predictive).is_err());
        let both = MINIMAL.replace("modes = 200", "modes = 200, energy = 0.9");
        assert!(ExperimentConfig::from_toml(&both).is_err());
        let unknown = MINIMAL.replace("name = \"t\"", "name = \"t\"\nbogus = 1");
        assert!(ExperimentConfig::from_toml(&unknown).is_err());
        let theta = MINIMAL.replace("[training]", "[schwarz]\ntheta = 0.0\n[training]");
        assert!(ExperimentConfig::from_toml(&theta).is_err());
    }
}
