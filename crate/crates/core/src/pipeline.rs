//! Reproductive and predictive experiment pipelines.
//!
//! Every stage reads its inputs from and writes its outputs to one directory,
//! so stages can run in a single process or one per invocation.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;

use crate::config::{ExperimentConfig, ModelSpec, PipelineKind, VariantSpec};
use crate::ecsw::{boundary_elements, build_training_system, nnls_solve};
use crate::error::{Error, Result};
use crate::fem::{Field, Mesh1D};
use crate::ic::InitialCondition;
use crate::io::{
    load_basis, load_sample_set, load_snapshots, mesh_hash, save_basis, save_sample_set, save_snapshots, SampleFile,
    SolutionWriter,
};
use crate::metrics::{
    csv_err, pareto_table, read_records_csv, write_records_csv, FieldHistory, HistoryRecorder, MseAccumulator, ParetoRow,
    RunRecord,
};
use crate::newmark::DirichletData;
use crate::pod::{compute_pod, modes_for_energy, projection_error_curve, PodBasis, PodSize, SnapshotMatrix};
use crate::rom::set_reference_state;
use crate::schwarz::{run_coupled, DomainDecomposition, FanOut, HistorySink, NullSink, SchwarzStats, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    All,
    Snapshots,
    Pod,
    Ecsw,
    Couple,
    Report,
}

impl Stage {
    pub const SEQUENCE: [Stage; 5] = [Stage::Snapshots, Stage::Pod, Stage::Ecsw, Stage::Couple, Stage::Report];

    pub fn name(self) -> &'static str {
        match self {
            Stage::All => "all",
            Stage::Snapshots => "snapshots",
            Stage::Pod => "pod",
            Stage::Ecsw => "ecsw",
            Stage::Couple => "couple",
            Stage::Report => "report",
        }
    }

    /// Process exit code for a failure in this stage.
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::All => 1,
            Stage::Snapshots => 10,
            Stage::Pod => 11,
            Stage::Ecsw => 12,
            Stage::Couple => 13,
            Stage::Report => 14,
        }
    }
}

#[derive(Debug)]
pub struct StageError {
    pub stage: Stage,
    pub source: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage '{}' failed: {}", self.stage.name(), self.source)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

/// What a pipeline run produced.
#[derive(Debug, Clone, Default)]
pub struct PipelineOutput {
    /// FOM-FOM reference first, then the configured variants.
    pub records: Vec<RunRecord>,
    pub pareto: Vec<ParetoRow>,
    /// Modes reaching the configured energy fraction, per subdomain.
    pub energy_modes: [usize; 2],
    pub reference_stats: Option<SchwarzStats>,
    /// (θ, N_S) pairs.
    pub theta_sweep: Vec<(f64, usize)>,
    /// Per subdomain rows of (kind, M, E_u, E_v, E_a).
    pub projection_errors: Vec<ProjectionRow>,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionRow {
    pub kind: &'static str,
    pub subdomain: usize,
    pub modes: usize,
    pub errors: [f64; 3],
}

pub struct Pipeline<'a> {
    cfg: &'a ExperimentConfig,
    out: PathBuf,
    meshes: [Mesh1D; 2],
    schwarz_nodes: [Vec<usize>; 2],
}

fn field_tag(f: Field) -> &'static str {
    match f {
        Field::Displacement => "u",
        Field::Velocity => "v",
        Field::Acceleration => "a",
    }
}

impl<'a> Pipeline<'a> {
    pub fn new(cfg: &'a ExperimentConfig, out: &Path) -> Result<Self> {
        cfg.validate()?;
        std::fs::create_dir_all(out)?;
        let dd = cfg.layout().build(cfg.model()?, cfg.newmark()?, [Variant::Fom, Variant::Fom], cfg.integrator.solver, cfg.schwarz.interface_force)?;
        let [a, b] = [&dd.subdomains[0], &dd.subdomains[1]];
        Ok(Pipeline {
            cfg,
            out: out.to_path_buf(),
            meshes: [a.mesh.clone(), b.mesh.clone()],
            schwarz_nodes: [a.schwarz_boundary_nodes.clone(), b.schwarz_boundary_nodes.clone()],
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn snapshot_path(&self, prefix: &str, k: usize, f: Field) -> PathBuf {
        self.path(&format!("{prefix}_sd{}_{}.bin", k + 1, field_tag(f)))
    }

    fn basis_path(&self, k: usize) -> PathBuf {
        self.path(&format!("basis_sd{}.txt", k + 1))
    }

    fn sample_path(&self, k: usize, m: usize) -> PathBuf {
        self.path(&format!("sample_sd{}_M{m}.txt", k + 1))
    }

    fn decomposition(&self, variants: [Variant; 2]) -> Result<DomainDecomposition> {
        let c = self.cfg;
        c.layout().build(c.model()?, c.newmark()?, variants, c.integrator.solver, c.schwarz.interface_force)
    }

    /// Runs `stage` (all stages in order for `Stage::All`).
    pub fn run(&self, stage: Stage) -> std::result::Result<PipelineOutput, StageError> {
        let mut out = PipelineOutput::default();
        let stages: Vec<Stage> = if stage == Stage::All { Stage::SEQUENCE.to_vec() } else { vec![stage] };
        for s in stages {
            info!("stage {}", s.name());
            self.run_one(s, &mut out).map_err(|e| StageError { stage: s, source: e })?;
        }
        Ok(out)
    }

    fn run_one(&self, stage: Stage, out: &mut PipelineOutput) -> Result<()> {
        match stage {
            Stage::Snapshots => self.snapshots(out),
            Stage::Pod => self.pod(out),
            Stage::Ecsw => self.ecsw(out),
            Stage::Couple => self.couple(out),
            Stage::Report => self.report(out),
            Stage::All => unreachable!("expanded by run"),
        }
    }

    /// FOM-FOM run on `ic` with every step recorded.
    fn reference_run(&self, ic: InitialCondition) -> Result<(Vec<FieldHistory>, SchwarzStats)> {
        let dd = self.decomposition([Variant::Fom, Variant::Fom])?;
        let mut rec = HistoryRecorder::new(self.cfg.training.snapshot_stride);
        let stats = run_coupled(&dd, &self.cfg.schwarz_config()?, &|x| ic.eval(x), &mut rec)?;
        Ok((rec.histories, stats))
    }

    fn save_history(&self, prefix: &str, histories: &[FieldHistory], out: &mut PipelineOutput) -> Result<()> {
        let dt = self.cfg.discretization.dt * self.cfg.training.snapshot_stride as f64;
        for (k, h) in histories.iter().enumerate() {
            for f in Field::ALL {
                let p = self.snapshot_path(prefix, k, f);
                save_snapshots(&p, &h.snapshots(f)?, dt)?;
                out.files.push(p);
            }
        }
        Ok(())
    }

    fn load_history(&self, prefix: &str) -> Result<Vec<FieldHistory>> {
        (0..2)
            .map(|k| {
                let [u, v, a] = Field::ALL.map(|f| load_snapshots(&self.snapshot_path(prefix, k, f)).map(|(s, _)| s));
                FieldHistory::from_snapshots(u?, v?, a?)
            })
            .collect()
    }

    fn fom_record(&self, stats: &SchwarzStats) -> RunRecord {
        RunRecord {
            label: "FOM-FOM".into(),
            mse: [[0.0; 3]; 2],
            cpu_seconds: stats.wall_time.as_secs_f64(),
            schwarz_iterations: stats.total_iterations,
            basis_sizes: [None, None],
            sample_counts: [None, None],
        }
    }

    fn snapshots(&self, out: &mut PipelineOutput) -> Result<()> {
        let (hist, stats) = self.reference_run(self.cfg.training.ic)?;
        info!("training FOM-FOM: N_S = {}, {:.2} s", stats.total_iterations, stats.wall_time.as_secs_f64());
        self.save_history("snapshots", &hist, out)?;
        let p = self.path("training_run.csv");
        write_records_csv(BufWriter::new(File::create(&p)?), &[self.fom_record(&stats)])?;
        out.files.push(p);
        out.reference_stats = Some(stats);
        Ok(())
    }

    fn training_displacements(&self, k: usize) -> Result<SnapshotMatrix> {
        Ok(load_snapshots(&self.snapshot_path("snapshots", k, Field::Displacement))?.0)
    }

    /// Largest basis any consumer needs for subdomain `k`.
    fn required_modes(&self, k: usize, sv: &[f64]) -> Result<usize> {
        let mut m = modes_for_energy(sv, self.cfg.training.energy)?;
        for v in &self.cfg.variants {
            if let Some(size) = v.subdomains[k].size() {
                m = m.max(resolve_size(size, sv)?);
            }
        }
        if self.cfg.pipeline == PipelineKind::Predictive {
            m = m.max(self.cfg.evaluation.projection_sizes.iter().copied().max().unwrap_or(0));
        }
        Ok(m)
    }

    fn pod(&self, out: &mut PipelineOutput) -> Result<()> {
        let mut rows = Vec::new();
        for k in 0..2 {
            let snap = self.training_displacements(k)?;
            let dir = self.meshes[k].dirichlet_ids().to_vec();
            // one SVD; the basis is cut to the largest size requested
            let all = (snap.dofs() - dir.len()).min(snap.count());
            let full = compute_pod(&snap, &dir, PodSize::Count(all))?;
            let m = self.required_modes(k, &full.singular_values)?.min(full.size().max(1));
            let basis = full.truncate(m)?;
            let e = modes_for_energy(&basis.singular_values, self.cfg.training.energy)?;
            out.energy_modes[k] = e;
            info!("subdomain {}: {} modes for energy {}, basis of {} saved", k + 1, e, self.cfg.training.energy, m);
            rows.push((k + 1, e, m));
            let p = self.basis_path(k);
            save_basis(&p, &basis, &mesh_hash(&self.meshes[k]))?;
            out.files.push(p);
        }
        let p = self.path("pod_energy.csv");
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&p)?));
        w.write_record(["subdomain", "energy", "modes", "saved_modes"]).map_err(csv_err)?;
        for (k, e, m) in rows {
            w.write_record(&[k.to_string(), self.cfg.training.energy.to_string(), e.to_string(), m.to_string()]).map_err(csv_err)?;
        }
        w.flush()?;
        out.files.push(p);
        Ok(())
    }

    fn basis_for(&self, k: usize, spec: &ModelSpec) -> Result<PodBasis> {
        let (size, file) = match spec {
            ModelSpec::Fom => return Err(Error::InvalidArgument("full-order model has no basis".into())),
            ModelSpec::Rom { modes, energy, basis_file } | ModelSpec::Hrom { modes, energy, basis_file, .. } => {
                ((*modes, *energy), basis_file.clone())
            }
        };
        let path = file.unwrap_or_else(|| self.basis_path(k));
        let bf = load_basis(&path)?;
        if bf.mesh_hash != mesh_hash(&self.meshes[k]) {
            return Err(Error::Config(format!("{} was built for a different mesh", path.display())));
        }
        let m = resolve_size(size, &bf.basis.singular_values)?;
        if m > bf.basis.size() {
            log::warn!("subdomain {}: {m} modes requested, {} available", k + 1, bf.basis.size());
            return Ok(bf.basis);
        }
        bf.basis.truncate(m)
    }

    /// Snapshot columns used for ECSW training: N_h equally spaced steps
    /// after t = 0.
    fn ecsw_columns(&self) -> Result<Vec<usize>> {
        let steps = self.cfg.schwarz_config()?.interval_count()?;
        let n_h = self.cfg.training.ecsw_snapshots;
        let stride = self.cfg.training.snapshot_stride;
        if n_h > steps / stride {
            return Err(Error::Config(format!("{n_h} ECSW snapshots requested from {} recorded steps", steps / stride)));
        }
        let every = steps / n_h;
        Ok((1..=n_h).map(|j| (j * every) / stride).collect())
    }

    fn hrom_requests(&self) -> Vec<(usize, ModelSpec)> {
        let mut v: Vec<(usize, ModelSpec)> = Vec::new();
        for var in &self.cfg.variants {
            for (k, s) in var.subdomains.iter().enumerate() {
                if let ModelSpec::Hrom { sample_file: None, .. } = s {
                    if !v.iter().any(|(k2, s2)| *k2 == k && s2 == s) {
                        v.push((k, s.clone()));
                    }
                }
            }
        }
        v
    }

    fn ecsw(&self, out: &mut PipelineOutput) -> Result<()> {
        let requests = self.hrom_requests();
        if requests.is_empty() {
            return Ok(());
        }
        let cols = self.ecsw_columns()?;
        let model = self.cfg.model()?;
        for k in 0..2 {
            if !requests.iter().any(|(kk, _)| *kk == k) {
                continue;
            }
            let mesh = &self.meshes[k];
            let snap = self.training_displacements(k)?.select(&cols)?;
            let dir = mesh.dirichlet_ids();
            let refstates = (0..snap.count())
                .map(|s| {
                    let mut d = DirichletData::homogeneous(dir.len());
                    for (slot, &i) in dir.iter().enumerate() {
                        d.u[slot] = snap.data[(i, s)];
                    }
                    set_reference_state(mesh, &d)
                })
                .collect::<Result<Vec<_>>>()?;
            let forced = boundary_elements(mesh, &self.schwarz_nodes[k]);
            for (_, spec) in requests.iter().filter(|(kk, _)| *kk == k) {
                let basis = self.basis_for(k, spec)?;
                let m = basis.size();
                let p = self.sample_path(k, m);
                if out.files.contains(&p) {
                    continue;
                }
                let system = build_training_system(mesh, &model, &basis, &refstates, &snap)?;
                let sample = nnls_solve(&system, self.cfg.training.ecsw_step_tolerance, self.cfg.training.ecsw_max_iters, &forced)?;
                info!("subdomain {} M={m}: N_e = {}, training residual {:.3e}", k + 1, sample.count(), sample.training_residual);
                let file = SampleFile {
                    sample,
                    mesh_hash: mesh_hash(mesh),
                    modes: m,
                    training_snapshots: snap.count(),
                    step_tolerance: self.cfg.training.ecsw_step_tolerance,
                };
                save_sample_set(&p, &file)?;
                out.files.push(p);
            }
        }
        Ok(())
    }

    fn variant(&self, k: usize, spec: &ModelSpec) -> Result<Variant> {
        Ok(match spec {
            ModelSpec::Fom => Variant::Fom,
            ModelSpec::Rom { .. } => Variant::Rom(self.basis_for(k, spec)?),
            ModelSpec::Hrom { sample_file, .. } => {
                let basis = self.basis_for(k, spec)?;
                let path = sample_file.clone().unwrap_or_else(|| self.sample_path(k, basis.size()));
                let sf = load_sample_set(&path)?;
                if sf.mesh_hash != mesh_hash(&self.meshes[k]) || sf.modes != basis.size() {
                    return Err(Error::Config(format!("{} does not match subdomain {} with {} modes", path.display(), k + 1, basis.size())));
                }
                Variant::Hrom(basis, sf.sample)
            }
        })
    }

    /// Runs one configured variant against the reference history.
    pub fn run_variant(&self, spec: &VariantSpec, reference: &[FieldHistory], out: &mut PipelineOutput) -> Result<RunRecord> {
        let variants = [self.variant(0, &spec.subdomains[0])?, self.variant(1, &spec.subdomains[1])?];
        let basis_sizes = [variants[0].basis_size(), variants[1].basis_size()];
        let sample_counts = [variants[0].sample_count(), variants[1].sample_count()];
        let dd = self.decomposition(variants)?;
        let label = spec.label();
        let ic = self.cfg.evaluation_ic();
        let mut acc = MseAccumulator::new(reference, self.cfg.training.snapshot_stride);
        let mut writer = SolutionWriter::new(&self.out, &file_label(&label), self.meshes.to_vec(), self.cfg.evaluation.output_steps.clone());
        let stats = {
            let mut sinks = FanOut(vec![&mut acc as &mut dyn HistorySink, &mut writer]);
            run_coupled(&dd, &self.cfg.schwarz_config()?, &|x| ic.eval(x), &mut sinks)?
        };
        out.files.append(&mut writer.written);
        let e = acc.finish()?;
        info!("{label}: mse_u = {:.3e}/{:.3e}, N_S = {}, {:.2} s", e[0][0], e[1][0], stats.total_iterations, stats.wall_time.as_secs_f64());
        Ok(RunRecord {
            label,
            mse: [e[0], e[1]],
            cpu_seconds: stats.wall_time.as_secs_f64(),
            schwarz_iterations: stats.total_iterations,
            basis_sizes,
            sample_counts,
        })
    }

    fn couple(&self, out: &mut PipelineOutput) -> Result<()> {
        let (reference, fom) = match self.cfg.pipeline {
            PipelineKind::Reproductive => {
                let rec = read_records_csv(BufReader::new(File::open(self.path("training_run.csv"))?))?;
                let fom = rec.into_iter().next().ok_or_else(|| Error::Format("empty training_run.csv".into()))?;
                (self.load_history("snapshots")?, fom)
            }
            PipelineKind::Predictive => {
                let (hist, stats) = self.reference_run(self.cfg.evaluation_ic())?;
                self.save_history("reference", &hist, out)?;
                let fom = self.fom_record(&stats);
                out.reference_stats = Some(stats);
                (hist, fom)
            }
        };
        if !self.cfg.evaluation.output_steps.is_empty() {
            self.write_reference_solutions(&reference, out)?;
        }
        let mut records = vec![fom];
        for spec in &self.cfg.variants {
            records.push(self.run_variant(spec, &reference, out)?);
        }
        drop(reference);
        if !self.cfg.schwarz.theta_sweep.is_empty() {
            let dd = self.decomposition([Variant::Fom, Variant::Fom])?;
            let ic = self.cfg.evaluation_ic();
            let p = self.path("theta_sweep.csv");
            let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&p)?));
            w.write_record(["theta", "NS", "cpu_s"]).map_err(csv_err)?;
            for &theta in &self.cfg.schwarz.theta_sweep {
                let stats = run_coupled(&dd, &self.cfg.schwarz_with_theta(theta)?, &|x| ic.eval(x), &mut NullSink)?;
                info!("theta {theta}: N_S = {}", stats.total_iterations);
                w.write_record(&[theta.to_string(), stats.total_iterations.to_string(), format!("{:.6}", stats.wall_time.as_secs_f64())])
                    .map_err(csv_err)?;
                out.theta_sweep.push((theta, stats.total_iterations));
            }
            w.flush()?;
            out.files.push(p);
        }
        let p = self.path("metrics.csv");
        write_records_csv(BufWriter::new(File::create(&p)?), &records)?;
        out.files.push(p);
        out.records = records;
        Ok(())
    }

    fn write_reference_solutions(&self, reference: &[FieldHistory], out: &mut PipelineOutput) -> Result<()> {
        let stride = self.cfg.training.snapshot_stride;
        let mut writer = SolutionWriter::new(&self.out, "FOM-FOM", self.meshes.to_vec(), self.cfg.evaluation.output_steps.clone());
        for col in 0..reference[0].len() {
            let states: Vec<_> = reference
                .iter()
                .map(|h| crate::fem::KinematicState {
                    u: h.column(Field::Displacement, col).to_vec().into(),
                    v: h.column(Field::Velocity, col).to_vec().into(),
                    a: h.column(Field::Acceleration, col).to_vec().into(),
                    t: h.times[col],
                })
                .collect();
            writer.record(col * stride, &states)?;
        }
        out.files.append(&mut writer.written);
        Ok(())
    }

    fn report(&self, out: &mut PipelineOutput) -> Result<()> {
        let records = read_records_csv(BufReader::new(File::open(self.path("metrics.csv"))?))?;
        let pareto = pareto_table(&records);
        let p = self.path("pareto.csv");
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&p)?));
        w.write_record(["label", "cpu_s", "mean_mse_u", "pareto_optimal"]).map_err(csv_err)?;
        for r in &pareto {
            w.write_record(&[r.label.clone(), format!("{:.6}", r.cpu_seconds), format!("{:.6e}", r.mean_mse_u), r.pareto_optimal.to_string()])
                .map_err(csv_err)?;
        }
        w.flush()?;
        out.files.push(p);
        out.pareto = pareto;
        if self.cfg.pipeline == PipelineKind::Predictive && !self.cfg.evaluation.projection_sizes.is_empty() {
            self.projection_errors(out)?;
        }
        let p = self.path("summary.txt");
        let mut f = BufWriter::new(File::create(&p)?);
        writeln!(f, "{}", self.cfg.name)?;
        for r in &out.pareto {
            writeln!(f, "{:<24} cpu {:>10.3} s  mean mse_u {:.3e}{}", r.label, r.cpu_seconds, r.mean_mse_u, if r.pareto_optimal { "  *" } else { "" })?;
        }
        f.flush()?;
        out.files.push(p);
        Ok(())
    }

    /// E_proj of the evaluation snapshots onto the training (predictive) basis
    /// and onto a basis built from the evaluation snapshots themselves
    /// (reproductive).
    fn projection_errors(&self, out: &mut PipelineOutput) -> Result<()> {
        let sizes = &self.cfg.evaluation.projection_sizes;
        let max = sizes.iter().copied().max().unwrap_or(0);
        let mut rows = Vec::new();
        for k in 0..2 {
            let snaps = Field::ALL.map(|f| load_snapshots(&self.snapshot_path("reference", k, f)).map(|(s, _)| s));
            let [u, v, a] = snaps;
            let (u, v, a) = (u?, v?, a?);
            let dir = self.meshes[k].dirichlet_ids().to_vec();
            let predictive = load_basis(&self.basis_path(k))?.basis;
            let reproductive = compute_pod(&u, &dir, PodSize::Count(max.min(u.dofs() - dir.len()).min(u.count()).max(1)))?;
            for (kind, basis) in [("reproductive", &reproductive), ("predictive", &predictive)] {
                let usable: Vec<usize> = sizes.iter().copied().filter(|&m| m <= basis.size()).collect();
                let curves = [&u, &v, &a].map(|s| projection_error_curve(s, basis, &usable));
                let [cu, cv, ca] = curves;
                let (cu, cv, ca) = (cu?, cv?, ca?);
                for (i, &m) in usable.iter().enumerate() {
                    rows.push(ProjectionRow { kind, subdomain: k + 1, modes: m, errors: [cu[i], cv[i], ca[i]] });
                }
            }
        }
        let p = self.path("projection_error.csv");
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&p)?));
        w.write_record(["basis", "subdomain", "M", "proj_u", "proj_v", "proj_a"]).map_err(csv_err)?;
        for r in &rows {
            w.write_record(&[
                r.kind.to_string(),
                r.subdomain.to_string(),
                r.modes.to_string(),
                format!("{:.6e}", r.errors[0]),
                format!("{:.6e}", r.errors[1]),
                format!("{:.6e}", r.errors[2]),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        out.files.push(p);
        out.projection_errors = rows;
        Ok(())
    }
}

fn resolve_size(size: (Option<usize>, Option<f64>), sv: &[f64]) -> Result<usize> {
    match size {
        (Some(m), _) => Ok(m),
        (None, Some(e)) => modes_for_energy(sv, e),
        (None, None) => Err(Error::Config("reduced model without a size".into())),
    }
}

fn file_label(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

pub fn pipeline_reproductive(cfg: &ExperimentConfig, out: &Path) -> std::result::Result<PipelineOutput, StageError> {
    if cfg.pipeline != PipelineKind::Reproductive {
        return Err(StageError { stage: Stage::All, source: Error::Config("configuration is not reproductive".into()) });
    }
    Pipeline::new(cfg, out).map_err(|e| StageError { stage: Stage::All, source: e })?.run(Stage::All)
}

pub fn pipeline_predictive(cfg: &ExperimentConfig, out: &Path) -> std::result::Result<PipelineOutput, StageError> {
    if cfg.pipeline != PipelineKind::Predictive {
        return Err(StageError { stage: Stage::All, source: Error::Config("configuration is not predictive".into()) });
    }
    Pipeline::new(cfg, out).map_err(|e| StageError { stage: Stage::All, source: e })?.run(Stage::All)
}
