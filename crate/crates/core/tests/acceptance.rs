//! Acceptance suite. One line per criterion; exits nonzero if any criterion
//! fails. Set `SCHWARZ_ROM_SKIP_SLOW=1` to skip the full-scale items.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use schwarz_rom::config::{ExperimentConfig, Scale};
use schwarz_rom::ecsw::{build_training_system, hrom_assemble, EcswSampleSet};
use schwarz_rom::fem::{
    build_uniform_mesh, internal_force, stress_and_tangent, tangent_stiffness, ConstitutiveModel, Field, KinematicState, Mesh1D,
};
use schwarz_rom::ic::ic_symmetric_gaussian;
use schwarz_rom::io::{load_basis, load_snapshots};
use schwarz_rom::linalg::LinearSolver;
use schwarz_rom::metrics::{FieldHistory, MseAccumulator, RunRecord};
use schwarz_rom::newmark::{DirichletData, FomModel, JacobianCache, NewmarkParams};
use schwarz_rom::nnls::{nnls, NnlsOptions};
use schwarz_rom::pipeline::{pipeline_predictive, pipeline_reproductive, PipelineOutput, Pipeline, Stage};
use schwarz_rom::rom::{build_rom_operators, rom_residual, set_reference_state};
use schwarz_rom::schwarz::{run_coupled, run_monolithic, BarLayout, HistorySink, InterfaceForce, SchwarzConfig, Transfer, Variant};

type Res<T> = Result<T, Box<dyn std::error::Error>>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Res<Outcome> {
    Ok(Outcome { pass, detail })
}

fn workdir(name: &str) -> PathBuf {
    let base = std::env::var_os("SCHWARZ_ROM_ACCEPTANCE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance"));
    let dir = base.join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::load(&path).unwrap()
}

fn gaussian(x: f64) -> f64 {
    ic_symmetric_gaussian(x, 1e-3, 0.5, 0.02)
}

fn henky() -> ConstitutiveModel {
    ConstitutiveModel::henky(1e9, 1000.0).unwrap()
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn record<'a>(out: &'a PipelineOutput, label: &str) -> Res<&'a RunRecord> {
    out.records.iter().find(|r| r.label == label).ok_or_else(|| format!("no run labelled {label}").into())
}

/// Keeps the last recorded state of a single-domain run.
#[derive(Default)]
struct LastState(Option<KinematicState>);

impl HistorySink for LastState {
    fn record(&mut self, _step: usize, states: &[KinematicState]) -> schwarz_rom::Result<()> {
        self.0 = Some(states[0].clone());
        Ok(())
    }
}

/// Splits a single-domain state into the node ranges of the subdomains.
struct Split {
    ranges: [(usize, usize); 2],
    histories: Vec<FieldHistory>,
}

impl Split {
    fn new(ranges: [(usize, usize); 2]) -> Self {
        Split { ranges, histories: ranges.iter().map(|&(lo, hi)| FieldHistory::new(hi - lo + 1)).collect() }
    }
}

impl HistorySink for Split {
    fn record(&mut self, _step: usize, states: &[KinematicState]) -> schwarz_rom::Result<()> {
        let s = &states[0];
        for (h, &(lo, hi)) in self.histories.iter_mut().zip(&self.ranges) {
            let n = hi - lo + 1;
            h.push(&KinematicState {
                u: s.u.rows(lo, n).into_owned(),
                v: s.v.rows(lo, n).into_owned(),
                a: s.a.rows(lo, n).into_owned(),
                t: s.t,
            })?;
        }
        Ok(())
    }
}

// 1
fn refinement() -> Res<Outcome> {
    let model = ConstitutiveModel::linear_elastic(1e9, 1000.0)?;
    let t_end = 1e-4;
    let final_u = |dx: f64| -> Res<(Mesh1D, DVector<f64>)> {
        let mesh = build_uniform_mesh(0.0, 1.0, dx, true, true)?;
        // dt tied to dx at a fixed Courant number of 0.1
        let params = NewmarkParams { dt: 0.1 * dx / model.wave_speed(), ..Default::default() };
        let mut last = LastState::default();
        run_monolithic(&mesh, &model, &params, LinearSolver::Auto, t_end, &gaussian, &mut last)?;
        Ok((mesh, last.0.ok_or("no states recorded")?.u))
    };
    let coarsest = 1e-2;
    let levels = 4;
    let (_, reference) = final_u(coarsest / f64::from(1 << levels))?;
    let mut errors = Vec::new();
    for l in 0..levels {
        let (mesh, u) = final_u(coarsest / f64::from(1 << l))?;
        let step = 1 << (levels - l);
        let r = DVector::from_fn(mesh.node_count(), |i, _| reference[i * step]);
        errors.push((u - &r).norm() / r.norm());
    }
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let pass = ratios.iter().all(|&r| r >= 1.8);
    outcome(pass, format!("errors {}, ratios {ratios:.2?} (need >= 1.8)", sci(&errors)))
}

fn schwarz_vs_monolithic(dx: f64, dt: f64, t_end: f64) -> Res<([[f64; 3]; 2], usize)> {
    let model = henky();
    let params = NewmarkParams { dt, ..Default::default() };
    let mesh = build_uniform_mesh(0.0, 1.0, dx, true, true)?;
    let split = (0.6 / dx).round() as usize;
    let mut mono = Split::new([(0, split), (split, mesh.node_count() - 1)]);
    run_monolithic(&mesh, &model, &params, LinearSolver::Auto, t_end, &gaussian, &mut mono)?;
    let layout = BarLayout { x_left: 0.0, x_right: 1.0, split: 0.6, overlap: None, dx: [dx, dx] };
    let dd = layout.build(model, params, [Variant::Fom, Variant::Fom], LinearSolver::Auto, InterfaceForce::Consistent)?;
    let cfg = SchwarzConfig { delta: 1e-11, theta: 1.0, controller_dt: dt, max_schwarz_iters: 100, final_time: t_end, transfer: Transfer::All };
    let mut acc = MseAccumulator::new(&mono.histories, 1);
    let stats = run_coupled(&dd, &cfg, &gaussian, &mut acc)?;
    let e = acc.finish()?;
    Ok(([e[0], e[1]], stats.total_iterations))
}

fn within_consistency_tolerance(e: &[[f64; 3]; 2]) -> bool {
    e.iter().all(|s| s[0] <= 1e-6 && s[1] <= 1e-5 && s[2] <= 1e-4)
}

// 2
fn consistency(slow: bool) -> Res<Outcome> {
    let clock = Instant::now();
    let (desk, _) = schwarz_vs_monolithic(5e-3, 5e-7, 2e-4)?;
    let desk_time = clock.elapsed().as_secs_f64();
    let mut pass = within_consistency_tolerance(&desk) && desk_time < 300.0;
    let mut detail = format!("desk MSE {} in {desk_time:.1} s", sci(desk.as_flattened()));
    if slow {
        let (full, _) = schwarz_vs_monolithic(1e-3, 1e-7, 1e-3)?;
        pass &= within_consistency_tolerance(&full);
        detail += &format!("; full-scale MSE {}", sci(full.as_flattened()));
    } else {
        detail += "; full scale skipped";
    }
    outcome(pass, detail + " (need u <= 1e-6, v <= 1e-5, a <= 1e-4)")
}

// 3
fn iteration_economy(repro: &PipelineOutput, steps: usize) -> Res<Outcome> {
    let n_s = record(repro, "FOM-FOM")?.schwarz_iterations;
    let mean = n_s as f64 / steps as f64;
    let pass = mean < 3.0 && (n_s as f64 - 24_630.0).abs() <= 0.2 * 24_630.0;
    outcome(pass, format!("N_S = {n_s}, {mean:.2} per step (need < 3.0 and 24,630 +/- 20%)"))
}

// 4
fn relaxation() -> Res<Outcome> {
    let cfg = config("smoke.toml").with_scale(Scale::Desk)?;
    let dd = cfg.layout().build(cfg.model()?, cfg.newmark()?, [Variant::Fom, Variant::Fom], cfg.integrator.solver, cfg.schwarz.interface_force)?;
    let mut counts = Vec::new();
    for theta in [0.5, 0.75, 1.0] {
        let stats = run_coupled(&dd, &cfg.schwarz_with_theta(theta)?, &gaussian, &mut schwarz_rom::schwarz::NullSink)?;
        counts.push((theta, stats.total_iterations));
    }
    let best = counts.iter().min_by_key(|c| c.1).unwrap().0;
    outcome(best == 1.0 && counts[2].1 < counts[1].1, format!("N_S by theta {counts:?}"))
}

// 5
fn pod_energy(repro: &PipelineOutput) -> Res<Outcome> {
    let [m1, m2] = repro.energy_modes;
    let pass = (40..=70).contains(&m1) && (15..=30).contains(&m2);
    outcome(pass, format!("99.99% energy at M1 = {m1}, M2 = {m2} (need [40, 70] and [15, 30])"))
}

// 6
fn fom_rom(repro: &PipelineOutput) -> Res<Outcome> {
    let r200 = record(repro, "FOM-ROM(-/200)")?;
    let r80 = record(repro, "FOM-ROM(-/80)")?;
    let pass = r200.mse.iter().all(|s| s[0] <= 1e-8) && r80.mse.iter().all(|s| s[0] <= 1e-4);
    outcome(
        pass,
        format!(
            "M2=200 u MSE {:.3e}/{:.3e} (need <= 1e-8), M2=80 {:.3e}/{:.3e} (need <= 1e-4)",
            r200.mse[0][0], r200.mse[1][0], r80.mse[0][0], r80.mse[1][0]
        ),
    )
}

// 7
fn ecsw_exactness() -> Res<Outcome> {
    let cfg = config("smoke.toml").with_scale(Scale::Desk)?;
    let dir = workdir("ecsw");
    let p = Pipeline::new(&cfg, &dir)?;
    p.run(Stage::Snapshots)?;
    p.run(Stage::Pod)?;
    let dd = cfg.layout().build(cfg.model()?, cfg.newmark()?, [Variant::Fom, Variant::Fom], cfg.integrator.solver, cfg.schwarz.interface_force)?;
    let model = cfg.model()?;
    let mut worst_c = 0.0f64;
    let mut worst_r = 0.0f64;
    for k in 0..2 {
        let mesh = &dd.subdomains[k].mesh;
        let (snap, _) = load_snapshots(&dir.join(format!("snapshots_sd{}_u.bin", k + 1)))?;
        let basis = load_basis(&dir.join(format!("basis_sd{}.txt", k + 1)))?.basis;
        let cols: Vec<usize> = (1..=20).map(|j| j * (snap.count() - 1) / 20).collect();
        let snap = snap.select(&cols)?;
        let mut refstates = Vec::new();
        for s in 0..snap.count() {
            let mut d = DirichletData::homogeneous(mesh.dirichlet_ids().len());
            for (slot, &i) in mesh.dirichlet_ids().iter().enumerate() {
                d.u[slot] = snap.data[(i, s)];
            }
            refstates.push(set_reference_state(mesh, &d)?);
        }
        let system = build_training_system(mesh, &model, &basis, &refstates, &snap)?;
        worst_c = worst_c.max(system.unit_weight_residual());
        let ops = build_rom_operators(mesh, &model, &basis)?;
        let full = EcswSampleSet::full(mesh.element_count());
        let zero_full = DVector::zeros(mesh.node_count());
        let zero = DVector::zeros(basis.size());
        for (s, rs) in refstates.iter().enumerate() {
            let q = basis.modes.tr_mul(&(snap.data.column(s) - &rs.u_bar));
            let (r, _) = rom_residual(&ops, rs, &q, &zero, &zero, &zero_full, 0.0)?;
            let (f, _) = hrom_assemble(&ops, &full, rs, &q, &zero)?;
            worst_r = worst_r.max((&r - &f).norm() / r.norm());
        }
    }
    outcome(
        worst_c <= 1e-10 && worst_r <= 1e-12,
        format!("max ||C1 - d||/||d|| = {worst_c:.2e} (need <= 1e-10), HROM vs ROM residual {worst_r:.2e} (need <= 1e-12)"),
    )
}

fn nnls_brute_force(c: &DMatrix<f64>, d: &DVector<f64>) -> f64 {
    let n = c.ncols();
    let mut best = d.norm_squared();
    for mask in 1u32..(1 << n) {
        let cols: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
        let cp = c.select_columns(cols.iter());
        let svd = cp.clone().svd(true, true);
        let tol = 1e-12 * svd.singular_values.max().max(1.0);
        let z = svd.solve(d, tol).expect("vectors computed");
        if z.iter().all(|&v| v >= -1e-12) {
            best = best.min((d - &cp * z.map(|v| v.max(0.0))).norm_squared());
        }
    }
    best
}

// 8
fn nnls_oracle() -> Res<Outcome> {
    let mut rng = StdRng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let m = rng.random_range(1..=6);
        let n = rng.random_range(1..=10);
        let c = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        let d = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        let sol = nnls(&c, &d, &NnlsOptions::default())?;
        if sol.x.iter().any(|&x| x < 0.0) {
            return outcome(false, "negative weight returned".into());
        }
        worst = worst.max(((&d - &c * &sol.x).norm_squared() - nnls_brute_force(&c, &d)).abs());
    }
    outcome(worst <= 1e-8, format!("max objective gap {worst:.2e} over 50 systems (need <= 1e-8)"))
}

// 9
fn hrom_hrom(repro: &PipelineOutput) -> Res<Outcome> {
    let h = record(repro, "HROM-HROM(200/80)")?;
    let f = record(repro, "FOM-FOM")?;
    let pass = h.mse.iter().all(|s| s[0] <= 1e-1) && h.cpu_seconds < f.cpu_seconds;
    outcome(
        pass,
        format!(
            "u MSE {:.3e}/{:.3e} (need <= 1e-1), CPU {:.2} s vs FOM-FOM {:.2} s (need faster), N_e {:?}",
            h.mse[0][0], h.mse[1][0], h.cpu_seconds, f.cpu_seconds, h.sample_counts
        ),
    )
}

// 10
fn predictive(pred: &PipelineOutput) -> Res<Outcome> {
    let fr = record(pred, "FOM-ROM(-/200)")?;
    let rr = record(pred, "ROM-ROM(300/200)")?;
    let mut pass = fr.mse.iter().all(|s| s[0] <= 1e-5) && rr.mse.iter().all(|s| s[0] <= 1e-2);
    let mut detail = format!(
        "FOM-ROM u MSE {:.3e}/{:.3e} (need <= 1e-5), ROM-ROM {:.3e}/{:.3e} (need <= 1e-2)",
        fr.mse[0][0], fr.mse[1][0], rr.mse[0][0], rr.mse[1][0]
    );
    let mut monotone = true;
    let mut ratio = f64::INFINITY;
    for kind in ["reproductive", "predictive"] {
        for k in 1..=2 {
            let rows: Vec<_> = pred.projection_errors.iter().filter(|r| r.kind == kind && r.subdomain == k).collect();
            for f in Field::ALL {
                let curve: Vec<f64> = rows.iter().map(|r| r.errors[f as usize]).collect();
                monotone &= !curve.is_empty() && curve.windows(2).all(|w| w[1] <= w[0]);
            }
            if let Some(r) = rows.iter().find(|r| r.modes == 100) {
                ratio = ratio.min(r.errors[Field::Acceleration as usize] / r.errors[Field::Displacement as usize]);
            } else {
                monotone = false;
            }
        }
    }
    pass &= monotone && ratio >= 10.0;
    detail += &format!("; projection curves monotone: {monotone}; min a/u ratio at M=100 {ratio:.1} (need >= 10)");
    outcome(pass, detail)
}

// 11
fn gradients() -> Res<Outcome> {
    let mut rng = StdRng::seed_from_u64(11);
    let mesh = build_uniform_mesh(0.0, 1.0, 0.02, true, true)?;
    let n = mesh.node_count();
    let model = henky();
    let smooth = |rng: &mut StdRng, amp: f64| {
        let c: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        DVector::from_fn(n, |i, _| {
            let x = mesh.node_coords()[i];
            amp * c.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * std::f64::consts::PI * x).sin()).sum::<f64>()
        })
    };
    let zero = DVector::zeros(n);

    let mut fd_full = 0.0f64;
    for _ in 0..10 {
        let u = smooth(&mut rng, 2e-3);
        let du = smooth(&mut rng, 1.0);
        let h = 1e-6;
        let fd = (internal_force(&mesh, &model, &(&u + h * &du), &zero)? - internal_force(&mesh, &model, &(&u - h * &du), &zero)?) / (2.0 * h);
        let k = tangent_stiffness(&mesh, &model, &u)?.mul_vec(&du);
        fd_full = fd_full.max((fd - &k).norm() / k.norm());
    }

    let raw = DMatrix::from_fn(n, 4, |i, j| ((j + 1) as f64 * std::f64::consts::PI * mesh.node_coords()[i]).sin());
    let mut modes = raw.qr().q();
    modes.row_mut(0).fill(0.0);
    modes.row_mut(n - 1).fill(0.0);
    let basis = schwarz_rom::pod::PodBasis { modes, singular_values: vec![4.0, 3.0, 2.0, 1.0], dirichlet_ids: vec![0, n - 1], truncated: false };
    let ops = build_rom_operators(&mesh, &model, &basis)?;
    let mut d = DirichletData::homogeneous(2);
    d.u = vec![3e-5, -2e-5];
    d.v = vec![0.1, 0.2];
    d.a = vec![-5.0, 7.0];
    let rs = set_reference_state(&mesh, &d)?;
    let mut fd_rom = 0.0f64;
    let mut bc = 0.0f64;
    let z4 = DVector::zeros(4);
    for _ in 0..10 {
        let q = DVector::from_fn(4, |_, _| rng.random_range(-1e-3..1e-3));
        let dq = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
        let h = 1e-7;
        let (rp, _) = rom_residual(&ops, &rs, &(&q + h * &dq), &z4, &z4, &zero, 0.0)?;
        let (rm, _) = rom_residual(&ops, &rs, &(&q - h * &dq), &z4, &z4, &zero, 0.0)?;
        let (_, j) = rom_residual(&ops, &rs, &q, &z4, &z4, &zero, 0.0)?;
        let jd = j * &dq;
        fd_rom = fd_rom.max(((rp - rm) / (2.0 * h) - &jd).norm() / jd.norm());
        for (bar, vals) in [(&rs.u_bar, &d.u), (&rs.v_bar, &d.v), (&rs.a_bar, &d.a)] {
            let x = ops.reconstruct(bar, &q);
            bc = bc.max((x[0] - vals[0]).abs()).max((x[n - 1] - vals[1]).abs());
        }
    }

    let fom = FomModel::new(mesh.clone(), model, LinearSolver::Auto);
    let dir = DirichletData::homogeneous(2);
    let p = NewmarkParams { dt: 1e-6, ..Default::default() };
    let mut s = fom.initial_state(&smooth(&mut rng, 1e-3), &zero, &dir, &zero, 0.0)?;
    let mut cache = JacobianCache::new();
    let mut kin = 0.0f64;
    for _ in 0..20 {
        let (s1, _) = fom.step(&s, &dir, &zero, &p, &mut cache)?;
        let dt = p.dt;
        let u = &s.u + dt * &s.v + (0.5 * dt * dt) * ((1.0 - 2.0 * p.beta) * &s.a + 2.0 * p.beta * &s1.a);
        let v = &s.v + dt * ((1.0 - p.gamma) * &s.a + p.gamma * &s1.a);
        kin = kin.max((&s1.u - u).amax() / s1.u.amax()).max((&s1.v - v).amax() / s1.v.amax());
        s = s1;
    }

    let mut small = 0.0f64;
    let linear = ConstitutiveModel::linear_elastic(1e9, 1000.0)?;
    for k in 1..=10 {
        let strain = f64::from(k) * 1e-7 * if k % 2 == 0 { 1.0 } else { -1.0 };
        let (ph, _) = stress_and_tangent(&model, 1.0 + strain)?;
        let (pl, _) = stress_and_tangent(&linear, 1.0 + strain)?;
        small = small.max((ph - pl).abs() / pl.abs());
    }

    let pass = fd_full <= 1e-5 && fd_rom <= 1e-5 && kin <= 1e-12 && bc == 0.0 && small <= 1e-5;
    outcome(
        pass,
        format!(
            "tangent FD {fd_full:.1e} / reduced {fd_rom:.1e} (need <= 1e-5), Newmark identities {kin:.1e} (need <= 1e-12), \
             Dirichlet reconstruction {bc:.1e} (need 0), Henky vs linear {small:.1e} (need <= 1e-5)"
        ),
    )
}

fn full_runs(dir: &Path) -> Res<(PipelineOutput, usize, PipelineOutput)> {
    let repro_cfg = config("reproductive.toml");
    let steps = repro_cfg.schwarz_config()?.interval_count()?;
    let repro = pipeline_reproductive(&repro_cfg, &dir.join("reproductive"))?;
    let pred = pipeline_predictive(&config("predictive.toml"), &dir.join("predictive"))?;
    Ok((repro, steps, pred))
}

fn main() -> ExitCode {
    let slow = std::env::var("SCHWARZ_ROM_SKIP_SLOW").map_or(true, |v| v.is_empty() || v == "0");
    let mut results: Vec<(u32, &str, Option<Res<Outcome>>)> = vec![
        (1, "monolithic refinement", Some(refinement())),
        (2, "Schwarz consistency", Some(consistency(slow))),
    ];

    let full = if slow { Some(full_runs(&workdir("full"))) } else { None };
    let full_item = |f: &dyn Fn(&PipelineOutput, usize, &PipelineOutput) -> Res<Outcome>| -> Option<Res<Outcome>> {
        match &full {
            None => None,
            Some(Ok((r, steps, p))) => Some(f(r, *steps, p)),
            Some(Err(e)) => Some(Err(format!("full-scale pipeline failed: {e}").into())),
        }
    };
    results.push((3, "Schwarz iteration economy", full_item(&|r, s, _| iteration_economy(r, s))));
    results.push((4, "relaxation study", Some(relaxation())));
    results.push((5, "POD energy", full_item(&|r, _, _| pod_energy(r))));
    results.push((6, "reproductive FOM-ROM", full_item(&|r, _, _| fom_rom(r))));
    results.push((7, "ECSW exactness", Some(ecsw_exactness())));
    results.push((8, "NNLS oracle", Some(nnls_oracle())));
    results.push((9, "reproductive HROM-HROM", full_item(&|r, _, _| hrom_hrom(r))));
    results.push((10, "predictive pipeline", full_item(&|_, _, p| predictive(p))));
    results.push((11, "gradient and consistency suite", Some(gradients())));

    let mut failed = Vec::new();
    for (id, name, res) in &results {
        match res {
            None => println!("criterion {id:>2} SKIP {name}: slow"),
            Some(Ok(o)) => {
                println!("criterion {id:>2} {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
                if !o.pass {
                    failed.push(*id);
                }
            }
            Some(Err(e)) => {
                println!("criterion {id:>2} FAIL {name}: error: {e}");
                failed.push(*id);
            }
        }
    }
    let ran = results.iter().filter(|r| r.2.is_some()).count();
    println!("acceptance: {}/{ran} passed, failed {failed:?}", ran - failed.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
