use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use schwarz_rom::ecsw::{hrom_assemble, EcswSampleSet};
use schwarz_rom::fem::{
    build_uniform_mesh, internal_force, stress_and_tangent, tangent_stiffness, ConstitutiveModel, Field, KinematicState, Mesh1D,
};
use schwarz_rom::linalg::LinearSolver;
use schwarz_rom::metrics::{mse, pareto_table, RunRecord};
use schwarz_rom::newmark::{DirichletData, FomModel, JacobianCache, NewmarkParams};
use schwarz_rom::nnls::{nnls, NnlsOptions};
use schwarz_rom::pod::{compute_pod, pod_energy, projection_error, PodBasis, PodSize, SnapshotMatrix};
use schwarz_rom::rom::{build_rom_operators, rom_residual, set_reference_state};
use schwarz_rom::schwarz::{check_convergence, relax};

const E: f64 = 1e9;
const RHO: f64 = 1000.0;

fn henky() -> ConstitutiveModel {
    ConstitutiveModel::henky(E, RHO).unwrap()
}

fn mesh(n_el: usize) -> Mesh1D {
    build_uniform_mesh(0.0, 1.0, 1.0 / n_el as f64, true, true).unwrap()
}

/// Smooth displacement with clamped ends, small enough to keep stretches positive.
fn field(mesh: &Mesh1D, coeffs: &[f64], amp: f64) -> DVector<f64> {
    let x = mesh.node_coords();
    DVector::from_iterator(
        x.len(),
        x.iter().map(|&x| {
            amp * coeffs.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * std::f64::consts::PI * x).sin()).sum::<f64>()
        }),
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
        let z = svd.solve(d, tol).unwrap();
        if z.iter().all(|&v| v >= -1e-12) {
            let zc = z.map(|v| v.max(0.0));
            best = best.min((d - &cp * zc).norm_squared());
        }
    }
    best
}

fn random_orthonormal(rows: usize, cols: usize, seed: &[f64], zero_rows: &[usize]) -> DMatrix<f64> {
    let mut a = DMatrix::from_fn(rows, cols, |i, j| seed[(i * cols + j) % seed.len()] + 0.01 * ((i * 7 + j * 13) % 11) as f64);
    for &i in zero_rows {
        a.row_mut(i).fill(0.0);
    }
    let mut q = a.qr().q();
    for &i in zero_rows {
        q.row_mut(i).fill(0.0);
    }
    q
}

/// Orthonormalized sine modes, zero at both clamped ends.
fn sine_basis(mesh: &Mesh1D, k: usize) -> PodBasis {
    let n = mesh.node_count();
    let raw = DMatrix::from_fn(n, k, |i, j| ((j + 1) as f64 * std::f64::consts::PI * i as f64 / (n - 1) as f64).sin());
    let mut modes = raw.qr().q();
    modes.row_mut(0).fill(0.0);
    modes.row_mut(n - 1).fill(0.0);
    PodBasis { modes, singular_values: (0..k).map(|j| (k - j) as f64).collect(), dirichlet_ids: vec![0, n - 1], truncated: false }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tangent_matches_central_difference(
        coeffs in prop::collection::vec(-1.0f64..1.0, 1..5),
        dir in prop::collection::vec(-1.0f64..1.0, 1..5),
        amp in 1e-5f64..5e-3,
    ) {
        let m = mesh(40);
        let model = henky();
        let u = field(&m, &coeffs, amp);
        let du = field(&m, &dir, 1.0);
        let h = 1e-6;
        let zero = DVector::zeros(u.len());
        let fp = internal_force(&m, &model, &(&u + h * &du), &zero).unwrap();
        let fm = internal_force(&m, &model, &(&u - h * &du), &zero).unwrap();
        let fd = (fp - fm) / (2.0 * h);
        let k = tangent_stiffness(&m, &model, &u).unwrap().mul_vec(&du);
        prop_assert!((&fd - &k).norm() <= 1e-5 * k.norm().max(1e-30), "{} vs {}", (&fd - &k).norm(), k.norm());
    }

    #[test]
    fn internal_force_is_translation_invariant_and_balanced(
        coeffs in prop::collection::vec(-1.0f64..1.0, 1..5),
        shift in -1.0f64..1.0,
    ) {
        let m = mesh(30);
        let model = henky();
        let u = field(&m, &coeffs, 1e-3);
        let zero = DVector::zeros(u.len());
        let f = internal_force(&m, &model, &u, &zero).unwrap();
        let g = internal_force(&m, &model, &u.add_scalar(shift), &zero).unwrap();
        prop_assert!((&f - &g).norm() <= 1e-9 * f.norm().max(1.0));
        prop_assert!(f.sum().abs() <= 1e-9 * f.amax().max(1.0));
    }

    #[test]
    fn henky_reduces_to_linear_at_small_strain(strain in -1e-6f64..1e-6) {
        let (ph, kh) = stress_and_tangent(&henky(), 1.0 + strain).unwrap();
        let (pl, kl) = stress_and_tangent(&ConstitutiveModel::linear_elastic(E, RHO).unwrap(), 1.0 + strain).unwrap();
        prop_assert!((ph - pl).abs() <= 1e-5 * pl.abs().max(1e-300));
        prop_assert!((kh - kl).abs() <= 1e-5 * kl);
    }

    #[test]
    fn newmark_step_satisfies_update_formulas(
        coeffs in prop::collection::vec(-1.0f64..1.0, 1..4),
        amp in 1e-5f64..1e-3,
    ) {
        let m = mesh(50);
        let fom = FomModel::new(m.clone(), henky(), LinearSolver::Auto);
        let dir = DirichletData::homogeneous(2);
        let f_ext = DVector::zeros(m.node_count());
        let u0 = field(&m, &coeffs, amp);
        let s0 = fom.initial_state(&u0, &DVector::zeros(u0.len()), &dir, &f_ext, 0.0).unwrap();
        let p = NewmarkParams::new(0.49, 0.9, 1e-6).unwrap();
        let (s1, _) = fom.step(&s0, &dir, &f_ext, &p, &mut JacobianCache::new()).unwrap();
        let dt = p.dt;
        let u_pred = &s0.u + dt * &s0.v + (0.5 * dt * dt) * ((1.0 - 2.0 * p.beta) * &s0.a + 2.0 * p.beta * &s1.a);
        let v_pred = &s0.v + dt * ((1.0 - p.gamma) * &s0.a + p.gamma * &s1.a);
        prop_assert!((&s1.u - u_pred).amax() <= 1e-12 * s1.u.amax());
        prop_assert!((&s1.v - v_pred).amax() <= 1e-12 * s1.v.amax().max(s0.a.amax() * dt));
    }

    #[test]
    fn nnls_matches_exhaustive_support_search(
        m in 1usize..=6,
        n in 1usize..=10,
        vals in prop::collection::vec(-1.0f64..1.0, 60),
        rhs in prop::collection::vec(-1.0f64..1.0, 6),
    ) {
        let c = DMatrix::from_fn(m, n, |i, j| vals[i * 10 + j]);
        let d = DVector::from_fn(m, |i, _| rhs[i]);
        let sol = nnls(&c, &d, &NnlsOptions::default()).unwrap();
        prop_assert!(sol.x.iter().all(|&x| x >= 0.0));
        let obj = (&d - &c * &sol.x).norm_squared();
        prop_assert!((obj - nnls_brute_force(&c, &d)).abs() <= 1e-8, "{obj}");
    }

    #[test]
    fn pod_beats_other_subspaces(
        vals in prop::collection::vec(-1.0f64..1.0, 40),
        k in 1usize..5,
    ) {
        let (n, s) = (12, 8);
        let data = DMatrix::from_fn(n, s, |i, j| vals[(i * 3 + j * 5) % 40] * (1.0 + i as f64) + vals[(i + j) % 40]);
        let snaps = SnapshotMatrix::new(data, Field::Displacement, (0..s).map(|j| j as f64).collect()).unwrap();
        let dir = [0, n - 1];
        let basis = compute_pod(&snaps, &dir, PodSize::Count(k)).unwrap();
        let err = projection_error(&snaps, &basis).unwrap();
        // error of the optimal subspace is the discarded energy
        let full = compute_pod(&snaps, &dir, PodSize::Energy(1.0)).unwrap();
        let tail = 1.0 - pod_energy(&full.singular_values, k).unwrap();
        prop_assert!((err * err - tail).abs() <= 1e-10);
        let other = PodBasis {
            modes: random_orthonormal(n, k, &vals, &dir),
            singular_values: vec![1.0; k],
            dirichlet_ids: dir.to_vec(),
            truncated: false,
        };
        prop_assert!(err <= projection_error(&snaps, &other).unwrap() + 1e-12);
    }

    #[test]
    fn hrom_with_unit_weights_is_the_rom(
        coeffs in prop::collection::vec(-1.0f64..1.0, 3),
        ends in (-1e-4f64..1e-4, -1e-4f64..1e-4),
    ) {
        let m = mesh(20);
        let model = henky();
        let basis = sine_basis(&m, 3);
        let ops = build_rom_operators(&m, &model, &basis).unwrap();
        let mut d = DirichletData::homogeneous(2);
        d.u = vec![ends.0, ends.1];
        let rs = set_reference_state(&m, &d).unwrap();
        let q = DVector::from_vec(coeffs.iter().map(|c| c * 1e-3).collect());
        let zero = DVector::zeros(3);
        let (r, j) = rom_residual(&ops, &rs, &q, &zero, &zero, &DVector::zeros(m.node_count()), 0.0).unwrap();
        let (f, k) = hrom_assemble(&ops, &EcswSampleSet::full(m.element_count()), &rs, &q, &zero).unwrap();
        prop_assert!((&r - &f).norm() <= 1e-12 * r.norm().max(1.0));
        prop_assert!((&j - &k).norm() <= 1e-12 * j.norm());
    }

    #[test]
    fn reduced_tangent_matches_central_difference(
        coeffs in prop::collection::vec(-1.0f64..1.0, 3),
        dir in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let m = mesh(20);
        let model = henky();
        let basis = sine_basis(&m, 3);
        let ops = build_rom_operators(&m, &model, &basis).unwrap();
        let rs = set_reference_state(&m, &DirichletData::homogeneous(2)).unwrap();
        let q = DVector::from_vec(coeffs.iter().map(|c| c * 1e-3).collect());
        let dq = DVector::from_vec(dir.clone());
        let zero = DVector::zeros(3);
        let f_ext = DVector::zeros(m.node_count());
        let h = 1e-7;
        let (rp, _) = rom_residual(&ops, &rs, &(&q + h * &dq), &zero, &zero, &f_ext, 0.0).unwrap();
        let (rm, _) = rom_residual(&ops, &rs, &(&q - h * &dq), &zero, &zero, &f_ext, 0.0).unwrap();
        let (_, j) = rom_residual(&ops, &rs, &q, &zero, &zero, &f_ext, 0.0).unwrap();
        let fd = (rp - rm) / (2.0 * h);
        let jd = &j * &dq;
        prop_assert!((&fd - &jd).norm() <= 1e-5 * jd.norm());
    }

    #[test]
    fn pareto_flags_match_pairwise_dominance(pts in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0), 1..12)) {
        let records: Vec<RunRecord> = pts
            .iter()
            .enumerate()
            .map(|(i, &(c, e))| RunRecord {
                label: format!("r{i}"),
                mse: [[e, 0.0, 0.0], [e, 0.0, 0.0]],
                cpu_seconds: c,
                schwarz_iterations: 0,
                basis_sizes: [None, None],
                sample_counts: [None, None],
            })
            .collect();
        let table = pareto_table(&records);
        prop_assert!(table.windows(2).all(|w| w[0].cpu_seconds <= w[1].cpu_seconds));
        for row in &table {
            let i: usize = row.label[1..].parse().unwrap();
            let (c, e) = pts[i];
            let dominated = pts.iter().enumerate().any(|(j, &(c2, e2))| j != i && c2 <= c && e2 <= e && (c2 < c || e2 < e));
            prop_assert_eq!(row.pareto_optimal, !dominated);
        }
    }

    #[test]
    fn mse_is_scale_free(
        a in prop::collection::vec(-1.0f64..1.0, 1..30),
        noise in prop::collection::vec(-0.1f64..0.1, 30),
        scale in 1e-6f64..1e6,
    ) {
        prop_assume!(a.iter().any(|x| x.abs() > 1e-3));
        let b: Vec<f64> = a.iter().zip(&noise).map(|(x, n)| x + n).collect();
        let e = mse(&b, &a).unwrap();
        let sa: Vec<f64> = a.iter().map(|x| x * scale).collect();
        let sb: Vec<f64> = b.iter().map(|x| x * scale).collect();
        prop_assert!((mse(&sb, &sa).unwrap() - e).abs() <= 1e-12 * e.max(1e-300));
        prop_assert_eq!(mse(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn relaxation_is_a_convex_combination(
        prev in prop::array::uniform3(-1.0f64..1.0),
        new in prop::array::uniform3(-1.0f64..1.0),
        theta in 0.0f64..=1.0,
    ) {
        let r = relax(prev, new, theta);
        prop_assert_eq!(relax(prev, new, 1.0), new);
        for k in 0..3 {
            prop_assert!(r[k] >= prev[k].min(new[k]) - 1e-15 && r[k] <= prev[k].max(new[k]) + 1e-15);
        }
    }

    #[test]
    fn convergence_is_reached_iff_increments_are_small(
        vals in prop::collection::vec(-1.0f64..1.0, 10),
        eps in 0.0f64..1e-6,
    ) {
        let st = |s: f64| {
            let v = DVector::from_vec(vals.iter().map(|x| x * (1.0 + s)).collect());
            KinematicState { u: v.clone(), v: v.clone(), a: v, t: 0.0 }
        };
        let base = [st(0.0), st(0.0)];
        let same = check_convergence(&base, &base, 1e-11).unwrap();
        prop_assert!(same.converged && same.increments == [0.0; 3]);
        let moved = check_convergence(&base, &[st(eps), st(eps)], 1e-11).unwrap();
        prop_assert!(moved.increments.iter().all(|&d| (d - eps / (1.0 + eps)).abs() <= 1e-12));
        prop_assert_eq!(moved.converged, moved.increments.iter().all(|&d| d <= 1e-11));
    }
}
