mod common;

use std::sync::Arc;

use common::{dense, dense_solve, generalized_eigen, rel_err};
use fraclap::fem::{
    assemble_load, assemble_mass, assemble_stiffness, l2_norm_error, l2_project, BoundaryCondition, FeFunction, FeSpace,
    Kappa, ScalarField,
};
use fraclap::heat::{cfl_dt_limit, mass_norm, run_heat, steady_state, theta_step, HeatStepper, LinearSolver};
use fraclap::linalg::spmv;
use fraclap::mesh::{generate_convex_polygon, generate_interval, refine_red, Mesh, UNIT_SQUARE};
use fraclap::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn interval(n: usize) -> Arc<Mesh> {
    Arc::new(generate_interval(0.0, 1.0, n).unwrap())
}

fn square(levels: usize) -> Arc<Mesh> {
    Arc::new(generate_convex_polygon(&UNIT_SQUARE, levels).unwrap())
}

/// Element matrices from explicit barycentric gradients, over all nodes,
/// with Robin edge terms `κ∫φ_iφ_j` for constant `κ`.
fn reference_matrices(mesh: &Mesh, kappa: Option<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = mesh.n_nodes();
    let mut m = DMatrix::zeros(n, n);
    let mut a = DMatrix::zeros(n, n);
    for k in 0..mesh.n_elements() {
        let el = mesh.element(k);
        if mesh.dim() == 1 {
            let (i, j) = (el[0], el[1]);
            let h = (mesh.node(j)[0] - mesh.node(i)[0]).abs();
            for (p, q, mv, av) in [(i, i, h / 3.0, 1.0 / h), (j, j, h / 3.0, 1.0 / h), (i, j, h / 6.0, -1.0 / h), (j, i, h / 6.0, -1.0 / h)] {
                m[(p, q)] += mv;
                a[(p, q)] += av;
            }
        } else {
            let p: Vec<[f64; 2]> = el.iter().map(|&v| [mesh.node(v)[0], mesh.node(v)[1]]).collect();
            let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
            let area = det.abs() / 2.0;
            // ∇λ_i = (y_{i+1} − y_{i+2}, x_{i+2} − x_{i+1}) / det
            let grad: Vec<[f64; 2]> = (0..3)
                .map(|i| {
                    let (b, c) = (p[(i + 1) % 3], p[(i + 2) % 3]);
                    [(b[1] - c[1]) / det, (c[0] - b[0]) / det]
                })
                .collect();
            for i in 0..3 {
                for j in 0..3 {
                    m[(el[i], el[j])] += area * if i == j { 1.0 / 6.0 } else { 1.0 / 12.0 };
                    a[(el[i], el[j])] += area * (grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1]);
                }
            }
        }
    }
    if let Some(kappa) = kappa {
        if mesh.dim() == 1 {
            for &b in mesh.boundary_nodes() {
                a[(b, b)] += kappa;
            }
        } else {
            for e in mesh.boundary_edges() {
                let [i, j] = e.nodes;
                let len = ((mesh.node(i)[0] - mesh.node(j)[0]).powi(2) + (mesh.node(i)[1] - mesh.node(j)[1]).powi(2)).sqrt();
                a[(i, i)] += kappa * len / 3.0;
                a[(j, j)] += kappa * len / 3.0;
                a[(i, j)] += kappa * len / 6.0;
                a[(j, i)] += kappa * len / 6.0;
            }
        }
    }
    (m, a)
}

fn restrict(full: &DMatrix<f64>, sp: &FeSpace) -> DMatrix<f64> {
    let nodes = sp.node_of_dof();
    DMatrix::from_fn(nodes.len(), nodes.len(), |i, j| full[(nodes[i], nodes[j])])
}

fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

#[test]
fn matrices_match_reference_assembly() {
    let meshes = [interval(17), Arc::new(generate_interval(-1.0, 2.0, 9).unwrap()), square(2), Arc::new(
        generate_convex_polygon(&[[0.0, 0.0], [2.0, 0.0], [2.5, 1.0], [1.0, 2.0], [-0.5, 1.0]], 2).unwrap(),
    )];
    for mesh in meshes {
        for (bc, kappa) in [
            (BoundaryCondition::Dirichlet, None),
            (BoundaryCondition::Neumann, None),
            (BoundaryCondition::robin(0.7), Some(0.7)),
        ] {
            let sp = FeSpace::new(mesh.clone(), bc.clone()).unwrap();
            let (m_ref, a_ref) = reference_matrices(&mesh, kappa);
            let m = dense(&assemble_mass(&sp).unwrap());
            let a = dense(&assemble_stiffness(&sp).unwrap());
            let scale = a_ref.abs().max();
            assert!(max_diff(&m, &restrict(&m_ref, &sp)) < 1e-14, "{} mass", bc.name());
            assert!(max_diff(&a, &restrict(&a_ref, &sp)) < 1e-12 * scale, "{} stiffness", bc.name());
        }
    }
}

#[test]
fn matrix_structure() {
    for mesh in [interval(32), square(3)] {
        let sp = FeSpace::new(mesh.clone(), BoundaryCondition::Neumann).unwrap();
        let m = assemble_mass(&sp).unwrap();
        let a = assemble_stiffness(&sp).unwrap();
        assert!((m.total_sum() - mesh.measure()).abs() < 1e-13);
        let ones = vec![1.0; sp.n_dofs()];
        assert!(spmv(&a, &ones).unwrap().iter().all(|v| v.abs() < 1e-12));
        assert!(m.relative_asymmetry() < 1e-15 && a.relative_asymmetry() < 1e-15);
    }
}

#[test]
fn robin_matrix_is_neumann_plus_boundary_term() {
    let mesh = square(2);
    let kappa = 3.0;
    let a_n = assemble_stiffness(&FeSpace::new(mesh.clone(), BoundaryCondition::Neumann).unwrap()).unwrap();
    let a_r = assemble_stiffness(&FeSpace::new(mesh.clone(), BoundaryCondition::robin(kappa)).unwrap()).unwrap();
    // 1ᵀ(A_R − A_N)1 = κ |∂Ω|
    assert!((a_r.total_sum() - a_n.total_sum() - kappa * 4.0).abs() < 1e-12);
}

#[test]
fn variable_robin_coefficient() {
    let mesh = interval(10);
    let k = Kappa::Function(Arc::new(|x: &[f64]| 1.0 + x[0]));
    let sp = FeSpace::new(mesh.clone(), BoundaryCondition::Robin(k)).unwrap();
    let a = assemble_stiffness(&sp).unwrap();
    let neumann = assemble_stiffness(&FeSpace::new(mesh, BoundaryCondition::Neumann).unwrap()).unwrap();
    let last = sp.n_dofs() - 1;
    assert!((a.get(0, 0) - neumann.get(0, 0) - 1.0).abs() < 1e-13);
    assert!((a.get(last, last) - neumann.get(last, last) - 2.0).abs() < 1e-13);
    let bad = Kappa::Function(Arc::new(|x: &[f64]| x[0] - 0.5));
    assert!(FeSpace::new(interval(4), BoundaryCondition::Robin(bad)).is_err());
    assert!(FeSpace::new(interval(4), BoundaryCondition::robin(0.0)).is_err());
}

#[test]
fn load_vector_of_p1_function_is_mass_times_nodal_values() {
    let mesh = square(3);
    let sp = FeSpace::new(mesh.clone(), BoundaryCondition::Neumann).unwrap();
    let f = |x: &[f64]| 1.0 + 2.0 * x[0] - 3.0 * x[1];
    let b = assemble_load(&sp, &f);
    let mv = spmv(&assemble_mass(&sp).unwrap(), &sp.interpolate(&f)).unwrap();
    assert!(rel_err(&b, &mv) < 1e-13);
}

#[test]
fn projection_reproduces_p1_functions() {
    for mesh in [interval(13), square(2)] {
        let sp = FeSpace::new(mesh.clone(), BoundaryCondition::Neumann).unwrap();
        let f = |x: &[f64]| 0.5 - x[0] + if x.len() > 1 { 2.0 * x[1] } else { 0.0 };
        let p = l2_project(&sp, &f).unwrap();
        assert!(rel_err(&p, &sp.interpolate(&f)) < 1e-10);
        assert!(l2_norm_error(&sp, &p, &f).unwrap() < 1e-10);
    }
}

#[test]
fn projection_error_second_order() {
    let f = |x: &[f64]| (3.0 * x[0]).sin() * (2.0 * x[1]).cos();
    let mut errs = Vec::new();
    let mut mesh = generate_convex_polygon(&UNIT_SQUARE, 1).unwrap();
    for _ in 0..3 {
        mesh = refine_red(&mesh).unwrap();
        let sp = FeSpace::new(Arc::new(mesh.clone()), BoundaryCondition::Neumann).unwrap();
        let p = l2_project(&sp, &f).unwrap();
        errs.push(l2_norm_error(&sp, &p, &f).unwrap());
    }
    for w in errs.windows(2) {
        let rate = (w[0] / w[1]).log2();
        assert!(rate > 1.9, "rate {rate}");
    }
}

#[test]
fn fe_function_reproduces_nodal_values() {
    let mesh = square(2);
    let nodal: Vec<f64> = (0..mesh.n_nodes()).map(|i| mesh.node(i)[0] * 2.0 - mesh.node(i)[1]).collect();
    let f = FeFunction::from_nodal(mesh.clone(), nodal).unwrap();
    assert!((f.value(&[0.3, 0.4]) - 0.2).abs() < 1e-14);
    assert!(f.value(&[1.5, 0.4]).is_nan());
    assert!(f.try_value(&[1.5, 0.4]).is_err());
}

#[test]
fn theta_step_matches_dense_solve() {
    for mesh in [interval(20), square(2)] {
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann, BoundaryCondition::robin(1.5)] {
            let sp = FeSpace::new(mesh.clone(), bc).unwrap();
            let m = assemble_mass(&sp).unwrap();
            let a = assemble_stiffness(&sp).unwrap();
            let (md, ad) = (dense(&m), dense(&a));
            let w: Vec<f64> = (0..sp.n_dofs()).map(|i| ((i * 7 % 11) as f64 - 5.0) / 5.0).collect();
            for theta in [0.5, 0.75, 1.0] {
                let dt = 0.01;
                let lhs = &md + &ad * (theta * dt);
                let rhs = (&md + &ad * ((theta - 1.0) * dt)) * nalgebra::DVector::from_column_slice(&w);
                let want = dense_solve(&lhs, rhs.as_slice());
                let got = theta_step(&m, &a, theta, dt, &w).unwrap();
                assert!(rel_err(&got, &want) < 1e-10);
                for solver in [LinearSolver::Direct, LinearSolver::Cg { tol: 1e-13 }] {
                    let mut stepper = HeatStepper::new(&m, &a, mesh.dim(), theta, dt, solver).unwrap();
                    let mut v = w.clone();
                    stepper.step(&mut v).unwrap();
                    assert!(rel_err(&v, &want) < 1e-10);
                }
            }
        }
    }
}

#[test]
fn discrete_eigenvectors_decay_by_amplification_factor() {
    let mesh = square(2);
    for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::robin(2.0)] {
        let sp = FeSpace::new(mesh.clone(), bc).unwrap();
        let m = assemble_mass(&sp).unwrap();
        let a = assemble_stiffness(&sp).unwrap();
        let (lams, vecs) = generalized_eigen(&a, &m);
        for theta in [0.5, 1.0] {
            let dt = 0.003;
            for k in [0, 3, lams.len() - 1] {
                let v: Vec<f64> = vecs.column(k).iter().copied().collect();
                let r = (1.0 - (1.0 - theta) * dt * lams[k]) / (1.0 + theta * dt * lams[k]);
                let run = run_heat(&sp, &v, theta, dt, 5).unwrap();
                let want: Vec<f64> = v.iter().map(|x| x * r.powi(5)).collect();
                let scale = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
                let err = run.snapshots[5].iter().zip(&want).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                assert!(err < 1e-9 * scale, "k={k} theta={theta}: {err}");
                assert!((run.time(5) - 5.0 * dt).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn explicit_stepping_respects_cfl() {
    let mesh = interval(50);
    let sp = FeSpace::new(mesh, BoundaryCondition::Dirichlet).unwrap();
    let m = assemble_mass(&sp).unwrap();
    let a = assemble_stiffness(&sp).unwrap();
    let limit = cfl_dt_limit(&m, &a, 1, 0.0).unwrap();
    // The true stability limit 2/λ_max must not be exceeded by the guard.
    let (lams, _) = generalized_eigen(&a, &m);
    let lmax = lams.iter().copied().fold(0.0, f64::max);
    assert!(limit <= 2.0 / lmax * (1.0 + 1e-12));
    assert!(cfl_dt_limit(&m, &a, 1, 0.5).is_none());
    let err = HeatStepper::new(&m, &a, 1, 0.0, limit * 2.0, LinearSolver::Direct).unwrap_err();
    assert!(matches!(err, Error::CflViolation { .. }));
    assert!(HeatStepper::new(&m, &a, 1, 0.0, limit * 0.5, LinearSolver::Direct).is_ok());
    assert!(HeatStepper::new(&m, &a, 1, 1.0, 0.0, LinearSolver::Direct).is_err());
}

#[test]
fn steady_states() {
    let mesh = square(2);
    let f = |x: &[f64]| x[0] * x[0] + x[1];
    let sp = FeSpace::new(mesh.clone(), BoundaryCondition::Neumann).unwrap();
    let u0 = sp.interpolate(&f);
    let m = assemble_mass(&sp).unwrap();
    let ones = vec![1.0; sp.n_dofs()];
    let mean = fraclap::linalg::dot(&spmv(&m, &ones).unwrap(), &u0) / m.total_sum();
    assert!(steady_state(&sp, &u0).unwrap().iter().all(|v| (v - mean).abs() < 1e-13));
    let sp = FeSpace::new(mesh, BoundaryCondition::Dirichlet).unwrap();
    assert!(steady_state(&sp, &sp.interpolate(&f)).unwrap().iter().all(|&v| v == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn heat_decays_in_mass_norm(seed in 0u64..1000, theta in prop::sample::select(vec![0.5, 0.6, 1.0]), robin in 0.1f64..10.0) {
        let mesh = square(2);
        let sp = FeSpace::new(mesh, BoundaryCondition::robin(robin)).unwrap();
        let m = assemble_mass(&sp).unwrap();
        let u0: Vec<f64> = (0..sp.n_dofs()).map(|i| (((i as u64 + 1) * (seed + 17)) % 97) as f64 / 48.0 - 1.0).collect();
        let run = run_heat(&sp, &u0, theta, 0.01, 30).unwrap();
        let norms: Vec<f64> = run.snapshots.iter().map(|w| mass_norm(&m, w).unwrap()).collect();
        prop_assert!(norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14)));
    }

    #[test]
    fn neumann_heat_conserves_mass(seed in 0u64..1000, theta in 0.5f64..=1.0) {
        let mesh = interval(40);
        let sp = FeSpace::new(mesh, BoundaryCondition::Neumann).unwrap();
        let m = assemble_mass(&sp).unwrap();
        let m1 = spmv(&m, &vec![1.0; sp.n_dofs()]).unwrap();
        let u0: Vec<f64> = (0..sp.n_dofs()).map(|i| ((((i as u64) ^ seed) * 31) % 50) as f64 / 10.0).collect();
        let total0 = fraclap::linalg::dot(&m1, &u0);
        let run = run_heat(&sp, &u0, theta, 0.002, 40).unwrap();
        for w in &run.snapshots {
            prop_assert!((fraclap::linalg::dot(&m1, w) - total0).abs() <= 1e-10 * total0.abs().max(1.0));
        }
    }
}
