//! θ-scheme time stepping for the heat equation with homogeneous boundary
//! conditions.

use crate::error::{invalid, Error, Result};
use crate::fem::{assemble_mass, assemble_stiffness, default_max_iter, FeSpace};
use crate::linalg::{cg_solve_from, CholeskyFactor, CsrMatrix, FieldVector, DEFAULT_CG_TOL};

/// How the implicit system `(M + θΔt A) W = r` is solved each step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearSolver {
    /// Envelope Cholesky factorization, computed once per run.
    Direct,
    /// Jacobi-preconditioned CG warm-started from the previous step.
    Cg { tol: f64 },
}

impl Default for LinearSolver {
    fn default() -> Self {
        LinearSolver::Direct
    }
}

/// Gershgorin-type upper bound on the largest generalized eigenvalue of
/// `(A, M)` for P1 mass matrices on simplices of dimension `dim`.
///
/// Every element mass matrix dominates `1/(dim+2)` times its row-lumped
/// version, so `λ_max(A, M) ≤ (dim+2) · max_i Σ_j |A_ij| / Σ_j M_ij`.
pub fn eigenvalue_upper_bound(mass: &CsrMatrix, stiff: &CsrMatrix, dim: usize) -> f64 {
    let mut bound: f64 = 0.0;
    for i in 0..mass.n_rows() {
        let lumped: f64 = mass.row(i).1.iter().sum();
        let abs_row: f64 = stiff.row(i).1.iter().map(|v| v.abs()).sum();
        bound = bound.max(abs_row / lumped);
    }
    (dim as f64 + 2.0) * bound
}

/// Largest admissible `Δt` for `θ < 1/2`; `None` when the scheme is
/// unconditionally stable.
pub fn cfl_dt_limit(mass: &CsrMatrix, stiff: &CsrMatrix, dim: usize, theta: f64) -> Option<f64> {
    if theta >= 0.5 {
        return None;
    }
    Some(2.0 / (eigenvalue_upper_bound(mass, stiff, dim) * (1.0 - 2.0 * theta)))
}

/// The constant `c_μ` of the CFL condition `Δt h⁻² ≤ c_μ/(1−2θ)`.
pub fn cfl_constant(mass: &CsrMatrix, stiff: &CsrMatrix, dim: usize, h: f64) -> f64 {
    2.0 / (eigenvalue_upper_bound(mass, stiff, dim) * h * h)
}

fn check_theta_dt(theta: f64, dt: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(invalid(format!("theta must lie in [0, 1], got {theta}")));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid(format!("time step must be positive, got {dt}")));
    }
    Ok(())
}

fn check_square(mass: &CsrMatrix, stiff: &CsrMatrix) -> Result<()> {
    let n = mass.n_rows();
    if mass.n_cols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: mass.n_cols() });
    }
    if stiff.n_rows() != n || stiff.n_cols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: stiff.n_rows() });
    }
    Ok(())
}

/// One θ-scheme step `(M+θΔtA)W = (M+(θ−1)ΔtA)W_prev`, solved by CG.
pub fn theta_step(mass: &CsrMatrix, stiff: &CsrMatrix, theta: f64, dt: f64, w_prev: &[f64]) -> Result<FieldVector> {
    check_theta_dt(theta, dt)?;
    check_square(mass, stiff)?;
    let mut stepper = HeatStepper::build(mass, stiff, theta, dt, LinearSolver::Cg { tol: DEFAULT_CG_TOL })?;
    let mut w = w_prev.to_vec();
    stepper.step(&mut w)?;
    Ok(w.into())
}

enum Inner {
    Direct { factor: CholeskyFactor, work: Vec<f64> },
    Cg { tol: f64, max_iter: usize },
}

/// Reusable θ-scheme propagator with matrices assembled once.
pub struct HeatStepper {
    theta: f64,
    dt: f64,
    lhs: CsrMatrix,
    rhs_mat: CsrMatrix,
    inner: Inner,
    rhs: Vec<f64>,
}

impl std::fmt::Debug for HeatStepper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HeatStepper").field("theta", &self.theta).field("dt", &self.dt).field("n", &self.rhs.len()).finish()
    }
}

impl HeatStepper {
    /// Validates `θ`, `Δt` and, for `θ < 1/2`, the CFL restriction.
    pub fn new(mass: &CsrMatrix, stiff: &CsrMatrix, dim: usize, theta: f64, dt: f64, solver: LinearSolver) -> Result<Self> {
        check_theta_dt(theta, dt)?;
        check_square(mass, stiff)?;
        if let Some(limit) = cfl_dt_limit(mass, stiff, dim, theta) {
            if dt > limit {
                return Err(Error::CflViolation { dt, limit });
            }
        }
        HeatStepper::build(mass, stiff, theta, dt, solver)
    }

    fn build(mass: &CsrMatrix, stiff: &CsrMatrix, theta: f64, dt: f64, solver: LinearSolver) -> Result<Self> {
        let lhs = mass.linear_combination(1.0, stiff, theta * dt)?;
        let rhs_mat = mass.linear_combination(1.0, stiff, (theta - 1.0) * dt)?;
        let n = mass.n_rows();
        let inner = match solver {
            LinearSolver::Direct => Inner::Direct { factor: CholeskyFactor::new(&lhs)?, work: vec![0.0; n] },
            LinearSolver::Cg { tol } => Inner::Cg { tol, max_iter: default_max_iter(n) },
        };
        Ok(HeatStepper { theta, dt, lhs, rhs_mat, inner, rhs: vec![0.0; n] })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// Advances `w` by one step in place.
    pub fn step(&mut self, w: &mut [f64]) -> Result<()> {
        if w.len() != self.rhs.len() {
            return Err(Error::DimensionMismatch { expected: self.rhs.len(), got: w.len() });
        }
        self.rhs_mat.spmv_into(w, &mut self.rhs)?;
        match &mut self.inner {
            Inner::Direct { factor, work } => factor.solve_into(&self.rhs, w, work)?,
            Inner::Cg { tol, max_iter } => {
                let sol = cg_solve_from(&self.lhs, &self.rhs, FieldVector::from(w.to_vec()), *tol, *max_iter)?;
                w.copy_from_slice(&sol.x);
            }
        }
        Ok(())
    }
}

/// Snapshots `W^(0), …, W^(n)` of a heat run; snapshot `j` sits at `t = jΔt`.
#[derive(Debug, Clone)]
pub struct HeatRun {
    pub theta: f64,
    pub dt: f64,
    pub snapshots: Vec<FieldVector>,
}

impl HeatRun {
    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }
}

/// Runs `n_steps` θ-scheme steps from `u0`, keeping every snapshot.
pub fn run_heat(sp: &FeSpace, u0: &[f64], theta: f64, dt: f64, n_steps: usize) -> Result<HeatRun> {
    run_heat_with(sp, u0, theta, dt, n_steps, LinearSolver::default())
}

pub fn run_heat_with(sp: &FeSpace, u0: &[f64], theta: f64, dt: f64, n_steps: usize, solver: LinearSolver) -> Result<HeatRun> {
    sp.check_len(u0)?;
    let mass = assemble_mass(sp)?;
    let stiff = assemble_stiffness(sp)?;
    let mut stepper = HeatStepper::new(&mass, &stiff, sp.mesh().dim(), theta, dt, solver)?;
    let mut snapshots = Vec::with_capacity(n_steps + 1);
    let mut w = u0.to_vec();
    snapshots.push(FieldVector::from(w.clone()));
    for _ in 0..n_steps {
        stepper.step(&mut w)?;
        snapshots.push(FieldVector::from(w.clone()));
    }
    Ok(HeatRun { theta, dt, snapshots })
}

/// Long-time limit of the semigroup started at `u0`.
pub fn steady_state(sp: &FeSpace, u0: &[f64]) -> Result<FieldVector> {
    let mass = assemble_mass(sp)?;
    steady_state_with(sp, &mass, u0)
}

/// [`steady_state`] with a pre-assembled mass matrix: zero for Dirichlet and
/// Robin, the discrete mean `1ᵀMu0 / 1ᵀM1` for Neumann.
pub fn steady_state_with(sp: &FeSpace, mass: &CsrMatrix, u0: &[f64]) -> Result<FieldVector> {
    sp.check_len(u0)?;
    let n = sp.n_dofs();
    if !sp.bc().is_neumann() {
        return Ok(FieldVector::zeros(n));
    }
    let mu = crate::linalg::spmv(mass, u0)?;
    let mean = mu.iter().sum::<f64>() / mass.total_sum();
    Ok(FieldVector::from_elem(n, mean))
}

/// `‖v‖_M = sqrt(vᵀ M v)`.
pub fn mass_norm(mass: &CsrMatrix, v: &[f64]) -> Result<f64> {
    let mv = crate::linalg::spmv(mass, v)?;
    Ok(mv.dot(v).max(0.0).sqrt())
}
