//! Explicit solver for the fractional porous-medium equation
//! `∂_τ u + (−Δ)^s (u^m) = 0` with homogeneous Dirichlet conditions in 1D.
//!
//! The update is forward Euler, `u ← u − Δτ Θ_h^s[u^m]`, with the power taken
//! nodally. Negative undershoots are reported, never clipped.

use std::io::Write;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::fem::{BoundaryCondition, ScalarField};
use crate::fracop::{write_nodal_csv, FracConfig, FractionalLaplacian};
use crate::linalg::{spmv, FieldVector};
use crate::mesh::Mesh;
use crate::spectral_oracle::{eig_interval, EigenPair};

/// Relative slack allowed above `h^{2s}/m` before a step is rejected.
const DTAU_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PmeState {
    pub tau: f64,
    /// Interior nodal values (Dirichlet DOFs).
    pub u: FieldVector,
    pub steps: usize,
}

/// Per-step monitoring data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmeDiagnostics {
    pub tau: f64,
    pub max_norm: f64,
    /// `1ᵀ M u`.
    pub mass: f64,
    pub min_value: f64,
}

#[derive(Debug, Clone)]
pub struct PmeRun {
    pub state: PmeState,
    /// States at the requested snapshot times, in increasing `τ`.
    pub snapshots: Vec<PmeState>,
    /// One entry for the initial state and one per step.
    pub diagnostics: Vec<PmeDiagnostics>,
}

/// Reusable solver: the fractional operator and its factorization are built once.
#[derive(Debug)]
pub struct PmeSolver {
    op: FractionalLaplacian,
    m: u32,
    phi1: EigenPair,
}

impl PmeSolver {
    /// Requires a 1D mesh, Dirichlet conditions and `m ≥ 2`.
    pub fn new(mesh: Arc<Mesh>, m: u32, cfg: FracConfig) -> Result<Self> {
        if m < 2 {
            return Err(invalid(format!("porous-medium exponent must be an integer greater than 1, got {m}")));
        }
        PmeSolver::with_exponent(mesh, m, cfg)
    }

    fn with_exponent(mesh: Arc<Mesh>, m: u32, cfg: FracConfig) -> Result<Self> {
        if mesh.dim() != 1 {
            return Err(invalid("the porous-medium solver is one-dimensional"));
        }
        if !cfg.bc.is_dirichlet() {
            return Err(invalid("the porous-medium solver needs Dirichlet conditions"));
        }
        let (a, b) = (mesh.node(mesh.boundary_nodes()[0])[0], mesh.node(mesh.boundary_nodes()[1])[0]);
        let phi1 = eig_interval(&BoundaryCondition::Dirichlet, a.min(b), a.max(b), 1)?;
        let op = FractionalLaplacian::on_mesh(mesh, cfg)?;
        Ok(PmeSolver { op, m, phi1 })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn operator(&self) -> &FractionalLaplacian {
        &self.op
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.op.space().mesh()
    }

    /// Normalized first Dirichlet eigenfunction of the interval.
    pub fn phi1(&self) -> &EigenPair {
        &self.phi1
    }

    /// Largest admissible step `h^{2s}/m`.
    pub fn max_dtau(&self) -> f64 {
        self.mesh().h_max().powf(2.0 * self.op.config().s) / self.m as f64
    }

    /// Initial state from the nodal interpolant of `u0`.
    pub fn initial_state(&self, u0: &dyn ScalarField) -> Result<PmeState> {
        let u = self.op.space().interpolate(u0);
        if !u.is_finite() {
            return Err(invalid("initial datum is not finite at the nodes"));
        }
        Ok(PmeState { tau: 0.0, u, steps: 0 })
    }

    /// `u ← u − Δτ Θ_h^s[u^m]`.
    pub fn step(&mut self, state: &mut PmeState, dtau: f64) -> Result<()> {
        let limit = self.max_dtau();
        if !(dtau > 0.0) || !dtau.is_finite() {
            return Err(invalid(format!("evolution step must be positive, got {dtau}")));
        }
        if dtau > limit * (1.0 + DTAU_SLACK) {
            return Err(Error::CflViolation { dt: dtau, limit });
        }
        let m = self.m as i32;
        let power: Vec<f64> = state.u.iter().map(|v| v.powi(m)).collect();
        if power.iter().any(|v| !v.is_finite()) {
            return Err(Error::Overflow(self.m));
        }
        if power.iter().any(|&v| v != 0.0) {
            let frac = self.op.apply_coeffs(&power)?.values;
            state.u.axpy(-dtau, &frac);
        }
        state.tau += dtau;
        state.steps += 1;
        Ok(())
    }

    pub fn diagnostics(&self, state: &PmeState) -> Result<PmeDiagnostics> {
        let mass = spmv(self.op.mass(), &state.u)?.iter().sum();
        Ok(PmeDiagnostics {
            tau: state.tau,
            max_norm: state.u.max_abs(),
            mass,
            min_value: state.u.iter().copied().fold(f64::INFINITY, f64::min),
        })
    }

    /// Steps with `Δτ = h^{2s}/m` up to `tau_end`, shortening steps to land
    /// exactly on each requested snapshot time.
    pub fn run(&mut self, u0: &dyn ScalarField, tau_end: f64, snapshot_taus: &[f64]) -> Result<PmeRun> {
        if !(tau_end >= 0.0) || !tau_end.is_finite() {
            return Err(invalid(format!("final time must be non-negative, got {tau_end}")));
        }
        let mut targets: Vec<f64> = snapshot_taus.to_vec();
        if targets.iter().any(|&t| !(t >= 0.0) || t > tau_end) {
            return Err(invalid("snapshot times must lie in [0, tau_end]"));
        }
        targets.sort_by(f64::total_cmp);
        targets.dedup();

        let mut state = self.initial_state(u0)?;
        let mut diagnostics = vec![self.diagnostics(&state)?];
        let mut snapshots = Vec::with_capacity(targets.len());
        let dmax = self.max_dtau();
        let mut stops = targets.clone();
        stops.push(tau_end);
        let mut next_snap = 0;
        for &stop in &stops {
            while stop - state.tau > DTAU_SLACK * dmax {
                let remaining = stop - state.tau;
                let dtau = if remaining <= dmax * (1.0 + DTAU_SLACK) { remaining } else { dmax };
                self.step(&mut state, dtau)?;
                if remaining <= dmax * (1.0 + DTAU_SLACK) {
                    state.tau = stop;
                }
                diagnostics.push(self.diagnostics(&state)?);
            }
            while next_snap < targets.len() && targets[next_snap] <= stop {
                snapshots.push(state.clone());
                next_snap += 1;
            }
        }
        Ok(PmeRun { state, snapshots, diagnostics })
    }

    /// Interior nodal values expanded to every mesh node.
    pub fn nodal(&self, state: &PmeState) -> Result<Vec<f64>> {
        self.op.space().to_nodal(&state.u)
    }

    /// `v(x, τ) = φ₁(x)^{1/m} / τ^{1/(m−1)}` at every mesh node.
    pub fn scaled_eigenfunction(&self, tau: f64) -> Vec<f64> {
        let mesh = self.mesh();
        (0..mesh.n_nodes()).map(|i| profile(&self.phi1, mesh.node(i), self.m, tau)).collect()
    }

    /// Empirical constants `(c₀, c₁)` of `c₀ v ≤ u ≤ c₁ v`: min and max of
    /// `u/v` over nodes with `φ₁ ≥ 1e-6`.
    pub fn boundary_behavior_ratio(&self, state: &PmeState) -> Result<(f64, f64)> {
        boundary_behavior_ratio(self.mesh(), &self.nodal(state)?, &self.phi1, self.m, state.tau)
    }

    /// Writes `x,u,v_scaled` for one state.
    pub fn write_snapshot_csv<W: Write>(&self, out: W, state: &PmeState) -> Result<()> {
        let u = self.nodal(state)?;
        let v = self.scaled_eigenfunction(state.tau);
        write_nodal_csv(out, self.mesh(), &[("u", &u), ("v_scaled", &v)])
    }
}

fn profile(phi1: &EigenPair, x: &[f64], m: u32, tau: f64) -> f64 {
    let phi = phi1.value(x).max(0.0);
    phi.powf(1.0 / m as f64) / tau.powf(1.0 / (m as f64 - 1.0))
}

/// Minimum phi value for a node to enter the ratio band.
pub const RATIO_BAND: f64 = 1e-6;

/// `(min, max)` of `u/v` over nodes where `φ₁ ≥ 1e-6`, with
/// `v = φ₁^{1/m}/τ^{1/(m−1)}`.
pub fn boundary_behavior_ratio(mesh: &Mesh, nodal_u: &[f64], phi1: &EigenPair, m: u32, tau: f64) -> Result<(f64, f64)> {
    if !(tau > 0.0) {
        return Err(invalid("boundary behavior is defined for tau > 0"));
    }
    if m < 2 {
        return Err(invalid(format!("porous-medium exponent must exceed 1, got {m}")));
    }
    if nodal_u.len() != mesh.n_nodes() {
        return Err(Error::DimensionMismatch { expected: mesh.n_nodes(), got: nodal_u.len() });
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, &u) in nodal_u.iter().enumerate() {
        if phi1.value(mesh.node(i)) < RATIO_BAND {
            continue;
        }
        let r = u / profile(phi1, mesh.node(i), m, tau);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    if lo > hi {
        return Err(invalid("no nodes inside the evaluation band"));
    }
    Ok((lo, hi))
}

/// The compactly supported initial datum `e^{4 − 1/((0.5−x)(0.5+x))}` on `|x| < 0.5`.
pub fn bump_datum(x: &[f64]) -> f64 {
    let x = x[0];
    if x.abs() < 0.5 {
        (4.0 - 1.0 / ((0.5 - x) * (0.5 + x))).exp()
    } else {
        0.0
    }
}

/// The standard configuration: `Ω = (−1, 1)` with 1000 cells, `θ = 1`,
/// `p = 1`, `η = 1`, midpoint weights.
pub fn standard_setup(s: f64) -> Result<(Arc<Mesh>, FracConfig)> {
    let mesh = Arc::new(crate::mesh::generate_interval(-1.0, 1.0, 1000)?);
    let lambda_min = (std::f64::consts::PI / 2.0).powi(2);
    let cfg = FracConfig { eta: 1.0, ..FracConfig::low(s, BoundaryCondition::Dirichlet) }
        .with_nt_mode(crate::fracop::NtMode::Formula { lambda_min });
    Ok((mesh, cfg))
}
