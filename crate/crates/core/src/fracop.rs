//! The discrete fractional operator
//! `Θ_h^s u = (1/Γ(−s)) [Σ_j (W^(j) − W^(0)) β_j + (W_∞ − W^(0)) β_∞]`
//! and the non-homogeneous Dirichlet pipeline.

use std::io::Write;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::fem::{
    assemble_mass, assemble_stiffness, default_max_iter, l2_project_with, BoundaryCondition, FeFunction, FeSpace,
    LinearCombination, ScalarField,
};
use crate::fracquad::{
    adaptive_tail_nt, choose_nt, gamma_neg, high_first_weight, high_interior_weight, high_last_weight, low_weight,
    tail_weight, Scheme, DEFAULT_MAX_NT,
};
use crate::heat::{mass_norm, steady_state_with, HeatStepper, LinearSolver};
use crate::linalg::{cg_solve, spmv, CsrMatrix, FieldVector, DEFAULT_CG_TOL};
use crate::mesh::Mesh;

/// How the number of time steps `N_t` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NtMode {
    /// `N_t ≥ c(s)/(λ_min Δt) ln(1/Δt)` with a lower bound `λ_min` on the
    /// first nonzero eigenvalue.
    Formula { lambda_min: f64 },
    /// Step until `‖W^(j) − W_∞‖_M ≤ tol ‖W^(0) − W_∞‖_M`.
    Adaptive { tol: f64 },
    Fixed(usize),
}

/// Parameters of `Θ_h^s`. Time step is `Δt = η h^p` with `h` the mesh size.
#[derive(Debug, Clone)]
pub struct FracConfig {
    pub s: f64,
    pub bc: BoundaryCondition,
    pub theta: f64,
    pub eta: f64,
    pub p: f64,
    pub scheme: Scheme,
    pub nt_mode: NtMode,
    pub solver: LinearSolver,
    /// Relative tolerance for projections and harmonic extensions.
    pub cg_tol: f64,
    pub max_nt: usize,
    /// Permits `s` outside [0.01, 0.99].
    pub allow_extreme_s: bool,
}

impl FracConfig {
    /// Implicit Euler with midpoint weights, `p = 1`, `η = 0.001`.
    pub fn low(s: f64, bc: BoundaryCondition) -> Self {
        FracConfig {
            s,
            bc,
            theta: 1.0,
            eta: 1e-3,
            p: 1.0,
            scheme: Scheme::Low,
            nt_mode: NtMode::Adaptive { tol: 1e-8 },
            solver: LinearSolver::Direct,
            cg_tol: DEFAULT_CG_TOL,
            max_nt: DEFAULT_MAX_NT,
            allow_extreme_s: false,
        }
    }

    /// Crank–Nicolson with hat weights, `p = 1`, `η = 0.001`.
    pub fn high(s: f64, bc: BoundaryCondition) -> Self {
        FracConfig { theta: 0.5, scheme: Scheme::High, ..FracConfig::low(s, bc) }
    }

    pub fn with_nt_mode(mut self, mode: NtMode) -> Self {
        self.nt_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.s;
        if !(s > 0.0 && s < 1.0) {
            return Err(invalid(format!("s must lie in (0, 1), got {s}")));
        }
        if !self.allow_extreme_s && !(0.01..=0.99).contains(&s) {
            return Err(invalid(format!("s = {s} is outside [0.01, 0.99]; set allow_extreme_s to use it")));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(invalid(format!("theta must lie in [0, 1], got {}", self.theta)));
        }
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(invalid(format!("eta must be positive, got {}", self.eta)));
        }
        let p = self.p;
        match self.scheme {
            Scheme::Low if self.theta < 0.5 => {
                if p != 2.0 {
                    return Err(invalid(format!("p must equal 2 when theta < 1/2, got {p}")));
                }
            }
            Scheme::Low => {
                if !(p > 0.0 && p <= 2.0) {
                    return Err(invalid(format!("p must lie in (0, 2], got {p}")));
                }
            }
            Scheme::High => {
                if self.theta != 0.5 {
                    return Err(invalid(format!("the high-order scheme needs theta = 1/2, got {}", self.theta)));
                }
                if !(p > 0.0 && p <= 1.0) {
                    return Err(invalid(format!("p must lie in (0, 1] for the high-order scheme, got {p}")));
                }
            }
        }
        match self.nt_mode {
            NtMode::Formula { lambda_min } if !(lambda_min > 0.0) => {
                return Err(invalid(format!("lambda_min must be positive, got {lambda_min}")));
            }
            NtMode::Adaptive { tol } if !(tol > 0.0) => {
                return Err(invalid(format!("adaptive tolerance must be positive, got {tol}")));
            }
            NtMode::Fixed(n) if n < self.scheme.min_nt() => {
                return Err(invalid(format!("{} scheme needs at least {} time steps", self.scheme, self.scheme.min_nt())));
            }
            _ => {}
        }
        if let LinearSolver::Cg { tol } = self.solver {
            if !(tol > 0.0) {
                return Err(invalid("CG tolerance must be positive"));
            }
        }
        if !(self.cg_tol > 0.0) {
            return Err(invalid("CG tolerance must be positive"));
        }
        if self.max_nt == 0 {
            return Err(invalid("max_nt must be positive"));
        }
        Ok(())
    }

    /// `Δt = η h^p`.
    pub fn dt(&self, h: f64) -> f64 {
        self.eta * h.powf(self.p)
    }
}

/// Result of one application of the operator.
#[derive(Debug, Clone)]
pub struct FracOutput {
    /// DOF coefficients of `Θ_h^s u`.
    pub values: FieldVector,
    pub n_t: usize,
    pub dt: f64,
    pub beta_inf: f64,
    /// `W^(0), …, W^(n_t)` when requested.
    pub snapshots: Option<Vec<FieldVector>>,
}

/// `Θ_h^s` on a fixed space, with matrices and factorization cached so that
/// repeated applications only pay for the time stepping.
#[derive(Debug)]
pub struct FractionalLaplacian {
    space: FeSpace,
    cfg: FracConfig,
    mass: CsrMatrix,
    stepper: HeatStepper,
    dt: f64,
    gamma_prefactor: f64,
}

impl FractionalLaplacian {
    pub fn new(space: FeSpace, cfg: FracConfig) -> Result<Self> {
        cfg.validate()?;
        if space.bc().name() != cfg.bc.name() {
            return Err(invalid(format!(
                "space has {} boundary condition but configuration asks for {}",
                space.bc().name(),
                cfg.bc.name()
            )));
        }
        let mass = assemble_mass(&space)?;
        let stiff = assemble_stiffness(&space)?;
        let dt = cfg.dt(space.mesh().h_max());
        let stepper = HeatStepper::new(&mass, &stiff, space.mesh().dim(), cfg.theta, dt, cfg.solver)?;
        let gamma_prefactor = 1.0 / gamma_neg(cfg.s)?;
        Ok(FractionalLaplacian { space, cfg, mass, stepper, dt, gamma_prefactor })
    }

    /// Builds the space from a mesh and the configured boundary condition.
    pub fn on_mesh(mesh: Arc<Mesh>, cfg: FracConfig) -> Result<Self> {
        let space = FeSpace::new(mesh, cfg.bc.clone())?;
        FractionalLaplacian::new(space, cfg)
    }

    pub fn space(&self) -> &FeSpace {
        &self.space
    }

    pub fn config(&self) -> &FracConfig {
        &self.cfg
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `N_t` for the formula or fixed modes; `None` in adaptive mode.
    pub fn planned_nt(&self) -> Result<Option<usize>> {
        let n = match self.cfg.nt_mode {
            NtMode::Formula { lambda_min } => choose_nt(self.cfg.scheme, self.cfg.s, self.dt, lambda_min)?,
            NtMode::Fixed(n) => n,
            NtMode::Adaptive { .. } => return Ok(None),
        };
        if n > self.cfg.max_nt {
            return Err(Error::StepCapExceeded { cap: self.cfg.max_nt });
        }
        Ok(Some(n))
    }

    /// L²-projects `u` onto the space.
    pub fn project(&self, u: &dyn ScalarField) -> Result<FieldVector> {
        l2_project_with(&self.space, &self.mass, u, self.cfg.cg_tol)
    }

    /// `Θ_h^s u` for a function `u`.
    pub fn apply(&mut self, u: &dyn ScalarField) -> Result<FieldVector> {
        let w0 = self.project(u)?;
        Ok(self.apply_coeffs(&w0)?.values)
    }

    /// `Θ_h^s` applied to the FE function with coefficients `w0`.
    pub fn apply_coeffs(&mut self, w0: &[f64]) -> Result<FracOutput> {
        self.apply_detailed(w0, false)
    }

    pub fn apply_detailed(&mut self, w0: &[f64], keep_snapshots: bool) -> Result<FracOutput> {
        self.space.check_len(w0)?;
        let (s, dt, scheme) = (self.cfg.s, self.dt, self.cfg.scheme);
        let n = w0.len();
        let w_inf = steady_state_with(&self.space, &self.mass, w0)?;
        let mut st = Stream {
            w: w0.to_vec(),
            acc: vec![0.0; n],
            snapshots: keep_snapshots.then(|| vec![FieldVector::from(w0.to_vec())]),
        };
        let planned = self.planned_nt()?;
        let weight = |j: usize, last: Option<usize>| match scheme {
            Scheme::Low => low_weight(s, dt, j),
            Scheme::High if j == 1 => high_first_weight(s, dt),
            Scheme::High if Some(j) == last => high_last_weight(s, dt, j),
            Scheme::High => high_interior_weight(s, dt, j),
        };
        let stepper = &mut self.stepper;
        let n_t = match (self.cfg.nt_mode, planned) {
            (NtMode::Adaptive { tol }, _) => {
                let mass = &self.mass;
                let dist = |w: &[f64]| -> Result<f64> {
                    let d: Vec<f64> = w.iter().zip(w_inf.iter()).map(|(a, b)| a - b).collect();
                    mass_norm(mass, &d)
                };
                // Round-off floor so that an already steady datum stops.
                let floor = 1e-13 * mass_norm(mass, w0)?;
                let d0 = dist(w0)?;
                let n_t = adaptive_tail_nt(tol, scheme.min_nt(), self.cfg.max_nt, |j| {
                    if j == 0 {
                        return Ok(d0);
                    }
                    st.advance(stepper, j, weight(j, None), w0)?;
                    let d = dist(&st.w)?;
                    Ok(if d <= floor { 0.0 } else { d })
                })?;
                if scheme == Scheme::High {
                    // The last step was accumulated with the interior weight.
                    let fix = high_last_weight(s, dt, n_t) - high_interior_weight(s, dt, n_t);
                    for i in 0..n {
                        st.acc[i] += fix * (st.w[i] - w0[i]);
                    }
                }
                n_t
            }
            (_, Some(n_t)) => {
                for j in 1..=n_t {
                    st.advance(stepper, j, weight(j, Some(n_t)), w0)?;
                }
                n_t
            }
            (_, None) => unreachable!("planned step count exists outside adaptive mode"),
        };
        let beta_inf = tail_weight(scheme, s, dt, n_t);
        let values: Vec<f64> =
            st.acc.iter().zip(w_inf.iter()).zip(w0).map(|((a, wi), w0)| self.gamma_prefactor * (a + beta_inf * (wi - w0))).collect();
        if !values.iter().all(|v| v.is_finite()) {
            return Err(invalid("fractional operator produced non-finite values"));
        }
        Ok(FracOutput { values: values.into(), n_t, dt, beta_inf, snapshots: st.snapshots })
    }
}

struct Stream {
    w: Vec<f64>,
    acc: Vec<f64>,
    snapshots: Option<Vec<FieldVector>>,
}

impl Stream {
    fn advance(&mut self, stepper: &mut HeatStepper, j: usize, beta: f64, w0: &[f64]) -> Result<()> {
        stepper.step(&mut self.w)?;
        for ((a, w), w0) in self.acc.iter_mut().zip(&self.w).zip(w0) {
            *a += beta * (w - w0);
        }
        if let Some(snaps) = self.snapshots.as_mut() {
            snaps.push(FieldVector::from(self.w.clone()));
        }
        if j % 1024 == 0 && !self.w.iter().all(|v| v.is_finite()) {
            return Err(invalid(format!("heat solution became non-finite at step {j}")));
        }
        Ok(())
    }
}

/// One-shot `Θ_h^s u` on the given space.
pub fn apply_fractional(sp: &FeSpace, u: &dyn ScalarField, cfg: &FracConfig) -> Result<FieldVector> {
    FractionalLaplacian::new(sp.clone(), cfg.clone())?.apply(u)
}

/// One-shot `Θ_h^s` applied to DOF coefficients.
pub fn apply_fractional_coeffs(sp: &FeSpace, coeffs: &[f64], cfg: &FracConfig) -> Result<FieldVector> {
    Ok(FractionalLaplacian::new(sp.clone(), cfg.clone())?.apply_coeffs(coeffs)?.values)
}

/// Discrete harmonic extension: the P1 function that interpolates `g` at
/// boundary nodes and is discrete-harmonic in the interior. Returns one value
/// per mesh node.
pub fn harmonic_extension(mesh: &Arc<Mesh>, g: &dyn ScalarField, tol: f64) -> Result<Vec<f64>> {
    let full = FeSpace::new(mesh.clone(), BoundaryCondition::Neumann)?;
    let interior = FeSpace::new(mesh.clone(), BoundaryCondition::Dirichlet)?;
    let mut lifted = vec![0.0; mesh.n_nodes()];
    for &i in mesh.boundary_nodes() {
        lifted[i] = g.value(mesh.node(i));
        if !lifted[i].is_finite() {
            return Err(invalid(format!("boundary datum is not finite at node {i}")));
        }
    }
    if interior.n_dofs() == 0 {
        return Ok(lifted);
    }
    let k_full = assemble_stiffness(&full)?;
    let k_int = assemble_stiffness(&interior)?;
    let r = spmv(&k_full, &lifted)?;
    let rhs: Vec<f64> = interior.node_of_dof().iter().map(|&i| -r[i]).collect();
    let z = cg_solve(&k_int, &rhs, tol, default_max_iter(interior.n_dofs()))?;
    for (d, &i) in interior.node_of_dof().iter().enumerate() {
        lifted[i] = z.x[d];
    }
    Ok(lifted)
}

/// Maximum allowed `|u − g|` at boundary nodes.
pub const TRACE_TOL: f64 = 1e-8;

/// `Θ_h^s[u − z̃_h]` where `z̃_h` is the discrete harmonic extension of `g`;
/// approximates the fractional Laplacian with boundary datum `u = g`.
pub fn apply_fractional_nonhomogeneous(
    sp: &FeSpace,
    u: &dyn ScalarField,
    g: &dyn ScalarField,
    cfg: &FracConfig,
) -> Result<FieldVector> {
    let mut op = FractionalLaplacian::new(sp.clone(), cfg.clone())?;
    let shifted = shifted_datum(&op, u, g)?;
    Ok(op.apply_coeffs(&shifted)?.values)
}

/// Projection of `u − z̃_h` onto the Dirichlet space of `op`.
pub fn shifted_datum(op: &FractionalLaplacian, u: &dyn ScalarField, g: &dyn ScalarField) -> Result<FieldVector> {
    let sp = op.space();
    if !sp.bc().is_dirichlet() {
        return Err(invalid("non-homogeneous data are supported for Dirichlet conditions only"));
    }
    let mesh = sp.mesh();
    for &i in mesh.boundary_nodes() {
        let x = mesh.node(i);
        let (uv, gv) = (u.value(x), g.value(x));
        if !((uv - gv).abs() <= TRACE_TOL) {
            return Err(Error::TraceMismatch { node: i, value: uv, expected: gv });
        }
    }
    let z = FeFunction::from_nodal(mesh.clone(), harmonic_extension(mesh, g, op.config().cg_tol)?)?;
    let datum = LinearCombination::new(vec![(1.0, u), (-1.0, &z)]);
    op.project(&datum)
}

/// Writes one CSV row per mesh node: coordinates followed by the given columns.
pub fn write_nodal_csv<W: Write>(mut out: W, mesh: &Mesh, columns: &[(&str, &[f64])]) -> Result<()> {
    for (name, col) in columns {
        if col.len() != mesh.n_nodes() {
            return Err(invalid(format!("column `{name}` has {} entries for {} nodes", col.len(), mesh.n_nodes())));
        }
    }
    let coord_names = ["x", "y"];
    let mut header: Vec<&str> = coord_names[..mesh.dim()].to_vec();
    header.extend(columns.iter().map(|(n, _)| *n));
    writeln!(out, "{}", header.join(","))?;
    for i in 0..mesh.n_nodes() {
        let mut fields: Vec<String> = mesh.node(i).iter().map(|v| format!("{v:?}")).collect();
        fields.extend(columns.iter().map(|(_, c)| format!("{:?}", c[i])));
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Mass-norm distance used by tests and diagnostics.
pub fn relative_mass_distance(mass: &CsrMatrix, a: &[f64], b: &[f64]) -> Result<f64> {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let denom = mass_norm(mass, b)?;
    Ok(mass_norm(mass, &d)? / if denom > 0.0 { denom } else { 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::l2_norm_error;
    use crate::fracquad::weights;
    use crate::mesh::{generate_convex_polygon, generate_interval, UNIT_SQUARE};
    use crate::spectral_oracle::{eig_1d, exact_fractional};
    use std::f64::consts::PI;

    fn interval(n: usize) -> Arc<Mesh> {
        Arc::new(generate_interval(0.0, 1.0, n).unwrap())
    }

    #[test]
    fn config_validation() {
        let bc = BoundaryCondition::Dirichlet;
        assert!(FracConfig::low(0.5, bc.clone()).validate().is_ok());
        assert!(FracConfig::high(0.5, bc.clone()).validate().is_ok());
        assert!(FracConfig::low(0.0, bc.clone()).validate().is_err());
        assert!(FracConfig::low(0.995, bc.clone()).validate().is_err());
        assert!(FracConfig { allow_extreme_s: true, ..FracConfig::low(0.995, bc.clone()) }.validate().is_ok());
        assert!(FracConfig { theta: 1.0, ..FracConfig::high(0.5, bc.clone()) }.validate().is_err());
        assert!(FracConfig { p: 1.5, ..FracConfig::high(0.5, bc.clone()) }.validate().is_err());
        assert!(FracConfig { p: 2.5, ..FracConfig::low(0.5, bc.clone()) }.validate().is_err());
        assert!(FracConfig { theta: 0.0, ..FracConfig::low(0.5, bc.clone()) }.validate().is_err());
        assert!(FracConfig { theta: 0.0, p: 2.0, ..FracConfig::low(0.5, bc.clone()) }.validate().is_ok());
        assert!(FracConfig::high(0.5, bc).with_nt_mode(NtMode::Fixed(1)).validate().is_err());
    }

    #[test]
    fn space_and_config_must_agree() {
        let sp = FeSpace::new(interval(8), BoundaryCondition::Neumann).unwrap();
        let cfg = FracConfig::low(0.5, BoundaryCondition::Dirichlet);
        assert!(FractionalLaplacian::new(sp, cfg).is_err());
    }

    #[test]
    fn streaming_matches_snapshot_sum() {
        for cfg in [
            FracConfig::low(0.3, BoundaryCondition::robin(1.0)).with_nt_mode(NtMode::Fixed(40)),
            FracConfig::high(0.7, BoundaryCondition::robin(1.0)).with_nt_mode(NtMode::Fixed(40)),
        ] {
            let mut op = FractionalLaplacian::on_mesh(interval(16), FracConfig { eta: 0.05, ..cfg.clone() }).unwrap();
            let w0 = op.project(&|x: &[f64]| (2.0 * x[0]).sin() + 0.3).unwrap();
            let out = op.apply_detailed(&w0, true).unwrap();
            let snaps = out.snapshots.unwrap();
            let q = weights(cfg.scheme, cfg.s, out.dt, 40).unwrap();
            for i in 0..w0.len() {
                let mut v: f64 = (1..=40).map(|j| q.betas[j - 1] * (snaps[j][i] - w0[i])).sum();
                v += q.beta_inf * (0.0 - w0[i]);
                v *= q.gamma_prefactor;
                assert!((v - out.values[i]).abs() <= 1e-12 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn adaptive_high_fixes_last_weight() {
        let cfg = FracConfig { eta: 0.05, ..FracConfig::high(0.5, BoundaryCondition::Dirichlet) }
            .with_nt_mode(NtMode::Adaptive { tol: 1e-4 });
        let mut op = FractionalLaplacian::on_mesh(interval(16), cfg.clone()).unwrap();
        let w0 = op.project(&|x: &[f64]| x[0] * (1.0 - x[0])).unwrap();
        let adaptive = op.apply_coeffs(&w0).unwrap();
        let fixed_cfg = cfg.with_nt_mode(NtMode::Fixed(adaptive.n_t));
        let fixed = FractionalLaplacian::on_mesh(interval(16), fixed_cfg).unwrap().apply_coeffs(&w0).unwrap();
        for (a, b) in adaptive.values.iter().zip(fixed.values.iter()) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn neumann_constant_maps_to_zero() {
        for cfg in [FracConfig::low(0.5, BoundaryCondition::Neumann), FracConfig::high(0.5, BoundaryCondition::Neumann)] {
            let sp = FeSpace::new(interval(32), BoundaryCondition::Neumann).unwrap();
            let out = apply_fractional(&sp, &|_: &[f64]| 2.0, &cfg).unwrap();
            assert!(out.max_abs() < 1e-8, "{}", out.max_abs());
        }
    }

    #[test]
    fn dirichlet_eigenfunction_coarse() {
        let pair = eig_1d(&BoundaryCondition::Dirichlet, 1.0, 1).unwrap();
        let cfg = FracConfig::low(0.5, BoundaryCondition::Dirichlet).with_nt_mode(NtMode::Formula { lambda_min: PI * PI });
        let sp = FeSpace::new(interval(64), BoundaryCondition::Dirichlet).unwrap();
        let out = apply_fractional(&sp, &pair, &cfg).unwrap();
        let exact = exact_fractional(&pair, 0.5);
        let rel = l2_norm_error(&sp, &out, &exact).unwrap() / PI;
        assert!(rel < 0.05, "{rel}");
    }

    #[test]
    fn harmonic_extension_reproduces_affine() {
        let mesh = Arc::new(generate_convex_polygon(&UNIT_SQUARE, 3).unwrap());
        let g = |x: &[f64]| 0.5 * x[0] - 2.0 * x[1] + 0.25;
        let z = harmonic_extension(&mesh, &g, 1e-13).unwrap();
        for i in 0..mesh.n_nodes() {
            assert!((z[i] - g(mesh.node(i))).abs() < 1e-10);
        }
        let c = harmonic_extension(&mesh, &|_: &[f64]| 3.0, 1e-13).unwrap();
        assert!(c.iter().all(|v| (v - 3.0).abs() < 1e-10));
    }

    #[test]
    fn nonhomogeneous_rejects_trace_mismatch() {
        let mesh = Arc::new(generate_convex_polygon(&UNIT_SQUARE, 2).unwrap());
        let sp = FeSpace::new(mesh, BoundaryCondition::Dirichlet).unwrap();
        let cfg = FracConfig::low(0.5, BoundaryCondition::Dirichlet);
        let r = apply_fractional_nonhomogeneous(&sp, &|_: &[f64]| 1.0, &|_: &[f64]| 0.0, &cfg);
        assert!(matches!(r, Err(Error::TraceMismatch { .. })));
        let sp = FeSpace::new(sp.mesh().clone(), BoundaryCondition::Neumann).unwrap();
        let cfg = FracConfig::low(0.5, BoundaryCondition::Neumann);
        assert!(apply_fractional_nonhomogeneous(&sp, &|_: &[f64]| 0.0, &|_: &[f64]| 0.0, &cfg).is_err());
    }

    #[test]
    fn csv_export() {
        let mesh = generate_interval(0.0, 1.0, 2).unwrap();
        let mut buf = Vec::new();
        write_nodal_csv(&mut buf, &mesh, &[("u", &[1.0, 2.0, 3.0]), ("frac", &[0.0, 0.5, 0.0])]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,u,frac\n0.0,1.0,0.0\n0.5,2.0,0.5\n1.0,3.0,0.0\n");
        assert!(write_nodal_csv(Vec::new(), &mesh, &[("u", &[1.0])]).is_err());
    }
}
