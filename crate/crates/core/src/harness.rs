//! Convergence studies against analytic eigenpairs.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::fem::{l2_norm_error, BoundaryCondition, Kappa, FeFunction, LinearCombination, ScalarField};
use crate::fracop::{harmonic_extension, shifted_datum, FracConfig, FractionalLaplacian, NtMode};
use crate::fracquad::Scheme;
use crate::mesh::{generate_convex_polygon, generate_interval, refine_red, validate_convex_polygon, Mesh, UNIT_SQUARE};
use crate::spectral_oracle::{eig_2d_square, eig_interval, exact_fractional, robin_root, EigenPair};

/// Computational domain.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    Interval { a: f64, b: f64 },
    UnitSquare,
    /// Convex polygon, counter-clockwise vertices.
    Polygon { vertices: Vec<[f64; 2]> },
}

impl DomainSpec {
    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } => 1,
            _ => 2,
        }
    }

    fn vertices(&self) -> &[[f64; 2]] {
        match self {
            DomainSpec::Polygon { vertices } => vertices,
            _ => &UNIT_SQUARE,
        }
    }

    /// Uniform interval mesh with `round(|Ω|/h)` cells, or the centroid fan of
    /// a polygon red-refined until `h_max ≤ h`.
    pub fn mesh_for(&self, h: f64) -> Result<Mesh> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(invalid(format!("mesh size must be positive, got {h}")));
        }
        match self {
            DomainSpec::Interval { a, b } => {
                let cells = ((b - a) / h).round().max(1.0);
                if cells > 1e8 {
                    return Err(invalid(format!("mesh size {h} is too small")));
                }
                generate_interval(*a, *b, cells as usize)
            }
            _ => {
                let vertices = self.vertices();
                validate_convex_polygon(vertices)?;
                let mut mesh = generate_convex_polygon(vertices, 0)?;
                let mut levels = 0;
                while mesh.h_max() > h * (1.0 + 1e-9) {
                    levels += 1;
                    if levels > 12 {
                        return Err(invalid(format!("mesh size {h} needs more than 12 refinements")));
                    }
                    mesh = refine_red(&mesh)?;
                }
                Ok(mesh)
            }
        }
    }

    /// Analytic eigenpair with the given 1-based indices (one per dimension).
    pub fn eigenpair(&self, bc: &BoundaryCondition, indices: &[usize]) -> Result<EigenPair> {
        if indices.len() != self.dim() {
            return Err(invalid(format!("expected {} eigen indices, got {}", self.dim(), indices.len())));
        }
        match self {
            DomainSpec::Interval { a, b } => eig_interval(bc, *a, *b, indices[0]),
            DomainSpec::UnitSquare => eig_2d_square(bc, indices[0], indices[1]),
            DomainSpec::Polygon { .. } => Err(invalid("no analytic eigenpairs on general polygons")),
        }
    }

    /// Smallest nonzero eigenvalue of the Laplacian with the given condition.
    pub fn lambda_min(&self, bc: &BoundaryCondition) -> Result<f64> {
        let first_nonzero = |len: f64| -> Result<f64> {
            match bc {
                BoundaryCondition::Robin(Kappa::Constant(k)) => robin_lambda_min(*k, len),
                BoundaryCondition::Robin(_) => Err(invalid("eigenvalue bound needs a constant Robin coefficient")),
                _ => Ok((std::f64::consts::PI / len).powi(2)),
            }
        };
        match self {
            DomainSpec::Interval { a, b } => first_nonzero(b - a),
            DomainSpec::UnitSquare => {
                let l1 = first_nonzero(1.0)?;
                Ok(if bc.is_neumann() { l1 } else { 2.0 * l1 })
            }
            DomainSpec::Polygon { .. } => Err(invalid("no eigenvalue bound on general polygons; use the adaptive rule")),
        }
    }
}

/// First Robin eigenvalue `(a₁/L)²` on an interval of length `len`.
pub fn robin_lambda_min(kappa: f64, len: f64) -> Result<f64> {
    Ok((robin_root(kappa, len, 1)? / len).powi(2))
}

/// One refinement level.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub dt: f64,
    pub n_t: usize,
    pub l2_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub fitted_slope: f64,
    pub monotone: bool,
    pub warnings: Vec<String>,
    pub scheme: Scheme,
    pub s: f64,
    pub bc: String,
    pub theta: f64,
    pub eta: f64,
    pub p: f64,
}

impl ConvergenceReport {
    fn new(rows: Vec<ConvergenceRow>, cfg: &FracConfig) -> Result<Self> {
        let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.h, r.l2_error)).collect();
        let fitted_slope = fit_slope(&points)?;
        let monotone = rows.windows(2).all(|w| w[1].l2_error < w[0].l2_error);
        let mut warnings = Vec::new();
        if !monotone {
            warnings.push("errors do not decrease monotonically under refinement".to_string());
        }
        Ok(ConvergenceReport {
            rows,
            fitted_slope,
            monotone,
            warnings,
            scheme: cfg.scheme,
            s: cfg.s,
            bc: cfg.bc.name().to_string(),
            theta: cfg.theta,
            eta: cfg.eta,
            p: cfg.p,
        })
    }

    /// `h,dt,n_t,l2_error` rows followed by `# slope=<value>`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("h,dt,n_t,l2_error\n");
        for r in &self.rows {
            let _ = writeln!(out, "{:?},{:?},{},{:?}", r.h, r.dt, r.n_t, r.l2_error);
        }
        let _ = writeln!(out, "# slope={:?}", self.fitted_slope);
        out
    }
}

/// Least-squares slope of `log(err)` against `log(h)`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(invalid("slope fit needs at least two points"));
    }
    if points.iter().any(|&(h, e)| !(h > 0.0) || !(e > 0.0) || !h.is_finite() || !e.is_finite()) {
        return Err(invalid("slope fit needs positive finite values"));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("slope fit needs distinct mesh sizes"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

fn check_h_list(h_list: &[f64]) -> Result<()> {
    if h_list.len() < 3 {
        return Err(invalid(format!("a convergence study needs at least 3 mesh sizes, got {}", h_list.len())));
    }
    if h_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(invalid("mesh sizes must be strictly decreasing"));
    }
    Ok(())
}

/// Step-count rule from the analytic first nonzero eigenvalue.
pub fn formula_nt_mode(domain: &DomainSpec, bc: &BoundaryCondition) -> Result<NtMode> {
    Ok(NtMode::Formula { lambda_min: domain.lambda_min(bc)? })
}

/// Applies `Θ_h^s` to the eigenfunction `indices` on each mesh of `h_list`
/// and measures `‖λ^s φ − Θ_h^s φ‖₀`.
pub fn convergence_study(domain: &DomainSpec, indices: &[usize], cfg: &FracConfig, h_list: &[f64]) -> Result<ConvergenceReport> {
    check_h_list(h_list)?;
    cfg.validate()?;
    let pair = domain.eigenpair(&cfg.bc, indices)?;
    let exact = exact_fractional(&pair, cfg.s);
    let mut rows = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let mesh = Arc::new(domain.mesh_for(h)?);
        let mut op = FractionalLaplacian::on_mesh(mesh, cfg.clone())?;
        let w0 = op.project(&pair)?;
        let out = op.apply_coeffs(&w0)?;
        let err = l2_norm_error(op.space(), &out.values, &exact)?;
        rows.push(ConvergenceRow { h: op.space().mesh().h_max(), dt: out.dt, n_t: out.n_t, l2_error: err });
    }
    ConvergenceReport::new(rows, cfg)
}

/// Same study for the non-homogeneous Dirichlet problem with datum
/// `u = φ + z̃_h`, where `z̃_h` is the discrete harmonic extension of `g`.
pub fn nonhomogeneous_study(
    domain: &DomainSpec,
    indices: &[usize],
    g: &dyn ScalarField,
    cfg: &FracConfig,
    h_list: &[f64],
) -> Result<ConvergenceReport> {
    check_h_list(h_list)?;
    cfg.validate()?;
    if !cfg.bc.is_dirichlet() {
        return Err(invalid("non-homogeneous studies need Dirichlet conditions"));
    }
    let pair = domain.eigenpair(&cfg.bc, indices)?;
    let exact = exact_fractional(&pair, cfg.s);
    let mut rows = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let mesh = Arc::new(domain.mesh_for(h)?);
        let mut op = FractionalLaplacian::on_mesh(mesh.clone(), cfg.clone())?;
        let z = FeFunction::from_nodal(mesh.clone(), harmonic_extension(&mesh, g, cfg.cg_tol)?)?;
        let u = LinearCombination::new(vec![(1.0, &pair as &dyn ScalarField), (1.0, &z)]);
        let w0 = shifted_datum(&op, &u, g)?;
        let out = op.apply_coeffs(&w0)?;
        let err = l2_norm_error(op.space(), &out.values, &exact)?;
        rows.push(ConvergenceRow { h: mesh.h_max(), dt: out.dt, n_t: out.n_t, l2_error: err });
    }
    ConvergenceReport::new(rows, cfg)
}

/// `[2^-from, …, 2^-to]`.
pub fn dyadic_h_list(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| 2f64.powi(-k)).collect()
}
