//! JSON run configurations and the command implementations behind the
//! `fraclap` binary.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{invalid, Error, Result};
use crate::fem::{BoundaryCondition, FeFunction, LinearCombination, ScalarField};
use crate::fracop::{harmonic_extension, shifted_datum, write_nodal_csv, FracConfig, FractionalLaplacian, NtMode};
use crate::fracquad::{Scheme, DEFAULT_MAX_NT};
use crate::harness::{convergence_study, nonhomogeneous_study, ConvergenceReport, DomainSpec};
use crate::heat::LinearSolver;
use crate::linalg::DEFAULT_CG_TOL;
use crate::mesh::Mesh;
use crate::pme::{bump_datum, PmeSolver};

/// Environment variable that overrides the time-step cap.
pub const MAX_NT_ENV: &str = "FRACLAP_MAX_NT";

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum DomainConfig {
    Interval([f64; 2]),
    UnitSquare,
    Polygon(Vec<[f64; 2]>),
}

impl DomainConfig {
    pub fn spec(&self) -> DomainSpec {
        match self {
            DomainConfig::Interval([a, b]) => DomainSpec::Interval { a: *a, b: *b },
            DomainConfig::UnitSquare => DomainSpec::UnitSquare,
            DomainConfig::Polygon(v) => DomainSpec::Polygon { vertices: v.clone() },
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum BcConfig {
    Dirichlet,
    Neumann,
    Robin(f64),
}

impl BcConfig {
    pub fn condition(&self) -> BoundaryCondition {
        match self {
            BcConfig::Dirichlet => BoundaryCondition::Dirichlet,
            BcConfig::Neumann => BoundaryCondition::Neumann,
            BcConfig::Robin(k) => BoundaryCondition::robin(*k),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum BcList {
    One(BcConfig),
    Many(Vec<BcConfig>),
}

impl BcList {
    pub fn items(&self) -> Vec<BcConfig> {
        match self {
            BcList::One(b) => vec![b.clone()],
            BcList::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Default)]
#[serde(rename_all = "snake_case")]
pub enum SchemeConfig {
    #[default]
    Low,
    High,
}

impl From<SchemeConfig> for Scheme {
    fn from(s: SchemeConfig) -> Scheme {
        match s {
            SchemeConfig::Low => Scheme::Low,
            SchemeConfig::High => Scheme::High,
        }
    }
}

/// Step-count selection. `auto` uses the analytic eigenvalue bound when the
/// domain has one and the adaptive rule (tolerance 1e-8) otherwise.
#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Default)]
#[serde(rename_all = "snake_case")]
pub enum NtConfig {
    #[default]
    Auto,
    Formula(f64),
    Adaptive(f64),
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolverConfig {
    #[default]
    Direct,
    Cg(f64),
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub r: f64,
    #[serde(default)]
    pub center: Vec<f64>,
}

/// Input datum.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum InputConfig {
    /// Normalized eigenfunction with 1-based indices (one per dimension).
    Eigen(Vec<usize>),
    /// `e^{−1/(r² − |x−c|²)}` inside the ball of radius `r`.
    Bump(BumpConfig),
    Constant(f64),
    /// `e^{4 − 1/((0.5−x)(0.5+x))}` on `|x| < 0.5`.
    PmeDatum,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SinCosConfig {
    pub amplitude: f64,
    pub kx: f64,
    pub ky: f64,
}

/// Dirichlet boundary datum `g`; the harmonic lift of `g` is added to the input.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryDataConfig {
    /// `amplitude · sin(kx π x) cos(ky π y)`.
    SinCos(SinCosConfig),
    Constant(f64),
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PmeConfig {
    pub m: u32,
    pub tau_end: f64,
    #[serde(default)]
    pub snapshots: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub h_list: Option<Vec<f64>>,
    #[serde(default = "default_bc")]
    pub bc: BcList,
    pub s: f64,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub nt: NtConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub max_nt: Option<usize>,
    #[serde(default)]
    pub allow_extreme_s: bool,
    #[serde(default)]
    pub input: Option<InputConfig>,
    #[serde(default)]
    pub boundary_data: Option<BoundaryDataConfig>,
    #[serde(default)]
    pub pme: Option<PmeConfig>,
}

fn default_bc() -> BcList {
    BcList::One(BcConfig::Dirichlet)
}

fn default_eta() -> f64 {
    1e-3
}

fn default_p() -> f64 {
    1.0
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::from_json(&text)
    }

    /// Operator configuration for one boundary condition. `scheme` overrides
    /// the configured scheme; an omitted `theta` follows the scheme (1 for
    /// low, 1/2 for high). A `max_nt` from the environment beats the
    /// configured cap.
    pub fn frac_config(&self, bc: &BoundaryCondition, scheme: Option<Scheme>, max_nt: Option<usize>) -> Result<FracConfig> {
        let scheme = scheme.unwrap_or(self.scheme.into());
        let theta = self.theta.unwrap_or(match scheme {
            Scheme::Low => 1.0,
            Scheme::High => 0.5,
        });
        let domain = self.domain.spec();
        let nt_mode = match self.nt {
            NtConfig::Auto => match domain.lambda_min(bc) {
                Ok(lambda_min) => NtMode::Formula { lambda_min },
                Err(_) => NtMode::Adaptive { tol: 1e-8 },
            },
            NtConfig::Formula(lambda_min) => NtMode::Formula { lambda_min },
            NtConfig::Adaptive(tol) => NtMode::Adaptive { tol },
            NtConfig::Fixed(n) => NtMode::Fixed(n),
        };
        let solver = match self.solver {
            SolverConfig::Direct => LinearSolver::Direct,
            SolverConfig::Cg(tol) => LinearSolver::Cg { tol },
        };
        let cfg = FracConfig {
            s: self.s,
            bc: bc.clone(),
            theta,
            eta: self.eta,
            p: self.p,
            scheme,
            nt_mode,
            solver,
            cg_tol: DEFAULT_CG_TOL,
            max_nt: max_nt.or(self.max_nt).unwrap_or(DEFAULT_MAX_NT),
            allow_extreme_s: self.allow_extreme_s,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn mesh(&self) -> Result<Arc<Mesh>> {
        let h = self.h.ok_or_else(|| invalid("configuration needs `h`"))?;
        Ok(Arc::new(self.domain.spec().mesh_for(h)?))
    }
}

/// Reads the time-step cap override from `FRACLAP_MAX_NT`.
pub fn max_nt_from_env() -> Result<Option<usize>> {
    match std::env::var(MAX_NT_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| invalid(format!("{MAX_NT_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

struct Bump {
    r: f64,
    center: Vec<f64>,
}

impl ScalarField for Bump {
    fn value(&self, x: &[f64]) -> f64 {
        let d2: f64 = x.iter().enumerate().map(|(i, xi)| (xi - self.center.get(i).copied().unwrap_or(0.0)).powi(2)).sum();
        let gap = self.r * self.r - d2;
        if gap > 0.0 {
            (-1.0 / gap).exp()
        } else {
            0.0
        }
    }
}

fn input_field(input: &InputConfig, domain: &DomainSpec, bc: &BoundaryCondition) -> Result<Box<dyn ScalarField>> {
    Ok(match input {
        InputConfig::Eigen(idx) => Box::new(domain.eigenpair(bc, idx)?),
        InputConfig::Bump(b) => {
            if !(b.r > 0.0) {
                return Err(invalid("bump radius must be positive"));
            }
            if b.center.len() > domain.dim() {
                return Err(invalid("bump center has too many coordinates"));
            }
            Box::new(Bump { r: b.r, center: b.center.clone() })
        }
        InputConfig::Constant(c) => {
            let c = *c;
            Box::new(move |_: &[f64]| c)
        }
        InputConfig::PmeDatum => Box::new(bump_datum),
    })
}

fn boundary_field(g: &BoundaryDataConfig) -> Box<dyn ScalarField> {
    match g.clone() {
        BoundaryDataConfig::SinCos(c) => Box::new(move |x: &[f64]| {
            let y = x.get(1).copied().unwrap_or(0.0);
            c.amplitude * (c.kx * std::f64::consts::PI * x[0]).sin() * (c.ky * std::f64::consts::PI * y).cos()
        }),
        BoundaryDataConfig::Constant(v) => Box::new(move |_: &[f64]| v),
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// `apply`: one CSV per boundary condition, `apply_<bc>.csv`, with columns
/// coordinates, `u` (input at the nodes) and `frac` (`Θ_h^s u`).
pub fn cmd_apply(cfg: &RunConfig, out_dir: &Path, scheme: Option<Scheme>, max_nt: Option<usize>) -> Result<Vec<PathBuf>> {
    let input = cfg.input.as_ref().ok_or_else(|| invalid("configuration needs `input`"))?;
    let domain = cfg.domain.spec();
    let mesh = cfg.mesh()?;
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for bc_cfg in cfg.bc.items() {
        let bc = bc_cfg.condition();
        let fcfg = cfg.frac_config(&bc, scheme, max_nt)?;
        let u = input_field(input, &domain, &bc)?;
        let mut op = FractionalLaplacian::on_mesh(mesh.clone(), fcfg.clone())?;
        let (nodal_u, coeffs) = match &cfg.boundary_data {
            None => {
                let nodal: Vec<f64> = (0..mesh.n_nodes()).map(|i| u.value(mesh.node(i))).collect();
                (nodal, op.apply(u.as_ref())?)
            }
            Some(gcfg) => {
                let g = boundary_field(gcfg);
                let z = FeFunction::from_nodal(mesh.clone(), harmonic_extension(&mesh, g.as_ref(), fcfg.cg_tol)?)?;
                let datum = LinearCombination::new(vec![(1.0, u.as_ref()), (1.0, &z)]);
                let nodal: Vec<f64> = (0..mesh.n_nodes()).map(|i| datum.value(mesh.node(i))).collect();
                let w0 = shifted_datum(&op, &datum, g.as_ref())?;
                (nodal, op.apply_coeffs(&w0)?.values)
            }
        };
        let frac = op.space().to_nodal(&coeffs)?;
        let path = out_dir.join(format!("apply_{}.csv", bc.name()));
        write_nodal_csv(create(&path)?, &mesh, &[("u", &nodal_u), ("frac", &frac)])?;
        written.push(path);
    }
    Ok(written)
}

/// `convergence`: one `convergence_<bc>.csv` per boundary condition.
pub fn cmd_convergence(
    cfg: &RunConfig,
    out_dir: &Path,
    scheme: Option<Scheme>,
    max_nt: Option<usize>,
) -> Result<Vec<(PathBuf, ConvergenceReport)>> {
    let h_list = cfg.h_list.as_ref().ok_or_else(|| invalid("configuration needs `h_list`"))?;
    let indices = match &cfg.input {
        Some(InputConfig::Eigen(idx)) => idx.clone(),
        None => vec![1; cfg.domain.spec().dim()],
        Some(_) => return Err(invalid("convergence studies need an `eigen` input")),
    };
    let domain = cfg.domain.spec();
    fs::create_dir_all(out_dir)?;
    let mut out = Vec::new();
    for bc_cfg in cfg.bc.items() {
        let bc = bc_cfg.condition();
        let fcfg = cfg.frac_config(&bc, scheme, max_nt)?;
        let report = match &cfg.boundary_data {
            None => convergence_study(&domain, &indices, &fcfg, h_list)?,
            Some(g) => nonhomogeneous_study(&domain, &indices, boundary_field(g).as_ref(), &fcfg, h_list)?,
        };
        let path = out_dir.join(format!("convergence_{}.csv", bc.name()));
        fs::write(&path, report.to_csv())?;
        out.push((path, report));
    }
    Ok(out)
}

/// `pme`: one `pme_<k>.csv` per snapshot (`k` counts from 0, the final
/// state is always the last file) with columns `x,u,v_scaled`.
pub fn cmd_pme(cfg: &RunConfig, out_dir: &Path, max_nt: Option<usize>) -> Result<Vec<PathBuf>> {
    let pme = cfg.pme.as_ref().ok_or_else(|| invalid("configuration needs a `pme` section"))?;
    if pme.m < 2 {
        return Err(invalid(format!("porous-medium exponent must be an integer greater than 1, got {}", pme.m)));
    }
    if !matches!(cfg.domain, DomainConfig::Interval(_)) {
        return Err(invalid("the porous-medium solver runs on intervals only"));
    }
    let bcs = cfg.bc.items();
    if bcs != [BcConfig::Dirichlet] {
        return Err(invalid("the porous-medium solver needs a single Dirichlet condition"));
    }
    let fcfg = cfg.frac_config(&BoundaryCondition::Dirichlet, None, max_nt)?;
    let mesh = cfg.mesh()?;
    let domain = cfg.domain.spec();
    let u0 = input_field(cfg.input.as_ref().unwrap_or(&InputConfig::PmeDatum), &domain, &BoundaryCondition::Dirichlet)?;
    let mut solver = PmeSolver::new(mesh, pme.m, fcfg)?;
    let mut taus = pme.snapshots.clone();
    if !taus.contains(&pme.tau_end) {
        taus.push(pme.tau_end);
    }
    let run = solver.run(u0.as_ref(), pme.tau_end, &taus)?;
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (k, state) in run.snapshots.iter().enumerate() {
        let path = out_dir.join(format!("pme_{k}.csv"));
        solver.write_snapshot_csv(create(&path)?, state)?;
        written.push(path);
    }
    Ok(written)
}

/// `mesh-info`: summary lines `key=value`.
pub fn mesh_info(mesh: &Mesh) -> String {
    let q = mesh.quasi_uniformity();
    format!(
        "dim={}\nnodes={}\nelements={}\nboundary_nodes={}\nh_max={:?}\nmeasure={:?}\nsigma={:?}\ntau={:?}\n",
        mesh.dim(),
        mesh.n_nodes(),
        mesh.n_elements(),
        mesh.boundary_nodes().len(),
        mesh.h_max(),
        mesh.measure(),
        q.sigma,
        q.tau
    )
}

/// Mesh from a configuration (`domain` and `h`).
pub fn config_mesh(cfg: &RunConfig) -> Result<Arc<Mesh>> {
    cfg.mesh()
}
