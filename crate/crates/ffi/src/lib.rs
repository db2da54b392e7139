//! C interface to fraclap.
//!
//! Every function returns an [`FlStatus`]; on failure the message is kept in
//! a thread-local buffer readable through [`fl_last_error_message`]. Meshes
//! and operators are opaque handles released with their `_free` functions.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use fraclap::fem::BoundaryCondition;
use fraclap::fracop::{FracConfig, FractionalLaplacian, NtMode};
use fraclap::fracquad::{self, Scheme};
use fraclap::heat::LinearSolver;
use fraclap::mesh::{generate_convex_polygon, generate_interval, Mesh};
use fraclap::spectral_oracle;
use fraclap::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidMesh = 3,
    DimensionMismatch = 4,
    NoConvergence = 5,
    NotPositiveDefinite = 6,
    CflViolation = 7,
    StepCapExceeded = 8,
    OutsideDomain = 9,
    NoBracket = 10,
    TraceMismatch = 11,
    Overflow = 12,
    Parse = 13,
    Io = 14,
    Panic = 15,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlBoundary {
    Dirichlet = 0,
    Neumann = 1,
    Robin = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlScheme {
    Low = 0,
    High = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlNtMode {
    /// `nt_param` is the smallest eigenvalue used by the step-count rule.
    Formula = 0,
    /// `nt_param` is the relative stopping tolerance.
    Adaptive = 1,
    /// `nt_param` is the step count.
    Fixed = 2,
}

/// Operator parameters. Start from [`fl_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FlConfig {
    pub s: f64,
    pub boundary: FlBoundary,
    /// Robin coefficient, ignored for the other conditions.
    pub kappa: f64,
    pub scheme: FlScheme,
    pub theta: f64,
    pub eta: f64,
    pub p: f64,
    pub nt_mode: FlNtMode,
    pub nt_param: f64,
    pub max_nt: usize,
    /// Nonzero selects conjugate gradients instead of the direct solver.
    pub use_cg: i32,
    pub cg_tol: f64,
}

pub struct FlMesh {
    inner: Arc<Mesh>,
}

pub struct FlOperator {
    inner: FractionalLaplacian,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> FlStatus {
    match e {
        Error::InvalidArgument(_) => FlStatus::InvalidArgument,
        Error::InvalidMesh(_) => FlStatus::InvalidMesh,
        Error::DimensionMismatch { .. } => FlStatus::DimensionMismatch,
        Error::NoConvergence { .. } => FlStatus::NoConvergence,
        Error::NotPositiveDefinite(_) => FlStatus::NotPositiveDefinite,
        Error::CflViolation { .. } => FlStatus::CflViolation,
        Error::StepCapExceeded { .. } => FlStatus::StepCapExceeded,
        Error::OutsideDomain(_) => FlStatus::OutsideDomain,
        Error::NoBracket { .. } => FlStatus::NoBracket,
        Error::TraceMismatch { .. } => FlStatus::TraceMismatch,
        Error::Overflow(_) => FlStatus::Overflow,
        Error::Parse { .. } => FlStatus::Parse,
        Error::Io(_) => FlStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            FlStatus::Ok
        }
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("null pointer passed for `{name}`"));
            FlStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".to_string());
            FlStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn deref_mut<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, name: &'static str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn check_len(expected: usize, got: usize) -> Result<(), Failure> {
    if expected != got {
        return Err(Failure::Lib(Error::DimensionMismatch { expected, got }));
    }
    Ok(())
}

fn to_scheme(s: FlScheme) -> Scheme {
    match s {
        FlScheme::Low => Scheme::Low,
        FlScheme::High => Scheme::High,
    }
}

fn to_frac_config(c: &FlConfig) -> Result<FracConfig, Failure> {
    let bc = match c.boundary {
        FlBoundary::Dirichlet => BoundaryCondition::Dirichlet,
        FlBoundary::Neumann => BoundaryCondition::Neumann,
        FlBoundary::Robin => BoundaryCondition::robin(c.kappa),
    };
    let nt_mode = match c.nt_mode {
        FlNtMode::Formula => NtMode::Formula { lambda_min: c.nt_param },
        FlNtMode::Adaptive => NtMode::Adaptive { tol: c.nt_param },
        FlNtMode::Fixed => {
            if !(c.nt_param >= 0.0) || c.nt_param.fract() != 0.0 {
                return Err(Failure::Lib(Error::InvalidArgument(format!("fixed step count must be a whole number, got {}", c.nt_param))));
            }
            NtMode::Fixed(c.nt_param as usize)
        }
    };
    let solver = if c.use_cg != 0 { LinearSolver::Cg { tol: c.cg_tol } } else { LinearSolver::Direct };
    let base = match c.scheme {
        FlScheme::Low => FracConfig::low(c.s, bc),
        FlScheme::High => FracConfig::high(c.s, bc),
    };
    Ok(FracConfig { theta: c.theta, eta: c.eta, p: c.p, nt_mode, solver, cg_tol: c.cg_tol, max_nt: c.max_nt, ..base })
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fl_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Defaults: Dirichlet, θ = 1 (low) or ½ (high), η = 10⁻³, p = 1,
/// adaptive stopping at 10⁻⁸, direct solver.
#[no_mangle]
pub extern "C" fn fl_config_default(s: f64, scheme: FlScheme) -> FlConfig {
    let base = match scheme {
        FlScheme::Low => FracConfig::low(s, BoundaryCondition::Dirichlet),
        FlScheme::High => FracConfig::high(s, BoundaryCondition::Dirichlet),
    };
    let tol = match base.nt_mode {
        NtMode::Adaptive { tol } => tol,
        _ => 1e-8,
    };
    FlConfig {
        s,
        boundary: FlBoundary::Dirichlet,
        kappa: 1.0,
        scheme,
        theta: base.theta,
        eta: base.eta,
        p: base.p,
        nt_mode: FlNtMode::Adaptive,
        nt_param: tol,
        max_nt: base.max_nt,
        use_cg: 0,
        cg_tol: base.cg_tol,
    }
}

/// Uniform mesh of `[a, b]` with `cells` cells.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fl_mesh_interval(a: f64, b: f64, cells: usize, out: *mut *mut FlMesh) -> FlStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let mesh = generate_interval(a, b, cells)?;
        *out = Box::into_raw(Box::new(FlMesh { inner: Arc::new(mesh) }));
        Ok(())
    })
}

/// Fan triangulation of a convex polygon refined `refinements` times.
/// `xy` holds `n_vertices` counter-clockwise vertex pairs.
///
/// # Safety
/// `xy` must point to `2 n_vertices` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fl_mesh_polygon(xy: *const f64, n_vertices: usize, refinements: usize, out: *mut *mut FlMesh) -> FlStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let xy = slice(xy, 2 * n_vertices, "xy")?;
        let verts: Vec<[f64; 2]> = xy.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        let mesh = generate_convex_polygon(&verts, refinements)?;
        *out = Box::into_raw(Box::new(FlMesh { inner: Arc::new(mesh) }));
        Ok(())
    })
}

/// Reads a mesh in the `.flm` text format.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fl_mesh_read(path: *const c_char, out: *mut *mut FlMesh) -> FlStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        if path.is_null() {
            return Err(Failure::Null("path"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|_| Error::InvalidArgument("path is not UTF-8".into()))?;
        let file = std::fs::File::open(path).map_err(Error::from)?;
        let mesh = Mesh::read_flm(std::io::BufReader::new(file))?;
        *out = Box::into_raw(Box::new(FlMesh { inner: Arc::new(mesh) }));
        Ok(())
    })
}

/// # Safety
/// `mesh` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fl_mesh_free(mesh: *mut FlMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Writes dimension, node count, element count and `h_max`; any output
/// pointer may be null.
///
/// # Safety
/// `mesh` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn fl_mesh_info(mesh: *const FlMesh, dim: *mut usize, n_nodes: *mut usize, n_elements: *mut usize, h_max: *mut f64) -> FlStatus {
    guard(|| {
        let m = &deref(mesh, "mesh")?.inner;
        if let Some(d) = dim.as_mut() {
            *d = m.dim();
        }
        if let Some(n) = n_nodes.as_mut() {
            *n = m.n_nodes();
        }
        if let Some(n) = n_elements.as_mut() {
            *n = m.n_elements();
        }
        if let Some(h) = h_max.as_mut() {
            *h = m.h_max();
        }
        Ok(())
    })
}

/// Node coordinates, `dim` values per node, into `coords` of length `len`.
///
/// # Safety
/// `coords` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fl_mesh_coordinates(mesh: *const FlMesh, coords: *mut f64, len: usize) -> FlStatus {
    guard(|| {
        let m = &deref(mesh, "mesh")?.inner;
        check_len(m.n_nodes() * m.dim(), len)?;
        let out = slice_mut(coords, len, "coords")?;
        for i in 0..m.n_nodes() {
            out[i * m.dim()..(i + 1) * m.dim()].copy_from_slice(m.node(i));
        }
        Ok(())
    })
}

/// Builds the discrete fractional Laplacian on `mesh`; the mesh handle may
/// be freed afterwards.
///
/// # Safety
/// `mesh`, `config` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fl_operator_new(mesh: *const FlMesh, config: *const FlConfig, out: *mut *mut FlOperator) -> FlStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let mesh = deref(mesh, "mesh")?.inner.clone();
        let cfg = to_frac_config(deref(config, "config")?)?;
        let op = FractionalLaplacian::on_mesh(mesh, cfg)?;
        *out = Box::into_raw(Box::new(FlOperator { inner: op }));
        Ok(())
    })
}

/// # Safety
/// `op` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fl_operator_free(op: *mut FlOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Applies the operator to the P1 interpolant of `nodal_in` (one value per
/// mesh node) and writes nodal values to `nodal_out`. Dirichlet boundary
/// values of the input are ignored and zero on output. `n_t` (nullable)
/// receives the number of time steps taken.
///
/// # Safety
/// Both arrays must hold `n_nodes` doubles.
#[no_mangle]
pub unsafe extern "C" fn fl_operator_apply(op: *mut FlOperator, nodal_in: *const f64, nodal_out: *mut f64, n_nodes: usize, n_t: *mut usize) -> FlStatus {
    guard(|| {
        let op = &mut deref_mut(op, "op")?.inner;
        check_len(op.space().mesh().n_nodes(), n_nodes)?;
        let input = slice(nodal_in, n_nodes, "nodal_in")?;
        let w0 = op.space().from_nodal(input)?;
        let result = op.apply_coeffs(&w0)?;
        let nodal = op.space().to_nodal(&result.values)?;
        slice_mut(nodal_out, n_nodes, "nodal_out")?.copy_from_slice(&nodal);
        if let Some(n) = n_t.as_mut() {
            *n = result.n_t;
        }
        Ok(())
    })
}

/// Time step `Δt = η h^p` used by the operator.
///
/// # Safety
/// `op` and `dt` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fl_operator_dt(op: *const FlOperator, dt: *mut f64) -> FlStatus {
    guard(|| {
        let op = &deref(op, "op")?.inner;
        *deref_mut(dt, "dt")? = op.dt();
        Ok(())
    })
}

/// Γ(x).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fl_gamma(x: f64, out: *mut f64) -> FlStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = fracquad::gamma(x)?;
        Ok(())
    })
}

/// Quadrature weights `β_1..β_{n_t}` into `betas` and the tail weight into
/// `beta_inf` (nullable).
///
/// # Safety
/// `betas` must point to `n_t` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fl_weights(scheme: FlScheme, s: f64, dt: f64, n_t: usize, betas: *mut f64, beta_inf: *mut f64) -> FlStatus {
    guard(|| {
        let out = slice_mut(betas, n_t, "betas")?;
        let w = fracquad::weights(to_scheme(scheme), s, dt, n_t)?;
        out.copy_from_slice(&w.betas);
        if let Some(b) = beta_inf.as_mut() {
            *b = w.beta_inf;
        }
        Ok(())
    })
}

/// Step count `⌈c(s)/(λ_min Δt) ln(1/Δt)⌉`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fl_choose_nt(scheme: FlScheme, s: f64, dt: f64, lambda_min: f64, out: *mut usize) -> FlStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = fracquad::choose_nt(to_scheme(scheme), s, dt, lambda_min)?;
        Ok(())
    })
}

/// `m`-th positive root of the Robin characteristic equation on an interval
/// of length `len`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fl_robin_root(kappa: f64, len: f64, m: usize, out: *mut f64) -> FlStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = spectral_oracle::robin_root(kappa, len, m)?;
        Ok(())
    })
}
