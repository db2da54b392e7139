//! Analytic eigenpairs of the Laplacian with Dirichlet, Neumann and Robin
//! conditions on intervals and the unit square.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::fem::{gauss_legendre_5, BoundaryCondition, Kappa, QuadPoint, ScalarField};

/// `x ↦ scale · (c_sin sin(ω(x−x0)) + c_cos cos(ω(x−x0)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode1d {
    pub origin: f64,
    pub omega: f64,
    pub c_sin: f64,
    pub c_cos: f64,
    pub scale: f64,
}

impl Mode1d {
    pub fn value(&self, x: f64) -> f64 {
        let t = self.omega * (x - self.origin);
        self.scale * (self.c_sin * t.sin() + self.c_cos * t.cos())
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let t = self.omega * (x - self.origin);
        self.scale * self.omega * (self.c_sin * t.cos() - self.c_cos * t.sin())
    }
}

/// Eigenpair `(λ, φ)` with `φ` a product of 1D modes, one per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    /// `m` in 1D, `(m, l)` in 2D; 1-based.
    pub indices: Vec<usize>,
    pub lambda: f64,
    pub factors: Vec<Mode1d>,
    pub normalized: bool,
}

impl ScalarField for EigenPair {
    fn value(&self, x: &[f64]) -> f64 {
        self.factors.iter().zip(x).map(|(f, &xi)| f.value(xi)).product()
    }
}

/// Residual of `(2a/(κL)) cos a + (1 − (a/(κL))²) sin a`.
pub fn robin_residual(kappa: f64, len: f64, a: f64) -> f64 {
    let r = a / (kappa * len);
    2.0 * r * a.cos() + (1.0 - r * r) * a.sin()
}

fn robin_residual_derivative(kappa: f64, len: f64, a: f64) -> f64 {
    let kl = kappa * len;
    let r = a / kl;
    2.0 / kl * a.cos() - 2.0 * r * a.sin() - 2.0 * r / kl * a.sin() + (1.0 - r * r) * a.cos()
}

/// The root `a_m ∈ ((m−1)π, mπ)` of the Robin transcendental equation.
pub fn robin_root(kappa: f64, len: f64, m: usize) -> Result<f64> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(invalid(format!("Robin coefficient must be positive, got {kappa}")));
    }
    if !(len > 0.0) || !len.is_finite() {
        return Err(invalid(format!("interval length must be positive, got {len}")));
    }
    if m == 0 {
        return Err(invalid("eigen index starts at 1"));
    }
    let eps = 1e-12;
    let (mut lo, mut hi) = ((m - 1) as f64 * PI + eps, m as f64 * PI - eps);
    let (bracket_lo, bracket_hi) = (lo, hi);
    let f = |a: f64| robin_residual(kappa, len, a);
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_lo.signum() == f(hi).signum() {
        return Err(Error::NoBracket { lo, hi });
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let mut a = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = robin_residual_derivative(kappa, len, a);
        if d == 0.0 {
            break;
        }
        let next = a - f(a) / d;
        if next > bracket_lo && next < bracket_hi && f(next).abs() < f(a).abs() {
            a = next;
        } else {
            break;
        }
    }
    Ok(a)
}

fn constant_kappa(bc: &BoundaryCondition) -> Result<Option<f64>> {
    match bc {
        BoundaryCondition::Robin(Kappa::Constant(k)) => Ok(Some(*k)),
        BoundaryCondition::Robin(Kappa::Function(_)) => Err(invalid("analytic eigenpairs need a constant Robin coefficient")),
        _ => Ok(None),
    }
}

/// ∫_a^b g(x)² dx by composite 5-point Gauss on 256 panels.
fn integrate_square(a: f64, b: f64, g: impl Fn(f64) -> f64) -> f64 {
    let panels = 256;
    let h = (b - a) / panels as f64;
    let rule = gauss_legendre_5();
    let mut acc = 0.0;
    for p in 0..panels {
        let x0 = a + p as f64 * h;
        for &(t, w) in &rule {
            let v = g(x0 + t * h);
            acc += w * h * v * v;
        }
    }
    acc
}

/// L²-normalized eigenpair `m` (1-based) on the interval `(a, b)`.
pub fn eig_interval(bc: &BoundaryCondition, a: f64, b: f64, m: usize) -> Result<EigenPair> {
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(invalid(format!("invalid interval ({a}, {b})")));
    }
    if m == 0 {
        return Err(invalid("eigen index starts at 1"));
    }
    let len = b - a;
    let mode = |omega, c_sin, c_cos, scale| Mode1d { origin: a, omega, c_sin, c_cos, scale };
    let (lambda, factor) = match bc {
        BoundaryCondition::Dirichlet => {
            let omega = m as f64 * PI / len;
            (omega * omega, mode(omega, 1.0, 0.0, (2.0 / len).sqrt()))
        }
        BoundaryCondition::Neumann => {
            let omega = (m - 1) as f64 * PI / len;
            let scale = if m == 1 { 1.0 / len.sqrt() } else { (2.0 / len).sqrt() };
            (omega * omega, mode(omega, 0.0, 1.0, scale))
        }
        BoundaryCondition::Robin(_) => {
            let kappa = constant_kappa(bc)?.expect("Robin");
            let root = robin_root(kappa, len, m)?;
            let omega = root / len;
            let mut f = mode(omega, 1.0, root / (kappa * len), 1.0);
            f.scale = 1.0 / integrate_square(a, b, |x| f.value(x)).sqrt();
            (omega * omega, f)
        }
    };
    Ok(EigenPair { indices: vec![m], lambda, factors: vec![factor], normalized: true })
}

/// L²-normalized eigenpair `m` on `(0, len)`.
pub fn eig_1d(bc: &BoundaryCondition, len: f64, m: usize) -> Result<EigenPair> {
    eig_interval(bc, 0.0, len, m)
}

/// Product eigenpair `φ_m(x) φ_l(y)` on the unit square.
pub fn eig_2d_square(bc: &BoundaryCondition, m: usize, l: usize) -> Result<EigenPair> {
    let px = eig_1d(bc, 1.0, m)?;
    let py = eig_1d(bc, 1.0, l)?;
    Ok(EigenPair {
        indices: vec![m, l],
        lambda: px.lambda + py.lambda,
        factors: vec![px.factors[0], py.factors[0]],
        normalized: true,
    })
}

/// `x ↦ λ^s φ(x)`.
#[derive(Debug, Clone)]
pub struct ExactFractional {
    pub pair: EigenPair,
    pub factor: f64,
}

impl ScalarField for ExactFractional {
    fn value(&self, x: &[f64]) -> f64 {
        self.factor * self.pair.value(x)
    }

    fn value_at(&self, q: &QuadPoint<'_>) -> f64 {
        self.factor * self.pair.value(q.x)
    }
}

pub fn exact_fractional(pair: &EigenPair, s: f64) -> ExactFractional {
    ExactFractional { pair: pair.clone(), factor: pair.lambda.max(0.0).powf(s) }
}
