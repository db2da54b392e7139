//! Quadrature data for the Balakrishnan-type integral
//! `(1/Γ(−s)) ∫₀^∞ (e^{tΔ}u − u) t^{−1−s} dt`.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Time-quadrature family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Midpoint weights, first order in time.
    Low,
    /// Piecewise-linear (hat) weights, needs Crank–Nicolson stepping.
    High,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Low => "low",
            Scheme::High => "high",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Ok(Scheme::Low),
            "high" => Ok(Scheme::High),
            other => Err(invalid(format!("unknown scheme `{other}` (expected low or high)"))),
        }
    }
}

impl Scheme {
    /// Smallest admissible number of time steps.
    pub fn min_nt(self) -> usize {
        match self {
            Scheme::Low => 1,
            Scheme::High => 2,
        }
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn gamma_1_2(x: f64) -> f64 {
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc
}

/// Γ(x) for `x > 0`, reduced to [1, 2] by the recurrence `Γ(x+1) = xΓ(x)`.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() || x > 171.0 {
        return Err(invalid(format!("gamma argument {x} outside (0, 171]")));
    }
    let mut x = x;
    let mut factor = 1.0;
    while x > 2.0 {
        x -= 1.0;
        factor *= x;
    }
    while x < 1.0 {
        factor /= x;
        x += 1.0;
    }
    Ok(factor * gamma_1_2(x))
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(invalid(format!("fractional order s must lie in (0, 1), got {s}")));
    }
    Ok(())
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid(format!("time step must be positive, got {dt}")));
    }
    Ok(())
}

/// Γ(−s) for `s ∈ (0, 1)` via `Γ(−s) = Γ(2−s)/(s(s−1))`.
pub fn gamma_neg(s: f64) -> Result<f64> {
    check_s(s)?;
    Ok(gamma_1_2(2.0 - s) / (s * (s - 1.0)))
}

/// Weights and prefactor of one quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadWeights {
    pub scheme: Scheme,
    pub s: f64,
    pub dt: f64,
    pub n_t: usize,
    /// `betas[j-1]` multiplies `W^(j) − W^(0)`.
    pub betas: Vec<f64>,
    pub beta_inf: f64,
    /// `1/Γ(−s)`.
    pub gamma_prefactor: f64,
    /// Cut-off time where the tail integral starts.
    pub t2: f64,
}

/// `β_j` of the midpoint rule: `∫_{t_j−Δt/2}^{t_j+Δt/2} t^{−1−s} dt`.
pub fn low_weight(s: f64, dt: f64, j: usize) -> f64 {
    let a = (j as f64 - 0.5) * dt;
    // a^{−s} − (a+Δt)^{−s} without cancellation.
    -a.powf(-s) * (-s * (dt / a).ln_1p()).exp_m1() / s
}

/// Cut-off time of the tail integral for `n_t` steps.
pub fn tail_start(scheme: Scheme, dt: f64, n_t: usize) -> f64 {
    match scheme {
        Scheme::Low => (n_t as f64 + 0.5) * dt,
        Scheme::High => n_t as f64 * dt,
    }
}

/// `β_∞ = ∫_{T₂}^∞ t^{−1−s} dt = 1/(s T₂^s)`.
pub fn tail_weight(scheme: Scheme, s: f64, dt: f64, n_t: usize) -> f64 {
    1.0 / (s * tail_start(scheme, dt, n_t).powf(s))
}

fn big_f(s: f64, t: f64) -> f64 {
    t.powf(1.0 - s) / (s * (s - 1.0))
}

fn big_f_prime(s: f64, t: f64) -> f64 {
    -1.0 / (s * t.powf(s))
}

const SERIES_FROM: usize = 16;

/// First hat weight `β₁` (needs `n_t ≥ 2`).
pub fn high_first_weight(s: f64, dt: f64) -> f64 {
    dt.powf(-s) * (1.0 / (1.0 - s) - big_f_prime(s, 1.0) + big_f(s, 2.0) - big_f(s, 1.0))
}

/// Interior hat weight `β_j = Δt^{−s}[F(j+1) − 2F(j) + F(j−1)]`, `j ≥ 2`.
pub fn high_interior_weight(s: f64, dt: f64, j: usize) -> f64 {
    let jf = j as f64;
    let scaled = if j < SERIES_FROM {
        big_f(s, jf + 1.0) - 2.0 * big_f(s, jf) + big_f(s, jf - 1.0)
    } else {
        // (1+x)^a − 2 + (1−x)^a = 2 Σ_{k≥1} C(a,2k) x^{2k}, every term the same sign.
        let a = 1.0 - s;
        let x2 = 1.0 / (jf * jf);
        let mut binom = 1.0;
        let mut xp = 1.0;
        let mut sum = 0.0;
        for m in 0..60 {
            binom *= (a - m as f64) / (m as f64 + 1.0);
            if m % 2 == 1 {
                xp *= x2;
                let term = binom * xp;
                sum += term;
                if term.abs() <= 1e-18 * sum.abs() {
                    break;
                }
            }
        }
        2.0 * jf.powf(a) * sum / (s * (s - 1.0))
    };
    dt.powf(-s) * scaled
}

/// Last hat weight `β_N = Δt^{−s}[F′(N) − F(N) + F(N−1)]`, `N ≥ 2`.
pub fn high_last_weight(s: f64, dt: f64, n: usize) -> f64 {
    let nf = n as f64;
    let scaled = if n < SERIES_FROM {
        big_f_prime(s, nf) - big_f(s, nf) + big_f(s, nf - 1.0)
    } else {
        // (N^{−s}/(s a)) Σ_{k≥2} |C(a,k)| x^{k−1}, x = 1/N, a = 1 − s.
        let a = 1.0 - s;
        let x = 1.0 / nf;
        let mut c = a; // |C(a,1)|
        let mut xp = 1.0;
        let mut sum = 0.0;
        for k in 1..200 {
            c *= (k as f64 - a) / (k as f64 + 1.0);
            xp *= x;
            let term = c * xp;
            sum += term;
            if term <= 1e-18 * sum {
                break;
            }
        }
        nf.powf(-s) / (s * a) * sum
    };
    dt.powf(-s) * scaled
}

/// `β_j` of the hat rule with `n_t` steps.
pub fn high_weight(s: f64, dt: f64, j: usize, n_t: usize) -> f64 {
    if j == 1 {
        high_first_weight(s, dt)
    } else if j == n_t {
        high_last_weight(s, dt, n_t)
    } else {
        high_interior_weight(s, dt, j)
    }
}

/// Midpoint-rule weights.
pub fn weights_low(s: f64, dt: f64, n_t: usize) -> Result<QuadWeights> {
    weights(Scheme::Low, s, dt, n_t)
}

/// Hat-function weights; requires `n_t ≥ 2`.
pub fn weights_high(s: f64, dt: f64, n_t: usize) -> Result<QuadWeights> {
    weights(Scheme::High, s, dt, n_t)
}

pub fn weights(scheme: Scheme, s: f64, dt: f64, n_t: usize) -> Result<QuadWeights> {
    check_s(s)?;
    check_dt(dt)?;
    if n_t < scheme.min_nt() {
        return Err(invalid(format!("{scheme} scheme needs at least {} time steps, got {n_t}", scheme.min_nt())));
    }
    let betas = (1..=n_t)
        .map(|j| match scheme {
            Scheme::Low => low_weight(s, dt, j),
            Scheme::High => high_weight(s, dt, j, n_t),
        })
        .collect();
    Ok(QuadWeights {
        scheme,
        s,
        dt,
        n_t,
        betas,
        beta_inf: tail_weight(scheme, s, dt, n_t),
        gamma_prefactor: 1.0 / gamma_neg(s)?,
        t2: tail_start(scheme, dt, n_t),
    })
}

/// Smallest `N_t` with `N_t ≥ c(s)/(λ_min Δt) · ln(1/Δt)`, where
/// `c = 1−s` (low) or `2−s` (high).
pub fn choose_nt(scheme: Scheme, s: f64, dt: f64, lambda_min: f64) -> Result<usize> {
    check_s(s)?;
    check_dt(dt)?;
    if dt >= 1.0 {
        return Err(invalid(format!("time step {dt} ≥ 1: the step-count rule degenerates, give n_t explicitly")));
    }
    if !(lambda_min > 0.0) || !lambda_min.is_finite() {
        return Err(invalid(format!("lambda_min must be positive, got {lambda_min}")));
    }
    let c = match scheme {
        Scheme::Low => 1.0 - s,
        Scheme::High => 2.0 - s,
    };
    let bound = c / (lambda_min * dt) * (1.0 / dt).ln();
    if bound > 1e15 {
        return Err(invalid(format!("step-count bound {bound:e} is not representable")));
    }
    Ok((bound.ceil() as usize).max(scheme.min_nt()))
}

/// Default upper limit on time steps for the adaptive tail rule.
pub const DEFAULT_MAX_NT: usize = 1_000_000;

/// Runs the adaptive tail rule.
///
/// `advance(j)` must advance the heat solution to step `j` (for `j ≥ 1`) and
/// return `‖W^(j) − W_∞‖_M`; `advance(0)` returns the initial distance.
/// Returns the first `j ≥ min_nt` with distance `≤ tol_rel · initial`.
pub fn adaptive_tail_nt(
    tol_rel: f64,
    min_nt: usize,
    max_nt: usize,
    mut advance: impl FnMut(usize) -> Result<f64>,
) -> Result<usize> {
    if !(tol_rel > 0.0) {
        return Err(invalid(format!("adaptive tolerance must be positive, got {tol_rel}")));
    }
    let threshold = tol_rel * advance(0)?;
    let mut j = 0;
    loop {
        j += 1;
        if j > max_nt {
            return Err(Error::StepCapExceeded { cap: max_nt });
        }
        let dist = advance(j)?;
        if !dist.is_finite() {
            return Err(invalid(format!("heat solution became non-finite at step {j}")));
        }
        if j >= min_nt && dist <= threshold {
            return Ok(j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gamma_spot_values() {
        assert!((gamma(0.5).unwrap() - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(5.0).unwrap() - 24.0).abs() < 1e-12);
        assert!((gamma_neg(0.5).unwrap() + 2.0 * PI.sqrt()).abs() < 1e-12);
        assert!((gamma_neg(0.5).unwrap() + 3.544_907_701_8).abs() < 1e-9);
        assert!((gamma_neg(0.75).unwrap() + 4.834_146_5).abs() < 1e-6);
        assert!(gamma_neg(0.0).is_err() && gamma_neg(1.0).is_err());
    }

    #[test]
    fn gamma_recurrence_consistency() {
        for i in 1..100 {
            let s = i as f64 / 100.0;
            let lhs = gamma_neg(s).unwrap();
            let rhs = -gamma(1.0 - s).unwrap() / s;
            assert!(((lhs - rhs) / rhs).abs() < 1e-12, "s = {s}");
        }
    }

    #[test]
    fn low_weight_examples() {
        let w = weights_low(0.5, 0.1, 10).unwrap();
        let b1 = 2.0 * (0.05f64.powf(-0.5) - 0.15f64.powf(-0.5));
        assert!((w.betas[0] - b1).abs() < 1e-13);
        // Adaptive quadrature of ∫_0.05^0.15 t^{-3/2} dt gives 3.780294115055936.
        assert!((w.betas[0] - 3.780_294_115_055_936).abs() < 1e-12);
        assert!((w.beta_inf - 1.951_800).abs() < 1e-6);
        assert!((w.t2 - 1.05).abs() < 1e-15);
    }

    #[test]
    fn high_weight_example() {
        let w = weights_high(0.5, 1.0, 5).unwrap();
        let b2 = -4.0 * (3f64.sqrt() - 2.0 * 2f64.sqrt() + 1.0);
        assert!((w.betas[1] - b2).abs() < 1e-14);
        // Adaptive quadrature of the hat-weighted moment over [1, 3].
        assert!((b2 - 0.385_505_268_709_251).abs() < 1e-12);
        assert!(weights_high(0.5, 1.0, 1).is_err());
    }

    #[test]
    fn series_branches_match_direct_formulas() {
        for &s in &[0.1, 0.5, 0.9] {
            for j in [16usize, 20, 40] {
                let jf = j as f64;
                let direct_interior = big_f(s, jf + 1.0) - 2.0 * big_f(s, jf) + big_f(s, jf - 1.0);
                let series = high_interior_weight(s, 1.0, j);
                assert!(((series - direct_interior) / series).abs() < 1e-10, "interior s={s} j={j}");
                let direct_last = big_f_prime(s, jf) - big_f(s, jf) + big_f(s, jf - 1.0);
                let series = high_last_weight(s, 1.0, j);
                assert!(((series - direct_last) / series).abs() < 1e-10, "last s={s} j={j}");
            }
        }
    }

    #[test]
    fn high_weights_positive_for_huge_indices() {
        for &s in &[0.01, 0.5, 0.99] {
            for &j in &[1_000usize, 1_000_000, 100_000_000] {
                assert!(high_interior_weight(s, 1e-3, j) > 0.0);
                assert!(high_last_weight(s, 1e-3, j) > 0.0);
                assert!(low_weight(s, 1e-3, j) > 0.0);
            }
        }
    }

    #[test]
    fn choose_nt_examples() {
        assert_eq!(choose_nt(Scheme::Low, 0.5, 1e-3, PI * PI).unwrap(), 350);
        assert_eq!(choose_nt(Scheme::High, 0.5, 1e-3, PI * PI).unwrap(), 1050);
        assert!(choose_nt(Scheme::Low, 0.5, 1.0, PI * PI).is_err());
        assert!(choose_nt(Scheme::Low, 0.5, 0.1, 0.0).is_err());
        assert_eq!(choose_nt(Scheme::High, 0.5, 0.9, 1e6).unwrap(), 2);
    }

    #[test]
    fn adaptive_rule() {
        // Already steady: stops at the first step.
        assert_eq!(adaptive_tail_nt(1e-6, 1, 10, |_| Ok(0.0)).unwrap(), 1);
        assert_eq!(adaptive_tail_nt(1.0, 1, 10, |_| Ok(1.0)).unwrap(), 1);
        assert_eq!(adaptive_tail_nt(1.0, 2, 10, |_| Ok(1.0)).unwrap(), 2);
        let decay = |j: usize| Ok(0.5f64.powi(j as i32));
        assert_eq!(adaptive_tail_nt(1e-3, 1, 100, decay).unwrap(), 10);
        assert!(matches!(adaptive_tail_nt(1e-3, 1, 5, |_| Ok(1.0)), Err(Error::StepCapExceeded { cap: 5 })));
        assert!(adaptive_tail_nt(0.0, 1, 5, |_| Ok(1.0)).is_err());
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!("LOW".parse::<Scheme>().unwrap(), Scheme::Low);
        assert_eq!("high".parse::<Scheme>().unwrap(), Scheme::High);
        assert!("mid".parse::<Scheme>().is_err());
        assert_eq!(Scheme::High.to_string(), "high");
    }
}
