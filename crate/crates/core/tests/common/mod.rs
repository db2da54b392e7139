//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use fraclap::linalg::CsrMatrix;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss–Legendre rule with `panels` equal panels of 20 points.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let rule = gauss_legendre(20);
    let w = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * w;
        for &(x, wt) in &rule {
            sum += wt * f(lo + 0.5 * w * (x + 1.0));
        }
    }
    0.5 * w * sum
}

/// `∫_0^a f` for `f` with an integrable singularity `x^{−s}` at 0, through the
/// substitution `x = a v^q`, `q = 1/(1−s)`.
pub fn integrate_singular(f: impl Fn(f64) -> f64, a: f64, s: f64) -> f64 {
    let q = 1.0 / (1.0 - s);
    integrate(|v| f(a * v.powf(q)) * a * q * v.powf(q - 1.0), 0.0, 1.0, 16)
}

/// `ln Γ(x)` by Stirling's series after shifting `x` above 15.
pub fn ln_gamma_stirling(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < 15.0 {
        shift -= x.ln();
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))));
    shift + (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + series
}

/// Γ(−s) for `s ∈ (0, 1)` from the Stirling value of Γ(1−s).
pub fn gamma_neg_stirling(s: f64) -> f64 {
    -ln_gamma_stirling(1.0 - s).exp() / s
}

pub fn dense(a: &CsrMatrix) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.n_rows(), a.n_cols());
    for i in 0..a.n_rows() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            m[(i, j)] += v;
        }
    }
    m
}

/// Generalized symmetric eigenpairs `A x = λ M x`, eigenvectors M-orthonormal.
pub fn generalized_eigen(a: &CsrMatrix, m: &CsrMatrix) -> (Vec<f64>, DMatrix<f64>) {
    let a = dense(a);
    let m = dense(m);
    let l = m.clone().cholesky().expect("mass matrix SPD").l();
    let linv = l.clone().try_inverse().expect("invertible");
    let c = &linv * &a * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let vecs = linv.transpose() * eig.eigenvectors;
    // Ascending order.
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let sorted = DMatrix::from_fn(vecs.nrows(), vecs.ncols(), |r, c| vecs[(r, order[c])]);
    (order.iter().map(|&i| eig.eigenvalues[i]).collect(), sorted)
}

/// Dense solve by LU.
pub fn dense_solve(a: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    a.clone().lu().solve(&DVector::from_column_slice(b)).expect("nonsingular").iter().copied().collect()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

/// Midpoint weight oracle `∫_{(j−½)Δt}^{(j+½)Δt} t^{−1−s} dt`.
pub fn low_weight_oracle(s: f64, dt: f64, j: usize) -> f64 {
    let t = j as f64 * dt;
    integrate(|x| x.powf(-1.0 - s), t - 0.5 * dt, t + 0.5 * dt, 64)
}

/// Hat-weighted moment `∫ φ_j(t) t^{−1−s} dt` for the hat `φ_j` centered at
/// `jΔt`; the last hat (`j = n`) keeps only its left half. The first hat
/// weight also carries `∫_0^{Δt} (t/Δt) t^{−1−s} dt`.
pub fn hat_weight_oracle(s: f64, dt: f64, j: usize, n: usize) -> f64 {
    let t = j as f64 * dt;
    // Ramps written without cancellation near x = 0.
    let up = |x: f64| (x - (t - dt)) / dt * x.powf(-1.0 - s);
    let down = |x: f64| ((t + dt) - x) / dt * x.powf(-1.0 - s);
    let left = if j == 1 { integrate_singular(&up, t, s) } else { integrate(&up, t - dt, t, 64) };
    let right = if j == n { 0.0 } else { integrate(&down, t, t + dt, 64) };
    left + right
}
