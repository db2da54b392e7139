//! Sparse symmetric linear algebra: CSR storage, products, Jacobi-preconditioned
//! conjugate gradients and an envelope Cholesky factorization.

use std::collections::VecDeque;
use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

/// Default relative tolerance of [`cg_solve`] callers inside this crate.
pub const DEFAULT_CG_TOL: f64 = 1e-12;

/// Nodal coefficients of a finite-element function.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldVector(Vec<f64>);

impl FieldVector {
    pub fn zeros(n: usize) -> Self {
        FieldVector(vec![0.0; n])
    }

    pub fn from_elem(n: usize, v: f64) -> Self {
        FieldVector(vec![v; n])
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.0, other)
    }

    pub fn norm2(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// `self += alpha * x`
    pub fn axpy(&mut self, alpha: f64, x: &[f64]) {
        for (y, &xi) in self.0.iter_mut().zip(x) {
            *y += alpha * xi;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for y in &mut self.0 {
            *y *= alpha;
        }
    }
}

impl From<Vec<f64>> for FieldVector {
    fn from(v: Vec<f64>) -> Self {
        FieldVector(v)
    }
}

impl Deref for FieldVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for FieldVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Compressed sparse row matrix with strictly increasing column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are
    /// summed in the order they appear, so assembly order fixes the result.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        for &(i, j, v) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(Error::InvalidArgument(format!("triplet ({i}, {j}) outside {n_rows}x{n_cols}")));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite entry at ({i}, {j})")));
            }
        }
        // Stable sort keeps insertion order among duplicates.
        order.sort_by_key(|&t| (triplets[t].0, triplets[t].1));
        let mut row_offsets = vec![0; n_rows + 1];
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for t in order {
            let (i, j, v) = triplets[t];
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(j);
                values.push(v);
                row_offsets[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n_rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(CsrMatrix { n_rows, n_cols, row_offsets, col_indices, values })
    }

    /// Builds a matrix from raw CSR arrays, validating the structure.
    pub fn from_csr(n_rows: usize, n_cols: usize, row_offsets: Vec<usize>, col_indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 || row_offsets[0] != 0 || *row_offsets.last().unwrap() != col_indices.len() {
            return Err(Error::InvalidArgument("malformed row offsets".into()));
        }
        if values.len() != col_indices.len() {
            return Err(Error::InvalidArgument("values and column indices differ in length".into()));
        }
        for i in 0..n_rows {
            if row_offsets[i] > row_offsets[i + 1] {
                return Err(Error::InvalidArgument("row offsets decrease".into()));
            }
            let cols = &col_indices[row_offsets[i]..row_offsets[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.iter().any(|&j| j >= n_cols) {
                return Err(Error::InvalidArgument(format!("row {i} has unsorted or out-of-range columns")));
            }
        }
        Ok(CsrMatrix { n_rows, n_cols, row_offsets, col_indices, values })
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        CsrMatrix { n_rows, n_cols, row_offsets: vec![0; n_rows + 1], col_indices: Vec::new(), values: Vec::new() }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |p| vals[p])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        d
    }

    /// `y = A x`, accumulating each row in ascending column order.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch { expected: self.n_cols, got: x.len() });
        }
        if y.len() != self.n_rows {
            return Err(Error::DimensionMismatch { expected: self.n_rows, got: y.len() });
        }
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for p in self.row_offsets[i]..self.row_offsets[i + 1] {
                acc += self.values[p] * x[self.col_indices[p]];
            }
            *yi = acc;
        }
        Ok(())
    }

    /// `alpha * self + beta * other`, over the union of both patterns.
    pub fn linear_combination(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> Result<CsrMatrix> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::DimensionMismatch { expected: self.n_rows, got: other.n_rows });
        }
        let mut row_offsets = Vec::with_capacity(self.n_rows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for i in 0..self.n_rows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let ja = ca.get(p).copied().unwrap_or(usize::MAX);
                let jb = cb.get(q).copied().unwrap_or(usize::MAX);
                if ja == jb {
                    col_indices.push(ja);
                    values.push(alpha * va[p] + beta * vb[q]);
                    p += 1;
                    q += 1;
                } else if ja < jb {
                    col_indices.push(ja);
                    values.push(alpha * va[p]);
                    p += 1;
                } else {
                    col_indices.push(jb);
                    values.push(beta * vb[q]);
                    q += 1;
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(CsrMatrix { n_rows: self.n_rows, n_cols: self.n_cols, row_offsets, col_indices, values })
    }

    /// Largest entrywise asymmetry relative to the largest entry.
    pub fn relative_asymmetry(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    /// Sum of all entries, `1ᵀ A 1`.
    pub fn total_sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// `A x` as a new vector.
pub fn spmv(a: &CsrMatrix, x: &[f64]) -> Result<FieldVector> {
    let mut y = FieldVector::zeros(a.n_rows());
    a.spmv_into(x, &mut y)?;
    Ok(y)
}

/// Result of a successful conjugate-gradient solve.
#[derive(Debug, Clone)]
pub struct CgSolution {
    pub x: FieldVector,
    pub iters: usize,
    /// Final relative residual `‖b − A x‖₂ / ‖b‖₂`, recomputed from scratch.
    pub residual: f64,
}

/// Jacobi-preconditioned conjugate gradients for SPD `a`, starting from zero.
pub fn cg_solve(a: &CsrMatrix, b: &[f64], tol_rel: f64, max_iter: usize) -> Result<CgSolution> {
    cg_solve_from(a, b, FieldVector::zeros(a.n_cols()), tol_rel, max_iter)
}

/// Jacobi-preconditioned conjugate gradients starting from `x0`.
///
/// Convergence is declared only after the true residual `b − A x` is
/// recomputed and found below `tol_rel · ‖b‖₂`.
pub fn cg_solve_from(a: &CsrMatrix, b: &[f64], x0: FieldVector, tol_rel: f64, max_iter: usize) -> Result<CgSolution> {
    let n = a.n_rows();
    if a.n_cols() != n {
        return Err(Error::InvalidArgument("CG needs a square matrix".into()));
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    if x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x0.len() });
    }
    if !(tol_rel > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol_rel}")));
    }
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::NotPositiveDefinite(format!("diagonal entry {i} is {}", diag[i])));
    }
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();

    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(CgSolution { x: FieldVector::zeros(n), iters: 0, residual: 0.0 });
    }
    let target = tol_rel * b_norm;

    let mut x = x0;
    let mut r = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let true_residual = |x: &[f64], r: &mut [f64]| -> f64 {
        a.spmv_into(x, r).expect("dimensions checked");
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        dot(r, r).sqrt()
    };
    let mut r_norm = true_residual(&x, &mut r);
    let mut iters = 0;
    while r_norm > target {
        // (Re)start from the current true residual.
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        loop {
            if iters >= max_iter {
                return Err(Error::NoConvergence { iters, residual: r_norm / b_norm });
            }
            a.spmv_into(&p, &mut ap)?;
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::NotPositiveDefinite(format!("pᵀAp = {pap} at iteration {iters}")));
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            iters += 1;
            r_norm = dot(&r, &r).sqrt();
            if r_norm <= target {
                break;
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        r_norm = true_residual(&x, &mut r);
    }
    Ok(CgSolution { x, iters, residual: r_norm / b_norm })
}

/// Reverse Cuthill–McKee ordering of the symmetric pattern of `a`.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n_rows();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut seeds: Vec<usize> = (0..n).collect();
    seeds.sort_by_key(|&i| (degree[i], i));
    for &seed in &seeds {
        if visited[seed] {
            continue;
        }
        // Move to a pseudo-peripheral node: the last node of a BFS sweep.
        let start = {
            let mut seen = vec![false; n];
            let mut queue = VecDeque::from([seed]);
            seen[seed] = true;
            let mut last = seed;
            while let Some(v) = queue.pop_front() {
                last = v;
                for &w in a.row(v).0 {
                    if !seen[w] && !visited[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            last
        };
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = a.row(v).0.iter().copied().filter(|&w| !visited[w]).collect();
            nbrs.sort_by_key(|&w| (degree[w], w));
            for w in nbrs {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope (skyline) Cholesky factorization `P A Pᵀ = L Lᵀ` of an SPD matrix,
/// with a reverse Cuthill–McKee permutation to keep the envelope narrow.
///
/// Used for the constant-matrix linear solves repeated at every heat step.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    perm: Vec<usize>,
    // first[i]: first column of row i inside the envelope.
    first: Vec<usize>,
    // start[i]: offset of row i (columns first[i]..=i) in `l`.
    start: Vec<usize>,
    l: Vec<f64>,
    inv_diag: Vec<f64>,
}

impl CholeskyFactor {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.n_rows();
        if a.n_cols() != n {
            return Err(Error::InvalidArgument("Cholesky needs a square matrix".into()));
        }
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for &j in a.row(old).0 {
                let jn = inv[j];
                if jn < first[new] {
                    first[new] = jn;
                }
            }
        }
        let mut start = vec![0; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut l = vec![0.0; start[n]];
        for (new, &old) in perm.iter().enumerate() {
            let (cols, vals) = a.row(old);
            for (&j, &v) in cols.iter().zip(vals) {
                let jn = inv[j];
                if jn <= new {
                    l[start[new] + jn - first[new]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = l[start[i] + j - fi];
                let ri = &l[start[i] + k0 - fi..start[i] + j - fi];
                let rj = &l[start[j] + k0 - fj..start[j] + j - fj];
                s -= dot(ri, rj);
                l[start[i] + j - fi] = s / l[start[j] + j - fj];
            }
            let row = &l[start[i]..start[i] + i - fi];
            let d = l[start[i] + i - fi] - dot(row, row);
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite(format!("pivot {d:e} at row {}", perm[i])));
            }
            l[start[i] + i - fi] = d.sqrt();
        }
        let inv_diag = (0..n).map(|i| 1.0 / l[start[i] + i - first[i]]).collect();
        Ok(CholeskyFactor { n, perm, first, start, l, inv_diag })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored factor entries.
    pub fn envelope_size(&self) -> usize {
        self.l.len()
    }

    /// Solves `A x = b`. `work` must have length `dim()`.
    pub fn solve_into(&self, b: &[f64], x: &mut [f64], work: &mut [f64]) -> Result<()> {
        let n = self.n;
        if b.len() != n || x.len() != n || work.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: b.len().min(x.len()).min(work.len()) });
        }
        let y = work;
        for i in 0..n {
            y[i] = b[self.perm[i]];
        }
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.l[self.start[i]..self.start[i] + i - fi];
            let s = y[i] - dot(row, &y[fi..i]);
            y[i] = s * self.inv_diag[i];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let xi = y[i] * self.inv_diag[i];
            y[i] = xi;
            let row = &self.l[self.start[i]..self.start[i] + i - fi];
            for (yk, &lik) in y[fi..i].iter_mut().zip(row) {
                *yk -= lik * xi;
            }
        }
        for i in 0..n {
            x[self.perm[i]] = y[i];
        }
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Result<FieldVector> {
        let mut x = FieldVector::zeros(self.n);
        let mut work = vec![0.0; self.n];
        self.solve_into(b, &mut x, &mut work)?;
        Ok(x)
    }
}
