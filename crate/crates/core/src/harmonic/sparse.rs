use serde::Serialize;

use crate::error::{Error, Result};

/// Compressed sparse row matrix with sorted, unique column indices.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries. The summation order of duplicates follows
    /// their order in `triplets`, so the result is deterministic.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n_rows + 1];
        for &(i, _, _) in triplets {
            counts[i + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            let k = fill[i];
            cols[k] = j;
            vals[k] = v;
            fill[i] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for i in 0..n_rows {
            let (lo, hi) = (counts[i], counts[i + 1]);
            order.clear();
            order.extend(lo..hi);
            order.sort_by_key(|&k| (cols[k], k));
            let mut last: Option<usize> = None;
            for &k in &order {
                if last == Some(cols[k]) {
                    *values.last_mut().unwrap() += vals[k];
                } else {
                    col_idx.push(cols[k]);
                    values.push(vals[k]);
                    last = Some(cols[k]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        for (i, yi) in y.iter_mut().enumerate().take(self.n_rows) {
            let (cols, vals) = self.row(i);
            let mut s = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                s += v * x[*c];
            }
            *yi = s;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.matvec(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, i)).collect()
    }

    /// `true` when the stored pattern and values are exactly symmetric.
    pub fn is_symmetric(&self) -> bool {
        if self.n_rows != self.n_cols {
            return false;
        }
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if self.get(j, i) != v {
                    return false;
                }
            }
        }
        true
    }

    /// Extracts the submatrix with the given row and column index maps
    /// (`usize::MAX` marks a dropped index).
    pub fn submatrix(
        &self,
        row_map: &[usize],
        n_rows: usize,
        col_map: &[usize],
        n_cols: usize,
    ) -> Self {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut rows: Vec<usize> = vec![usize::MAX; n_rows];
        for (old, &new) in row_map.iter().enumerate() {
            if new != usize::MAX {
                rows[new] = old;
            }
        }
        for &old in &rows {
            let (cols, vals) = self.row(old);
            for (&c, &v) in cols.iter().zip(vals) {
                let nc = col_map[c];
                if nc != usize::MAX {
                    col_idx.push(nc);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        let mut m = Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        };
        m.sort_rows();
        m
    }

    fn sort_rows(&mut self) {
        for i in 0..self.n_rows {
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut pairs: Vec<(usize, f64)> = self.col_idx[lo..hi]
                .iter()
                .copied()
                .zip(self.values[lo..hi].iter().copied())
                .collect();
            if pairs.windows(2).all(|w| w[0].0 < w[1].0) {
                continue;
            }
            pairs.sort_by_key(|p| p.0);
            for (k, (c, v)) in pairs.into_iter().enumerate() {
                self.col_idx[lo + k] = c;
                self.values[lo + k] = v;
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Preconditioner applied inside the conjugate-gradient loop.
#[derive(Clone, Debug)]
pub enum Preconditioner {
    Jacobi(Vec<f64>),
    /// Incomplete Cholesky with the sparsity of the lower triangle.
    IncompleteCholesky(CsrMatrix),
}

impl Preconditioner {
    /// Incomplete Cholesky, or Jacobi when a pivot breaks down.
    pub fn build(a: &CsrMatrix) -> Self {
        match incomplete_cholesky(a) {
            Some(l) => Preconditioner::IncompleteCholesky(l),
            None => Preconditioner::Jacobi(a.diagonal().iter().map(|d| 1.0 / d).collect()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preconditioner::Jacobi(_) => "jacobi",
            Preconditioner::IncompleteCholesky(_) => "ic0",
        }
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Preconditioner::Jacobi(inv) => {
                for ((zi, ri), di) in z.iter_mut().zip(r).zip(inv) {
                    *zi = ri * di;
                }
            }
            Preconditioner::IncompleteCholesky(l) => {
                let n = l.n_rows;
                // forward: L y = r, diagonal stored last in each row
                for i in 0..n {
                    let (cols, vals) = l.row(i);
                    let k = cols.len() - 1;
                    let mut s = r[i];
                    for t in 0..k {
                        s -= vals[t] * z[cols[t]];
                    }
                    z[i] = s / vals[k];
                }
                // backward: L^T x = y
                for i in (0..n).rev() {
                    let (cols, vals) = l.row(i);
                    let k = cols.len() - 1;
                    z[i] /= vals[k];
                    let zi = z[i];
                    for t in 0..k {
                        z[cols[t]] -= vals[t] * zi;
                    }
                }
            }
        }
    }
}

/// IC(0) of a symmetric positive definite matrix; `None` on a nonpositive
/// pivot.
fn incomplete_cholesky(a: &CsrMatrix) -> Option<CsrMatrix> {
    let n = a.n_rows;
    let mut row_ptr = vec![0];
    let mut col_idx = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j <= i {
                col_idx.push(j);
                values.push(v);
            }
        }
        row_ptr.push(col_idx.len());
        if col_idx.last() != Some(&i) {
            return None;
        }
    }
    for i in 0..n {
        let (lo, hi) = (row_ptr[i], row_ptr[i + 1]);
        for p in lo..hi {
            let k = col_idx[p];
            // sparse dot of rows i and k over columns < k
            let (klo, khi) = (row_ptr[k], row_ptr[k + 1]);
            let mut s = values[p];
            let (mut a_ptr, mut b_ptr) = (lo, klo);
            while a_ptr < p && b_ptr < khi - 1 {
                let (ca, cb) = (col_idx[a_ptr], col_idx[b_ptr]);
                if ca == cb {
                    s -= values[a_ptr] * values[b_ptr];
                    a_ptr += 1;
                    b_ptr += 1;
                } else if ca < cb {
                    a_ptr += 1;
                } else {
                    b_ptr += 1;
                }
            }
            if k == i {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                values[p] = s.sqrt();
            } else {
                values[p] = s / values[khi - 1];
            }
        }
    }
    Some(CsrMatrix {
        n_rows: n,
        n_cols: n,
        row_ptr,
        col_idx,
        values,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    /// True relative residual `|b - A x| / |b|` after the last iteration.
    pub residual: f64,
    pub tolerance: f64,
    pub preconditioner: String,
    pub unknowns: usize,
}

/// Preconditioned conjugate gradients from a zero initial guess.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    pre: &Preconditioner,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolverDiagnostics)> {
    let n = a.n_rows;
    let mut x = vec![0.0; n];
    let bnorm = norm(b);
    let diag = |iterations, residual| SolverDiagnostics {
        iterations,
        residual,
        tolerance: tol,
        preconditioner: pre.name().to_string(),
        unknowns: n,
    };
    if bnorm == 0.0 {
        return Ok((x, diag(0, 0.0)));
    }
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    let mut rel = 1.0;
    while iterations < max_iter {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        rel = norm(&r) / bnorm;
        if rel <= tol {
            break;
        }
        pre.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let ax = a.mul(&x);
    let true_rel = norm(
        &b.iter()
            .zip(&ax)
            .map(|(bi, ai)| bi - ai)
            .collect::<Vec<_>>(),
    ) / bnorm;
    if rel > tol || !true_rel.is_finite() {
        return Err(Error::SolverNonConvergence {
            iterations,
            residual: true_rel,
            tol,
        });
    }
    Ok((x, diag(iterations, true_rel)))
}
