use std::collections::VecDeque;

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// Reverse Cuthill-McKee ordering of the graph of a symmetric matrix;
/// returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n_rows;
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs_levels = |start: usize| -> (usize, usize) {
        // (farthest vertex, eccentricity)
        let mut dist = vec![usize::MAX; n];
        let mut q = VecDeque::new();
        dist[start] = 0;
        q.push_back(start);
        let mut far = (start, 0);
        while let Some(v) = q.pop_front() {
            let d = dist[v];
            if d > far.1 || (d == far.1 && degree[v] < degree[far.0]) {
                far = (v, d);
            }
            for &w in a.row(v).0 {
                if dist[w] == usize::MAX {
                    dist[w] = d + 1;
                    q.push_back(w);
                }
            }
        }
        far
    };
    loop {
        let Some(seed) = (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| (degree[v], v))
        else {
            break;
        };
        // pseudo-peripheral start
        let mut start = seed;
        let mut ecc = 0;
        for _ in 0..4 {
            let (far, e) = bfs_levels(start);
            if e <= ecc {
                break;
            }
            ecc = e;
            start = far;
        }
        let mut q = VecDeque::new();
        visited[start] = true;
        q.push_back(start);
        while let Some(v) = q.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = a
                .row(v)
                .0
                .iter()
                .copied()
                .filter(|&w| !visited[w])
                .collect();
            nbrs.sort_by_key(|&w| (degree[w], w));
            for w in nbrs {
                visited[w] = true;
                q.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope (skyline) Cholesky factor of a symmetric positive definite
/// matrix.
#[derive(Clone, Debug)]
pub struct SkylineCholesky {
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n_rows;
        let mut first = vec![0; n];
        let mut start = vec![0; n + 1];
        for i in 0..n {
            let cols = a.row(i).0;
            first[i] = cols.first().copied().unwrap_or(i).min(i);
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; start[n]];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j <= i {
                    data[start[i] + j - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let row_i = start[i];
            for j in fi..=i {
                let fj = first[j];
                let row_j = start[j];
                let k0 = fi.max(fj);
                let mut s = data[row_i + j - fi];
                for k in k0..j {
                    s -= data[row_i + k - fi] * data[row_j + k - fj];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(Error::SingularSystem(format!(
                            "nonpositive pivot {s:.3e} at row {i} in direct factorization"
                        )));
                    }
                    data[row_i + i - fi] = s.sqrt();
                } else {
                    data[row_i + j - fi] = s / data[row_j + j - fj];
                }
            }
        }
        Ok(Self { first, start, data })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.first.len();
        let mut x = b.to_vec();
        for i in 0..n {
            let fi = self.first[i];
            let row = self.start[i];
            let mut s = x[i];
            for k in fi..i {
                s -= self.data[row + k - fi] * x[k];
            }
            x[i] = s / self.data[row + i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = self.start[i];
            x[i] /= self.data[row + i - fi];
            let xi = x[i];
            for k in fi..i {
                x[k] -= self.data[row + k - fi] * xi;
            }
        }
        x
    }

    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }
}

/// Permutes a symmetric matrix: `B[new_i][new_j] = A[perm[new_i]][perm[new_j]]`.
pub fn permute_symmetric(a: &CsrMatrix, perm: &[usize]) -> CsrMatrix {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let mut t = Vec::with_capacity(a.nnz());
    for (new_i, &old_i) in perm.iter().enumerate() {
        let (cols, vals) = a.row(old_i);
        for (&c, &v) in cols.iter().zip(vals) {
            t.push((new_i, inv[c], v));
        }
    }
    CsrMatrix::from_triplets(a.n_rows, a.n_cols, &t)
}

/// Direct solve of `A x = b` through an RCM-ordered envelope factorization.
pub fn direct_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let perm = reverse_cuthill_mckee(a);
    let pa = permute_symmetric(a, &perm);
    let f = SkylineCholesky::factor(&pa)?;
    let pb: Vec<f64> = perm.iter().map(|&o| b[o]).collect();
    let px = f.solve(&pb);
    let mut x = vec![0.0; b.len()];
    for (new, &old) in perm.iter().enumerate() {
        x[old] = px[new];
    }
    Ok(x)
}
