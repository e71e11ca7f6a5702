//! Envelope (profile) LDLᵀ factorization for symmetric positive-definite
//! systems, with reverse Cuthill–McKee ordering to keep the envelope narrow.
//!
//! Susceptance matrices of transmission grids are very sparse and nearly
//! banded after RCM, so the envelope scheme gets most of the benefit of a
//! general sparse Cholesky at a fraction of the code.

use std::collections::VecDeque;

/// Reverse Cuthill–McKee permutation of an undirected graph given as
/// adjacency lists. Returns `order` with `order[new] = old`.
pub fn reverse_cuthill_mckee(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let degree: Vec<usize> = adjacency.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    let mut neighbours = Vec::new();
    while order.len() < n {
        let start = (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| (degree[v], v))
            .expect("unvisited vertex remains");
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            neighbours.clear();
            neighbours.extend(adjacency[v].iter().copied().filter(|&u| !visited[u]));
            neighbours.sort_unstable_by_key(|&u| (degree[u], u));
            neighbours.dedup();
            for &u in &neighbours {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

/// Lower envelope of a symmetric matrix, stored row by row from the first
/// structurally nonzero column through the diagonal.
#[derive(Debug, Clone)]
pub struct EnvelopeMatrix {
    first: Vec<usize>,
    offset: Vec<usize>,
    values: Vec<f64>,
}

impl EnvelopeMatrix {
    /// Allocate the envelope for `n` rows from lower-triangle structure
    /// `(row, col)` pairs with `col <= row`.
    pub fn with_structure(n: usize, entries: impl Iterator<Item = (usize, usize)>) -> Self {
        let mut first: Vec<usize> = (0..n).collect();
        for (r, c) in entries {
            debug_assert!(c <= r);
            first[r] = first[r].min(c);
        }
        let mut offset = Vec::with_capacity(n + 1);
        let mut total = 0;
        for (i, &f) in first.iter().enumerate() {
            offset.push(total);
            total += i - f + 1;
        }
        offset.push(total);
        EnvelopeMatrix {
            first,
            offset,
            values: vec![0.0; total],
        }
    }

    pub fn n(&self) -> usize {
        self.first.len()
    }

    /// Add `v` to entry `(r, c)`, `c <= r`, which must lie in the envelope.
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(c <= r && c >= self.first[r]);
        self.values[self.offset[r] + c - self.first[r]] += v;
    }

    fn get(&self, r: usize, c: usize) -> f64 {
        self.values[self.offset[r] + c - self.first[r]]
    }

    /// In-place LDLᵀ. Off-diagonals become L, diagonals become D.
    /// Fails with the offending row when a pivot is not positive relative to
    /// `pivot_tol` times the largest original diagonal.
    pub fn factor(mut self, pivot_tol: f64) -> Result<LdlFactor, usize> {
        let n = self.n();
        let scale = (0..n).map(|i| self.get(i, i)).fold(0.0_f64, f64::max);
        let mut diag = vec![0.0; n];
        for i in 0..n {
            let fi = self.first[i];
            let oi = self.offset[i];
            for j in fi..i {
                let fj = self.first[j];
                let oj = self.offset[j];
                let start = fi.max(fj);
                let mut s = self.values[oi + j - fi];
                for k in start..j {
                    s -= self.values[oi + k - fi] * diag[k] * self.values[oj + k - fj];
                }
                self.values[oi + j - fi] = s / diag[j];
            }
            let mut d = self.values[oi + i - fi];
            for k in fi..i {
                let l = self.values[oi + k - fi];
                d -= l * l * diag[k];
            }
            if !(d > pivot_tol * scale) {
                return Err(i);
            }
            diag[i] = d;
            self.values[oi + i - fi] = d;
        }
        Ok(LdlFactor { env: self, diag })
    }
}

#[derive(Debug, Clone)]
pub struct LdlFactor {
    env: EnvelopeMatrix,
    diag: Vec<f64>,
}

impl LdlFactor {
    /// Solve A x = b in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.diag.len();
        let env = &self.env;
        for i in 0..n {
            let fi = env.first[i];
            let oi = env.offset[i];
            let mut s = b[i];
            for k in fi..i {
                s -= env.values[oi + k - fi] * b[k];
            }
            b[i] = s;
        }
        for i in 0..n {
            b[i] /= self.diag[i];
        }
        for i in (0..n).rev() {
            let fi = env.first[i];
            let oi = env.offset[i];
            let bi = b[i];
            for k in fi..i {
                b[k] -= env.values[oi + k - fi] * bi;
            }
        }
    }
}
