//! Symmetric positive definite envelope (profile) storage with an in-place
//! Cholesky factorization, plus reverse Cuthill–McKee ordering.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{Error, Result};

/// Lower triangle stored row by row from the first nonzero column to the diagonal.
#[derive(Clone, Debug)]
pub struct Envelope {
    n: usize,
    first: Vec<usize>,
    offset: Vec<usize>,
    vals: Vec<f64>,
    factored: bool,
}

impl Envelope {
    /// Allocates the envelope implied by the sparsity pattern `edges` (i, j pairs).
    pub fn from_pattern(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> Self {
        let mut first: Vec<usize> = (0..n).collect();
        for (i, j) in edges {
            let (hi, lo) = if i > j { (i, j) } else { (j, i) };
            if lo < first[hi] {
                first[hi] = lo;
            }
        }
        let mut offset = vec![0usize; n + 1];
        for i in 0..n {
            offset[i + 1] = offset[i] + (i - first[i] + 1);
        }
        let vals = vec![0.0; offset[n]];
        Envelope { n, first, offset, vals, factored: false }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored entries.
    pub fn stored(&self) -> usize {
        self.vals.len()
    }

    /// Adds to entry (i, j) of the symmetric matrix (either triangle).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(lo >= self.first[hi]);
        self.vals[self.offset[hi] + lo - self.first[hi]] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        if lo < self.first[hi] {
            return 0.0;
        }
        self.vals[self.offset[hi] + lo - self.first[hi]]
    }

    /// y = A x (before factorization).
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let f = self.first[i];
            let row = &self.vals[self.offset[i]..self.offset[i + 1]];
            let mut s = 0.0;
            for (k, a) in row.iter().enumerate() {
                let j = f + k;
                s += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
            y[i] += s;
        }
        y
    }

    /// In-place Cholesky A = LLᵀ.
    pub fn factor(&mut self) -> Result<()> {
        if self.factored {
            return Ok(());
        }
        for i in 0..self.n {
            let fi = self.first[i];
            let oi = self.offset[i];
            for j in fi..i {
                let fj = self.first[j];
                let oj = self.offset[j];
                let k0 = fi.max(fj);
                let (head, tail) = self.vals.split_at_mut(oi);
                let rj = &head[oj + k0 - fj..oj + j - fj];
                let ri = &tail[k0 - fi..j - fi];
                let s = dot(ri, rj);
                let djj = head[oj + j - fj];
                tail[j - fi] = (tail[j - fi] - s) / djj;
            }
            let row = &self.vals[oi..oi + i - fi];
            let s = dot(row, row);
            let d = self.vals[oi + i - fi] - s;
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::numeric(format!("matrix is not positive definite at row {i} (pivot {d:e})")));
            }
            self.vals[oi + i - fi] = d.sqrt();
        }
        self.factored = true;
        Ok(())
    }

    /// Solves A x = b after [`Envelope::factor`].
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if !self.factored {
            return Err(Error::numeric("envelope solve before factorization"));
        }
        if b.len() != self.n {
            return Err(Error::shape("right-hand side length mismatch"));
        }
        let mut y = b.to_vec();
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.vals[self.offset[i]..self.offset[i + 1]];
            let mut s = y[i];
            for (k, a) in row[..i - fi].iter().enumerate() {
                s -= a * y[fi + k];
            }
            y[i] = s / row[i - fi];
        }
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let row = &self.vals[self.offset[i]..self.offset[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for (k, a) in row[..i - fi].iter().enumerate() {
                y[fi + k] -= a * yi;
            }
        }
        Ok(y)
    }
}

/// Dot product with four independent accumulators so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        s += x * y;
    }
    s
}

/// Reverse Cuthill–McKee permutation: `perm[new] = old`.
pub fn rcm(n: usize, adjacency: &[Vec<usize>]) -> Vec<usize> {
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let deg = |v: usize| adjacency[v].len();
    while order.len() < n {
        let start = (0..n).filter(|v| !visited[*v]).min_by_key(|v| deg(*v)).unwrap();
        let mut q = VecDeque::new();
        q.push_back(start);
        visited[start] = true;
        while let Some(v) = q.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = adjacency[v].iter().copied().filter(|w| !visited[*w]).collect();
            nb.sort_by_key(|w| deg(*w));
            for w in nb {
                visited[w] = true;
                q.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal() {
        let n = 50;
        let mut a = Envelope::from_pattern(n, (1..n).map(|i| (i, i - 1)));
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul(&x);
        a.factor().unwrap();
        let y = a.solve(&b).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn detects_indefinite() {
        let mut a = Envelope::from_pattern(2, core::iter::once((1, 0)));
        a.add(0, 0, 1.0);
        a.add(1, 0, 2.0);
        a.add(1, 1, 1.0);
        assert!(a.factor().is_err());
    }

    #[test]
    fn rcm_is_permutation() {
        let adj = vec![vec![3], vec![2], vec![1, 3], vec![0, 2]];
        let mut p = rcm(4, &adj);
        p.sort();
        assert_eq!(p, vec![0, 1, 2, 3]);
    }
}
