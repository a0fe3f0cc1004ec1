//! Restarted GMRES for real linear systems given as a matrix-free operator.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct GmresOptions {
    pub restart: usize,
    pub max_iter: usize,
    /// Relative residual target ‖b − Ax‖/‖b‖.
    pub tol: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions { restart: 40, max_iter: 400, tol: 1e-10 }
    }
}

#[derive(Clone, Debug)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    /// Relative residual after each inner step.
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves A x = b starting from `x0`. Failure to reach `tol` is a convergence
/// error carrying the final residual.
pub fn gmres<A: FnMut(&[f64]) -> Result<Vec<f64>>>(mut apply: A, b: &[f64], x0: Option<&[f64]>, opts: &GmresOptions) -> Result<GmresOutcome> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    if bnorm == 0.0 {
        return Ok(GmresOutcome { x: vec![0.0; n], iterations: 0, residual: 0.0, history: Vec::new() });
    }
    let m = opts.restart.max(1);
    let mut history = Vec::new();
    let mut total = 0;
    loop {
        let ax = apply(&x)?;
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel <= opts.tol {
            return Ok(GmresOutcome { x, iterations: total, residual: rel, history });
        }
        if total >= opts.max_iter {
            return Err(Error::convergence(format!("GMRES stalled at relative residual {rel:.3e} after {total} iterations")));
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut hmat = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_done = 0;
        for k in 0..m {
            let mut w = apply(&v[k])?;
            for j in 0..=k {
                let hjk = dot(&w, &v[j]);
                hmat[j][k] = hjk;
                w.iter_mut().zip(&v[j]).for_each(|(wi, vi)| *wi -= hjk * vi);
            }
            // one reorthogonalisation pass
            for j in 0..=k {
                let c = dot(&w, &v[j]);
                hmat[j][k] += c;
                w.iter_mut().zip(&v[j]).for_each(|(wi, vi)| *wi -= c * vi);
            }
            let hn = norm(&w);
            hmat[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * hmat[j][k] + sn[j] * hmat[j + 1][k];
                hmat[j + 1][k] = -sn[j] * hmat[j][k] + cs[j] * hmat[j + 1][k];
                hmat[j][k] = t;
            }
            let d = hmat[k][k].hypot(hmat[k + 1][k]);
            let (c, s) = if d == 0.0 { (1.0, 0.0) } else { (hmat[k][k] / d, hmat[k + 1][k] / d) };
            cs[k] = c;
            sn[k] = s;
            hmat[k][k] = d;
            hmat[k + 1][k] = 0.0;
            g[k + 1] = -s * g[k];
            g[k] *= c;
            total += 1;
            k_done = k + 1;
            let rel = g[k + 1].abs() / bnorm;
            history.push(rel);
            if rel <= opts.tol || hn <= 1e-300 || total >= opts.max_iter {
                break;
            }
            v.push(w.iter().map(|wi| wi / hn).collect());
        }
        let mut y = vec![0.0; k_done];
        for i in (0..k_done).rev() {
            let mut s = g[i];
            for j in i + 1..k_done {
                s -= hmat[i][j] * y[j];
            }
            y[i] = s / hmat[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            x.iter_mut().zip(&v[j]).for_each(|(xi, vi)| *xi += yj * vi);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_nonsymmetric_system() {
        let n = 30;
        let a = |x: &[f64]| -> Result<Vec<f64>> {
            Ok((0..n).map(|i| 3.0 * x[i] + if i > 0 { x[i - 1] } else { 0.0 } - 0.5 * if i + 1 < n { x[i + 1] } else { 0.0 }).collect())
        };
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let out = gmres(a, &b, None, &GmresOptions { restart: 5, max_iter: 200, tol: 1e-12 }).unwrap();
        let r = a(&out.x).unwrap();
        assert!(r.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-10));
    }
}
