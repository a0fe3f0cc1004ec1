//! Radix-2 complex FFT in one and two dimensions.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Precomputed twiddles and bit reversal for one power-of-two length.
#[derive(Clone, Debug)]
pub struct Fft {
    n: usize,
    /// Stage twiddles laid out contiguously: for half-length h the entries
    /// h − 1 .. 2h − 1 hold e^{−iπk/h}, k < h.
    forward: Vec<Complex64>,
    backward: Vec<Complex64>,
    rev: Vec<usize>,
}

impl Fft {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::domain("FFT length must be a power of two ≥ 2"));
        }
        let mut forward = vec![Complex64::new(0.0, 0.0); n];
        let mut half = 1;
        while half < n {
            for k in 0..half {
                forward[half - 1 + k] = Complex64::from_polar(1.0, -PI * k as f64 / half as f64);
            }
            half <<= 1;
        }
        let backward = forward.iter().map(|w| w.conj()).collect();
        let bits = n.trailing_zeros();
        let rev = (0..n).map(|i| i.reverse_bits() >> (usize::BITS - bits)).collect();
        Ok(Fft { n, forward, backward, rev })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place transform; `inverse` uses the conjugate twiddles and no scaling.
    pub fn run(&self, x: &mut [Complex64], inverse: bool) {
        let n = self.n;
        debug_assert_eq!(x.len(), n);
        for i in 0..n {
            let j = self.rev[i];
            if j > i {
                x.swap(i, j);
            }
        }
        let tw = if inverse { &self.backward } else { &self.forward };
        let mut half = 1;
        while half < n {
            let w = &tw[half - 1..2 * half - 1];
            for block in x.chunks_exact_mut(2 * half) {
                let (lo, hi) = block.split_at_mut(half);
                for ((a, b), w) in lo.iter_mut().zip(hi.iter_mut()).zip(w) {
                    let t = *b * w;
                    *b = *a - t;
                    *a += t;
                }
            }
            half <<= 1;
        }
    }

    /// Transforms along the slow axis of an `n × width` row-major block: each
    /// butterfly combines two whole rows, so memory access stays contiguous.
    pub fn run_strided(&self, x: &mut [Complex64], width: usize, inverse: bool) {
        let n = self.n;
        debug_assert_eq!(x.len(), n * width);
        for i in 0..n {
            let j = self.rev[i];
            if j > i {
                let (a, b) = x.split_at_mut(j * width);
                a[i * width..(i + 1) * width].swap_with_slice(&mut b[..width]);
            }
        }
        let tw = if inverse { &self.backward } else { &self.forward };
        let mut half = 1;
        while half < n {
            for block in x.chunks_exact_mut(2 * half * width) {
                let (lo, hi) = block.split_at_mut(half * width);
                for k in 0..half {
                    let w = tw[half - 1 + k];
                    let ra = &mut lo[k * width..(k + 1) * width];
                    let rb = &mut hi[k * width..(k + 1) * width];
                    for (a, b) in ra.iter_mut().zip(rb.iter_mut()) {
                        let t = *b * w;
                        *b = *a - t;
                        *a += t;
                    }
                }
            }
            half <<= 1;
        }
    }
}

/// Square two-dimensional transform on row-major `n × n` data.
#[derive(Clone, Debug)]
pub struct Fft2 {
    plan: Fft,
}

impl Fft2 {
    pub fn new(n: usize) -> Result<Self> {
        Ok(Fft2 { plan: Fft::new(n)? })
    }

    pub fn size(&self) -> usize {
        self.plan.len()
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, false);
    }

    /// Inverse transform including the 1/n² normalisation.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, true);
        let s = 1.0 / (self.size() * self.size()) as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }

    /// Forward transform of data whose rows from `rows` on are zero.
    pub fn forward_sparse_rows(&self, data: &mut [Complex64], rows: usize) {
        let n = self.size();
        assert_eq!(data.len(), n * n, "2-D FFT buffer has the wrong length");
        for row in data.chunks_exact_mut(n).take(rows) {
            self.plan.run(row, false);
        }
        self.columns(data, false);
    }

    /// Normalised inverse transform, valid only in the first `rows` rows.
    pub fn inverse_first_rows(&self, data: &mut [Complex64], rows: usize) {
        let n = self.size();
        assert_eq!(data.len(), n * n, "2-D FFT buffer has the wrong length");
        self.columns(data, true);
        let s = 1.0 / (n * n) as f64;
        for row in data.chunks_exact_mut(n).take(rows) {
            self.plan.run(row, true);
            row.iter_mut().for_each(|v| *v *= s);
        }
    }

    fn run(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.size();
        assert_eq!(data.len(), n * n, "2-D FFT buffer has the wrong length");
        for row in data.chunks_exact_mut(n) {
            self.plan.run(row, inverse);
        }
        self.columns(data, inverse);
    }

    fn columns(&self, data: &mut [Complex64], inverse: bool) {
        self.plan.run_strided(data, self.size(), inverse);
    }
}

/// Signed frequency index of bin `i` on a length-`n` transform.
pub fn signed_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| (0..n).map(|j| x[j] * Complex64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / n as f64)).sum())
            .collect()
    }

    #[test]
    fn matches_direct_dft() {
        let x: Vec<Complex64> = (0..16).map(|i| Complex64::new((i as f64).sin(), (i * i) as f64 * 0.01)).collect();
        let mut y = x.clone();
        Fft::new(16).unwrap().run(&mut y, false);
        for (a, b) in y.iter().zip(dft(&x)) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn two_d_round_trip() {
        let n = 8;
        let f = Fft2::new(n).unwrap();
        let x: Vec<Complex64> = (0..n * n).map(|i| Complex64::new(i as f64, -(i as f64).cos())).collect();
        let mut y = x.clone();
        f.forward(&mut y);
        f.inverse(&mut y);
        assert!(x.iter().zip(&y).all(|(a, b)| (a - b).norm() < 1e-12));
        assert!(Fft::new(12).is_err());
    }
}
