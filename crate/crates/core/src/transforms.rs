//! Solid Cauchy transform and Beurling transform of grid fields.
//!
//! C is a discrete convolution with the sampled kernel 1/(πz) on a zero-padded
//! 2N grid, so it carries no periodization error; the origin cell is replaced by
//! its first-order contribution.
//! S is the Fourier multiplier ξ̄/ξ on the padded torus, an exact isometry on
//! mean-zero data; ξ = 0 goes to 0.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::error::Result;
use crate::fft::{signed_index, Fft2};
use crate::grid::GridField;

#[derive(Clone, Debug)]
pub struct TransformPlan {
    pub n: usize,
    pub half_width: f64,
    fft: Fft2,
    kernel_hat: Vec<Complex64>,
    s_mult: Vec<Complex64>,
}

impl TransformPlan {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        let probe = GridField::zeros(n, half_width)?;
        let h = probe.spacing();
        let m = 2 * n;
        let fft = Fft2::new(m)?;
        let mut kernel = vec![Complex64::new(0.0, 0.0); m * m];
        for a in 0..m {
            for b in 0..m {
                let dy = signed_index(a, m) as f64 * h;
                let dx = signed_index(b, m) as f64 * h;
                if a != 0 || b != 0 {
                    kernel[a * m + b] = Complex64::new(h * h / PI, 0.0) / Complex64::new(dx, dy);
                }
            }
        }
        fft.forward(&mut kernel);
        // the origin cell contributes −(h²/π)∂g(z) for smooth g; fold it in spectrally
        let l = m as f64 * h;
        for a in 0..m {
            for b in 0..m {
                let xi = Complex64::new(signed_index(b, m) as f64, signed_index(a, m) as f64) * (2.0 * PI / l);
                kernel[a * m + b] -= Complex64::new(0.0, 0.5) * xi.conj() * (h * h / PI);
            }
        }
        let mut s_mult = vec![Complex64::new(0.0, 0.0); m * m];
        for a in 0..m {
            for b in 0..m {
                let xi = Complex64::new(signed_index(b, m) as f64, signed_index(a, m) as f64);
                if a != 0 || b != 0 {
                    s_mult[a * m + b] = xi.conj() / xi;
                }
            }
        }
        Ok(TransformPlan { n, half_width, fft, kernel_hat: kernel, s_mult })
    }

    pub fn for_grid(g: &GridField) -> Result<Self> {
        TransformPlan::new(g.n, g.half_width)
    }

    fn check(&self, g: &GridField) -> Result<()> {
        g.same_geometry(&GridField { n: self.n, half_width: self.half_width, data: Vec::new() })
    }

    fn padded_hat(&self, g: &GridField) -> Vec<Complex64> {
        let (n, m) = (self.n, 2 * self.n);
        let mut buf = vec![Complex64::new(0.0, 0.0); m * m];
        for i in 0..n {
            buf[i * m..i * m + n].copy_from_slice(&g.data[i * n..(i + 1) * n]);
        }
        self.fft.forward_sparse_rows(&mut buf, n);
        buf
    }

    fn back(&self, mut buf: Vec<Complex64>, like: &GridField) -> GridField {
        let (n, m) = (self.n, 2 * self.n);
        self.fft.inverse_first_rows(&mut buf, n);
        let mut out = like.clone();
        for i in 0..n {
            out.data[i * n..(i + 1) * n].copy_from_slice(&buf[i * m..i * m + n]);
        }
        out
    }

    /// (Cg)(z) = (1/π)∫ g(w)/(z − w) dA(w), so that ∂̄Cg = g.
    pub fn cauchy(&self, g: &GridField) -> Result<GridField> {
        self.check(g)?;
        let mut hat = self.padded_hat(g);
        hat.iter_mut().zip(&self.kernel_hat).for_each(|(a, k)| *a *= k);
        Ok(self.back(hat, g))
    }

    /// Sg = ∂Cg via the multiplier ξ̄/ξ.
    pub fn beurling(&self, g: &GridField) -> Result<GridField> {
        self.check(g)?;
        let mut hat = self.padded_hat(g);
        hat.iter_mut().zip(&self.s_mult).for_each(|(a, k)| *a *= k);
        Ok(self.back(hat, g))
    }

    /// Both transforms from one forward FFT.
    pub fn cauchy_beurling(&self, g: &GridField) -> Result<(GridField, GridField)> {
        self.check(g)?;
        let hat = self.padded_hat(g);
        let c: Vec<Complex64> = hat.iter().zip(&self.kernel_hat).map(|(a, k)| a * k).collect();
        let s: Vec<Complex64> = hat.iter().zip(&self.s_mult).map(|(a, k)| a * k).collect();
        Ok((self.back(c, g), self.back(s, g)))
    }
}

/// Warning when the support of g reaches beyond R/2, where images on the
/// padded torus start to interact in S. The attached number bounds the
/// periodization error by |∫g|/(π d²) with d the distance to the nearest image.
pub fn periodization_warning(g: &GridField) -> Option<String> {
    let supp = g.support_radius();
    if supp <= 0.5 * g.half_width {
        return None;
    }
    let d = (4.0 * g.half_width - 2.0 * supp).max(g.spacing());
    let est = g.integral().norm() / (PI * d * d);
    Some(format!("support radius {supp:.3} exceeds R/2 = {:.3}; periodization error estimate {est:.2e}", 0.5 * g.half_width))
}
