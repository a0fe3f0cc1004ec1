//! Complex samples on a square grid over [−R, R]².

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};

/// `n × n` complex samples at z = (−R + j h) + i(−R + i h), h = 2R/n, row-major in the
/// imaginary index.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub n: usize,
    pub half_width: f64,
    pub data: Vec<Complex64>,
}

impl GridField {
    pub fn zeros(n: usize, half_width: f64) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::domain("grid size must be a power of two ≥ 4"));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::domain("grid half-width must be positive"));
        }
        Ok(GridField { n, half_width, data: vec![Complex64::new(0.0, 0.0); n * n] })
    }

    pub fn from_fn(n: usize, half_width: f64, f: impl Fn(Complex64) -> Complex64) -> Result<Self> {
        let mut g = GridField::zeros(n, half_width)?;
        for i in 0..n {
            for j in 0..n {
                g.data[i * n + j] = f(g.point(i, j));
            }
        }
        Ok(g)
    }

    /// Same grid geometry, new values.
    pub fn like(&self, f: impl Fn(usize, Complex64) -> Complex64) -> GridField {
        let mut out = self.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                let k = i * self.n + j;
                out.data[k] = f(k, self.point(i, j));
            }
        }
        out
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        let h = self.spacing();
        Complex64::new(-self.half_width + j as f64 * h, -self.half_width + i as f64 * h)
    }

    pub fn point_at(&self, k: usize) -> Complex64 {
        self.point(k / self.n, k % self.n)
    }

    /// Grid index (row, column) of the node nearest to z, if inside the box.
    pub fn nearest(&self, z: Complex64) -> Option<(usize, usize)> {
        let h = self.spacing();
        let j = ((z.re + self.half_width) / h).round();
        let i = ((z.im + self.half_width) / h).round();
        if i < 0.0 || j < 0.0 || i >= self.n as f64 || j >= self.n as f64 {
            return None;
        }
        Some((i as usize, j as usize))
    }

    pub fn same_geometry(&self, o: &GridField) -> Result<()> {
        if self.n != o.n || (self.half_width - o.half_width).abs() > 1e-12 * self.half_width {
            return Err(Error::shape("grid fields live on different grids"));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// ‖g‖_{L²} with cell weights h².
    pub fn l2(&self) -> f64 {
        let h = self.spacing();
        (self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() * h * h).sqrt()
    }

    pub fn sup(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// ∫ g dA by the cell rule.
    pub fn integral(&self) -> Complex64 {
        let h = self.spacing();
        self.data.iter().sum::<Complex64>() * (h * h)
    }

    /// Largest |z| at which the field is nonzero.
    pub fn support_radius(&self) -> f64 {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > 0.0)
            .map(|(k, _)| self.point_at(k).norm())
            .fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> GridField {
        GridField { n: self.n, half_width: self.half_width, data: self.data.iter().map(|v| f(*v)).collect() }
    }

    pub fn zip(&self, o: &GridField, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<GridField> {
        self.same_geometry(o)?;
        Ok(GridField { n: self.n, half_width: self.half_width, data: self.data.iter().zip(&o.data).map(|(a, b)| f(*a, *b)).collect() })
    }

    /// (∂_x g, ∂_y g) by fourth-order central differences, second order at the two
    /// outermost layers.
    pub fn gradient(&self) -> (GridField, GridField) {
        let n = self.n;
        let h = self.spacing();
        let mut gx = self.clone();
        let mut gy = self.clone();
        let d = |f: &dyn Fn(usize) -> Complex64, k: usize| -> Complex64 {
            if k >= 2 && k + 2 < n {
                (f(k - 2) - f(k - 1) * 8.0 + f(k + 1) * 8.0 - f(k + 2)) / (12.0 * h)
            } else if k >= 1 && k + 1 < n {
                (f(k + 1) - f(k - 1)) / (2.0 * h)
            } else if k == 0 {
                (f(0) * -3.0 + f(1) * 4.0 - f(2)) / (2.0 * h)
            } else {
                (f(k) * 3.0 - f(k - 1) * 4.0 + f(k - 2)) / (2.0 * h)
            }
        };
        for i in 0..n {
            for j in 0..n {
                gx.data[i * n + j] = d(&|jj| self.data[i * n + jj], j);
                gy.data[i * n + j] = d(&|ii| self.data[ii * n + j], i);
            }
        }
        (gx, gy)
    }

    /// (∂g, ∂̄g) with ∂ = ½(∂_x − i∂_y), ∂̄ = ½(∂_x + i∂_y).
    pub fn wirtinger(&self) -> (GridField, GridField) {
        let (gx, gy) = self.gradient();
        let i = Complex64::new(0.0, 1.0);
        let d = gx.zip(&gy, |a, b| (a - i * b) * 0.5).unwrap();
        let db = gx.zip(&gy, |a, b| (a + i * b) * 0.5).unwrap();
        (d, db)
    }

    /// Bilinear interpolation; `None` outside the sampled box.
    pub fn interpolate(&self, z: Complex64) -> Option<Complex64> {
        let h = self.spacing();
        let x = (z.re + self.half_width) / h;
        let y = (z.im + self.half_width) / h;
        let n = self.n as f64;
        if !(x >= 0.0 && y >= 0.0 && x <= n - 1.0 && y <= n - 1.0) {
            return None;
        }
        let (j, i) = ((x.floor() as usize).min(self.n - 2), (y.floor() as usize).min(self.n - 2));
        let (tx, ty) = (x - j as f64, y - i as f64);
        let v = |a: usize, b: usize| self.data[a * self.n + b];
        Some(v(i, j) * ((1.0 - tx) * (1.0 - ty)) + v(i, j + 1) * (tx * (1.0 - ty)) + v(i + 1, j) * ((1.0 - tx) * ty) + v(i + 1, j + 1) * (tx * ty))
    }
}
