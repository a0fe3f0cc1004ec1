//! Small dense 2×2 linear algebra.

use num_traits::Float;

/// General real 2×2 matrix, row major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Mat2::new(c, -s, s, c)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn transpose(&self) -> Self {
        Mat2::new(self.a, self.c, self.b, self.d)
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Mat2::new(self.d / det, -self.b / det, -self.c / det, self.a / det))
    }

    /// Frobenius norm squared.
    pub fn hs2(&self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    /// Singular values (s_max, s_min).
    pub fn singular_values(&self) -> (f64, f64) {
        let h = self.hs2();
        let det = self.det().abs();
        let disc = (h * h - 4.0 * det * det).max(0.0).sqrt();
        let smax = (0.5 * (h + disc)).sqrt();
        let smin = if smax > 0.0 { det / smax } else { 0.0 };
        (smax, smin)
    }

    /// Operator norm.
    pub fn norm(&self) -> f64 {
        self.singular_values().0
    }
}

/// Symmetric real 2×2 matrix `[[s11, s12], [s12, s22]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sym2 {
    pub s11: f64,
    pub s12: f64,
    pub s22: f64,
}

impl Sym2 {
    pub const IDENTITY: Sym2 = Sym2 { s11: 1.0, s12: 0.0, s22: 1.0 };
    pub const ZERO: Sym2 = Sym2 { s11: 0.0, s12: 0.0, s22: 0.0 };

    pub fn new(s11: f64, s12: f64, s22: f64) -> Self {
        Sym2 { s11, s12, s22 }
    }

    pub fn scalar(g: f64) -> Self {
        Sym2::new(g, 0.0, g)
    }

    /// Matrix with eigenvalue `lr` along the direction `theta` and `lt` across it.
    pub fn from_frame(theta: f64, lr: f64, lt: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Sym2::new(lr * c * c + lt * s * s, (lr - lt) * c * s, lr * s * s + lt * c * c)
    }

    pub fn trace(&self) -> f64 {
        self.s11 + self.s22
    }

    pub fn det(&self) -> f64 {
        self.s11 * self.s22 - self.s12 * self.s12
    }

    pub fn is_finite(&self) -> bool {
        self.s11.is_finite() && self.s12.is_finite() && self.s22.is_finite()
    }

    pub fn has_nan(&self) -> bool {
        self.s11.is_nan() || self.s12.is_nan() || self.s22.is_nan()
    }

    /// Eigenvalues (λ₁ ≥ λ₂).
    pub fn eigenvalues(&self) -> (f64, f64) {
        let m = 0.5 * (self.s11 + self.s22);
        let r = (0.5 * (self.s11 - self.s22)).hypot(self.s12);
        let l1 = m + r;
        // the smaller root via the determinant keeps relative accuracy when λ₂ ≪ λ₁
        let l2 = if l1 != 0.0 { self.det() / l1 } else { m - r };
        (l1, l2)
    }

    /// Angle of the eigenvector belonging to λ₁.
    pub fn principal_angle(&self) -> f64 {
        0.5 * (2.0 * self.s12).atan2(self.s11 - self.s22)
    }

    pub fn inverse(&self) -> Option<Sym2> {
        let det = self.det();
        if det <= 0.0 || !det.is_finite() {
            return None;
        }
        Some(Sym2::new(self.s22 / det, -self.s12 / det, self.s11 / det))
    }

    pub fn as_mat(&self) -> Mat2 {
        Mat2::new(self.s11, self.s12, self.s12, self.s22)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.s11 * v[0] + self.s12 * v[1], self.s12 * v[0] + self.s22 * v[1]]
    }

    pub fn quad(&self, v: [f64; 2]) -> f64 {
        self.s11 * v[0] * v[0] + 2.0 * self.s12 * v[0] * v[1] + self.s22 * v[1] * v[1]
    }

    /// `A σ Aᵀ`, symmetrised.
    pub fn congruence(&self, a: &Mat2) -> Sym2 {
        let m = a.mul(&self.as_mat()).mul(&a.transpose());
        Sym2::new(m.a, 0.5 * (m.b + m.c), m.d)
    }

    pub fn scale(&self, s: f64) -> Sym2 {
        Sym2::new(self.s11 * s, self.s12 * s, self.s22 * s)
    }

    pub fn add(&self, o: &Sym2) -> Sym2 {
        Sym2::new(self.s11 + o.s11, self.s12 + o.s12, self.s22 + o.s22)
    }

    pub fn sub(&self, o: &Sym2) -> Sym2 {
        Sym2::new(self.s11 - o.s11, self.s12 - o.s12, self.s22 - o.s22)
    }

    pub fn max_abs(&self) -> f64 {
        self.s11.abs().max(self.s12.abs()).max(self.s22.abs())
    }
}
