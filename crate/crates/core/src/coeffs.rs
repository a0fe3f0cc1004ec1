//! The dictionary between conductivity matrices and Beltrami coefficients.

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::mat2::Sym2;

/// (μ, ν) of the equation ∂̄f = μ∂f + ν·conj(∂f) satisfied by f = u + iv.
pub fn beltrami_from_sigma(s: &Sym2) -> Result<(Complex64, Complex64)> {
    if s.has_nan() || !s.is_finite() {
        return Err(Error::domain("non-finite conductivity entry"));
    }
    let det = s.det();
    if !(det > 0.0 && s.trace() > 0.0) {
        return Err(Error::domain("conductivity matrix is not positive definite"));
    }
    let d = 1.0 + s.trace() + det;
    let mu = Complex64::new(s.s22 - s.s11, -2.0 * s.s12) / d;
    let nu = Complex64::new((1.0 - det) / d, 0.0);
    Ok((mu, nu))
}

/// Inverse of [`beltrami_from_sigma`]; ν must be real.
pub fn sigma_from_beltrami(mu: Complex64, nu: Complex64) -> Result<Sym2> {
    let a = mu.norm() + nu.norm();
    if !(a < 1.0) {
        return Err(Error::degenerate("|mu| + |nu| >= 1"));
    }
    if nu.im.abs() > 1e-12 {
        return Err(Error::domain("conductivity coefficients have real nu"));
    }
    let n = nu.re;
    // 1 + tr + det = 4/((1 + ν)² − |μ|²)
    let d = 4.0 / ((1.0 + n) * (1.0 + n) - mu.norm_sqr());
    let tr = d * (1.0 + n) - 2.0;
    Ok(Sym2::new(0.5 * (tr - mu.re * d), -0.5 * mu.im * d, 0.5 * (tr + mu.re * d)))
}

/// K_{μ,ν} = (1 + |μ| + |ν|)/(1 − |μ| − |ν|), ∞ when degenerate.
pub fn k_mu_nu(mu: Complex64, nu: Complex64) -> f64 {
    let a = mu.norm() + nu.norm();
    if a >= 1.0 {
        return f64::INFINITY;
    }
    (1.0 + a) / (1.0 - a)
}

/// K_μ = (1 + |μ|)/(1 − |μ|).
pub fn k_mu(mu: Complex64) -> f64 {
    k_mu_nu(mu, Complex64::new(0.0, 0.0))
}

/// The isothermal coefficient μ̂ = (σ¹¹ − σ²² + 2iσ¹²)/(σ¹¹ + σ²² + 2√det σ).
pub fn isothermal_mu_hat(s: &Sym2) -> Result<Complex64> {
    if s.has_nan() {
        return Err(Error::domain("NaN conductivity entry"));
    }
    let det = s.det();
    if !(det > 0.0) {
        return Err(Error::domain("isothermal coefficient needs det > 0"));
    }
    Ok(Complex64::new(s.s11 - s.s22, 2.0 * s.s12) / (s.trace() + 2.0 * det.sqrt()))
}

/// Scales the pair toward 0 so that |μ_n| + |ν_n| ≤ 1 − 1/n, keeping arguments
/// and the ratio |μ| : |ν|.
pub fn truncate_mu(mu: Complex64, nu: Complex64, n: u32) -> Result<(Complex64, Complex64)> {
    if n < 2 {
        return Err(Error::domain("truncation level must be >= 2"));
    }
    let cap = 1.0 - 1.0 / n as f64;
    let a = mu.norm() + nu.norm();
    if a > cap {
        let f = cap / a;
        Ok((mu * f, nu * f))
    } else {
        Ok((mu, nu))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_zero_coefficients() {
        let (mu, nu) = beltrami_from_sigma(&Sym2::IDENTITY).unwrap();
        assert_eq!(mu.norm(), 0.0);
        assert_eq!(nu.norm(), 0.0);
        assert_eq!(k_mu_nu(mu, nu), 1.0);
    }

    #[test]
    fn half_mu_gives_three() {
        assert!((k_mu_nu(Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0)) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn diag_four_quarter_mu_hat() {
        let m = isothermal_mu_hat(&Sym2::new(4.0, 0.0, 0.25)).unwrap();
        assert!((m.re - 0.6).abs() < 1e-15 && m.im == 0.0);
        assert!((k_mu(m) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn truncation_caps_unit_modulus() {
        let (m, n) = truncate_mu(Complex64::from_polar(1.0, 0.7), Complex64::new(0.0, 0.0), 10).unwrap();
        assert!((m.norm() - 0.9).abs() < 1e-15);
        assert!((m.arg() - 0.7).abs() < 1e-15);
        assert_eq!(n.norm(), 0.0);
    }
}
