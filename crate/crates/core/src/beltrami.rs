//! Principal solutions of ∂̄Φ = μ∂Φ by the Neumann series Σ (μS)^m μ.

use alloc::format;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::coeffs::truncate_mu;
use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::quad::linear_fit;
use crate::transforms::TransformPlan;

/// Neumann sum stops once a term falls below this (absolute L² norm).
pub const TERM_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct PrincipalSolution {
    /// Φ = z + C(∂̄Φ).
    pub phi: GridField,
    pub dbar_phi: GridField,
    /// ∂Φ = 1 + S(∂̄Φ).
    pub d_phi: GridField,
    /// ‖(μS)^m μ‖₂ for m = 0, 1, …
    pub term_norms: Vec<f64>,
}

/// Principal solution Φ(z) = z + O(1/z) of ∂̄Φ = μ∂Φ.
pub fn principal_solution(plan: &TransformPlan, mu: &GridField, m_max: usize) -> Result<PrincipalSolution> {
    if !mu.is_finite() {
        return Err(Error::domain("non-finite Beltrami coefficient"));
    }
    let sup = mu.sup();
    if sup >= 1.0 {
        return Err(Error::domain(format!("sup |mu| = {sup} >= 1; clamp with the truncation ladder first")));
    }
    let mut term = mu.clone();
    let mut sum = mu.clone();
    let mut term_norms = alloc::vec![term.l2()];
    let mut converged = term_norms[0] < TERM_TOL;
    for _ in 0..m_max {
        if converged {
            break;
        }
        let s = plan.beurling(&term)?;
        term = mu.zip(&s, |a, b| a * b)?;
        let nrm = term.l2();
        term_norms.push(nrm);
        sum.data.iter_mut().zip(&term.data).for_each(|(a, b)| *a += b);
        converged = nrm < TERM_TOL;
    }
    if !converged {
        let last = term_norms[term_norms.len() - 1];
        if sup >= 1.0 - 1e-6 || last > 1e-6 * term_norms[0] {
            return Err(Error::convergence(format!(
                "Neumann series not converged after {m_max} terms (last term norm {last:.3e}, sup |mu| = {sup:.6})"
            )));
        }
    }
    let (c, s) = plan.cauchy_beurling(&sum)?;
    let phi = c.like(|k, z| z + c.data[k]);
    let d_phi = s.map(|v| v + 1.0);
    Ok(PrincipalSolution { phi, dbar_phi: sum, d_phi, term_norms })
}

/// Fitted exponent p of ‖term_m‖ ≈ C m^{−p} over terms m ≥ `from`, and R².
pub fn decay_exponent(term_norms: &[f64], from: usize) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = term_norms
        .iter()
        .enumerate()
        .skip(from.max(1))
        .filter(|(_, v)| **v > TERM_TOL)
        .map(|(m, v)| ((m as f64).ln(), v.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let (_, slope, r2) = linear_fit(&x, &y);
    Some((-slope, r2))
}

/// Applies the truncation to every grid sample of the pair.
pub fn truncate_grid(mu: &GridField, nu: &GridField, n: u32) -> Result<(GridField, GridField)> {
    mu.same_geometry(nu)?;
    let mut m = mu.clone();
    let mut v = nu.clone();
    for k in 0..mu.data.len() {
        let (a, b) = truncate_mu(mu.data[k], nu.data[k], n)?;
        m.data[k] = a;
        v.data[k] = b;
    }
    Ok((m, v))
}

/// Jacobian matrix of a map from (∂Φ, ∂̄Φ): DΦ = [[Re(a+b), Im(b−a)], [Im(a+b), Re(a−b)]].
pub fn jacobian_from_wirtinger(d: Complex64, db: Complex64) -> crate::mat2::Mat2 {
    crate::mat2::Mat2::new((d + db).re, (db - d).im, (d + db).im, (d - db).re)
}
