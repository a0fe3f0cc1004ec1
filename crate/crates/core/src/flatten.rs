//! Isothermal coordinates: the map F with ∂̄F = −μ̂∂F makes F_*σ isotropic.

use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::beltrami::{jacobian_from_wirtinger, principal_solution, truncate_grid, PrincipalSolution};
use crate::coeffs::isothermal_mu_hat;
use crate::conductivity::{ConductivityField, GridConductivity};
use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::maps::pushforward_matrix;
use crate::mat2::Sym2;
use crate::transforms::TransformPlan;

#[derive(Clone, Debug)]
pub struct FlattenOptions {
    pub n: usize,
    pub half_width: f64,
    pub m_max: usize,
    /// Truncation level applied to μ̂ before the series (None: only when sup|μ̂| ≥ 1 would fail).
    pub truncation: Option<u32>,
    /// Number of check points inside the support.
    pub samples: usize,
}

impl Default for FlattenOptions {
    fn default() -> Self {
        FlattenOptions { n: 256, half_width: 2.0, m_max: 400, truncation: None, samples: 1000 }
    }
}

/// One check point z with y = F(z).
#[derive(Clone, Copy, Debug)]
pub struct FlattenSample {
    pub z: Complex64,
    pub y: Complex64,
    /// F_*σ at y.
    pub pushed: Sym2,
    /// det σ(z).
    pub det_sigma: f64,
    /// (|∂F| + |∂̄F|)/(|∂F| − |∂̄F|) at z.
    pub k_map: f64,
    /// √(λ₁/λ₂) of σ(z).
    pub k_sigma: f64,
}

impl FlattenSample {
    /// Size of the traceless part of F_*σ relative to its mean eigenvalue.
    pub fn anisotropy(&self) -> f64 {
        let p = &self.pushed;
        (0.5 * (p.s11 - p.s22)).hypot(p.s12) / (0.5 * p.trace())
    }

    /// |γ² − det σ(z)| / det σ(z) with γ the mean eigenvalue of F_*σ(y).
    pub fn det_transfer_error(&self) -> f64 {
        let g = 0.5 * self.pushed.trace();
        (g * g - self.det_sigma).abs() / self.det_sigma
    }
}

#[derive(Clone, Debug)]
pub struct Flattening {
    pub mu_hat: GridField,
    pub map: PrincipalSolution,
    pub samples: Vec<FlattenSample>,
    pub max_offdiag: f64,
    pub max_anisotropy: f64,
    pub max_det_error: f64,
    pub max_k_error: f64,
    pub truncation: Option<u32>,
}

pub fn isothermal_flatten<F: ConductivityField + ?Sized>(field: &F, opts: &FlattenOptions) -> Result<Flattening> {
    let sample = |z: Complex64| -> Result<Sym2> {
        if z.norm() > crate::conductivity::DOMAIN_RADIUS {
            return Ok(Sym2::IDENTITY);
        }
        let s = field.eval(z)?;
        if !s.is_regular() {
            return Err(Error::domain("flattening needs a nondegenerate conductivity at grid points"));
        }
        Ok(s.sigma)
    };
    let mut mu = GridField::zeros(opts.n, opts.half_width)?;
    for i in 0..mu.data.len() {
        let m = -isothermal_mu_hat(&sample(mu.point_at(i))?)?;
        mu.data[i] = if m.norm() < 1e-14 { Complex64::new(0.0, 0.0) } else { m };
    }
    let mut truncation = opts.truncation;
    if truncation.is_none() && mu.sup() >= 1.0 - 1e-9 {
        truncation = Some(1000);
    }
    if let Some(n) = truncation {
        mu = truncate_grid(&mu, &mu.map(|_| Complex64::new(0.0, 0.0)), n)?.0;
    }
    let plan = TransformPlan::for_grid(&mu)?;
    let map = principal_solution(&plan, &mu, opts.m_max).map_err(|e| e.at("principal solution"))?;
    let support = field.support_radius().min(crate::conductivity::DOMAIN_RADIUS);
    let mut samples = Vec::with_capacity(opts.samples);
    // golden-angle spiral over the support disc
    let ga = core::f64::consts::PI * (3.0 - 5.0.sqrt());
    for m in 0..opts.samples {
        let r = support * ((m as f64 + 0.5) / opts.samples as f64).sqrt();
        let z = Complex64::from_polar(r, m as f64 * ga);
        let (d, db, y) = match (map.d_phi.interpolate(z), map.dbar_phi.interpolate(z), map.phi.interpolate(z)) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(Error::domain("support extends beyond the computational grid")),
        };
        let s = sample(z)?;
        let df = jacobian_from_wirtinger(d, db);
        let pushed = pushforward_matrix(&s, &df)?;
        let (l1, l2) = s.eigenvalues();
        let k_map = (d.norm() + db.norm()) / (d.norm() - db.norm());
        samples.push(FlattenSample { z, y, pushed, det_sigma: s.det(), k_map, k_sigma: (l1 / l2).sqrt() });
    }
    let fold = |f: &dyn Fn(&FlattenSample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
    Ok(Flattening {
        max_offdiag: fold(&|s| s.pushed.s12.abs()),
        max_anisotropy: fold(&|s| s.anisotropy()),
        max_det_error: fold(&|s| s.det_transfer_error()),
        max_k_error: fold(&|s| (s.k_map - s.k_sigma).abs() / s.k_sigma),
        mu_hat: mu.map(|v| -v),
        map,
        samples,
        truncation,
    })
}

impl Flattening {
    /// F_*σ on an `n × n` grid over [−R, R]² in the target coordinates; points
    /// are pulled back by Newton's method on the interpolated map.
    pub fn isotropic_field<F: ConductivityField + ?Sized>(&self, field: &F, n: usize, half_width: f64) -> Result<GridConductivity> {
        let h = 2.0 * half_width / n as f64;
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let y = Complex64::new(-half_width + j as f64 * h, -half_width + i as f64 * h);
                data.push(self.pull_back(y).map_or(Ok(Sym2::IDENTITY), |z| -> Result<Sym2> {
                    let s = field.eval(z)?;
                    if !s.is_regular() {
                        return Ok(Sym2::IDENTITY);
                    }
                    let d = self.map.d_phi.interpolate(z).unwrap_or(Complex64::new(1.0, 0.0));
                    let db = self.map.dbar_phi.interpolate(z).unwrap_or(Complex64::new(0.0, 0.0));
                    pushforward_matrix(&s.sigma, &jacobian_from_wirtinger(d, db))
                })?);
            }
        }
        GridConductivity::new(n, half_width, data)
    }

    /// z with F(z) = y, or None when Newton leaves the grid or stalls.
    pub fn pull_back(&self, y: Complex64) -> Option<Complex64> {
        let mut z = y;
        for _ in 0..50 {
            let f = self.map.phi.interpolate(z)?;
            let r = f - y;
            if r.norm() < 1e-10 * (1.0 + y.norm()) {
                return Some(z);
            }
            let (d, db) = (self.map.d_phi.interpolate(z)?, self.map.dbar_phi.interpolate(z)?);
            // solve d·δ + db·conj(δ) = r
            let det = d.norm_sqr() - db.norm_sqr();
            if !(det > 0.0) {
                return None;
            }
            let delta = (d.conj() * r - db * r.conj()) / det;
            z -= delta;
        }
        None
    }
}
