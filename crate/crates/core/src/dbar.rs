//! The k-plane ∂̄-equation ∂̄_k u = −iτ(k)·conj(u) with truncated scattering
//! data, and the reconstruction σ → τ → u → μ → σ_rec.
//!
//! Writing u(z, k) = e^{ikz}ν(z, k), the equation becomes
//! ∂̄_kν = −iτ(k)e^{−2i Re(kz)}·conj(ν) with ν → 1 as k → ∞ (τ has compact
//! support); the unknown g = ∂̄_kν is found from g + iτe·conj(C_k g) = −iτe.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::cgo::{CgoOptions, RadialTau, TauConvention};
use crate::conductivity::ConductivityField;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::gmres::{gmres, GmresOptions};
use crate::grid::GridField;
use crate::transforms::TransformPlan;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// (u⁽¹⁾, u⁽²⁾) from f_{+μ}, f_{−μ} at matching points.
pub fn assemble_u12(f_plus: &[Complex64], f_minus: &[Complex64]) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if f_plus.len() != f_minus.len() {
        return Err(Error::shape("f_+ and f_- differ in length"));
    }
    let mut u1 = Vec::with_capacity(f_plus.len());
    let mut u2 = Vec::with_capacity(f_plus.len());
    for (p, m) in f_plus.iter().zip(f_minus) {
        let hp = (p + m) * 0.5;
        let hm = I * 0.5 * (p.conj() - m.conj());
        u1.push(hp - I * hm);
        u2.push(-hm + I * hp);
    }
    Ok((u1, u2))
}

/// Inverse of [`assemble_u12`]: f_{±μ} = h⁺ ± i·conj(h⁻).
pub fn f_from_u12(u1: Complex64, u2: Complex64) -> (Complex64, Complex64) {
    let hm = (I * u1 - u2) * 0.5;
    let hp = (u1 - I * u2) * 0.5;
    (hp + I * hm.conj(), hp - I * hm.conj())
}

/// Truncated scattering data on a k-grid over [−K, K]², zero for |k| > K.
#[derive(Clone, Debug)]
pub struct KPlane {
    pub k_max: f64,
    pub tau: GridField,
    plan: TransformPlan,
    support: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct KSolution {
    /// ν(z, ·) on the k-grid.
    pub nu: GridField,
    pub iterations: usize,
    pub residual: f64,
}

impl KSolution {
    /// Rescales so that ν(z, 0) = 1.
    ///
    /// With τ cut off at K_max, ν → 1 at k = ∞ while the exact solution tends to
    /// σ^{−1/2}(z); the two differ by a real factor (real multiples preserve the
    /// equation), which the condition u⁽¹⁾(z, 0) = 1 removes. Returns the factor
    /// and the relative imaginary part of ν(z, 0) that had to be ignored.
    pub fn normalize_at_origin(&mut self) -> (f64, f64) {
        let n = self.nu.n;
        let a = self.nu.data[(n / 2) * n + n / 2];
        let f = a.re;
        self.nu = self.nu.map(|v| v / f);
        (f, a.im.abs() / a.norm())
    }
}

impl KPlane {
    pub fn new(tau: impl Fn(Complex64) -> Complex64, k_max: f64, n: usize) -> Result<Self> {
        if !(k_max > 0.0) || !k_max.is_finite() {
            return Err(Error::domain("K_max must be positive"));
        }
        let tau = GridField::from_fn(n, k_max, |k| if k.norm() <= k_max { tau(k) } else { Complex64::new(0.0, 0.0) })?;
        if !tau.is_finite() {
            return Err(Error::numeric("non-finite scattering data"));
        }
        let plan = TransformPlan::for_grid(&tau)?;
        let support = (0..n * n).filter(|i| tau.data[*i].norm() > 0.0).collect();
        Ok(KPlane { k_max, tau, plan, support })
    }

    /// Same grid with τ replaced by −τ (the data of −μ).
    pub fn negated(&self) -> KPlane {
        KPlane { k_max: self.k_max, tau: self.tau.map(|v| -v), plan: self.plan.clone(), support: self.support.clone() }
    }

    pub fn solve(&self, z: Complex64, opts: &GmresOptions) -> Result<KSolution> {
        self.solve_from(z, opts, None).map(|s| s.0)
    }

    /// As [`KPlane::solve`] with a starting guess for the unknown g (as returned
    /// in the second slot, e.g. from a neighbouring z).
    pub fn solve_from(&self, z: Complex64, opts: &GmresOptions, x0: Option<&[f64]>) -> Result<(KSolution, Vec<f64>)> {
        let n = self.tau.n;
        if self.support.is_empty() {
            return Ok((KSolution { nu: self.tau.map(|_| Complex64::new(1.0, 0.0)), iterations: 0, residual: 0.0 }, Vec::new()));
        }
        let a: Vec<Complex64> = self
            .support
            .iter()
            .map(|i| -I * self.tau.data[*i] * Complex64::from_polar(1.0, -2.0 * (self.tau.point_at(*i) * z).re))
            .collect();
        let unpack = |x: &[f64]| {
            let mut g = GridField { n, half_width: self.tau.half_width, data: vec![Complex64::new(0.0, 0.0); n * n] };
            for (s, i) in self.support.iter().enumerate() {
                g.data[*i] = Complex64::new(x[2 * s], x[2 * s + 1]);
            }
            g
        };
        let apply = |x: &[f64]| -> Result<Vec<f64>> {
            let g = unpack(x);
            let c = self.plan.cauchy(&g)?;
            let mut out = vec![0.0; x.len()];
            for (s, i) in self.support.iter().enumerate() {
                let v = g.data[*i] - a[s] * c.data[*i].conj();
                out[2 * s] = v.re;
                out[2 * s + 1] = v.im;
            }
            Ok(out)
        };
        let rhs: Vec<f64> = a.iter().flat_map(|v| [v.re, v.im]).collect();
        let x0 = x0.filter(|x| x.len() == rhs.len());
        let out = gmres(apply, &rhs, x0, opts).map_err(|e| e.at("k-plane solve"))?;
        let c = self.plan.cauchy(&unpack(&out.x))?;
        Ok((KSolution { nu: c.map(|v| v + 1.0), iterations: out.iterations, residual: out.residual }, out.x))
    }

    /// Snaps k to the nearest k-grid node.
    pub fn snap(&self, k: Complex64) -> Result<(usize, Complex64)> {
        let (i, j) = self.tau.nearest(k).ok_or_else(|| Error::domain(format!("k = {k} lies outside the k-grid")))?;
        Ok((i * self.tau.n + j, self.tau.point(i, j)))
    }
}

/// u⁽¹⁾(z, k) for the given grid indices of k, from one k-plane solve
/// normalized by u⁽¹⁾(z, 0) = 1.
pub fn solve_dbar_k(plane: &KPlane, z: Complex64, k_nodes: &[usize], opts: &GmresOptions) -> Result<(Vec<Complex64>, KSolution)> {
    let mut sol = plane.solve(z, opts)?;
    sol.normalize_at_origin();
    let u = k_nodes.iter().map(|idx| (I * plane.tau.point_at(*idx) * z).exp() * sol.nu.data[*idx]).collect();
    Ok((u, sol))
}

/// μ = ∂̄f / conj(∂f) from the smooth factors M_j = e^{−ik_j z}f_j on a z-grid,
/// so only M is differenced. Points with |∂f| below 10⁻⁶ of the maximum are
/// skipped; several k are combined by the componentwise median.
pub fn recover_mu(ms: &[(Complex64, GridField)]) -> Result<RecoveredMu> {
    if ms.is_empty() {
        return Err(Error::domain("recover_mu needs at least one k"));
    }
    let g0 = &ms[0].1;
    let n = g0.n;
    let mut per_k: Vec<Vec<Option<Complex64>>> = Vec::new();
    let mut dropped = 0usize;
    for (k, m) in ms {
        m.same_geometry(g0)?;
        let (d, db) = m.wirtinger();
        let ik = I * k;
        let df: Vec<Complex64> = (0..n * n).map(|i| (ik * m.point_at(i)).exp() * (ik * m.data[i] + d.data[i])).collect();
        let dbf: Vec<Complex64> = (0..n * n).map(|i| (ik * m.point_at(i)).exp() * db.data[i]).collect();
        let big = df.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let vals = (0..n * n)
            .map(|i| {
                if df[i].norm() > 1e-6 * big {
                    Some(dbf[i] / df[i].conj())
                } else {
                    dropped += 1;
                    None
                }
            })
            .collect();
        per_k.push(vals);
    }
    let mut mu = g0.map(|_| Complex64::new(0.0, 0.0));
    for i in 0..n * n {
        let vals: Vec<Complex64> = per_k.iter().filter_map(|v| v[i]).collect();
        mu.data[i] = median(&vals);
    }
    let fraction = dropped as f64 / (ms.len() * n * n) as f64;
    let warning = (fraction > 0.05).then(|| format!("|df| below threshold on {:.1}% of samples", 100.0 * fraction));
    Ok(RecoveredMu { mu, warning })
}

#[derive(Clone, Debug)]
pub struct RecoveredMu {
    pub mu: GridField,
    pub warning: Option<String>,
}

fn median(v: &[Complex64]) -> Complex64 {
    if v.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    let mid = |mut x: Vec<f64>| {
        x.sort_by(|a, b| a.total_cmp(b));
        let n = x.len();
        if n % 2 == 1 {
            x[n / 2]
        } else {
            0.5 * (x[n / 2 - 1] + x[n / 2])
        }
    };
    Complex64::new(mid(v.iter().map(|c| c.re).collect()), mid(v.iter().map(|c| c.im).collect()))
}

#[derive(Clone, Debug)]
pub struct ReconstructionOptions {
    pub k_max: f64,
    /// k-grid points per side over [−K_max, K_max]².
    pub k_grid: usize,
    pub z_grid: usize,
    pub z_half_width: f64,
    /// z-grid for the forward CGO solves that produce τ.
    pub cgo_grid: usize,
    pub cgo_half_width: f64,
    /// Radial sampling step of τ along |k|.
    pub tau_step: f64,
    /// The k values used for μ recovery (snapped to the k-grid).
    pub k0: Vec<Complex64>,
    pub cgo: CgoOptions,
    pub dbar: GmresOptions,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        let k0 = (0..4).map(|j| Complex64::from_polar(1.0, core::f64::consts::FRAC_PI_4 + j as f64 * core::f64::consts::FRAC_PI_2)).collect();
        ReconstructionOptions {
            k_max: 8.0,
            k_grid: 64,
            z_grid: 128,
            z_half_width: 1.0,
            cgo_grid: 128,
            cgo_half_width: 2.0,
            tau_step: 0.1,
            k0,
            cgo: CgoOptions::default(),
            dbar: GmresOptions { restart: 40, max_iter: 400, tol: 1e-10 },
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReconstructionReport {
    /// σ_rec on the z-grid (real part stored).
    pub sigma_rec: GridField,
    pub sigma_true: GridField,
    pub mu_rec: GridField,
    /// ‖μ_rec − μ‖₂/‖μ‖₂ over the unit disc (0 when μ ≡ 0 is recovered exactly).
    pub mu_rel_error: f64,
    /// ‖σ_rec − σ‖₂/‖σ‖₂ over the unit disc.
    pub rel_l2_error: f64,
    /// ‖σ_rec − σ‖₂/‖σ − 1‖₂ over the unit disc (0 when σ ≡ 1 is exact).
    pub contrast_error: f64,
    pub max_abs_error: f64,
    pub k_max: f64,
    pub k0_used: Vec<Complex64>,
    pub tau: RadialTau,
    pub warning: Option<String>,
    pub max_dbar_iterations: usize,
    /// Wall time per stage in seconds (zero when the executor has no clock).
    pub timings: Vec<(&'static str, f64)>,
}

/// σ_true must be isotropic and rotation invariant (τ is computed on one ray
/// and rotated); both are checked.
pub fn reconstruct_sigma<F: ConductivityField + ?Sized, E: Executor>(sigma_true: &F, opts: &ReconstructionOptions, exec: &E) -> Result<ReconstructionReport> {
    if !(opts.k_max > 0.0) {
        return Err(Error::domain("K_max must be positive"));
    }
    if opts.k0.is_empty() || opts.k0.iter().any(|k| k.norm() > opts.k_max || k.norm() == 0.0) {
        return Err(Error::domain("recovery k values must satisfy 0 < |k| <= K_max"));
    }
    let t0 = exec.now();
    let gamma = |z: Complex64| -> Result<f64> {
        let s = sigma_true.eval(z)?;
        if !s.is_regular() {
            return Err(Error::domain("reconstruction needs a nondegenerate conductivity"));
        }
        let m = s.sigma;
        if m.s12.abs() > 1e-12 * m.s11.abs() || (m.s11 - m.s22).abs() > 1e-12 * m.s11.abs() {
            return Err(Error::domain("reconstruction needs an isotropic conductivity"));
        }
        Ok(m.s11)
    };
    // μ = (1 − σ)/(1 + σ) on the forward grid
    let mut mu = GridField::zeros(opts.cgo_grid, opts.cgo_half_width)?;
    for i in 0..mu.data.len() {
        let z = mu.point_at(i);
        let g = gamma(z).map_err(|e| e.at("phantom"))?;
        let m = (1.0 - g) / (1.0 + g);
        // rounding in the matrix entries must not widen the support
        mu.data[i] = Complex64::new(if m.abs() < 1e-14 { 0.0 } else { m }, 0.0);
        if z.norm() >= 1.0 && mu.data[i].norm() > 1e-12 {
            return Err(Error::domain("phantom must equal 1 outside the unit disc"));
        }
    }
    for (a, b) in [(0.3, 0.2), (-0.45, 0.1), (0.05, -0.6)] {
        let z = Complex64::new(a, b);
        let (g1, g2) = (gamma(z)?, gamma(z * I)?);
        if (g1 - g2).abs() > 1e-9 * g1.abs() {
            return Err(Error::domain("phantom is not rotation invariant"));
        }
    }
    let plan = TransformPlan::for_grid(&mu)?;
    let tau = RadialTau::compute(&plan, &mu, opts.k_max, opts.tau_step, TauConvention::Equation, &opts.cgo).map_err(|e| e.at("scattering"))?;
    let t1 = exec.now();
    let plane = KPlane::new(|k| tau.eval(k), opts.k_max, opts.k_grid)?;
    let minus = plane.negated();
    let nodes: Vec<(usize, Complex64)> = opts.k0.iter().map(|k| plane.snap(*k)).collect::<Result<_>>()?;
    let zg = GridField::zeros(opts.z_grid, opts.z_half_width)?;
    let nz = zg.n;
    let row_ids: Vec<usize> = (0..nz).collect();
    // one task per z-row, warm-starting each solve from its left neighbour
    let rows: Vec<Result<(Vec<Vec<Complex64>>, usize)>> = exec.map(&row_ids, |i| {
        let (mut xp, mut xm): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
        let mut out = Vec::with_capacity(nz);
        let mut max_it = 0;
        for j in 0..nz {
            let z = zg.point(*i, j);
            let (mut sp, gp) = plane.solve_from(z, &opts.dbar, Some(&xp))?;
            let (mut sm, gm) = minus.solve_from(z, &opts.dbar, Some(&xm))?;
            sp.normalize_at_origin();
            sm.normalize_at_origin();
            max_it = max_it.max(sp.iterations).max(sm.iterations);
            let ms = nodes
                .iter()
                .map(|(idx, k)| {
                    let e = (I * k * z).exp();
                    let (fp, _) = f_from_u12(e * sp.nu.data[*idx], I * e * sm.nu.data[*idx]);
                    fp / e
                })
                .collect();
            out.push(ms);
            xp = gp;
            xm = gm;
        }
        Ok((out, max_it))
    });
    let mut m_grids: Vec<(Complex64, GridField)> = nodes.iter().map(|(_, k)| (*k, zg.clone())).collect();
    let mut max_it = 0;
    for (i, row) in rows.into_iter().enumerate() {
        let (cols, it) = row.map_err(|e| e.at("k-plane"))?;
        max_it = max_it.max(it);
        for (j, ms) in cols.into_iter().enumerate() {
            for (q, m) in ms.into_iter().enumerate() {
                m_grids[q].1.data[i * nz + j] = m;
            }
        }
    }
    let t2 = exec.now();
    let rec = recover_mu(&m_grids).map_err(|e| e.at("recover mu"))?;
    let sigma_rec = rec.mu.map(|m| Complex64::new(((1.0 - m) / (1.0 + m)).re, 0.0));
    let sigma_true_grid = zg.like(|_, z| Complex64::new(gamma(z).unwrap_or(f64::NAN), 0.0));
    let (mut num, mut den, mut con, mut worst) = (0.0, 0.0, 0.0, 0.0f64);
    for i in 0..zg.data.len() {
        if zg.point_at(i).norm() >= 1.0 {
            continue;
        }
        let (a, b) = (sigma_rec.data[i].re, sigma_true_grid.data[i].re);
        num += (a - b) * (a - b);
        den += b * b;
        con += (b - 1.0) * (b - 1.0);
        worst = worst.max((a - b).abs());
    }
    let (mut mnum, mut mden) = (0.0, 0.0);
    for i in 0..zg.data.len() {
        if zg.point_at(i).norm() >= 1.0 {
            continue;
        }
        let g = sigma_true_grid.data[i].re;
        let m = (1.0 - g) / (1.0 + g);
        mnum += (rec.mu.data[i] - m).norm_sqr();
        mden += m * m;
    }
    let ratio = |num: f64, den: f64| if den > 0.0 { (num / den).sqrt() } else if num == 0.0 { 0.0 } else { f64::INFINITY };
    let contrast_error = ratio(num, con);
    let t3 = exec.now();
    Ok(ReconstructionReport {
        sigma_rec,
        sigma_true: sigma_true_grid,
        mu_rel_error: ratio(mnum, mden),
        mu_rec: rec.mu,
        rel_l2_error: (num / den).sqrt(),
        contrast_error,
        max_abs_error: worst,
        k_max: opts.k_max,
        k0_used: nodes.iter().map(|n| n.1).collect(),
        tau,
        warning: rec.warning,
        max_dbar_iterations: max_it,
        timings: vec![("scattering", t1 - t0), ("dbar", t2 - t1), ("recovery", t3 - t2)],
    })
}
