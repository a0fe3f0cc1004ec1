//! Exponentially growing solutions f(z, k) = e^{ikz}M(z, k) of
//! ∂̄f = μ∂f + λν·conj(∂f), M → 1 at infinity, and the scattering data.
//!
//! The unknown is w = ∂̄M (supported where the coefficients are), with
//! M = 1 + Cw and ∂M = Sw. The equation becomes real-linear in w,
//!   w − μ(ikCw + Sw) − λνe·conj(ikCw + Sw) = ikμ + λνe·conj(ik),
//! with e(z) = e^{−2i Re(kz)}, solved by GMRES on (Re w, Im w).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use num_traits::Float;

use crate::beltrami::truncate_grid;
use crate::error::{Error, Result};
use crate::gmres::{gmres, GmresOptions};
use crate::grid::GridField;
use crate::transforms::TransformPlan;

#[derive(Clone, Debug)]
pub struct CgoOptions {
    pub gmres: GmresOptions,
    /// Truncation levels n (|μ_n| + |ν_n| ≤ 1 − 1/n); empty means no truncation.
    pub n_ladder: Vec<u32>,
}

impl Default for CgoOptions {
    fn default() -> Self {
        CgoOptions { gmres: GmresOptions { restart: 60, max_iter: 600, tol: 1e-10 }, n_ladder: Vec::new() }
    }
}

#[derive(Clone, Debug)]
pub struct LadderStep {
    pub n: u32,
    /// sup |φ_n − φ_previous| over the grid (0 for the first rung).
    pub phi_change: f64,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct CgoSolution {
    pub k: Complex64,
    pub lambda: Complex64,
    pub f: GridField,
    /// φ = z + log(M)/(ik), the logarithm continued inward from the box edge.
    pub phi: GridField,
    pub m: GridField,
    /// w = ∂̄M.
    pub dbar_m: GridField,
    pub iterations: usize,
    /// Relative residual of the discrete equation.
    pub residual: f64,
    pub ladder: Vec<LadderStep>,
}

impl CgoSolution {
    pub fn min_abs_m(&self) -> f64 {
        self.m.data.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min)
    }

    /// max over the grid of |φ(z)| − |z| (the phase bound asks for ≤ 3).
    pub fn phase_excess(&self) -> f64 {
        self.phi.data.iter().enumerate().map(|(k, p)| p.norm() - self.phi.point_at(k).norm()).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_phase_deviation(&self) -> f64 {
        self.phi.data.iter().enumerate().map(|(k, p)| (p - self.phi.point_at(k)).norm()).fold(0.0, f64::max)
    }
}

fn e_minus(k: Complex64, z: Complex64) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * (k * z).re)
}

/// Solves for M at one (k, λ) with the given coefficient pair.
pub fn cgo_solve(plan: &TransformPlan, mu: &GridField, nu: &GridField, k: Complex64, lambda: Complex64, opts: &CgoOptions) -> Result<CgoSolution> {
    if k.norm() == 0.0 || !k.re.is_finite() || !k.im.is_finite() {
        return Err(Error::domain("CGO solutions need k != 0"));
    }
    if lambda.norm() > 1.0 + 1e-12 {
        return Err(Error::domain("|lambda| must not exceed 1"));
    }
    mu.same_geometry(nu)?;
    let ladder: Vec<Option<u32>> = if opts.n_ladder.is_empty() { vec![None] } else { opts.n_ladder.iter().map(|n| Some(*n)).collect() };
    let mut steps = Vec::new();
    let mut prev: Option<CgoSolution> = None;
    for n in ladder {
        let (m_n, v_n) = match n {
            Some(n) => truncate_grid(mu, nu, n)?,
            None => (mu.clone(), nu.clone()),
        };
        let sup = m_n.data.iter().zip(&v_n.data).map(|(a, b)| a.norm() + b.norm()).fold(0.0, f64::max);
        if sup >= 1.0 {
            return Err(Error::domain(format!("|mu| + |nu| reaches {sup}; supply a truncation ladder")));
        }
        let sol = solve_one(plan, &m_n, &v_n, k, lambda, &opts.gmres, prev.as_ref().map(|p| &p.dbar_m))?;
        let change = prev.as_ref().map(|p| p.phi.data.iter().zip(&sol.phi.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)).unwrap_or(0.0);
        steps.push(LadderStep { n: n.unwrap_or(0), phi_change: change, residual: sol.residual });
        prev = Some(sol);
    }
    let mut sol = prev.expect("ladder has at least one rung");
    sol.ladder = steps;
    Ok(sol)
}

fn solve_one(plan: &TransformPlan, mu: &GridField, nu: &GridField, k: Complex64, lambda: Complex64, gopts: &GmresOptions, warm: Option<&GridField>) -> Result<CgoSolution> {
    let n = mu.n;
    let support: Vec<usize> = (0..n * n).filter(|i| mu.data[*i].norm() > 0.0 || nu.data[*i].norm() > 0.0).collect();
    let ik = Complex64::new(0.0, 1.0) * k;
    let e: Vec<Complex64> = support.iter().map(|i| e_minus(k, mu.point_at(*i))).collect();
    let a: Vec<Complex64> = support.iter().map(|i| mu.data[*i]).collect();
    let b: Vec<Complex64> = support.iter().zip(&e).map(|(i, ei)| lambda * nu.data[*i] * ei).collect();
    let unpack = |x: &[f64]| -> GridField {
        let mut w = GridField { n, half_width: mu.half_width, data: vec![Complex64::new(0.0, 0.0); n * n] };
        for (s, i) in support.iter().enumerate() {
            w.data[*i] = Complex64::new(x[2 * s], x[2 * s + 1]);
        }
        w
    };
    let apply = |x: &[f64]| -> Result<Vec<f64>> {
        let w = unpack(x);
        let (c, s) = plan.cauchy_beurling(&w)?;
        let mut out = vec![0.0; x.len()];
        for (si, i) in support.iter().enumerate() {
            let g = ik * c.data[*i] + s.data[*i];
            let v = w.data[*i] - a[si] * g - b[si] * g.conj();
            out[2 * si] = v.re;
            out[2 * si + 1] = v.im;
        }
        Ok(out)
    };
    let mut rhs = vec![0.0; 2 * support.len()];
    for si in 0..support.len() {
        let v = a[si] * ik + b[si] * ik.conj();
        rhs[2 * si] = v.re;
        rhs[2 * si + 1] = v.im;
    }
    let x0: Option<Vec<f64>> = warm.map(|w| support.iter().flat_map(|i| [w.data[*i].re, w.data[*i].im]).collect());
    let out = gmres(apply, &rhs, x0.as_deref(), gopts).map_err(|e| e.at("CGO solve"))?;
    let w = unpack(&out.x);
    let c = plan.cauchy(&w)?;
    let m = c.map(|v| v + 1.0);
    let log_m = continued_log(&m)?;
    let phi = log_m.like(|idx, z| z + log_m.data[idx] / ik);
    let f = m.like(|idx, z| (ik * z).exp() * m.data[idx]);
    Ok(CgoSolution { k, lambda, f, phi, m, dbar_m: w, iterations: out.iterations, residual: out.residual, ladder: Vec::new() })
}

/// log M continued from the outer edge of the box inward (breadth first), so that
/// the imaginary part never jumps by more than π between neighbours.
pub fn continued_log(m: &GridField) -> Result<GridField> {
    let n = m.n;
    if m.data.iter().any(|v| v.norm() == 0.0 || !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::numeric("M vanishes or is not finite; no continuous logarithm"));
    }
    let mut out = m.clone();
    let mut done = vec![false; n * n];
    let mut queue = alloc::collections::VecDeque::new();
    for i in 0..n {
        for j in 0..n {
            if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                let idx = i * n + j;
                out.data[idx] = m.data[idx].ln();
                done[idx] = true;
                queue.push_back(idx);
            }
        }
    }
    while let Some(p) = queue.pop_front() {
        let (i, j) = (p / n, p % n);
        let nb = [(i.wrapping_sub(1), j), (i + 1, j), (i, j.wrapping_sub(1)), (i, j + 1)];
        for (a, b) in nb {
            if a >= n || b >= n {
                continue;
            }
            let q = a * n + b;
            if done[q] {
                continue;
            }
            let base = out.data[p].im;
            let raw = m.data[q].arg();
            let turns = ((base - raw) / (2.0 * PI)).round();
            out.data[q] = Complex64::new(m.data[q].norm().ln(), raw + 2.0 * PI * turns);
            done[q] = true;
            queue.push_back(q);
        }
    }
    Ok(out)
}

/// sup_z |φ_λ(z, k) − z| for each k, maximised over the λ set.
pub fn asymptotic_sweep(plan: &TransformPlan, mu: &GridField, nu: &GridField, ks: &[Complex64], lambdas: &[Complex64], opts: &CgoOptions) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(ks.len());
    for k in ks {
        let mut worst = 0.0f64;
        for l in lambdas {
            let sol = cgo_solve(plan, mu, nu, *k, *l, opts)?;
            worst = worst.max(sol.sup_phase_deviation());
        }
        out.push(worst);
    }
    Ok(out)
}

/// How τ is formed from t_± = (i/2π)∮M_± dz.
///
/// `Equation` is the coefficient for which u⁽¹⁾, u⁽²⁾ satisfy
/// ∂̄_k u = −iτ·conj(u); it is the negative of `Conjugated`. The other two are
/// kept for comparison with printed formulas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TauConvention {
    #[default]
    Equation,
    /// τ = ½(t₊ − t₋).
    Plain,
    /// τ = ½(conj t₊ − conj t₋).
    Conjugated,
}

impl TauConvention {
    pub fn tau(&self, t_plus: Complex64, t_minus: Complex64) -> Complex64 {
        match self {
            TauConvention::Plain => (t_plus - t_minus) * 0.5,
            TauConvention::Conjugated => (t_plus.conj() - t_minus.conj()) * 0.5,
            TauConvention::Equation => (t_minus.conj() - t_plus.conj()) * 0.5,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            TauConvention::Plain => "plain",
            TauConvention::Conjugated => "conjugated",
            TauConvention::Equation => "equation",
        }
    }
}

/// t = (i/2π)∮_{|z|=1} M dz by the trapezoid rule, with M = 1 + Cw evaluated
/// by direct summation on the contour. Needs supp w inside the unit disc.
pub fn contour_t(w: &GridField, samples: usize) -> Result<Complex64> {
    let h = w.spacing();
    let cells: Vec<(Complex64, Complex64)> = w.data.iter().enumerate().filter(|(_, v)| v.norm() > 0.0).map(|(k, v)| (w.point_at(k), *v)).collect();
    if cells.iter().any(|(z, _)| z.norm() > 1.0 - h) {
        return Err(Error::domain("coefficient support must lie inside the unit disc for the contour integral"));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..samples {
        let z = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / samples as f64);
        let cw: Complex64 = cells.iter().map(|(p, v)| v / (z - p)).sum::<Complex64>() * (h * h / PI);
        // dz = iz dθ
        acc += (1.0 + cw) * Complex64::new(0.0, 1.0) * z;
    }
    Ok(Complex64::new(0.0, 1.0) / (2.0 * PI) * acc * (2.0 * PI / samples as f64))
}

/// t from the area formula t = −(1/π)∫∂̄M dA (equal to the contour value).
pub fn area_t(w: &GridField) -> Complex64 {
    -w.integral() / PI
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringData {
    pub convention: TauConvention,
    /// (k, t₊, t₋, τ).
    pub samples: Vec<(Complex64, Complex64, Complex64, Complex64)>,
}

/// t_{±μ}(k) and τ(k) for the isotropic-type equation ∂̄f = ±μ·conj(∂f).
pub fn scattering_data(plan: &TransformPlan, mu: &GridField, ks: &[Complex64], convention: TauConvention, opts: &CgoOptions) -> Result<ScatteringData> {
    let zero = mu.map(|_| Complex64::new(0.0, 0.0));
    let neg = mu.map(|v| -v);
    let one = Complex64::new(1.0, 0.0);
    let mut samples = Vec::with_capacity(ks.len());
    for k in ks {
        if k.norm() == 0.0 {
            // M ≡ 1 at k = 0
            samples.push((*k, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)));
            continue;
        }
        let p = cgo_solve(plan, &zero, mu, *k, one, opts).map_err(|e| e.at("scattering (+mu)"))?;
        let m = cgo_solve(plan, &zero, &neg, *k, one, opts).map_err(|e| e.at("scattering (-mu)"))?;
        let (tp, tm) = (contour_t(&p.dbar_m, 256)?, contour_t(&m.dbar_m, 256)?);
        samples.push((*k, tp, tm, convention.tau(tp, tm)));
    }
    Ok(ScatteringData { convention, samples })
}

/// τ on the ray k > 0 for a rotation-invariant μ; elsewhere
/// τ(|k|e^{iα}) = e^{∓iα}τ(|k|) (minus for the plain convention), see [`RadialTau::eval`].
#[derive(Clone, Debug, PartialEq)]
pub struct RadialTau {
    pub convention: TauConvention,
    pub step: f64,
    /// τ at |k| = j·step.
    pub values: Vec<Complex64>,
}

impl RadialTau {
    pub fn compute(plan: &TransformPlan, mu: &GridField, k_max: f64, step: f64, convention: TauConvention, opts: &CgoOptions) -> Result<Self> {
        if !(k_max > 0.0 && step > 0.0) {
            return Err(Error::domain("K_max and the radial step must be positive"));
        }
        let count = (k_max / step).ceil() as usize + 2;
        let ks: Vec<Complex64> = (0..=count).map(|j| Complex64::new(j as f64 * step, 0.0)).collect();
        let data = scattering_data(plan, mu, &ks, convention, opts)?;
        Ok(RadialTau { convention, step, values: data.samples.iter().map(|s| s.3).collect() })
    }

    /// Cubic interpolation in |k| and the rotation law in arg k.
    pub fn eval(&self, k: Complex64) -> Complex64 {
        let r = k.norm();
        if r == 0.0 {
            return self.values[0];
        }
        let x = r / self.step;
        let n = self.values.len();
        let j = (x.floor() as usize).min(n - 2);
        let t = x - j as f64;
        let at = |i: isize| -> Complex64 {
            if i < 0 {
                // odd continuation through 0 (τ(−r) on the ray is the rotated value)
                self.values[(-i) as usize] * -1.0
            } else {
                self.values[(i as usize).min(n - 1)]
            }
        };
        let (p0, p1, p2, p3) = (at(j as isize - 1), at(j as isize), at(j as isize + 1), at(j as isize + 2));
        // Catmull–Rom
        let v = p1 + (p2 - p0) * (0.5 * t) + (p0 * 2.0 - p1 * 5.0 + p2 * 4.0 - p3) * (0.5 * t * t) + (p1 * 3.0 - p0 - p2 * 3.0 + p3) * (0.5 * t * t * t);
        let rot = k / r;
        match self.convention {
            TauConvention::Plain => v * rot.conj(),
            TauConvention::Conjugated | TauConvention::Equation => v * rot,
        }
    }
}
