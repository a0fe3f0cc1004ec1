//! Weights 𝒜, the Sobolev–Orlicz gauges P and Q, growth classification,
//! the modulus M_P and Orlicz/Luxemburg norms of sampled fields.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::E;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::quad;

/// Relative tolerance used by the bisection searches of this module.
pub const BISECT_RTOL: f64 = 1e-8;
/// Iteration cap for every bisection.
pub const BISECT_MAX_ITER: usize = 200;

/// Monotone piecewise-cubic table for custom weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Tabulated {
    t: Vec<f64>,
    a: Vec<f64>,
    m: Vec<f64>,
}

impl Tabulated {
    /// Builds a Fritsch–Carlson interpolant through `(t_i, a_i)`.
    ///
    /// The table must start at `(1, 0)` and be strictly increasing in both columns.
    pub fn new(t: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        if t.len() != a.len() || t.len() < 2 {
            return Err(Error::domain("tabulated weight needs at least two (t, A) pairs"));
        }
        if t[0] != 1.0 || a[0] != 0.0 {
            return Err(Error::domain("tabulated weight must start at (1, 0)"));
        }
        for i in 1..t.len() {
            if !(t[i] > t[i - 1]) || !(a[i] > a[i - 1]) || !t[i].is_finite() || !a[i].is_finite() {
                return Err(Error::domain(format!("tabulated weight not strictly increasing at row {i}")));
            }
        }
        let n = t.len();
        let d: Vec<f64> = (0..n - 1).map(|i| (a[i + 1] - a[i]) / (t[i + 1] - t[i])).collect();
        let mut m = alloc::vec![0.0; n];
        m[0] = d[0];
        m[n - 1] = d[n - 2];
        for i in 1..n - 1 {
            m[i] = if d[i - 1] * d[i] <= 0.0 { 0.0 } else { 0.5 * (d[i - 1] + d[i]) };
        }
        for i in 0..n - 1 {
            let al = m[i] / d[i];
            let be = m[i + 1] / d[i];
            let s = al * al + be * be;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                m[i] = tau * al * d[i];
                m[i + 1] = tau * be * d[i];
            }
        }
        Ok(Tabulated { t, a, m })
    }

    fn locate(&self, x: f64) -> usize {
        match self.t.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.t.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.t.len() - 2),
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.t.len();
        if x >= self.t[n - 1] {
            return self.a[n - 1] + self.m[n - 1] * (x - self.t[n - 1]);
        }
        let i = self.locate(x);
        let h = self.t[i + 1] - self.t[i];
        let s = (x - self.t[i]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.a[i] + h10 * h * self.m[i] + h01 * self.a[i + 1] + h11 * h * self.m[i + 1]
    }

    fn deriv(&self, x: f64) -> f64 {
        let n = self.t.len();
        if x >= self.t[n - 1] {
            return self.m[n - 1];
        }
        let i = self.locate(x);
        let h = self.t[i + 1] - self.t[i];
        let s = (x - self.t[i]) / h;
        let d00 = 6.0 * s * (s - 1.0) / h;
        let d10 = (1.0 - s) * (1.0 - 3.0 * s);
        let d01 = -d00;
        let d11 = s * (3.0 * s - 2.0);
        d00 * self.a[i] + d10 * self.m[i] + d01 * self.a[i + 1] + d11 * self.m[i + 1]
    }

    pub fn nodes(&self) -> (&[f64], &[f64]) {
        (&self.t, &self.a)
    }
}

/// The family a weight belongs to.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightKind {
    /// 𝒜(t) = p(t − 1).
    Affine { p: f64 },
    /// 𝒜(t) = t/(1 + log t) − 1.
    AlmostLinear,
    /// 𝒜(t) = t(1 + ε + log t)^{−1−ε} − (1 + ε)^{−1−ε}.
    Sublinear { eps: f64 },
    Tabulated(Tabulated),
}

/// A weight 𝒜 : [1, ∞) → [0, ∞), strictly increasing with 𝒜(1) = 0.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightGauge {
    kind: WeightKind,
}

impl WeightGauge {
    pub fn affine(p: f64) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::domain("affine weight needs p > 0"));
        }
        Ok(WeightGauge { kind: WeightKind::Affine { p } })
    }

    pub fn almost_linear() -> Self {
        WeightGauge { kind: WeightKind::AlmostLinear }
    }

    pub fn sublinear(eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::domain("sublinear weight needs eps > 0"));
        }
        Ok(WeightGauge { kind: WeightKind::Sublinear { eps } })
    }

    pub fn tabulated(t: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        Ok(WeightGauge { kind: WeightKind::Tabulated(Tabulated::new(t, a)?) })
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    /// 𝒜(t) for t ≥ 1.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 1.0) {
            return Err(Error::domain(format!("weight evaluated at t = {t} < 1")));
        }
        Ok(self.raw(t))
    }

    fn raw(&self, t: f64) -> f64 {
        match &self.kind {
            WeightKind::Affine { p } => p * (t - 1.0),
            WeightKind::AlmostLinear => t / (1.0 + t.ln()) - 1.0,
            WeightKind::Sublinear { eps } => {
                let c = 1.0 + eps;
                t * (c + t.ln()).powf(-c) - c.powf(-c)
            }
            WeightKind::Tabulated(tab) => tab.eval(t),
        }
    }

    /// 𝒜′(t).
    pub fn derivative(&self, t: f64) -> f64 {
        match &self.kind {
            WeightKind::Affine { p } => *p,
            WeightKind::AlmostLinear => {
                let l = t.ln();
                l / ((1.0 + l) * (1.0 + l))
            }
            WeightKind::Sublinear { eps } => {
                let c = 1.0 + eps;
                let l = t.ln();
                (c + l).powf(-c - 1.0) * l
            }
            WeightKind::Tabulated(tab) => tab.deriv(t),
        }
    }

    /// 𝒜(eˣ)·e^{−x}, evaluated without overflow for large x.
    pub fn ratio_at_log(&self, x: f64) -> f64 {
        let emx = (-x).exp();
        match &self.kind {
            WeightKind::Affine { p } => p * (1.0 - emx),
            WeightKind::AlmostLinear => 1.0 / (1.0 + x) - emx,
            WeightKind::Sublinear { eps } => {
                let c = 1.0 + eps;
                (c + x).powf(-c) - c.powf(-c) * emx
            }
            WeightKind::Tabulated(tab) => {
                let (ts, a) = tab.nodes();
                let tl = *ts.last().unwrap();
                if x < tl.ln() {
                    tab.eval(x.exp()) * emx
                } else {
                    let sl = *tab.m.last().unwrap();
                    sl + (a.last().unwrap() - sl * tl) * emx
                }
            }
        }
    }

    /// 𝒜⁻¹(s) for s ≥ 0, solved to full double precision.
    pub fn inverse(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::domain(format!("weight inverse requested at s = {s}")));
        }
        if s == 0.0 {
            return Ok(1.0);
        }
        if let WeightKind::Affine { p } = self.kind {
            return Ok(1.0 + s / p);
        }
        let mut hi = 2.0;
        while self.raw(hi) < s {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::domain(format!("weight inverse out of range at s = {s:e}")));
            }
        }
        let lo = if hi > 2.0 { 0.5 * hi } else { 1.0 };
        quad::bisect(|t| self.raw(t) - s, lo, hi, 1e-16, BISECT_MAX_ITER)
    }
}

/// Q(t) = t²/log(e + t).
pub fn gauge_q(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("gauge Q needs t >= 0, got {t}")));
    }
    Ok(t * t / (E + t).ln())
}

/// P(t) = t² below 1 and t²/𝒜⁻¹(log t²) from 1 on.
pub fn gauge_p(t: f64, w: &WeightGauge) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("gauge P needs t >= 0, got {t}")));
    }
    if t < 1.0 {
        return Ok(t * t);
    }
    Ok(t * t / w.inverse(2.0 * t.ln())?)
}

/// Outcome of a semi-decidable convergence question.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Diverges,
    Converges,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Diverges => "diverges",
            Verdict::Converges => "converges",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Raw ladders behind a growth verdict.
#[derive(Clone, Debug)]
pub struct GrowthReport {
    /// `(log T, ∫₁^T 𝒜(t)/t² dt)` on a ladder doubling in log T.
    pub divergence_estimate: Vec<(f64, f64)>,
    /// `(log t, t·𝒜′(t))`, central differences.
    pub derivative_growth: Vec<(f64, f64)>,
    pub verdict: Verdict,
}

/// Decides a three-valued verdict from the increments of a ladder whose
/// abscissae double at each step.
pub fn ladder_verdict(values: &[f64], tol: f64) -> Verdict {
    if values.iter().any(|v| !v.is_finite()) {
        return Verdict::Diverges;
    }
    if values.len() < 5 {
        return Verdict::Inconclusive;
    }
    let inc: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let k = inc.len();
    let ratios: Vec<f64> = (k - 3..k).map(|i| inc[i] / inc[i - 1]).collect();
    if ratios.iter().all(|r| *r >= 0.9) && inc[k - 1] > tol {
        return Verdict::Diverges;
    }
    let last = inc[k - 1].abs();
    let r = ratios[2];
    if r.abs() < 0.9 && last <= tol && last / (1.0 - r.abs()) <= 10.0 * tol {
        return Verdict::Converges;
    }
    if last <= 0.1 * tol && inc[k - 2].abs() <= tol {
        return Verdict::Converges;
    }
    Verdict::Inconclusive
}

/// ∫_a^b 𝒜(eˣ)e^{−x} dx, integrating in log x on the long stretches.
pub(crate) fn log_ratio_integral(w: &WeightGauge, a: f64, b: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let mut total = 0.0;
    let mut lo = a;
    if lo < 1.0 {
        let hi = b.min(1.0);
        total += quad::integrate(|x| w.ratio_at_log(x), lo, hi, 1e-15, 1e-13)?;
        lo = hi;
    }
    if b > lo {
        total += quad::integrate(
            |v| {
                let x = v.exp();
                w.ratio_at_log(x) * x
            },
            lo.ln(),
            b.ln(),
            1e-15,
            1e-13,
        )?;
    }
    Ok(total)
}

/// Ladder for ∫₁^T 𝒜(t)/t² dt and t𝒜′(t), with a convergence verdict.
///
/// The ladder doubles in `log T` up to `ln_t_max`, so very large horizons
/// (far past the range of `f64` for T itself) are cheap.
pub fn classify_growth(w: &WeightGauge, ln_t_max: f64) -> Result<GrowthReport> {
    if !(ln_t_max >= 1e3f64.ln() - 1e-12) {
        return Err(Error::domain("classify_growth needs T_max >= 1e3"));
    }
    if let WeightKind::Tabulated(tab) = &w.kind {
        let (_, a) = tab.nodes();
        if a.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::domain("tabulated weight is not monotone"));
        }
    }
    let mut us = Vec::new();
    let mut u = 1.0;
    while u < ln_t_max {
        us.push(u);
        u *= 2.0;
    }
    us.push(ln_t_max);
    let mut ladder = Vec::with_capacity(us.len());
    let mut acc = log_ratio_integral(w, 0.0, us[0])?;
    ladder.push((us[0], acc));
    for i in 1..us.len() {
        acc += log_ratio_integral(w, us[i - 1], us[i])?;
        ladder.push((us[i], acc));
    }
    let mut deriv = Vec::new();
    let mut lt = 1.0;
    while lt <= ln_t_max.min(700.0) {
        let t = lt.exp();
        let h = 1e-5 * t;
        let d = (w.raw(t + h) - w.raw(t - h)) / (2.0 * h);
        deriv.push((lt, t * d));
        lt *= 2.0;
    }
    // the ladder must reach the doubling regime for a verdict
    let vals: Vec<f64> = ladder.iter().map(|p| p.1).collect();
    let verdict = if ladder.len() >= 2 && ladder[ladder.len() - 1].0 < 2.0 * ladder[ladder.len() - 2].0 - 1e-9 {
        ladder_verdict(&vals[..vals.len() - 1], 1e-6)
    } else {
        ladder_verdict(&vals, 1e-6)
    };
    Ok(GrowthReport { divergence_estimate: ladder, derivative_growth: deriv, verdict })
}

/// Value of the modulus M_P together with a flag for the capped endpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModulusValue {
    pub value: f64,
    /// Set when the defining interval collapsed (t → 1⁻) and the value is a cap.
    pub capped: bool,
}

/// Cap returned when the defining interval of M_P degenerates.
pub const MODULUS_CAP: f64 = 1e12;

fn modulus_lhs(m: f64, span: f64, w: Option<&WeightGauge>) -> Result<f64> {
    // ∫₀^{span} P(M eˣ) e^{−2x} dx = M² ∫₀^{span} h(log M + x) dx
    let lm = m.ln();
    let h = |y: f64| -> f64 {
        match w {
            None => 1.0,
            Some(w) if y > 0.0 => 1.0 / w.inverse(2.0 * y).unwrap_or(f64::INFINITY),
            Some(_) => 1.0,
        }
    };
    let mut total = 0.0;
    let split = (-lm).clamp(0.0, span);
    if split > 0.0 {
        total += split;
    }
    if span > split {
        total += quad::integrate(|x| h(lm + x), split, span, 1e-14, 1e-12)?;
    }
    Ok(m * m * total)
}

/// M solving ∫₁^{1/t} P(sM) ds/s³ = P(1); `w = None` selects P(t) = t².
pub fn modulus_m_p(t: f64, w: Option<&WeightGauge>) -> Result<ModulusValue> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::domain(format!("modulus M_P needs 0 < t < 1, got {t}")));
    }
    let span = (1.0 / t).ln();
    if span < 1e-12 {
        return Ok(ModulusValue { value: MODULUS_CAP, capped: true });
    }
    let lo = span.powf(-0.5);
    let f = |m: f64| modulus_lhs(m, span, w).map(|v| v - 1.0);
    if f(lo)? >= 0.0 {
        return Ok(ModulusValue { value: lo, capped: false });
    }
    let mut hi = 2.0 * lo;
    let mut fh = f(hi)?;
    while fh < 0.0 {
        hi *= 2.0;
        if hi > MODULUS_CAP {
            return Ok(ModulusValue { value: MODULUS_CAP, capped: true });
        }
        fh = f(hi)?;
    }
    let lo = 0.5 * hi.max(2.0 * lo);
    let (mut a, mut b) = (lo.ln(), hi.ln());
    for _ in 0..BISECT_MAX_ITER {
        let mid = 0.5 * (a + b);
        if (b - a) <= BISECT_RTOL * 0.5 {
            break;
        }
        if f(mid.exp())? < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let v = (0.5 * (a + b)).exp();
    if !v.is_finite() {
        return Err(Error::numeric("modulus bisection produced a non-finite value"));
    }
    Ok(ModulusValue { value: v, capped: false })
}

/// Parameters of M_{j,q}(t) = |t|^j log^q(e + |t|).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrliczSpec {
    pub j: u32,
    pub q: f64,
    pub domain_area: f64,
}

impl OrliczSpec {
    pub fn new(j: u32, q: f64, domain_area: f64) -> Result<Self> {
        if j < 1 {
            return Err(Error::domain("Orlicz exponent j must be >= 1"));
        }
        if !(domain_area > 0.0) || !q.is_finite() {
            return Err(Error::domain("Orlicz spec needs a positive area and finite q"));
        }
        Ok(OrliczSpec { j, q, domain_area })
    }

    /// M_{j,q}(t).
    pub fn m(&self, t: f64) -> f64 {
        let a = t.abs();
        if a == 0.0 {
            return 0.0;
        }
        a.powi(self.j as i32) * (E + a).ln().powf(self.q)
    }

    /// Σ M(u_i/t)·area_i.
    pub fn modular(&self, u: &[f64], area: &[f64], t: f64) -> f64 {
        u.iter().zip(area).map(|(x, a)| self.m(x / t) * a).sum()
    }
}

fn check_samples(u: &[f64], area: &[f64]) -> Result<()> {
    if u.len() != area.len() {
        return Err(Error::shape("samples and cell areas differ in length"));
    }
    if u.iter().any(|x| x.is_nan()) {
        return Err(Error::domain("NaN sample in Orlicz norm"));
    }
    if area.iter().any(|a| !(*a >= 0.0)) {
        return Err(Error::domain("cell areas must be nonnegative"));
    }
    Ok(())
}

/// Luxemburg norm inf{t > 0 : Σ M(u_i/t)·area_i ≤ 1}.
pub fn luxemburg_norm(u: &[f64], area: &[f64], spec: &OrliczSpec) -> Result<f64> {
    check_samples(u, area)?;
    let umax = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if umax == 0.0 {
        return Ok(0.0);
    }
    let phi = |t: f64| spec.modular(u, area, t) - 1.0;
    let mut hi = umax;
    while phi(hi) > 0.0 {
        hi *= 2.0;
    }
    let mut lo = hi;
    while phi(lo) <= 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::numeric("Luxemburg bracket collapsed"));
        }
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..BISECT_MAX_ITER {
        let mid = 0.5 * (a + b);
        if b - a <= BISECT_RTOL * mid {
            break;
        }
        if phi(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(b)
}

/// Orlicz (dual pairing) norm, through the Amemiya formula
/// inf_{k>0} (1 + Σ M(k u_i)·area_i)/k.
pub fn orlicz_norm(u: &[f64], area: &[f64], spec: &OrliczSpec) -> Result<f64> {
    let lux = luxemburg_norm(u, area, spec)?;
    if lux == 0.0 {
        return Ok(0.0);
    }
    let g = |lk: f64| {
        let k = lk.exp();
        (1.0 + spec.modular(u, area, 1.0 / k)) / k
    };
    let c = -lux.ln();
    let (mut best, mut bx) = (f64::INFINITY, c);
    let n = 240;
    for i in 0..=n {
        let x = c - 6.0 + 12.0 * i as f64 / n as f64;
        let v = g(x);
        if v < best {
            best = v;
            bx = x;
        }
    }
    let step = 12.0 / n as f64;
    let (mut a, mut b) = (bx - step, bx + step);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - gr * (b - a);
    let mut x2 = a + gr * (b - a);
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..BISECT_MAX_ITER {
        if b - a < 1e-12 {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = g(x2);
        }
    }
    Ok(best.min(f1).min(f2))
}
