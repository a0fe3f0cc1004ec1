//! Conductivity fields on B(2) and their pointwise and integral diagnostics.

use alloc::boxed::Box;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::gauge::{ladder_verdict, Verdict, WeightGauge};
use crate::mat2::Sym2;
use crate::quad;

/// Radius of the computational disc.
pub const DOMAIN_RADIUS: f64 = 2.0;

/// Which eigenvalue (if any) has left (0, ∞) at a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Degeneracy {
    None,
    /// λ₂ = 0.
    Zero,
    /// λ₁ = ∞.
    Infinite,
    /// The point lies where the field is not defined (e.g. a cloaked core).
    Undefined,
}

/// A conductivity value. When `mask` is not `None` the matrix is only a placeholder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub sigma: Sym2,
    pub mask: Degeneracy,
}

impl Sample {
    pub fn regular(sigma: Sym2) -> Self {
        Sample { sigma, mask: Degeneracy::None }
    }

    pub fn zero() -> Self {
        Sample { sigma: Sym2::ZERO, mask: Degeneracy::Zero }
    }

    pub fn undefined() -> Self {
        Sample { sigma: Sym2::IDENTITY, mask: Degeneracy::Undefined }
    }

    pub fn is_regular(&self) -> bool {
        self.mask == Degeneracy::None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    AnalyticRadial,
    Constant,
    Pushforward,
    GridSampled,
    Hologram,
    Cloak,
    Excised,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::AnalyticRadial => "analytic-radial",
            Provenance::Constant => "constant",
            Provenance::Pushforward => "pushforward",
            Provenance::GridSampled => "grid-sampled",
            Provenance::Hologram => "hologram",
            Provenance::Cloak => "cloak",
            Provenance::Excised => "excised",
        }
    }
}

/// A symmetric matrix-valued coefficient on B(2), equal to the identity
/// outside `support_radius`.
pub trait ConductivityField: Send + Sync {
    fn eval(&self, z: Complex64) -> Result<Sample>;

    fn support_radius(&self) -> f64 {
        DOMAIN_RADIUS
    }

    fn provenance(&self) -> Provenance;

    /// Radii of circles (0 for the origin) where the eigenvalues blow up or vanish.
    fn singular_radii(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Radius of a central disc on which the field is not defined.
    fn core_radius(&self) -> f64 {
        0.0
    }
}

impl<T: ConductivityField + ?Sized> ConductivityField for Arc<T> {
    fn eval(&self, z: Complex64) -> Result<Sample> {
        (**self).eval(z)
    }
    fn support_radius(&self) -> f64 {
        (**self).support_radius()
    }
    fn provenance(&self) -> Provenance {
        (**self).provenance()
    }
    fn singular_radii(&self) -> Vec<f64> {
        (**self).singular_radii()
    }
    fn core_radius(&self) -> f64 {
        (**self).core_radius()
    }
}

impl<T: ConductivityField + ?Sized> ConductivityField for Box<T> {
    fn eval(&self, z: Complex64) -> Result<Sample> {
        (**self).eval(z)
    }
    fn support_radius(&self) -> f64 {
        (**self).support_radius()
    }
    fn provenance(&self) -> Provenance {
        (**self).provenance()
    }
    fn singular_radii(&self) -> Vec<f64> {
        (**self).singular_radii()
    }
    fn core_radius(&self) -> f64 {
        (**self).core_radius()
    }
}

/// The same matrix everywhere on B(2).
#[derive(Clone, Copy, Debug)]
pub struct ConstantField(pub Sym2);

impl ConductivityField for ConstantField {
    fn eval(&self, _z: Complex64) -> Result<Sample> {
        Ok(Sample::regular(self.0))
    }
    fn support_radius(&self) -> f64 {
        if self.0 == Sym2::IDENTITY {
            0.0
        } else {
            DOMAIN_RADIUS
        }
    }
    fn provenance(&self) -> Provenance {
        Provenance::Constant
    }
}

pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// σ(z) with eigenvalue `radial(|z|)` along z/|z| and `tangential(|z|)` across it.
#[derive(Clone)]
pub struct RadialField {
    radial: RadialFn,
    tangential: RadialFn,
    support: f64,
    singular: Vec<f64>,
}

impl RadialField {
    /// Isotropic γ(|z|)·I, with γ = 1 beyond `support`.
    pub fn isotropic(gamma: RadialFn, support: f64) -> Self {
        RadialField { radial: gamma.clone(), tangential: gamma, support, singular: Vec::new() }
    }

    pub fn anisotropic(radial: RadialFn, tangential: RadialFn, support: f64) -> Self {
        RadialField { radial, tangential, support, singular: Vec::new() }
    }

    pub fn with_singular_radii(mut self, radii: Vec<f64>) -> Self {
        self.singular = radii;
        self
    }

    pub fn eigen_at(&self, r: f64) -> (f64, f64) {
        if r > self.support {
            (1.0, 1.0)
        } else {
            ((self.radial)(r), (self.tangential)(r))
        }
    }
}

/// Smooth isotropic bump γ = 1 + a·exp(−1/(1 − (r/ρ)²)) for r < ρ.
pub fn radial_bump(amplitude: f64, radius: f64) -> RadialField {
    RadialField::isotropic(
        Arc::new(move |r: f64| {
            let x = r / radius;
            if x < 1.0 {
                1.0 + amplitude * (-1.0 / (1.0 - x * x)).exp()
            } else {
                1.0
            }
        }),
        radius,
    )
}

/// Builds a sample from frame eigenvalues, flagging 0 and ∞.
pub fn frame_sample(theta: f64, lr: f64, lt: f64) -> Result<Sample> {
    if lr.is_nan() || lt.is_nan() {
        return Err(Error::domain("NaN eigenvalue"));
    }
    if lr < 0.0 || lt < 0.0 {
        return Err(Error::domain("negative eigenvalue"));
    }
    if lr.is_infinite() || lt.is_infinite() {
        return Ok(Sample { sigma: Sym2::IDENTITY, mask: Degeneracy::Infinite });
    }
    if lr == 0.0 || lt == 0.0 {
        return Ok(Sample { sigma: Sym2::from_frame(theta, lr, lt), mask: Degeneracy::Zero });
    }
    Ok(Sample::regular(Sym2::from_frame(theta, lr, lt)))
}

impl ConductivityField for RadialField {
    fn eval(&self, z: Complex64) -> Result<Sample> {
        let r = z.norm();
        let (lr, lt) = self.eigen_at(r);
        if r == 0.0 {
            if lr != lt {
                return Err(Error::domain("anisotropic radial field evaluated at the origin"));
            }
            return frame_sample(0.0, lr, lt);
        }
        frame_sample(z.arg(), lr, lt)
    }
    fn support_radius(&self) -> f64 {
        self.support
    }
    fn provenance(&self) -> Provenance {
        Provenance::AnalyticRadial
    }
    fn singular_radii(&self) -> Vec<f64> {
        self.singular.clone()
    }
}

/// The insulating-disc field: 0 on B(radius), 1 outside.
#[derive(Clone, Copy, Debug)]
pub struct InsulatingDisc {
    pub radius: f64,
}

impl ConductivityField for InsulatingDisc {
    fn eval(&self, z: Complex64) -> Result<Sample> {
        if z.norm() < self.radius {
            Ok(Sample::zero())
        } else {
            Ok(Sample::regular(Sym2::IDENTITY))
        }
    }
    fn support_radius(&self) -> f64 {
        self.radius
    }
    fn provenance(&self) -> Provenance {
        Provenance::AnalyticRadial
    }
}

/// σ_r: the base field outside B̄(r) and 0 inside.
#[derive(Clone)]
pub struct Excised<F> {
    pub base: F,
    pub radius: f64,
}

impl<F: ConductivityField> ConductivityField for Excised<F> {
    fn eval(&self, z: Complex64) -> Result<Sample> {
        if z.norm() <= self.radius {
            Ok(Sample::zero())
        } else {
            self.base.eval(z)
        }
    }
    fn support_radius(&self) -> f64 {
        self.base.support_radius().max(self.radius)
    }
    fn provenance(&self) -> Provenance {
        Provenance::Excised
    }
    fn singular_radii(&self) -> Vec<f64> {
        self.base.singular_radii()
    }
}

/// `(1 − χ)I + χσ` with χ = 1 on B(r0), 0 outside B(r1) and a C¹ blend between.
#[derive(Clone, Copy, Debug)]
pub struct BlendedPatch {
    pub sigma: Sym2,
    pub r0: f64,
    pub r1: f64,
}

impl BlendedPatch {
    pub fn new(sigma: Sym2, r0: f64, r1: f64) -> Result<Self> {
        if !(r0 > 0.0 && r1 > r0) {
            return Err(Error::domain("blended patch needs 0 < r0 < r1"));
        }
        if !(sigma.det() > 0.0 && sigma.s11 > 0.0) {
            return Err(Error::domain("blended patch needs a positive definite matrix"));
        }
        Ok(BlendedPatch { sigma, r0, r1 })
    }

    pub fn weight(&self, r: f64) -> f64 {
        if r <= self.r0 {
            1.0
        } else if r >= self.r1 {
            0.0
        } else {
            let s = (r - self.r0) / (self.r1 - self.r0);
            1.0 - s * s * (3.0 - 2.0 * s)
        }
    }
}

impl ConductivityField for BlendedPatch {
    fn eval(&self, z: Complex64) -> Result<Sample> {
        let c = self.weight(z.norm());
        Ok(Sample::regular(Sym2::IDENTITY.scale(1.0 - c).add(&self.sigma.scale(c))))
    }
    fn support_radius(&self) -> f64 {
        self.r1
    }
    fn provenance(&self) -> Provenance {
        Provenance::Constant
    }
}

/// Bilinear interpolation of samples on the node grid −R + jh, h = 2R/n.
#[derive(Clone, Debug)]
pub struct GridConductivity {
    pub n: usize,
    pub half_width: f64,
    /// Row-major, index `i * n + j` with `i` along y.
    pub data: Vec<Sym2>,
}

impl GridConductivity {
    pub fn new(n: usize, half_width: f64, data: Vec<Sym2>) -> Result<Self> {
        if data.len() != n * n || n < 2 {
            return Err(Error::shape(format!("grid conductivity needs {}² samples", n)));
        }
        if data.iter().any(|s| s.has_nan()) {
            return Err(Error::domain("NaN in grid conductivity"));
        }
        Ok(GridConductivity { n, half_width, data })
    }

    /// Samples a field at the grid nodes; points outside B(2) get the identity.
    pub fn sample<F: ConductivityField + ?Sized>(field: &F, n: usize, half_width: f64) -> Result<Self> {
        let h = 2.0 * half_width / n as f64;
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let z = Complex64::new(-half_width + j as f64 * h, -half_width + i as f64 * h);
                if z.norm() > DOMAIN_RADIUS {
                    data.push(Sym2::IDENTITY);
                    continue;
                }
                let s = field.eval(z)?;
                data.push(if s.is_regular() { s.sigma } else { Sym2::new(f64::NAN, 0.0, f64::NAN) });
            }
        }
        Ok(GridConductivity { n, half_width, data })
    }
}

impl ConductivityField for GridConductivity {
    fn eval(&self, z: Complex64) -> Result<Sample> {
        let h = 2.0 * self.half_width / self.n as f64;
        let x = (z.re + self.half_width) / h;
        let y = (z.im + self.half_width) / h;
        if !(x >= 0.0 && y >= 0.0 && x <= (self.n - 1) as f64 && y <= (self.n - 1) as f64) {
            return Ok(Sample::regular(Sym2::IDENTITY));
        }
        let j = (x.floor() as usize).min(self.n - 2);
        let i = (y.floor() as usize).min(self.n - 2);
        let (fx, fy) = (x - j as f64, y - i as f64);
        let at = |i: usize, j: usize| self.data[i * self.n + j];
        let s = at(i, j)
            .scale((1.0 - fx) * (1.0 - fy))
            .add(&at(i, j + 1).scale(fx * (1.0 - fy)))
            .add(&at(i + 1, j).scale((1.0 - fx) * fy))
            .add(&at(i + 1, j + 1).scale(fx * fy));
        if s.has_nan() {
            return Ok(Sample::undefined());
        }
        Ok(Sample::regular(s))
    }
    fn support_radius(&self) -> f64 {
        DOMAIN_RADIUS
    }
    fn provenance(&self) -> Provenance {
        Provenance::GridSampled
    }
}

/// Pointwise spectral data of a conductivity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralReport {
    pub lambda1: f64,
    pub lambda2: f64,
    pub trace: f64,
    pub trace_inv: f64,
    pub det: f64,
    /// Anisotropy √(λ₁/λ₂).
    pub k_sigma: f64,
    /// Ellipticity max(λ₁, 1/λ₂).
    pub k: f64,
}

/// Spectral data of a sample; degenerate masks map to infinities in the report only.
pub fn spectral_of(s: &Sample) -> Result<SpectralReport> {
    if s.sigma.has_nan() {
        return Err(Error::domain("NaN conductivity entry"));
    }
    match s.mask {
        Degeneracy::Undefined => Err(Error::domain("conductivity undefined at this point")),
        Degeneracy::Infinite => Ok(SpectralReport {
            lambda1: f64::INFINITY,
            lambda2: 0.0,
            trace: f64::INFINITY,
            trace_inv: f64::INFINITY,
            det: f64::NAN,
            k_sigma: f64::INFINITY,
            k: f64::INFINITY,
        }),
        Degeneracy::Zero => {
            let (l1, _) = s.sigma.eigenvalues();
            Ok(SpectralReport {
                lambda1: l1,
                lambda2: 0.0,
                trace: s.sigma.trace(),
                trace_inv: f64::INFINITY,
                det: 0.0,
                k_sigma: f64::INFINITY,
                k: f64::INFINITY,
            })
        }
        Degeneracy::None => spectral_matrix(&s.sigma),
    }
}

/// Spectral data of a positive definite matrix.
pub fn spectral_matrix(m: &Sym2) -> Result<SpectralReport> {
    if m.has_nan() {
        return Err(Error::domain("NaN conductivity entry"));
    }
    let (l1, l2) = m.eigenvalues();
    if !(l2 > 0.0) {
        return Err(Error::domain("conductivity matrix is not positive definite"));
    }
    let det = m.det();
    Ok(SpectralReport {
        lambda1: l1,
        lambda2: l2,
        trace: l1 + l2,
        trace_inv: 1.0 / l1 + 1.0 / l2,
        det,
        k_sigma: (l1 / l2).sqrt(),
        k: l1.max(1.0 / l2),
    })
}

/// Spectral report of a field at a point of B̄(2).
pub fn spectral<F: ConductivityField + ?Sized>(field: &F, z: Complex64) -> Result<SpectralReport> {
    if z.norm() > DOMAIN_RADIUS * (1.0 + 1e-12) {
        return Err(Error::domain("spectral report requested outside B(2)"));
    }
    spectral_of(&field.eval(z)?)
}

/// Integrand families for [`integrability_check`].
#[derive(Clone, Debug)]
pub enum IntegrabilityClass {
    /// exp(p(tr σ + tr σ⁻¹)).
    ExpP { p: f64 },
    /// exp(𝒜(tr σ + tr σ⁻¹)).
    ExpA { weight: WeightGauge },
    /// exp(exp(q(γ + 1/γ))) with γ = √det σ.
    DoubleExp { q: f64 },
    /// ℰ(q det σ) with ℰ(t) = exp(exp(exp(√t + 1/√t))).
    TripleExpDet { q: f64 },
    /// tr σ itself.
    Trace,
}

impl IntegrabilityClass {
    /// log of the integrand at a regular sample.
    pub fn log_integrand(&self, s: &SpectralReport) -> f64 {
        let tt = s.trace + s.trace_inv;
        match self {
            IntegrabilityClass::ExpP { p } => p * tt,
            IntegrabilityClass::ExpA { weight } => weight.eval(tt.max(1.0)).unwrap_or(f64::INFINITY),
            IntegrabilityClass::DoubleExp { q } => {
                let g = s.det.sqrt();
                (q * (g + 1.0 / g)).exp()
            }
            IntegrabilityClass::TripleExpDet { q } => {
                let t = q * s.det;
                (t.sqrt() + 1.0 / t.sqrt()).exp().exp()
            }
            IntegrabilityClass::Trace => s.trace.ln(),
        }
    }
}

/// Radial-angular quadrature settings.
#[derive(Clone, Debug)]
pub struct QuadratureOptions {
    /// Distances to the singular set defining the ladder, decreasing.
    pub deltas: Vec<f64>,
    pub radial_nodes: usize,
    pub angular_nodes: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        let mut deltas = Vec::new();
        let mut d = 0.5;
        while d >= 1e-8 {
            deltas.push(d);
            d *= 0.5;
        }
        QuadratureOptions { deltas, radial_nodes: 12, angular_nodes: 64 }
    }
}

#[derive(Clone, Debug)]
pub struct IntegrabilityReport {
    /// `(δ, ∫ over points at distance > δ from the singular set)`.
    pub integral_ladder: Vec<(f64, f64)>,
    pub verdict: Verdict,
    pub skipped: usize,
    pub total: usize,
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Distance from r to the nearest singular radius.
fn sing_dist(r: f64, sing: &[f64]) -> f64 {
    sing.iter().fold(f64::INFINITY, |m, s| m.min((r - s).abs()))
}

/// Radial breakpoints: the region ends plus shells at every ladder distance.
fn radial_breaks(r_in: f64, r_out: f64, sing: &[f64], deltas: &[f64]) -> Vec<f64> {
    let mut b = vec![r_in, r_out];
    for s in sing {
        for d in deltas {
            for c in [s - d, s + d] {
                if c > r_in && c < r_out {
                    b.push(c);
                }
            }
        }
        if *s > r_in && *s < r_out {
            b.push(*s);
        }
    }
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * y.abs().max(1e-300));
    b
}

/// Integral of a per-point log-integrand over pieces of the annulus
/// `[r_in, r_out] × [0, 2π)` at distance > δ from the singular radii.
///
/// Returns the log of each ladder value plus (skipped, total) node counts.
fn log_ladder<F: FnMut(Complex64) -> Option<f64>>(
    mut logf: F,
    r_in: f64,
    r_out: f64,
    sing: &[f64],
    opts: &QuadratureOptions,
) -> (Vec<f64>, usize, usize) {
    let breaks = radial_breaks(r_in, r_out, sing, &opts.deltas);
    let (gx, gw) = quad::gauss_legendre(opts.radial_nodes);
    let na = opts.angular_nodes;
    let dth = 2.0 * PI / na as f64;
    let mut skipped = 0;
    let mut total = 0;
    // per piece: log integral and distance of its midpoint to the singular set
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        let mut acc = f64::NEG_INFINITY;
        for (x, wx) in gx.iter().zip(&gw) {
            let r = c + h * x;
            for k in 0..na {
                let th = (k as f64 + 0.5) * dth;
                total += 1;
                match logf(Complex64::from_polar(r, th)) {
                    Some(v) if !v.is_nan() => {
                        acc = log_add(acc, v + (wx * h * r * dth).ln());
                    }
                    _ => skipped += 1,
                }
            }
        }
        pieces.push((acc, sing_dist(c, sing)));
    }
    let ladder = opts
        .deltas
        .iter()
        .map(|d| pieces.iter().filter(|p| p.1 > *d).fold(f64::NEG_INFINITY, |m, p| log_add(m, p.0)))
        .collect();
    (ladder, skipped, total)
}

/// Quadrature ladder for ∫ f(σ) dm over B(2) (minus the core) with a verdict.
pub fn integrability_check<F: ConductivityField + ?Sized>(
    field: &F,
    class: &IntegrabilityClass,
    opts: &QuadratureOptions,
) -> Result<IntegrabilityReport> {
    let sing = field.singular_radii();
    let r_in = field.core_radius();
    let (logs, skipped, total) = log_ladder(
        |z| {
            let s = field.eval(z).ok()?;
            match s.mask {
                Degeneracy::None => {
                    let rep = spectral_matrix(&s.sigma).ok()?;
                    Some(class.log_integrand(&rep))
                }
                Degeneracy::Undefined => None,
                _ => Some(f64::INFINITY),
            }
        },
        r_in,
        DOMAIN_RADIUS,
        &sing,
        opts,
    );
    if skipped * 100 > total {
        return Err(Error::numeric(format!("{skipped} of {total} quadrature nodes failed to evaluate")));
    }
    let vals: Vec<f64> = logs.iter().map(|l| if *l > 700.0 { f64::INFINITY } else { l.exp() }).collect();
    let last = vals.last().copied().unwrap_or(0.0);
    let verdict = if sing.is_empty() {
        if last.is_finite() {
            Verdict::Converges
        } else {
            Verdict::Diverges
        }
    } else {
        ladder_verdict(&vals, 1e-6 * last.abs().max(1.0))
    };
    Ok(IntegrabilityReport {
        integral_ladder: opts.deltas.iter().copied().zip(vals).collect(),
        verdict,
        skipped,
        total,
    })
}

/// Settings for the superlevel-set measurement along rays.
#[derive(Clone, Debug)]
pub struct TailOptions {
    pub rays: usize,
    pub radial_samples: usize,
    /// Geometric refinement toward singular radii down to this distance.
    pub min_distance: f64,
}

impl Default for TailOptions {
    fn default() -> Self {
        TailOptions { rays: 64, radial_samples: 2000, min_distance: 1e-12 }
    }
}

fn trace_at<F: ConductivityField + ?Sized>(field: &F, z: Complex64) -> f64 {
    match field.eval(z) {
        Ok(s) => match s.mask {
            Degeneracy::None => s.sigma.trace(),
            Degeneracy::Infinite => f64::INFINITY,
            Degeneracy::Zero => s.sigma.trace(),
            Degeneracy::Undefined => f64::NAN,
        },
        Err(_) => f64::NAN,
    }
}

/// `(t, |{tr σ > t}|)` for each level, by locating level crossings along rays.
pub fn weak_l1_tail<F: ConductivityField + ?Sized>(field: &F, t_ladder: &[f64], opts: &TailOptions) -> Result<Vec<(f64, f64)>> {
    let r_in = field.core_radius();
    let sing = field.singular_radii();
    let mut rs: Vec<f64> = (0..=opts.radial_samples)
        .map(|i| r_in + (DOMAIN_RADIUS - r_in) * i as f64 / opts.radial_samples as f64)
        .collect();
    for s in &sing {
        let mut d = 0.5;
        while d >= opts.min_distance {
            for c in [s - d, s + d] {
                if c > r_in && c < DOMAIN_RADIUS {
                    rs.push(c);
                }
            }
            d *= 0.5;
        }
    }
    rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    rs.dedup();
    let dth = 2.0 * PI / opts.rays as f64;
    let mut out = Vec::with_capacity(t_ladder.len());
    for &t in t_ladder {
        let mut area = 0.0;
        for k in 0..opts.rays {
            let th = (k as f64 + 0.5) * dth;
            let dir = Complex64::from_polar(1.0, th);
            let above = |r: f64| {
                let v = trace_at(field, dir * r);
                v > t
            };
            let mut prev_r = rs[0];
            let mut prev = above(prev_r);
            let mut run_start = if prev { Some(prev_r) } else { None };
            for &r in &rs[1..] {
                let cur = above(r);
                if cur != prev {
                    let x = crossing(|q| above(q), prev_r, r, prev);
                    if cur {
                        run_start = Some(x);
                    } else if let Some(a) = run_start.take() {
                        area += 0.5 * (x * x - a * a) * dth;
                    }
                }
                prev = cur;
                prev_r = r;
            }
            if let Some(a) = run_start {
                area += 0.5 * (DOMAIN_RADIUS * DOMAIN_RADIUS - a * a) * dth;
            }
        }
        out.push((t, area));
    }
    Ok(out)
}

fn crossing<P: Fn(f64) -> bool>(pred: P, mut a: f64, mut b: f64, at_a: bool) -> f64 {
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if pred(m) == at_a {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Stratified Monte-Carlo estimate of the same measures (cross-check).
pub fn weak_l1_tail_mc<F: ConductivityField + ?Sized>(field: &F, t_ladder: &[f64], samples: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r_in = field.core_radius();
    let side = (samples as f64).sqrt().ceil() as usize;
    let a_in = r_in * r_in;
    let a_out = DOMAIN_RADIUS * DOMAIN_RADIUS;
    let area = PI * (a_out - a_in);
    let mut counts = vec![0usize; t_ladder.len()];
    let mut n = 0usize;
    for i in 0..side {
        for j in 0..side {
            // uniform in area: r² uniform on [r_in², 4]
            let u = (i as f64 + rng.gen::<f64>()) / side as f64;
            let v = (j as f64 + rng.gen::<f64>()) / side as f64;
            let r = (a_in + u * (a_out - a_in)).sqrt();
            let z = Complex64::from_polar(r, 2.0 * PI * v);
            let tr = trace_at(field, z);
            n += 1;
            for (c, t) in counts.iter_mut().zip(t_ladder) {
                if tr > *t {
                    *c += 1;
                }
            }
        }
    }
    Ok(t_ladder.iter().zip(counts).map(|(t, c)| (*t, area * c as f64 / n as f64)).collect())
}
