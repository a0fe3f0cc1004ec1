//! Planar maps: the cloak blow-up, Iwaniec–Martin radial maps, inverses,
//! and push-forward of conductivities.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::conductivity::{frame_sample, ConductivityField, Provenance, Sample, DOMAIN_RADIUS};
use crate::error::{Error, Result};
use crate::gauge::{classify_growth, Verdict, WeightGauge};
use crate::mat2::{Mat2, Sym2};
use crate::quad;

/// An annulus `inner < |z| < outer` (a punctured disc when `inner = 0`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    pub inner: f64,
    pub outer: f64,
}

impl Region {
    pub const DISC: Region = Region { inner: 0.0, outer: DOMAIN_RADIUS };

    pub fn contains(&self, z: Complex64) -> bool {
        let r = z.norm();
        r > self.inner && r <= self.outer * (1.0 + 1e-14)
    }
}

/// An orientation-preserving planar homeomorphism between two regions.
pub trait PlaneMap: Send + Sync {
    fn eval(&self, z: Complex64) -> Result<Complex64>;

    fn jacobian(&self, z: Complex64) -> Result<Mat2>;

    fn inverse_eval(&self, y: Complex64) -> Result<Complex64> {
        newton_inverse(self, y, y)
    }

    fn domain(&self) -> Region {
        Region::DISC
    }

    fn codomain(&self) -> Region {
        Region::DISC
    }

    /// Whether F(z) = z on |z| = 2 is part of the contract.
    fn fixes_boundary(&self) -> bool {
        false
    }
}

impl<T: PlaneMap + ?Sized> PlaneMap for Arc<T> {
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        (**self).eval(z)
    }
    fn jacobian(&self, z: Complex64) -> Result<Mat2> {
        (**self).jacobian(z)
    }
    fn inverse_eval(&self, y: Complex64) -> Result<Complex64> {
        (**self).inverse_eval(y)
    }
    fn domain(&self) -> Region {
        (**self).domain()
    }
    fn codomain(&self) -> Region {
        (**self).codomain()
    }
    fn fixes_boundary(&self) -> bool {
        (**self).fixes_boundary()
    }
}

/// Damped Newton iteration for F(z) = y down to a 1e-12 residual.
pub fn newton_inverse<M: PlaneMap + ?Sized>(map: &M, y: Complex64, guess: Complex64) -> Result<Complex64> {
    let mut z = guess;
    let tol = 1e-12 * y.norm().max(1.0);
    let mut res = map.eval(z)? - y;
    for _ in 0..100 {
        if res.norm() <= tol {
            return Ok(z);
        }
        let j = map.jacobian(z)?;
        let ji = j.inverse().ok_or_else(|| Error::numeric("singular Jacobian in Newton inversion"))?;
        let d = ji.apply([res.re, res.im]);
        let step = Complex64::new(d[0], d[1]);
        let mut lam = 1.0;
        loop {
            let cand = z - step * lam;
            if let Ok(v) = map.eval(cand) {
                let r = v - y;
                if r.norm() < res.norm() || lam < 1e-6 {
                    z = cand;
                    res = r;
                    break;
                }
            }
            lam *= 0.5;
            if lam < 1e-6 {
                return Err(Error::convergence("Newton line search failed"));
            }
        }
    }
    if res.norm() <= 1e3 * tol {
        return Ok(z);
    }
    Err(Error::convergence(format!("Newton inversion stalled at residual {:e}", res.norm())))
}

/// ‖DF‖², the Jacobian determinant and the distortion K(z, F) = ‖DF‖²/J.
pub fn distortion(j: &Mat2) -> (f64, f64, f64) {
    let (smax, smin) = j.singular_values();
    let det = j.det();
    (smax * smax, det, smax / smin)
}

/// Jacobian of z ↦ ρ(|z|)z/|z| given ρ(r) and ρ′(r).
pub fn radial_jacobian(z: Complex64, rho: f64, drho: f64) -> Mat2 {
    let r = z.norm();
    let rot = Mat2::rotation(z.arg());
    let d = Mat2::new(drho, 0.0, 0.0, rho / r);
    rot.mul(&d).mul(&rot.transpose())
}

/// The identity map of B(2).
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityMap;

impl PlaneMap for IdentityMap {
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        Ok(z)
    }
    fn jacobian(&self, _z: Complex64) -> Result<Mat2> {
        Ok(Mat2::IDENTITY)
    }
    fn inverse_eval(&self, y: Complex64) -> Result<Complex64> {
        Ok(y)
    }
    fn fixes_boundary(&self) -> bool {
        true
    }
}

/// The cloak blow-up F₀(z) = (|z|/2 + 1)z/|z| from B(2)∖{0} onto B(2)∖B̄(1).
#[derive(Clone, Copy, Debug, Default)]
pub struct CloakMap;

impl PlaneMap for CloakMap {
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        let r = z.norm();
        if r == 0.0 {
            return Err(Error::domain("cloak map is undefined at the origin"));
        }
        Ok(z * ((0.5 * r + 1.0) / r))
    }
    fn jacobian(&self, z: Complex64) -> Result<Mat2> {
        let r = z.norm();
        if r == 0.0 {
            return Err(Error::domain("cloak map is undefined at the origin"));
        }
        Ok(radial_jacobian(z, 0.5 * r + 1.0, 0.5))
    }
    fn inverse_eval(&self, y: Complex64) -> Result<Complex64> {
        let rho = y.norm();
        if !(rho > 1.0) {
            return Err(Error::domain("point lies in the cloaked region"));
        }
        Ok(y * (2.0 * (rho - 1.0) / rho))
    }
    fn codomain(&self) -> Region {
        Region { inner: 1.0, outer: DOMAIN_RADIUS }
    }
    fn fixes_boundary(&self) -> bool {
        true
    }
}

/// Weight data entering an Iwaniec–Martin map: S(u) = max(1, 𝒜⁻¹(1 + u)/scale)
/// with u = log(1/t). `scale = 1` gives S = 𝒜⁻¹(1 + u); `scale = 4` realizes 𝒜₁(t) = 𝒜(4t).
#[derive(Clone, Debug)]
pub struct ImWeight {
    pub base: WeightGauge,
    pub scale: f64,
}

impl ImWeight {
    pub fn s_of_u(&self, u: f64) -> f64 {
        let a = 1.0 + u;
        if a <= 0.0 {
            return 1.0;
        }
        let w = self.base.inverse(a).unwrap_or(f64::INFINITY);
        (w / self.scale).max(1.0)
    }

    /// ∫_U^∞ du/S(u), through the substitution w = 𝒜⁻¹(1 + u).
    fn tail(&self, u0: f64) -> Result<f64> {
        let w0 = self.base.inverse(1.0 + u0)?;
        if w0 < self.scale {
            return Err(Error::domain("tail requested where S is clamped"));
        }
        let lw = w0.ln();
        // ∫_{log W}^∞ 𝒜(eˣ)e^{−x} dx via x = log W + v/(1 − v)
        let f = |v: f64| {
            if v >= 1.0 {
                return 0.0;
            }
            let x = lw + v / (1.0 - v);
            self.base.ratio_at_log(x) / ((1.0 - v) * (1.0 - v))
        };
        let integral = quad::integrate(f, 0.0, 1.0, 1e-14, 1e-12)?;
        Ok(self.scale * (integral - self.base.ratio_at_log(lw)))
    }
}

/// Largest u of the interpolation table.
const TABLE_U_MAX: f64 = 60.0;
const TABLE_STEP: f64 = 0.02;

/// ρ for an Iwaniec–Martin map, with I(s) = ∫₀^s dt/(tS(t)) tabulated in u.
#[derive(Clone, Debug)]
pub struct ImProfile {
    weight: ImWeight,
    u0: f64,
    /// I at the nodes u0 + kΔ.
    table: Vec<f64>,
    /// dI/du = −1/S at the nodes.
    slope: Vec<f64>,
    c1: f64,
}

impl ImProfile {
    pub fn new(weight: ImWeight) -> Result<Self> {
        if !(weight.scale >= 1.0) {
            return Err(Error::domain("Iwaniec–Martin scale must be >= 1"));
        }
        let rep = classify_growth(&weight.base, 2f64.powi(44))?;
        if rep.verdict != Verdict::Converges {
            return Err(Error::construction(format!(
                "weight growth verdict is {}; the inner integral does not converge",
                rep.verdict.as_str()
            )));
        }
        let u0 = -(DOMAIN_RADIUS.ln());
        let n = ((TABLE_U_MAX - u0) / TABLE_STEP).ceil() as usize;
        let step = (TABLE_U_MAX - u0) / n as f64;
        let mut table = alloc::vec![0.0; n + 1];
        let mut slope = alloc::vec![0.0; n + 1];
        table[n] = weight.tail(TABLE_U_MAX)?;
        slope[n] = -1.0 / weight.s_of_u(TABLE_U_MAX);
        for k in (0..n).rev() {
            let a = u0 + k as f64 * step;
            let seg = quad::integrate(|u| 1.0 / weight.s_of_u(u), a, a + step, 1e-15, 1e-13)?;
            table[k] = table[k + 1] + seg;
            slope[k] = -1.0 / weight.s_of_u(a);
        }
        let i2 = table[0];
        if !i2.is_finite() {
            return Err(Error::construction("inner integral is not finite"));
        }
        let c1 = 1.0 / i2.exp_m1();
        Ok(ImProfile { weight, u0, table, slope, c1 })
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn weight(&self) -> &ImWeight {
        &self.weight
    }

    fn step(&self) -> f64 {
        (TABLE_U_MAX - self.u0) / (self.table.len() - 1) as f64
    }

    /// I as a function of u = log(1/s).
    pub fn inner_integral_u(&self, u: f64) -> Result<f64> {
        if u < self.u0 - 1e-12 {
            return Err(Error::domain("radius beyond 2 in Iwaniec–Martin profile"));
        }
        if u >= TABLE_U_MAX {
            return self.weight.tail(u);
        }
        let h = self.step();
        let x = ((u - self.u0) / h).max(0.0);
        let k = (x.floor() as usize).min(self.table.len() - 2);
        let s = x - k as f64;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        Ok(h00 * self.table[k] + h10 * h * self.slope[k] + h01 * self.table[k + 1] + h11 * h * self.slope[k + 1])
    }

    /// ρ(s) − 1, accurate when tiny.
    pub fn rho_minus_one(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            return Ok(0.0);
        }
        Ok(self.c1 * self.inner_integral_u(-s.ln())?.exp_m1())
    }

    pub fn rho(&self, s: f64) -> Result<f64> {
        Ok(1.0 + self.rho_minus_one(s)?)
    }

    /// s·ρ′(s) = c₁e^{I(s)}/S(s).
    pub fn s_drho(&self, s: f64) -> Result<f64> {
        let u = -s.ln();
        Ok(self.c1 * self.inner_integral_u(u)?.exp() / self.weight.s_of_u(u))
    }

    /// Solves ρ(s) − 1 = d for s ∈ (0, 2].
    pub fn inverse_rho_minus_one(&self, d: f64) -> Result<f64> {
        if !(d > 0.0 && d <= 1.0 + 1e-12) {
            return Err(Error::domain("radius outside the image annulus"));
        }
        // ρ − 1 is increasing in s, decreasing in u
        let f = |u: f64| self.rho_minus_one((-u).exp()).unwrap_or(f64::NAN) - d;
        let mut hi = 1.0;
        while f(hi) > 0.0 {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::domain("radius too close to the inner circle"));
            }
        }
        let u = quad::bisect(f, self.u0, hi, 1e-15, 400)?;
        Ok((-u).exp())
    }
}

/// F(z) = ρ(|z|)z/|z|, mapping B(2)∖{0} onto B(2)∖B̄(1) and fixing |z| = 2.
#[derive(Clone, Debug)]
pub struct IwaniecMartinMap {
    pub profile: Arc<ImProfile>,
}

impl IwaniecMartinMap {
    pub fn new(weight: ImWeight) -> Result<Self> {
        Ok(IwaniecMartinMap { profile: Arc::new(ImProfile::new(weight)?) })
    }
}

/// The Iwaniec–Martin map of a weight w: S(t) = w⁻¹(1 + log(1/t)).
pub fn iwaniec_martin_map(w: &WeightGauge) -> Result<IwaniecMartinMap> {
    IwaniecMartinMap::new(ImWeight { base: w.clone(), scale: 1.0 })
}

impl PlaneMap for IwaniecMartinMap {
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        let s = z.norm();
        if s == 0.0 {
            return Err(Error::domain("Iwaniec–Martin map is undefined at the origin"));
        }
        Ok(z * (self.profile.rho(s)? / s))
    }
    fn jacobian(&self, z: Complex64) -> Result<Mat2> {
        let s = z.norm();
        if s == 0.0 {
            return Err(Error::domain("Iwaniec–Martin map is undefined at the origin"));
        }
        Ok(radial_jacobian(z, self.profile.rho(s)?, self.profile.s_drho(s)? / s))
    }
    fn inverse_eval(&self, y: Complex64) -> Result<Complex64> {
        let r = y.norm();
        let s = self.profile.inverse_rho_minus_one(r - 1.0)?;
        Ok(y * (s / r))
    }
    fn codomain(&self) -> Region {
        Region { inner: 1.0, outer: DOMAIN_RADIUS }
    }
    fn fixes_boundary(&self) -> bool {
        true
    }
}

/// The inverse of a map, with domain and codomain swapped.
#[derive(Clone, Debug)]
pub struct InverseMap<M>(pub M);

impl<M: PlaneMap> PlaneMap for InverseMap<M> {
    fn eval(&self, y: Complex64) -> Result<Complex64> {
        self.0.inverse_eval(y)
    }
    fn jacobian(&self, y: Complex64) -> Result<Mat2> {
        let x = self.0.inverse_eval(y)?;
        self.0.jacobian(x)?.inverse().ok_or_else(|| Error::numeric("singular Jacobian"))
    }
    fn inverse_eval(&self, z: Complex64) -> Result<Complex64> {
        self.0.eval(z)
    }
    fn domain(&self) -> Region {
        self.0.codomain()
    }
    fn codomain(&self) -> Region {
        self.0.domain()
    }
    fn fixes_boundary(&self) -> bool {
        self.0.fixes_boundary()
    }
}

/// (F_*σ)(y) = DF σ DFᵀ / det DF at x = F⁻¹(y).
pub fn pushforward_matrix(sigma: &Sym2, df: &Mat2) -> Result<Sym2> {
    let j = df.det();
    if !(j > 0.0) {
        return Err(Error::domain("push-forward needs det DF > 0"));
    }
    Ok(sigma.congruence(df).scale(1.0 / j))
}

/// Push-forward of a conductivity field by a map; inside the hole of the
/// codomain the optional filler η is used.
#[derive(Clone)]
pub struct Pushforward<F, M> {
    pub base: F,
    pub map: M,
    pub filler: Option<Sym2>,
    pub provenance: Provenance,
}

/// The push-forward σ ↦ F_*σ.
pub fn pushforward<F: ConductivityField, M: PlaneMap>(base: F, map: M) -> Pushforward<F, M> {
    Pushforward { base, map, filler: None, provenance: Provenance::Pushforward }
}

impl<F: ConductivityField, M: PlaneMap> ConductivityField for Pushforward<F, M> {
    fn eval(&self, y: Complex64) -> Result<Sample> {
        let cod = self.map.codomain();
        let r = y.norm();
        if r > DOMAIN_RADIUS * (1.0 + 1e-14) {
            return Ok(Sample::regular(Sym2::IDENTITY));
        }
        if r <= cod.inner {
            return match self.filler {
                Some(eta) => Ok(Sample::regular(eta)),
                None => Err(Error::domain("point lies in the cloaked region; the filler is free")),
            };
        }
        let x = self.map.inverse_eval(y)?;
        let s = self.base.eval(x)?;
        if !s.is_regular() {
            return Ok(s);
        }
        let df = self.map.jacobian(x)?;
        Ok(Sample::regular(pushforward_matrix(&s.sigma, &df)?))
    }
    fn support_radius(&self) -> f64 {
        DOMAIN_RADIUS
    }
    fn provenance(&self) -> Provenance {
        self.provenance
    }
    fn singular_radii(&self) -> Vec<f64> {
        let cod = self.map.codomain();
        if cod.inner > 0.0 {
            alloc::vec![cod.inner]
        } else {
            Vec::new()
        }
    }
    fn core_radius(&self) -> f64 {
        if self.filler.is_some() {
            0.0
        } else {
            self.map.codomain().inner
        }
    }
}

/// The standard cloak (F₀)_*1 on B(2)∖B̄(1).
pub fn standard_cloak() -> Pushforward<crate::conductivity::ConstantField, CloakMap> {
    Pushforward {
        base: crate::conductivity::ConstantField(Sym2::IDENTITY),
        map: CloakMap,
        filler: None,
        provenance: Provenance::Cloak,
    }
}

/// Closed-form cloak eigenvalues at radius ρ ∈ (1, 2): (radial, tangential).
pub fn cloak_eigenvalues(rho: f64) -> (f64, f64) {
    ((rho - 1.0) / rho, rho / (rho - 1.0))
}

/// σ₁ = (F₁⁻¹)_*1 for the Iwaniec–Martin map F₁ of 𝒜₁(t) = 𝒜(4t), evaluated
/// in the radial frame: diag(ρ/(sρ′), sρ′/ρ).
#[derive(Clone, Debug)]
pub struct Hologram {
    pub map: IwaniecMartinMap,
}

/// The electric hologram of a sublinear weight.
pub fn hologram_conductivity(w: &WeightGauge) -> Result<Hologram> {
    Ok(Hologram { map: IwaniecMartinMap::new(ImWeight { base: w.clone(), scale: 4.0 })? })
}

impl Hologram {
    /// Radial eigenvalue ρ/(sρ′) at |z| = s.
    pub fn radial_eigenvalue(&self, s: f64) -> Result<f64> {
        let p = &self.map.profile;
        Ok(p.rho(s)? / p.s_drho(s)?)
    }
}

impl ConductivityField for Hologram {
    fn eval(&self, z: Complex64) -> Result<Sample> {
        let s = z.norm();
        if s > DOMAIN_RADIUS * (1.0 + 1e-14) {
            return Ok(Sample::regular(Sym2::IDENTITY));
        }
        if s == 0.0 {
            return Ok(Sample { sigma: Sym2::IDENTITY, mask: crate::conductivity::Degeneracy::Infinite });
        }
        let a = self.radial_eigenvalue(s)?;
        frame_sample(z.arg(), a, 1.0 / a)
    }
    fn support_radius(&self) -> f64 {
        DOMAIN_RADIUS
    }
    fn provenance(&self) -> Provenance {
        Provenance::Hologram
    }
    fn singular_radii(&self) -> Vec<f64> {
        alloc::vec![0.0]
    }
}
