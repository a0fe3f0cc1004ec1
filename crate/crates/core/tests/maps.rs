use condbench_core::coeffs::*;
use condbench_core::conductivity::*;
use condbench_core::gauge::{Verdict, WeightGauge};
use condbench_core::maps::*;
use condbench_core::mat2::{Mat2, Sym2};
use condbench_core::quad::{gauss_legendre, linear_fit};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn annulus_points(n: usize, inner: f64, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let r = inner + (2.0 - inner) * rng.gen::<f64>();
            Complex64::from_polar(r, 2.0 * PI * rng.gen::<f64>())
        })
        .collect()
}

/// Radial and tangential eigenvalues of a sample at y.
fn frame_eigs(s: &Sym2, y: Complex64) -> (f64, f64) {
    let e = [y.re / y.norm(), y.im / y.norm()];
    let t = [-e[1], e[0]];
    (s.quad(e), s.quad(t))
}

#[test]
fn cloak_det_and_eigenvalues_match_closed_form() {
    let cloak = standard_cloak();
    for y in annulus_points(1000, 1.0 + 1e-6, 1) {
        let s = cloak.eval(y).unwrap().sigma;
        assert!((s.det() - 1.0).abs() < 1e-10, "det {} at {y}", s.det());
        let (lr, lt) = cloak_eigenvalues(y.norm());
        let (fr, ft) = frame_eigs(&s, y);
        assert!((fr - lr).abs() < 1e-8 * lr.max(1.0), "radial {fr} vs {lr}");
        assert!((ft - lt).abs() < 1e-8 * lt.max(1.0), "tangential {ft} vs {lt}");
    }
}

#[test]
fn cloak_at_one_and_a_half() {
    let rep = spectral(&standard_cloak(), Complex64::new(0.0, 1.5)).unwrap();
    assert!((rep.lambda1 - 3.0).abs() < 1e-12 && (rep.lambda2 - 1.0 / 3.0).abs() < 1e-12);
    assert!((rep.det - 1.0).abs() < 1e-12 && (rep.k - 3.0).abs() < 1e-12);
}

#[test]
fn cloak_map_values_and_round_trip() {
    let f = CloakMap;
    let b = Complex64::from_polar(2.0, 0.7);
    assert!((f.eval(b).unwrap() - b).norm() < 1e-15);
    assert!((f.eval(Complex64::new(1.0, 0.0)).unwrap() - 1.5).norm() < 1e-15);
    assert!(f.eval(Complex64::new(0.0, 0.0)).is_err());
    for z in annulus_points(1000, 1e-6, 2) {
        let back = f.inverse_eval(f.eval(z).unwrap()).unwrap();
        assert!((back - z).norm() < 1e-12);
    }
}

#[test]
fn cloak_core_is_reported_not_filled() {
    let e = standard_cloak().eval(Complex64::new(0.3, 0.0)).unwrap_err();
    assert!(format!("{e}").contains("cloaked"));
}

fn cloak_trace_integral(delta: f64) -> f64 {
    // ∫_{1+δ}^{2} (ρ/(ρ−1) + (ρ−1)/ρ) 2πρ dρ = 2π(3 − 2δ − δ² + log(1/δ))
    2.0 * PI * (3.0 - 2.0 * delta - delta * delta + (1.0 / delta).ln())
}

#[test]
fn cloak_trace_grows_like_log() {
    let opts = QuadratureOptions { angular_nodes: 16, ..QuadratureOptions::default() };
    let rep = integrability_check(&standard_cloak(), &IntegrabilityClass::Trace, &opts).unwrap();
    let window: Vec<(f64, f64)> = rep.integral_ladder.iter().copied().filter(|(d, _)| (1e-6..=1e-2).contains(d)).collect();
    assert!(window.len() >= 10);
    for (d, v) in &window {
        let exact = cloak_trace_integral(*d);
        assert!((v - exact).abs() < 1e-8 * exact, "δ = {d}: {v} vs {exact}");
    }
    let x: Vec<f64> = window.iter().map(|(d, _)| (1.0 / d).ln()).collect();
    let y: Vec<f64> = window.iter().map(|p| p.1).collect();
    let (_, slope, r2) = linear_fit(&x, &y);
    assert!(r2 >= 0.99 && (slope - 2.0 * PI).abs() < 1e-2 * 2.0 * PI, "slope {slope}, R² {r2}");
}

#[test]
fn cloak_trace_is_weak_l1() {
    let ts: Vec<f64> = (0..=4).map(|k| 10f64.powf(5.0 + 0.25 * k as f64)).collect();
    let tails = weak_l1_tail(&standard_cloak(), &ts, &TailOptions { rays: 8, ..TailOptions::default() }).unwrap();
    let prods: Vec<f64> = tails.iter().map(|(t, m)| t * m).collect();
    let (lo, hi) = prods.iter().fold((f64::INFINITY, 0.0f64), |a, p| (a.0.min(*p), a.1.max(*p)));
    assert!((hi - lo) / hi < 0.1, "{prods:?}");
    // tr σ > t ⇔ ρ − 1 < δ_t with δ_t ≈ 1/t, so t·|{tr > t}| → 2π
    assert!(prods.iter().all(|p| (p - 2.0 * PI).abs() < 1e-2 * 2.0 * PI), "{prods:?}");
}

#[test]
fn cloak_exp_class_diverges() {
    let rep = integrability_check(&standard_cloak(), &IntegrabilityClass::ExpP { p: 0.5 }, &QuadratureOptions::default()).unwrap();
    assert_eq!(rep.verdict, Verdict::Diverges);
}

#[test]
fn identity_exp_class_is_constant_times_area() {
    let id = ConstantField(Sym2::IDENTITY);
    let rep = integrability_check(&id, &IntegrabilityClass::ExpP { p: 1.0 }, &QuadratureOptions::default()).unwrap();
    assert_eq!(rep.verdict, Verdict::Converges);
    let v = rep.integral_ladder.last().unwrap().1;
    assert!((v - 4.0f64.exp() * 4.0 * PI).abs() < 1e-10 * v);
    let t = weak_l1_tail(&id, &[3.0], &TailOptions::default()).unwrap();
    assert_eq!(t[0].1, 0.0);
}

fn hologram() -> Hologram {
    hologram_conductivity(&WeightGauge::sublinear(2.0).unwrap()).unwrap()
}

#[test]
fn hologram_has_unit_determinant_and_map_distortion() {
    let h = hologram();
    let inv = InverseMap(h.map.clone());
    for z in annulus_points(1000, 1e-6, 3) {
        let s = h.eval(z).unwrap();
        assert!(s.is_regular());
        assert!((s.sigma.det() - 1.0).abs() < 1e-10);
        let k = spectral_of(&s).unwrap().k;
        let w = h.map.eval(z).unwrap();
        let (_, _, kf) = distortion(&inv.jacobian(w).unwrap());
        assert!((k - kf).abs() < 1e-8 * k, "{k} vs {kf}");
    }
}

#[test]
fn hologram_exp_weight_class_is_finite() {
    let h = hologram();
    let w = WeightGauge::sublinear(2.0).unwrap();
    let rep = integrability_check(&h, &IntegrabilityClass::ExpA { weight: w }, &QuadratureOptions::default()).unwrap();
    assert_eq!(rep.verdict, Verdict::Converges, "{:?}", rep.integral_ladder);
    let tr = integrability_check(&h, &IntegrabilityClass::Trace, &QuadratureOptions::default()).unwrap();
    assert_eq!(tr.verdict, Verdict::Converges);
}

#[test]
fn iwaniec_martin_profile() {
    let f = iwaniec_martin_map(&WeightGauge::sublinear(2.0).unwrap()).unwrap();
    let p = &f.profile;
    assert!((p.rho(2.0).unwrap() - 2.0).abs() < 1e-12);
    let mut prev = 1.0;
    for k in 0..200 {
        let s = 2.0 * (k as f64 + 1.0) / 200.0;
        let r = p.rho(s).unwrap();
        assert!(r > prev);
        prev = r;
    }
    // ρ − 1 → 0 at s → 0 (slowly: the decay is governed by the weight)
    let ladder: Vec<f64> = [1e-2, 1e-4, 1e-8, 1e-16, 1e-32].iter().map(|s| p.rho_minus_one(*s).unwrap()).collect();
    assert!(ladder.windows(2).all(|w| w[1] < w[0]), "{ladder:?}");
    let z = Complex64::from_polar(0.37, 1.1);
    assert!((f.inverse_eval(f.eval(z).unwrap()).unwrap() - z).norm() < 1e-10);
    let b = Complex64::from_polar(2.0, -0.4);
    assert!((f.eval(b).unwrap() - b).norm() < 1e-12);
}

#[test]
fn inverse_map_gradient_bound() {
    // ∫_{F(Ω)} ‖DF⁻¹‖²_HS dy = ∫_Ω (smax/smin + smin/smax) dx ≤ 2∫_Ω K_F dx on Ω = B(2)∖B(δ)
    let f = iwaniec_martin_map(&WeightGauge::sublinear(2.0).unwrap()).unwrap();
    let inv = InverseMap(f.clone());
    let (gx, gw) = gauss_legendre(24);
    for delta in [1e-1f64, 1e-3, 1e-6] {
        let (a, b) = (delta.ln(), 2f64.ln());
        let (mut lhs, mut rhs) = (0.0, 0.0);
        for (x, w) in gx.iter().zip(&gw) {
            let s = (0.5 * (a + b) + 0.5 * (b - a) * x).exp();
            let z = Complex64::new(s, 0.0);
            let df = f.jacobian(z).unwrap();
            let dh = inv.jacobian(f.eval(z).unwrap()).unwrap();
            let wt = w * 0.5 * (b - a) * s * s * 2.0 * PI;
            lhs += dh.hs2() * df.det() * wt;
            rhs += 2.0 * distortion(&df).2 * wt;
        }
        assert!(lhs <= rhs, "δ = {delta}: {lhs} > {rhs}");
    }
}

#[test]
fn pushforward_by_identity_and_det_transfer() {
    let base = ConstantField(Sym2::new(2.0, 0.3, 0.7));
    let same = pushforward(base, IdentityMap);
    let z = Complex64::new(0.4, -0.9);
    assert_eq!(same.eval(z).unwrap().sigma, base.0);
    let cloaked = pushforward(base, CloakMap);
    for y in annulus_points(200, 1.0 + 1e-6, 4) {
        let d = cloaked.eval(y).unwrap().sigma.det();
        assert!((d - base.0.det()).abs() < 1e-10 * base.0.det());
    }
}

#[test]
fn scalar_beltrami_coefficients() {
    let (mu, nu) = beltrami_from_sigma(&Sym2::scalar(3.0)).unwrap();
    assert_eq!(mu.norm(), 0.0);
    assert!((nu.re - (1.0 - 3.0) / (1.0 + 3.0)).abs() < 1e-15);
}

fn spd() -> impl Strategy<Value = Sym2> {
    (-3.0f64..3.0, -3.0f64..3.0, 0.0f64..PI).prop_map(|(a, b, th)| Sym2::from_frame(th, a.exp(), b.exp()))
}

fn positive_jacobian() -> impl Strategy<Value = Mat2> {
    (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0).prop_filter_map("det > 0", |(a, b, c, d)| {
        let m = Mat2::new(a, b, c, d);
        (m.det() > 1e-3).then_some(m)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ellipticity_sandwich(s in spd()) {
        let r = spectral_matrix(&s).unwrap();
        let tt = r.trace + r.trace_inv;
        prop_assert!(0.25 * tt <= r.k * (1.0 + 1e-12));
        prop_assert!(r.k <= tt * (1.0 + 1e-12));
    }

    #[test]
    fn ellipticity_from_anisotropy_and_det(s in spd()) {
        let r = spectral_matrix(&s).unwrap();
        let g = r.det.sqrt();
        let k = r.k_sigma * g.max(1.0 / g);
        prop_assert!((k - r.k).abs() <= 1e-12 * r.k);
    }

    #[test]
    fn distortion_equality(m in positive_jacobian()) {
        let (n2, j, k) = distortion(&m);
        prop_assert!((n2 - k * j).abs() <= 1e-10 * n2);
    }

    #[test]
    fn spectral_report_is_frame_free(s in spd(), th in 0.0f64..6.3) {
        let r = Mat2::rotation(th);
        let a = spectral_matrix(&s).unwrap();
        let b = spectral_matrix(&s.congruence(&r)).unwrap();
        prop_assert!((a.k - b.k).abs() <= 1e-10 * a.k && (a.det - b.det).abs() <= 1e-10 * a.det);
        let (m1, m2) = (isothermal_mu_hat(&s).unwrap(), isothermal_mu_hat(&s.congruence(&r)).unwrap());
        prop_assert!((m1.norm() - m2.norm()).abs() < 1e-12);
    }

    #[test]
    fn beltrami_round_trip_and_k_identity(s in spd()) {
        let (mu, nu) = beltrami_from_sigma(&s).unwrap();
        let back = sigma_from_beltrami(mu, nu).unwrap();
        prop_assert!(back.sub(&s).max_abs() <= 1e-10 * s.max_abs());
        let r = spectral_matrix(&s).unwrap();
        prop_assert!((k_mu_nu(mu, nu) - r.k).abs() <= 1e-8 * r.k);
        prop_assert!((k_mu(isothermal_mu_hat(&s).unwrap()) - r.k_sigma).abs() <= 1e-8 * r.k_sigma);
    }
}
