use condbench_core::gauge::*;
use proptest::prelude::*;

fn horizon() -> f64 {
    2f64.powi(44)
}

#[test]
fn affine_and_almost_linear_diverge() {
    for w in [WeightGauge::affine(1.0).unwrap(), WeightGauge::affine(3.0).unwrap(), WeightGauge::almost_linear()] {
        let r = classify_growth(&w, horizon()).unwrap();
        assert_eq!(r.verdict, Verdict::Diverges, "{:?}", w.kind());
    }
}

#[test]
fn sublinear_converges() {
    for eps in [0.5, 1.0, 2.0] {
        let w = WeightGauge::sublinear(eps).unwrap();
        let r = classify_growth(&w, horizon()).unwrap();
        assert_eq!(r.verdict, Verdict::Converges, "eps {eps}: {:?}", r.divergence_estimate.last());
    }
}

#[test]
fn short_horizon_is_inconclusive_for_sublinear() {
    let w = WeightGauge::sublinear(0.5).unwrap();
    let r = classify_growth(&w, 1e6f64.ln()).unwrap();
    assert_eq!(r.verdict, Verdict::Inconclusive);
    assert!(classify_growth(&w, 10f64.ln()).is_err());
}

#[test]
fn almost_linear_ladder_grows_like_log_log() {
    // ∫₁^T (1/(1+log t) − 1/t) dt/t = log(1 + log T) − ... ; closed form
    let w = WeightGauge::almost_linear();
    let r = classify_growth(&w, 1024.0).unwrap();
    for (u, v) in &r.divergence_estimate {
        let exact = (1.0 + u).ln() - (1.0 - (-u).exp());
        assert!((v - exact).abs() < 1e-10, "{u}: {v} vs {exact}");
    }
}

#[test]
fn derivative_ladder_matches_closed_form() {
    let w = WeightGauge::sublinear(1.0).unwrap();
    let r = classify_growth(&w, 64.0).unwrap();
    for (lt, v) in &r.derivative_growth {
        let t = lt.exp();
        let exact = t * lt / (2.0 + lt).powi(3);
        assert!((v - exact).abs() <= 1e-6 * exact.abs().max(1.0), "{lt}");
    }
}

#[test]
fn affine_p_and_q_are_comparable() {
    let w = WeightGauge::affine(2.0).unwrap();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    let mut t: f64 = 1.0;
    while t <= 1e6 {
        let r = gauge_p(t, &w).unwrap() / gauge_q(t).unwrap();
        lo = lo.min(r);
        hi = hi.max(r);
        t *= 1.3;
    }
    assert!(lo > 0.5 && hi < 4.0, "{lo} {hi}");
}

#[test]
fn p_is_quadratic_below_one() {
    let w = WeightGauge::sublinear(0.5).unwrap();
    assert_eq!(gauge_p(0.5, &w).unwrap(), 0.25);
    assert_eq!(gauge_p(1.0, &w).unwrap(), 1.0);
}

#[test]
fn tabulated_matches_affine_nodes() {
    let t: Vec<f64> = (0..20).map(|i| 1.0 + i as f64 * 0.5).collect();
    let a: Vec<f64> = t.iter().map(|x| 2.0 * (x - 1.0)).collect();
    let w = WeightGauge::tabulated(t, a).unwrap();
    assert!((w.eval(3.3).unwrap() - 4.6).abs() < 1e-12);
    assert!((w.eval(100.0).unwrap() - 198.0).abs() < 1e-9);
    assert_eq!(classify_growth(&w, horizon()).unwrap().verdict, Verdict::Diverges);
    assert!(WeightGauge::tabulated(vec![1.0, 2.0], vec![0.0, -1.0]).is_err());
}

#[test]
fn modulus_matches_quadratic_closed_form() {
    for t in [0.5, 0.1, 1e-3, 1e-8] {
        let m = modulus_m_p(t, None).unwrap();
        let exact = (1.0f64 / t).ln().powf(-0.5);
        assert!(!m.capped);
        assert!((m.value - exact).abs() <= 1e-7 * exact, "{t}");
    }
}

#[test]
fn modulus_monotone_in_t() {
    let w = WeightGauge::sublinear(1.0).unwrap();
    let mut prev = 0.0;
    for t in [1e-12, 1e-8, 1e-4, 0.01, 0.1, 0.5, 0.9] {
        let m = modulus_m_p(t, Some(&w)).unwrap().value;
        assert!(m > prev, "{t}");
        prev = m;
    }
}

#[test]
fn quadratic_norms_match_l2() {
    let u: Vec<f64> = (0..50).map(|i| ((i as f64) * 0.37).sin() * 2.0).collect();
    let area = vec![0.02; 50];
    let l2 = u.iter().map(|x| x * x * 0.02).sum::<f64>().sqrt();
    let s = OrliczSpec::new(2, 0.0, 1.0).unwrap();
    let lux = luxemburg_norm(&u, &area, &s).unwrap();
    let orl = orlicz_norm(&u, &area, &s).unwrap();
    assert!((lux - l2).abs() < 1e-7 * l2);
    assert!((orl - 2.0 * l2).abs() < 1e-7 * l2, "{orl} {l2}");
}

fn young_conjugate_ratio_sandwich(u: &[f64], area: &[f64], s: &OrliczSpec) {
    let lux = luxemburg_norm(u, area, s).unwrap();
    let orl = orlicz_norm(u, area, s).unwrap();
    assert!(lux <= orl * (1.0 + 1e-7) && orl <= 2.0 * lux * (1.0 + 1e-7), "{lux} {orl}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_round_trips(eps in 0.1f64..3.0, lt in 0.01f64..40.0) {
        let w = WeightGauge::sublinear(eps).unwrap();
        let t = lt.exp();
        let back = w.inverse(w.eval(t).unwrap()).unwrap();
        prop_assert!((back - t).abs() <= 1e-10 * t);
    }

    #[test]
    fn weights_are_increasing(eps in 0.1f64..3.0, a in 1.0f64..1e8, f in 1.0001f64..10.0) {
        for w in [WeightGauge::sublinear(eps).unwrap(), WeightGauge::almost_linear()] {
            prop_assert!(w.eval(a * f).unwrap() > w.eval(a).unwrap());
        }
    }

    #[test]
    fn norm_sandwich(vals in prop::collection::vec(-5.0f64..5.0, 4..40), j in 1u32..4, q in 0.0f64..2.0) {
        let area = vec![1.0 / vals.len() as f64; vals.len()];
        let s = OrliczSpec::new(j, q, 1.0).unwrap();
        if vals.iter().any(|v| *v != 0.0) {
            young_conjugate_ratio_sandwich(&vals, &area, &s);
        }
    }

    #[test]
    fn logarithmic_product_bound(q in 0.0f64..1.0, s in 0.0f64..1e6, t in 0.0f64..1e6) {
        // st·log^q(e + st) ≤ 2^q s·log^q(e+s)·t·log^q(e+t) for q in [0,1]
        let m = |x: f64| x * (std::f64::consts::E + x).ln().powf(q);
        let lhs = m(s * t);
        let rhs = 2f64.powf(q) * m(s) * m(t);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn energy_inequality(p in 0.5f64..10.0, k in 1.0f64..3.0, th in 0.0f64..6.3, x in 0.0f64..1e3, phi in 0.0f64..6.3) {
        // σ with eigenvalues λ, 1/λ·d inside the distortion class K; λ up to √K-scale
        use condbench_core::mat2::Sym2;
        let lam1 = k.sqrt();
        let lam2 = 1.0 / k.sqrt();
        let sig = Sym2::from_frame(th, lam1, lam2);
        let xi = [x * phi.cos(), x * phi.sin()];
        let n2 = xi[0] * xi[0] + xi[1] * xi[1];
        let e = sig.quad(xi);
        let sx = sig.apply(xi);
        let m2 = sx[0] * sx[0] + sx[1] * sx[1];
        let kk = lam1 / lam2;
        let bound = e + (p * kk).exp();
        prop_assert!(p * n2 / (std::f64::consts::E + n2).ln() <= bound);
        prop_assert!(p * m2 / (std::f64::consts::E + m2).ln() <= bound);
    }
}

#[test]
fn p_integral_identity() {
    use condbench_core::quad::integrate;
    let w = WeightGauge::sublinear(1.0).unwrap();
    for lt in [2.0, 10.0, 50.0] {
        let lhs = integrate(|x| 1.0 / w.inverse(2.0 * x).unwrap(), 0.0, lt, 1e-13, 1e-11).unwrap();
        let tp = w.inverse(2.0 * lt).unwrap();
        let rhs = 0.5 * integrate(|v| w.ratio_at_log(v), 0.0, tp.ln(), 1e-13, 1e-11).unwrap()
            + 0.5 * w.eval(tp).unwrap() / tp;
        assert!((lhs - rhs).abs() < 1e-8 * lhs, "{lt}: {lhs} {rhs}");
    }
}
