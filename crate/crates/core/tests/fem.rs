use std::f64::consts::PI;
use std::sync::Arc;

use condbench_core::conductivity::*;
use condbench_core::fem::*;
use condbench_core::maps::*;
use condbench_core::mat2::Sym2;
use condbench_core::mesh::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn disc(level: u32) -> TriMesh {
    TriMesh::uniform_disc(level).unwrap()
}

/// Rings graded toward radius `focus` with the given anchors.
fn graded(focus: f64, anchors: &[f64], h_min: f64, n_out: usize) -> TriMesh {
    let mut rr = log_radii(0.05, focus, 20.0);
    rr.pop();
    rr.extend(graded_radii(focus, h_min, 0.9, 0.02, anchors).unwrap());
    let counts = counts_for(&rr, n_out, 16, 1.0);
    TriMesh::rings(&rr, &counts).unwrap()
}

#[test]
fn identity_modes_have_energy_n_pi() {
    let m = disc(5);
    let one = ConstantField(Sym2::IDENTITY);
    for n in 1..=3u32 {
        let q = dn_form(&one, &DirichletData::cos(n), &m, QuadratureRule::OnePoint).unwrap();
        let rel = q / (n as f64 * PI) - 1.0;
        assert!(rel.abs() < 2e-3 * (n * n) as f64, "n = {n}: {q}");
    }
    let q0 = dn_form(&one, &DirichletData::constant(3.0), &m, QuadratureRule::OnePoint).unwrap();
    assert!(q0.abs() < 1e-12);
}

#[test]
fn identity_error_decreases_with_refinement() {
    let one = ConstantField(Sym2::IDENTITY);
    let e: Vec<f64> = (3..=5)
        .map(|l| (dn_form(&one, &DirichletData::cos(1), &disc(l), QuadratureRule::OnePoint).unwrap() - PI).abs())
        .collect();
    assert!(e[1] < e[0] / 3.0 && e[2] < e[1] / 3.0, "{e:?}");
}

#[test]
fn dn_matrix_of_identity_is_diagonal() {
    let dn = dn_map_matrix(&ConstantField(Sym2::IDENTITY), &disc(5), 3, QuadratureRule::OnePoint).unwrap();
    assert_eq!(dn.dim(), 7);
    for i in 0..7 {
        let n = ((i + 1) / 2) as f64;
        assert!((dn.get(i, i) - n * PI).abs() < 2e-2 * (1.0 + n * n), "{i}: {}", dn.get(i, i));
        for j in 0..7 {
            if i != j {
                assert!(dn.get(i, j).abs() < 1e-6, "{i},{j}: {}", dn.get(i, j));
            }
        }
    }
    let h = DirichletData { terms: vec![(1, 1.0, 0.0), (2, 0.0, 0.5)] };
    let direct = dn_form(&ConstantField(Sym2::IDENTITY), &h, &disc(5), QuadratureRule::OnePoint).unwrap();
    assert!((dn.quadratic_form(&h).unwrap() - direct).abs() < 1e-9);
    assert_eq!(DnMatrix::basis_label(4), "sin2");
}

#[test]
fn insulating_disc_matches_closed_form() {
    // oracle: u = (2/5)(r + 1/r) cos θ; energy by direct quadrature of |∇u|² on 1 < r < 2
    let oracle = {
        let (x, w) = condbench_core::quad::gauss_legendre(40);
        let mut e = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            let r = 1.5 + 0.5 * xi;
            let ur = 0.4 * (1.0 - 1.0 / (r * r));
            let ut = 0.4 * (1.0 + 1.0 / (r * r));
            // ∫cos² = ∫sin² = π
            e += 0.5 * wi * PI * (ur * ur + ut * ut) * r;
        }
        e
    };
    assert!((oracle - 0.6 * PI).abs() < 1e-12);
    let m = graded(1.0, &[1.0], 0.005, 256);
    let q = dn_form(&InsulatingDisc { radius: 1.0 }, &DirichletData::cos(1), &m, QuadratureRule::OnePoint).unwrap();
    assert!((q / oracle - 1.0).abs() < 2e-3, "{q} vs {oracle}");
}

/// Radial anisotropic field: Q[cos nθ] = 2π λr(2) f'(2) for (s λr f')' = n² λt f / s, f(2) = 1.
fn shooting_oracle(lr: impl Fn(f64) -> f64, lt: impl Fn(f64) -> f64, n: f64) -> f64 {
    // f ≈ s^m near 0 with m = n sqrt(λt(0)/λr(0)); integrate y = (f, s λr f') by RK4 in t = ln s
    let m = n * (lt(0.0) / lr(0.0)).sqrt();
    let t0 = (1e-4f64).ln();
    let t1 = 2f64.ln();
    let steps = 20000;
    let h = (t1 - t0) / steps as f64;
    let rhs = |t: f64, y: [f64; 2]| {
        let s = t.exp();
        [y[1] / lr(s), n * n * lt(s) * y[0]]
    };
    let s0 = t0.exp();
    let mut y = [s0.powf(m), lr(s0) * m * s0.powf(m)];
    let mut t = t0;
    for _ in 0..steps {
        let k1 = rhs(t, y);
        let k2 = rhs(t + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
        let k3 = rhs(t + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
        let k4 = rhs(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for i in 0..2 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += h;
    }
    // s λr f' at s = 2, with f normalised to 1
    PI * y[1] / y[0]
}

#[test]
fn anisotropic_radial_field_matches_shooting() {
    let lr = |s: f64| 1.0 + 0.5 * s * s;
    let lt = |s: f64| 2.0 - 0.25 * s;
    let field = RadialField::anisotropic(Arc::new(lr), Arc::new(lt), 2.0);
    let m = disc(5);
    for n in [1u32, 2] {
        let oracle = shooting_oracle(lr, lt, n as f64);
        let q = dn_form(&field, &DirichletData::cos(n), &m, QuadratureRule::ThreePoint).unwrap();
        assert!((q / oracle - 1.0).abs() < 1e-2, "n = {n}: {q} vs {oracle}");
    }
}

#[test]
fn cloak_ladder_matches_excised_closed_form() {
    let rl = [0.5, 0.25, 0.125, 0.0625];
    let anchors: Vec<f64> = rl.iter().map(|r| 1.0 + r / 2.0).collect();
    let m = graded(1.0, &anchors, 0.002, 256);
    let r = regularized_dn_form(&standard_cloak(), &DirichletData::cos(1), &m, &rl, &HoleModel::Cloak, QuadratureRule::ThreePoint).unwrap();
    for (rr, hole, q) in &r.ladder {
        let exact = PI * (4.0 - rr * rr) / (4.0 + rr * rr);
        assert!((hole - (1.0 + rr / 2.0)).abs() < 1e-15);
        assert!((q / exact - 1.0).abs() < 1e-2, "r = {rr}: {q} vs {exact}");
    }
    assert!(r.monotone);
    assert!((r.extrapolated / PI - 1.0).abs() < 2e-2, "{}", r.extrapolated);
}

#[test]
fn degenerate_core_points_to_regularization() {
    let err = dn_form(&standard_cloak(), &DirichletData::cos(1), &disc(3), QuadratureRule::OnePoint).unwrap_err();
    assert!(format!("{err}").contains("regularized_dn_form"), "{err}");
}

#[test]
fn ladder_validation() {
    let one = ConstantField(Sym2::IDENTITY);
    let m = disc(3);
    assert!(regularized_dn_form(&one, &DirichletData::cos(1), &m, &[0.5, 0.6], &HoleModel::Dipole, QuadratureRule::OnePoint).is_err());
    let bad = HoleModel::Preimage { abscissae: vec![0.1] };
    assert!(regularized_dn_form(&one, &DirichletData::cos(1), &m, &[0.5, 0.25], &bad, QuadratureRule::OnePoint).is_err());
}

#[test]
fn dipole_model_removes_artificial_hole() {
    let radii = [0.5, 0.25, 0.125];
    let mut rr = log_radii(0.05, 1.0, 16.0);
    insert_anchors(&mut rr, &radii);
    rr.pop();
    rr.extend((1..=24).map(|i| 1.0 + i as f64 / 24.0));
    let m = TriMesh::rings(&rr, &counts_for(&rr, 256, 16, 1.0)).unwrap();
    let one = ConstantField(Sym2::IDENTITY);
    let r = regularized_dn_form(&one, &DirichletData::cos(1), &m, &radii, &HoleModel::Dipole, QuadratureRule::OnePoint).unwrap();
    let full = dn_form(&one, &DirichletData::cos(1), &m, QuadratureRule::OnePoint).unwrap();
    assert!((r.extrapolated / full - 1.0).abs() < 2e-3, "{} vs {full}", r.extrapolated);
    let log = regularized_dn_form(&one, &DirichletData::cos(1), &m, &radii, &HoleModel::LogCapacity, QuadratureRule::OnePoint).unwrap();
    assert!(log.model.contains("log"));
}

#[test]
fn hilbert_transform_of_identity() {
    let dn = dn_map_matrix(&ConstantField(Sym2::IDENTITY), &disc(5), 2, QuadratureRule::OnePoint).unwrap();
    // Λ cos θ = cos θ / 2 on |z| = 2, so ℋ cos θ = ∫₀^θ cos t dt·(2·½) = sin θ
    let ht = hilbert_transform_sigma(&dn, &DirichletData::cos(1)).unwrap();
    for k in 0..8 {
        let t = k as f64 * 0.7;
        assert!((ht.eval(t) - t.sin()).abs() < 5e-3, "{t}: {}", ht.eval(t));
    }
    let hs = hilbert_transform_sigma(&dn, &DirichletData::sin(1)).unwrap();
    assert!((hs.eval(1.0) - (1.0 - 1f64.cos())).abs() < 5e-3);
}

#[test]
fn conjugate_field_of_identity_is_harmonic_conjugate() {
    let m = disc(4);
    let sig = element_sigmas(&ConstantField(Sym2::IDENTITY), &m, QuadratureRule::OnePoint).unwrap();
    let sys = FemSystem::new(&m, sig.clone()).unwrap();
    let sol = sys.solve(&DirichletData::cos(1)).unwrap();
    let cf = conjugate_field(&m, &sol, &sig).unwrap();
    assert!(cf.curl_residual < 1e-8 && cf.beltrami_residual < 1e-8, "{cf:?}");
    // v = y/2 up to a constant
    let c = cf.v[0] - m.vertices[0][1] / 2.0;
    for (p, v) in m.vertices.iter().zip(&cf.v) {
        assert!((v - c - p[1] / 2.0).abs() < 1e-8);
    }
}

#[test]
fn conjugate_field_of_anisotropic_constant() {
    let s = Sym2::from_frame(0.4, 3.0, 0.5);
    let m = disc(4);
    let sig = element_sigmas(&ConstantField(s), &m, QuadratureRule::OnePoint).unwrap();
    let sol = FemSystem::new(&m, sig.clone()).unwrap().solve(&DirichletData::sin(2)).unwrap();
    let cf = conjugate_field(&m, &sol, &sig).unwrap();
    assert!(cf.beltrami_residual < 0.05 && cf.curl_residual < 0.05, "{cf:?}");
}

#[test]
fn current_lines_of_uniform_field_are_straight() {
    let m = disc(4);
    let sig = element_sigmas(&ConstantField(Sym2::IDENTITY), &m, QuadratureRule::OnePoint).unwrap();
    let sol = FemSystem::new(&m, sig.clone()).unwrap().solve(&DirichletData::cos(1)).unwrap();
    let lines = current_lines(&m, &sol, &sig, &[[0.0, 0.5], [0.3, -1.0]], &StreamlineOptions::default()).unwrap();
    for (line, y0) in lines.iter().zip([0.5, -1.0]) {
        assert!(line.len() > 100);
        assert!(line.iter().all(|p| (p[1] - y0).abs() < 1e-6));
        let ends = [line[0], line[line.len() - 1]];
        assert!(ends.iter().all(|p| p[0].hypot(p[1]) > 1.9));
    }
    assert!(current_lines(&m, &sol, &sig, &[[2.5, 0.0]], &StreamlineOptions::default()).is_err());
}

#[test]
fn pushforward_preserves_dn_form() {
    // F(z) = z (1 + 0.2 (1 - |z|²/4)), a radial diffeomorphism fixing |z| = 2
    let base = RadialField::anisotropic(Arc::new(|s: f64| 1.0 + 0.3 * s), Arc::new(|_| 1.5), 2.0);
    struct Bulge;
    impl PlaneMap for Bulge {
        fn eval(&self, z: Complex64) -> condbench_core::Result<Complex64> {
            let s = z.norm();
            Ok(z * (1.0 + 0.2 * (1.0 - s * s / 4.0)))
        }
        fn jacobian(&self, z: Complex64) -> condbench_core::Result<condbench_core::mat2::Mat2> {
            let s = z.norm();
            let rho = s * (1.0 + 0.2 * (1.0 - s * s / 4.0));
            let drho = 1.2 - 0.15 * s * s;
            Ok(radial_jacobian(z, rho, drho))
        }
        fn domain(&self) -> Region {
            Region::DISC
        }
        fn codomain(&self) -> Region {
            Region::DISC
        }
    }
    let pushed = pushforward(base.clone(), Bulge);
    let m = disc(5);
    let h = DirichletData { terms: vec![(1, 1.0, 0.3), (2, 0.0, 0.5)] };
    let q0 = dn_form(&base, &h, &m, QuadratureRule::ThreePoint).unwrap();
    let q1 = dn_form(&pushed, &h, &m, QuadratureRule::ThreePoint).unwrap();
    assert!((q1 / q0 - 1.0).abs() < 5e-3, "{q0} {q1}");
}

fn random_sym(theta: f64, l1: f64, l2: f64) -> Sym2 {
    Sym2::from_frame(theta, l1, l2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn dn_monotone_in_sigma(theta in 0.0..PI, l1 in 0.2..5.0f64, l2 in 0.2..5.0f64,
                            phi in 0.0..PI, e1 in 0.0..2.0f64, e2 in 0.0..2.0f64,
                            a in -1.0..1.0f64, b in -1.0..1.0f64, c in -1.0..1.0f64) {
        let m = disc(2);
        let s1 = random_sym(theta, l1, l2);
        let s2 = s1.add(&random_sym(phi, e1, e2));
        let h = DirichletData { terms: vec![(1, a, b), (2, c, 0.0)] };
        let q1 = dn_form(&ConstantField(s1), &h, &m, QuadratureRule::OnePoint).unwrap();
        let q2 = dn_form(&ConstantField(s2), &h, &m, QuadratureRule::OnePoint).unwrap();
        prop_assert!(q1 <= q2 * (1.0 + 1e-12) + 1e-14, "{} > {}", q1, q2);
    }

    #[test]
    fn galerkin_solution_minimises_energy(theta in 0.0..PI, l1 in 0.2..5.0f64, l2 in 0.2..5.0f64,
                                          seed in 0u64..1000, amp in 0.01..1.0f64) {
        let m = disc(2);
        let s = random_sym(theta, l1, l2);
        let sig = element_sigmas(&ConstantField(s), &m, QuadratureRule::OnePoint).unwrap();
        let sys = FemSystem::new(&m, sig).unwrap();
        let sol = sys.solve(&DirichletData::cos(1)).unwrap();
        // perturb interior values
        let mut u = sol.u.clone();
        let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        for (v, val) in u.iter_mut().enumerate() {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            if !sys.is_boundary(v) {
                *val += amp * ((x >> 11) as f64 / (1u64 << 53) as f64 - 0.5);
            }
        }
        let mut e = 0.0;
        for (t, tri) in m.triangles.iter().enumerate() {
            let p = tri.map(|k| m.vertices[k]);
            let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
            let gx = ((u[tri[1]] - u[tri[0]]) * (p[2][1] - p[0][1]) - (u[tri[2]] - u[tri[0]]) * (p[1][1] - p[0][1])) / det;
            let gy = ((u[tri[2]] - u[tri[0]]) * (p[1][0] - p[0][0]) - (u[tri[1]] - u[tri[0]]) * (p[2][0] - p[0][0])) / det;
            e += m.area(t) * s.quad([gx, gy]);
        }
        prop_assert!(sol.energy <= e * (1.0 + 1e-12));
    }
}
