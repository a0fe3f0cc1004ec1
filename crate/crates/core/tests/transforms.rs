use condbench_core::grid::GridField;
use condbench_core::transforms::*;
use num_complex::Complex64;
use std::f64::consts::PI;

fn disc_indicator(n: usize, r: f64) -> GridField {
    GridField::from_fn(n, r, |z| if z.norm() < 1.0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }).unwrap()
}

fn probes() -> Vec<Complex64> {
    let mut out = Vec::new();
    for rad in [1.5, 2.0] {
        for k in 0..8 {
            out.push(Complex64::from_polar(rad, k as f64 * PI / 4.0));
        }
    }
    out
}

#[test]
fn cauchy_and_beurling_of_disc_indicator() {
    let g = disc_indicator(512, 4.0);
    let plan = TransformPlan::for_grid(&g).unwrap();
    let (c, s) = plan.cauchy_beurling(&g).unwrap();
    let h = g.spacing();
    let mut worst = (0.0f64, 0.0f64);
    for z in probes() {
        let (i, j) = g.nearest(z).unwrap();
        let p = g.point(i, j);
        let ce = 1.0 / p;
        let se = -1.0 / (p * p);
        let ec = (c.data[i * 512 + j] - ce).norm() / ce.norm();
        let es = (s.data[i * 512 + j] - se).norm() / se.norm();
        worst = (worst.0.max(ec), worst.1.max(es));
    }
    println!("C rel {:.2e}, S rel {:.2e}, 2h = {:.2e}", worst.0, worst.1, 2.0 * h);
    assert!(worst.0 < 2.0 * h && worst.1 < 2.0 * h, "{worst:?}");
    // inside: C = z̄, S = 0
    let (i, j) = g.nearest(Complex64::new(0.25, -0.5)).unwrap();
    assert!((c.data[i * 512 + j] - g.point(i, j).conj()).norm() < 2.0 * h);
    assert!(s.data[i * 512 + j].norm() < 0.05);
}

#[test]
fn zero_maps_to_zero() {
    let g = GridField::zeros(128, 2.0).unwrap();
    let plan = TransformPlan::for_grid(&g).unwrap();
    assert_eq!(plan.cauchy(&g).unwrap().sup(), 0.0);
    assert_eq!(plan.beurling(&g).unwrap().sup(), 0.0);
}

fn gaussian_bump(n: usize, r: f64) -> GridField {
    GridField::from_fn(n, r, |z| {
        let w = z - Complex64::new(0.3, -0.2);
        Complex64::new(1.0, 0.5) * (-4.0 * w.norm_sqr()).exp() * (1.0 + w)
    })
    .unwrap()
}

#[test]
fn dbar_of_cauchy_is_identity_on_smooth_data() {
    let g = gaussian_bump(256, 4.0);
    let plan = TransformPlan::for_grid(&g).unwrap();
    let c = plan.cauchy(&g).unwrap();
    let (_, db) = c.wirtinger();
    let n = g.n;
    let mut err = 0.0f64;
    for i in 8..n - 8 {
        for j in 8..n - 8 {
            err = err.max((db.data[i * n + j] - g.data[i * n + j]).norm());
        }
    }
    assert!(err < 1e-3, "{err}");
}

#[test]
fn beurling_is_an_isometry_on_mean_zero_data() {
    // ∂ of a compactly supported bump has mean zero
    let g = gaussian_bump(256, 4.0).wirtinger().0;
    let plan = TransformPlan::for_grid(&g).unwrap();
    let s = plan.beurling(&g).unwrap();
    assert!((s.l2() / g.l2() - 1.0).abs() < 1e-3, "{} {}", s.l2(), g.l2());
    assert!(periodization_warning(&GridField::from_fn(64, 2.0, |_| Complex64::new(1.0, 0.0)).unwrap()).is_some());
}

#[test]
fn beurling_is_derivative_of_cauchy() {
    let g = gaussian_bump(256, 4.0);
    let plan = TransformPlan::for_grid(&g).unwrap();
    let (c, s) = plan.cauchy_beurling(&g).unwrap();
    let (d, _) = c.wirtinger();
    let n = g.n;
    let mut err = 0.0f64;
    for i in 64..n - 64 {
        for j in 64..n - 64 {
            err = err.max((d.data[i * n + j] - s.data[i * n + j]).norm());
        }
    }
    assert!(err < 5e-3, "{err}");
}
