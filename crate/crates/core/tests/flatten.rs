use condbench_core::conductivity::{radial_bump, BlendedPatch, ConductivityField};
use condbench_core::flatten::*;
use condbench_core::mat2::Sym2;
use num_complex::Complex64;

#[test]
fn isotropic_input_needs_no_map() {
    let f = isothermal_flatten(&radial_bump(0.5, 0.8), &FlattenOptions { n: 64, samples: 200, ..FlattenOptions::default() }).unwrap();
    assert!(f.mu_hat.sup() == 0.0);
    for s in &f.samples {
        assert!((s.y - s.z).norm() < 1e-12);
    }
    assert!(f.max_anisotropy < 1e-12 && f.max_det_error < 1e-12);
}

#[test]
fn blended_patch_becomes_isotropic() {
    let patch = BlendedPatch::new(Sym2::new(4.0, 0.0, 0.25), 0.4, 0.9).unwrap();
    let f = isothermal_flatten(&patch, &FlattenOptions::default()).unwrap();
    assert_eq!(f.samples.len(), 1000);
    assert!(f.max_offdiag <= 1e-2, "{}", f.max_offdiag);
    assert!(f.max_det_error <= 1e-3, "{}", f.max_det_error);
    // the map's distortion is the conductivity's: √(λ₁/λ₂)
    assert!(f.max_k_error <= 1e-2, "{}", f.max_k_error);
    assert!(f.truncation.is_none());
    // the centre of the patch carries the full diag(4, 1/4)
    let c = f.samples.iter().find(|s| s.z.norm() < 0.4).unwrap();
    assert!((c.k_sigma - 4.0).abs() < 1e-12);
    // F_*σ has det σ ∘ F⁻¹ as its isotropic value
    let g = f.isotropic_field(&patch, 32, 1.0).unwrap();
    let s = g.eval(Complex64::new(0.0, 0.0)).unwrap().sigma;
    assert!((s.s11 - s.s22).abs() < 2e-2 * s.s11 && (s.det() - 1.0).abs() < 1e-2, "{s:?}");
    let y = f.samples[500].y;
    let z = f.pull_back(y).unwrap();
    assert!((z - f.samples[500].z).norm() < 1e-8);
}
