use std::path::Path;
use std::process::Command;

use condbench::cli::run;
use condbench::io::{read_complex, read_conductivity, write_complex, write_conductivity};
use condbench::jobs::{compare, compute_dn, compute_scatter, render_svg, DnParams, RenderParams, ScatterParams};
use condbench::spec::{parse_str, FieldKind};
use condbench::CliError;
use condbench_core::conductivity::GridConductivity;
use condbench_core::grid::GridField;
use condbench_core::mat2::Sym2;
use num_complex::Complex64;
use sha2::{Digest, Sha256};

fn args(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn pointer(e: CliError) -> Option<String> {
    match e {
        CliError::Validation { pointer, .. } => pointer,
        other => panic!("expected a validation error, got {other}"),
    }
}

fn sha(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn spec_errors_point_at_the_bad_value() {
    let e = parse_str(r#"{"kind":"hologram","weight":{"kind":"almost-linear"}}"#).unwrap_err();
    assert_eq!(e.to_string(), "/weight/kind: weight must be sublinear for hologram");
    assert_eq!(e.exit_code(), 2);
    let cases = [
        (r#"{"kind":"bump","amplitude":-2,"radius":1}"#, "/amplitude"),
        (r#"{"kind":"radial","gamma":{"r":[0,1],"values":[1,-1]}}"#, "/gamma/values/1"),
        (r#"{"kind":"radial","gamma":{"r":[0.5,0.2],"values":[1,2]}}"#, "/gamma/r"),
        (r#"{"kind":"constant","s11":1,"s12":2,"s22":1}"#, "/s11"),
        (r#"{"kind":"teapot"}"#, "/kind"),
        (r#"{"kind":"insulating"}"#, "/radius"),
        (r#"{"kind":"hologram","weight":{"kind":"sublinear","eps":"x"}}"#, "/weight/eps"),
    ];
    for (s, p) in cases {
        assert_eq!(pointer(parse_str(s).unwrap_err()).as_deref(), Some(p), "{s}");
    }
}

#[test]
fn radial_one_is_the_identity() {
    let f = parse_str(r#"{"kind":"radial","gamma":"1"}"#).unwrap();
    assert_eq!(f.kind, FieldKind::Radial);
    for z in [Complex64::new(0.3, -0.1), Complex64::new(-1.2, 0.9)] {
        let s = f.field.eval(z).unwrap().sigma;
        assert!((s.s11 - 1.0).abs() < 1e-15 && s.s12.abs() < 1e-15 && (s.s22 - 1.0).abs() < 1e-15);
    }
    let t = parse_str(r#"{"kind":"radial","gamma":{"r":[0,1],"values":[3,1]}}"#).unwrap();
    let s = t.field.eval(Complex64::new(0.5, 0.0)).unwrap().sigma;
    assert!((s.s11 - 2.0).abs() < 1e-12, "{s:?}");
}

#[test]
fn compare_dn_separates_identity_from_constant_two() {
    let a = parse_str(r#"{"kind":"identity"}"#).unwrap();
    let b = parse_str(r#"{"kind":"constant","s11":2,"s22":2}"#).unwrap();
    let p = DnParams { resolution: None, ladder: None, level: 3 };
    let hs = args(&["cos1", "sin2"]);
    let (qa, qb) = (compute_dn(&a, &hs, &p).unwrap(), compute_dn(&b, &hs, &p).unwrap());
    let c = compare(&qa, &qb, 0.02);
    assert!(c.iter().all(|c| c.verdict == "mismatch"));
    // Q scales linearly with a constant conductivity
    for c in &c {
        assert!((c.q_b / c.q_a - 2.0).abs() < 1e-9, "{c:?}");
    }
    assert!(compare(&qa, &qa, 0.02).iter().all(|c| c.verdict == "match"));
}

#[test]
fn grids_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let mut data: Vec<Sym2> = (0..16).map(|i| Sym2::new(1.0 + i as f64, 0.25 * i as f64, 2.0 / (1.0 + i as f64))).collect();
    data[5] = Sym2::new(f64::NAN, 0.0, f64::NAN);
    let g = GridConductivity { n: 4, half_width: 2.0, data };
    let p = dir.path().join("sigma.bin");
    write_conductivity(&p, &g).unwrap();
    let r = read_conductivity(&p).unwrap();
    assert_eq!((r.n, r.half_width), (4, 2.0));
    for (a, b) in g.data.iter().zip(&r.data) {
        assert_eq!(a.s11.to_bits(), b.s11.to_bits());
        assert_eq!(a.s12.to_bits(), b.s12.to_bits());
        assert_eq!(a.s22.to_bits(), b.s22.to_bits());
    }

    let mut c = GridField::zeros(8, 1.5).unwrap();
    for (i, v) in c.data.iter_mut().enumerate() {
        *v = Complex64::new(i as f64 * 0.1, -(i as f64).sqrt());
    }
    let p = dir.path().join("m.bin");
    write_complex(&p, &c).unwrap();
    let r = read_complex(&p).unwrap();
    assert_eq!(r.data, c.data);
    assert_eq!(r.half_width, 1.5);

    // wrong component layout and truncated payloads are rejected
    assert!(read_conductivity(&p).is_err());
    std::fs::write(&p, [0u8; 24]).unwrap();
    assert!(read_complex(&p).is_err());
    let tiny = GridConductivity { n: 1, half_width: 2.0, data: vec![Sym2::IDENTITY] };
    let p = dir.path().join("tiny.bin");
    write_conductivity(&p, &tiny).unwrap();
    assert!(read_conductivity(&p).unwrap_err().to_string().contains("empty field"));
}

#[test]
fn identical_runs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"{"kind":"bump","amplitude":0.5,"radius":0.8}"#;
    for out in ["a", "b"] {
        let o = dir.path().join(out);
        run(&args(&["build", "--spec", spec, "--grid", "24", "--samples", "50", "--out", o.to_str().unwrap()])).unwrap();
        run(&args(&["scatter", "--spec", spec, "--grid", "32", "--k-max", "2", "--step", "0.5", "--out", o.join("s").to_str().unwrap()])).unwrap();
    }
    for f in ["field.bin", "field.json", "spectral.csv", "integrability.csv", "s/tau.csv"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs between runs");
    }
    // manifests differ only in the recorded output directory
    for f in ["manifest.json", "s/manifest.json"] {
        let read = |d: &str| -> serde_json::Value {
            let mut m: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join(d).join(f)).unwrap()).unwrap();
            m.as_object_mut().unwrap().remove("args");
            m
        };
        assert_eq!(read("a"), read("b"), "{f}");
    }
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "build");
    assert_eq!(m["seed"], 1);
    assert_eq!(m["parameters"]["grid"], 24);
    assert_eq!(m["inputs"][0]["kind"], "bump");
    assert!(m["versions"]["condbench_core"].is_string());
}

#[test]
fn renders_are_reproducible() {
    // digests frozen from a reference run; a change means the picture changed
    let frozen = [
        (r#"{"kind":"identity"}"#, "560509fabb9230554df355fbddb3080d1f811cbf46d7df51e14725c05cdfea6f"),
        (r#"{"kind":"cloak"}"#, "b36042b680d8ad8814f918ac689b26a271bb41a3deefb2f55ce4107b9a4bd5f6"),
        (r#"{"kind":"hologram","weight":{"kind":"sublinear","eps":2}}"#, "5e1985eccadb8041ce1bee3e329e2e70d246c6135cd5514723217bed9a3c08d5"),
    ];
    let p = RenderParams { grid: 48, lines: 6, size: 240, ..RenderParams::default() };
    for (s, want) in frozen {
        let f = parse_str(s).unwrap();
        let svg = render_svg(Some(&f), None, &p).unwrap();
        assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
        assert_eq!(sha(svg.as_bytes()), sha(render_svg(Some(&f), None, &p).unwrap().as_bytes()));
        assert_eq!(sha(svg.as_bytes()), want, "{s}");
    }
}

#[test]
fn identity_scatters_nothing() {
    let f = parse_str(r#"{"kind":"identity"}"#).unwrap();
    let tau = compute_scatter(&f, &ScatterParams { grid: 32, half_width: 2.0, k_max: 4.0, step: 0.5 }).unwrap();
    assert!(tau.values.iter().all(|t| t.norm() == 0.0), "{:?}", tau.values);
}

fn bin(argv: &[&str], cwd: &Path) -> (i32, String, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_condbench")).args(argv).current_dir(cwd).output().unwrap();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stdout).into_owned(), String::from_utf8_lossy(&o.stderr).into_owned())
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (code, out, _) = bin(&["build", "--spec", r#"{"kind":"identity"}"#, "--grid", "8", "--samples", "5", "--out", "ok"], d);
    assert_eq!(code, 0);
    assert!(out.contains("\"regular_samples\":5"), "{out}");
    assert!(d.join("ok/manifest.json").exists());

    let (code, _, err) = bin(&["build", "--spec", r#"{"kind":"hologram","weight":{"kind":"almost-linear"}}"#, "--out", "x"], d);
    assert_eq!(code, 2);
    assert!(err.contains("/weight/kind"), "{err}");
    assert_eq!(bin(&["dbar", "--spec", r#"{"kind":"identity"}"#, "--k-max", "-1", "--out", "x"], d).0, 2);
    assert_eq!(bin(&["solve", "--spec", r#"{"kind":"cloak"}"#, "--out", "x"], d).0, 2);
    assert_eq!(bin(&["build", "--spec", "missing.json", "--out", "x"], d).0, 4);
    assert_eq!(bin(&["frobnicate"], d).0, 2);
    assert_eq!(bin(&["--version"], d).0, 0);

    let core = |e: condbench_core::Error| CliError::from(e).exit_code();
    assert_eq!(core(condbench_core::Error::convergence("stalled")), 3);
    assert_eq!(core(condbench_core::Error::numeric("nan").at("solve")), 3);
    assert_eq!(core(condbench_core::Error::domain("outside")), 2);
}

#[test]
fn batch_runs_every_job() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let jobs = serde_json::json!([
        ["build", "--spec", "{\"kind\":\"identity\"}", "--grid", "8", "--samples", "5", "--out", "b1"],
        ["dbar", "--spec", "{\"kind\":\"identity\"}", "--k-max", "0", "--out", "b2"],
        ["dn", "--spec", "{\"kind\":\"identity\"}", "--level", "2", "--out", "b3"],
    ]);
    std::fs::write(d.join("jobs.json"), jobs.to_string()).unwrap();
    let (code, out, _) = bin(&["batch", "--jobs", "jobs.json"], d);
    assert_eq!(code, 1);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!((v["jobs"].as_u64(), v["failed"].as_u64()), (Some(3), Some(1)));
    assert_eq!(v["results"][1]["exit_code"], 2);
    assert!(d.join("b1/manifest.json").exists() && d.join("b3/dn.csv").exists());

    std::fs::write(d.join("nest.json"), r#"[["batch","--jobs","nest.json"]]"#).unwrap();
    assert_eq!(bin(&["batch", "--jobs", "nest.json"], d).0, 2);
}
