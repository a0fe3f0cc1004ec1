//! The workbench jobs. Each `run_*` function computes, writes its artifacts
//! and a manifest into `out`, and returns the summary that went into the
//! manifest. The `compute_*` functions do the numerics without touching disk.

use std::f64::consts::PI;
use std::path::Path;

use condbench_core::cgo::{cgo_solve, CgoOptions, RadialTau, TauConvention};
use condbench_core::conductivity::{
    spectral_of, ConductivityField, Degeneracy, Excised, GridConductivity, IntegrabilityClass, QuadratureOptions, DOMAIN_RADIUS,
};
use condbench_core::dbar::{reconstruct_sigma, ReconstructionOptions, ReconstructionReport};
use condbench_core::fem::{current_lines, dn_form, element_sigmas, regularized_dn_form, solve_dirichlet, DirichletData, FemSystem, HoleModel, QuadratureRule, StreamlineOptions};
use condbench_core::flatten::{isothermal_flatten, FlattenOptions, Flattening};
use condbench_core::gmres::GmresOptions;
use condbench_core::grid::GridField;
use condbench_core::maps::hologram_conductivity;
use condbench_core::mesh::{focused_mesh, log_mesh, TriMesh};
use condbench_core::transforms::TransformPlan;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::exec::Rayon;
use crate::io::{write_atomic, write_complex, write_conductivity, Cell, Table};
use crate::manifest::Manifest;
use crate::spec::{BuiltField, FieldKind};
use crate::svg::{render, Raster};

/// Parses boundary data such as `cos1`, `sin2`, `const`, `0.5*cos3+sin1`.
pub fn parse_h(s: &str) -> CliResult<DirichletData> {
    let mut terms = Vec::new();
    for part in s.split('+').map(str::trim) {
        let (coef, body) = match part.split_once('*') {
            Some((c, b)) => (c.trim().parse::<f64>().map_err(|_| CliError::invalid(format!("bad coefficient in `{part}`")))?, b.trim()),
            None => (1.0, part),
        };
        let term = if body == "const" {
            (0, coef, 0.0)
        } else if let Some(n) = body.strip_prefix("cos") {
            (n.parse::<u32>().map_err(|_| CliError::invalid(format!("bad mode in `{part}`")))?, coef, 0.0)
        } else if let Some(n) = body.strip_prefix("sin") {
            (n.parse::<u32>().map_err(|_| CliError::invalid(format!("bad mode in `{part}`")))?, 0.0, coef)
        } else {
            return Err(CliError::invalid(format!("boundary data `{part}` is not cos<n>, sin<n> or const")));
        };
        terms.push(term);
    }
    Ok(DirichletData { terms })
}

fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A point uniformly distributed in B(radius).
fn disc_point(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    Complex64::from_polar(radius * rng.gen::<f64>().sqrt(), 2.0 * PI * rng.gen::<f64>())
}

/// n×n samples over [−2, 2]²; NaN where the field is degenerate or undefined.
pub fn sample_grid(field: &dyn ConductivityField, n: usize) -> CliResult<GridConductivity> {
    if n < 2 {
        return Err(CliError::invalid("empty field"));
    }
    let h = 2.0 * DOMAIN_RADIUS / n as f64;
    let nan = condbench_core::mat2::Sym2::new(f64::NAN, 0.0, f64::NAN);
    let mut data = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let z = Complex64::new(-DOMAIN_RADIUS + j as f64 * h, -DOMAIN_RADIUS + i as f64 * h);
            data.push(if z.norm() > DOMAIN_RADIUS {
                condbench_core::mat2::Sym2::IDENTITY
            } else {
                match field.eval(z) {
                    Ok(s) if s.is_regular() => s.sigma,
                    _ => nan,
                }
            });
        }
    }
    Ok(GridConductivity { n, half_width: DOMAIN_RADIUS, data })
}

fn finish(out: &Path, mut manifest: Manifest, field: Option<&BuiltField>, parameters: Value, outputs: &[&str], results: Value) -> CliResult<Value> {
    manifest.parameters = parameters;
    manifest.inputs = field.map(|f| vec![f.spec.clone()]).unwrap_or_default();
    manifest.outputs = outputs.iter().map(|s| s.to_string()).collect();
    manifest.results = results.clone();
    manifest.write(out)?;
    Ok(results)
}

// ---------------------------------------------------------------- build

#[derive(Clone, Debug, Serialize)]
pub struct BuildParams {
    pub grid: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for BuildParams {
    fn default() -> Self {
        BuildParams { grid: 128, samples: 1000, seed: 1 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BuildReport {
    pub kind: &'static str,
    pub regular_samples: usize,
    pub degenerate_samples: usize,
    /// max |det σ − 1| over regular samples.
    pub det_max_deviation: f64,
    /// max over regular samples of √(λ₁/λ₂).
    pub max_anisotropy: f64,
    /// (class, verdict) of the integrability ladders.
    pub integrability: Vec<(String, String)>,
}

pub fn run_build(f: &BuiltField, p: &BuildParams, out: &Path, manifest: Manifest) -> CliResult<Value> {
    if p.grid < 2 || p.samples == 0 {
        return Err(CliError::invalid("grid must be >= 2 and samples >= 1"));
    }
    let grid = sample_grid(&*f.field, p.grid)?;
    write_conductivity(&out.join("field.bin"), &grid)?;
    let mut rng = seeded(p.seed);
    let mut t = Table::new(&["x", "y", "mask", "lambda1", "lambda2", "trace", "det", "k_sigma", "k"]);
    let (mut regular, mut degenerate, mut det_dev, mut aniso) = (0, 0, 0.0f64, 1.0f64);
    for _ in 0..p.samples {
        let z = disc_point(&mut rng, DOMAIN_RADIUS);
        // points where the field is undefined (a cloaked core) are reported as such
        let s = f.field.eval(z).unwrap_or(condbench_core::conductivity::Sample::undefined());
        let mask = match s.mask {
            Degeneracy::None => "regular",
            Degeneracy::Zero => "zero",
            Degeneracy::Infinite => "infinite",
            Degeneracy::Undefined => "undefined",
        };
        let mut row: Vec<Cell> = vec![z.re.into(), z.im.into(), mask.into()];
        match spectral_of(&s) {
            Ok(r) => {
                row.extend([r.lambda1, r.lambda2, r.trace, r.det, r.k_sigma, r.k].map(Cell::from));
                if s.is_regular() {
                    regular += 1;
                    det_dev = det_dev.max((r.det - 1.0).abs());
                    aniso = aniso.max(r.k_sigma);
                } else {
                    degenerate += 1;
                }
            }
            Err(_) => {
                degenerate += 1;
                row.extend(std::iter::repeat_with(|| Cell::from("")).take(6));
            }
        }
        t.row(row);
    }
    t.write(&out.join("spectral.csv"))?;
    let mut classes = vec![("trace".to_string(), IntegrabilityClass::Trace), ("exp_p1".to_string(), IntegrabilityClass::ExpP { p: 1.0 })];
    if let FieldKind::Hologram { weight } = &f.kind {
        classes.push(("exp_weight".to_string(), IntegrabilityClass::ExpA { weight: weight.clone() }));
    }
    let mut t = Table::new(&["class", "delta", "integral", "verdict"]);
    let mut verdicts = Vec::new();
    for (name, class) in &classes {
        let rep = condbench_core::conductivity::integrability_check(&*f.field, class, &QuadratureOptions::default())?;
        for (d, v) in &rep.integral_ladder {
            t.row([Cell::from(name.as_str()), (*d).into(), (*v).into(), rep.verdict.as_str().into()]);
        }
        verdicts.push((name.clone(), rep.verdict.as_str().to_string()));
    }
    t.write(&out.join("integrability.csv"))?;
    let report = BuildReport {
        kind: f.kind.name(),
        regular_samples: regular,
        degenerate_samples: degenerate,
        det_max_deviation: det_dev,
        max_anisotropy: aniso,
        integrability: verdicts,
    };
    finish(out, manifest, Some(f), json!(p), &["field.bin", "field.json", "spectral.csv", "integrability.csv"], json!(report))
}

// ---------------------------------------------------------------- solve

#[derive(Clone, Debug, Serialize)]
pub struct SolveParams {
    pub h: String,
    /// Uniform disc refinement level (outer ring has 8·2^level nodes).
    pub level: u32,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams { h: "cos1".into(), level: 5 }
    }
}

pub fn run_solve(f: &BuiltField, p: &SolveParams, out: &Path, manifest: Manifest) -> CliResult<Value> {
    let h = parse_h(&p.h)?;
    if p.level > 9 {
        return Err(CliError::invalid("level must be at most 9"));
    }
    let mesh = TriMesh::uniform_disc(p.level)?;
    let sol = solve_dirichlet(&*f.field, &h, &mesh, QuadratureRule::OnePoint)?;
    let mut t = Table::new(&["x", "y", "u"]);
    for (v, u) in mesh.vertices.iter().zip(&sol.u) {
        t.row([v[0].into(), v[1].into(), (*u).into()]);
    }
    t.write(&out.join("solution.csv"))?;
    let results = json!({ "energy": sol.energy, "triangles": mesh.triangles.len(), "vertices": mesh.n_vertices() });
    finish(out, manifest, Some(f), json!(p), &["solution.csv"], results)
}

// ---------------------------------------------------------------- dn

#[derive(Clone, Debug, Serialize)]
pub struct DnParams {
    /// Mesh resolution (outer ring nodes); None picks the per-kind default.
    pub resolution: Option<usize>,
    /// Excision ladder: cloak r values, or ρ − 1 values for a hologram.
    pub ladder: Option<Vec<f64>>,
    /// Uniform disc level for regular fields.
    pub level: u32,
}

impl Default for DnParams {
    fn default() -> Self {
        DnParams { resolution: None, ladder: None, level: 6 }
    }
}

pub const CLOAK_LADDER: [f64; 4] = [0.5, 0.25, 0.125, 0.0625];
pub const HOLOGRAM_LADDER: [f64; 4] = [0.6, 0.5, 0.4, 0.3];

#[derive(Clone, Debug, Serialize)]
pub struct DnValue {
    pub h: String,
    pub q: f64,
    /// (r, hole radius, Q_r) when an excision ladder was used.
    pub ladder: Vec<(f64, f64, f64)>,
    pub model: String,
    pub monotone: bool,
    pub triangles: usize,
}

/// Q_σ[h] for each h: an excision ladder with extrapolation for the cloak and
/// the hologram, a direct solve otherwise.
pub fn compute_dn(f: &BuiltField, hs: &[String], p: &DnParams) -> CliResult<Vec<DnValue>> {
    let data: Vec<DirichletData> = hs.iter().map(|h| parse_h(h)).collect::<CliResult<_>>()?;
    let mut out = Vec::new();
    match &f.kind {
        FieldKind::Cloak => {
            let rl = p.ladder.clone().unwrap_or(CLOAK_LADDER.to_vec());
            if rl.iter().any(|r| !(*r > 0.0 && *r < 2.0)) {
                return Err(CliError::at("/ladder", "cloak ladder values must lie in (0, 2)"));
            }
            let holes: Vec<f64> = rl.iter().map(|r| HoleModel::Cloak.hole_radius(*r)).collect();
            let mesh = focused_mesh(1.0, &holes, 1e-3, 0.9, 0.01, p.resolution.unwrap_or(512))?;
            for (h, d) in hs.iter().zip(&data) {
                let r = regularized_dn_form(&*f.field, d, &mesh, &rl, &HoleModel::Cloak, QuadratureRule::ThreePoint)?;
                out.push(DnValue { h: h.clone(), q: r.extrapolated, ladder: r.ladder, model: r.model.into(), monotone: r.monotone, triangles: mesh.triangles.len() });
            }
        }
        FieldKind::Hologram { weight } => {
            let deltas = p.ladder.clone().unwrap_or(HOLOGRAM_LADDER.to_vec());
            let holo = hologram_conductivity(weight)?;
            let holes: Vec<f64> = deltas.iter().map(|d| holo.map.profile.inverse_rho_minus_one(*d)).collect::<condbench_core::Result<_>>()?;
            let inner = holes.iter().copied().fold(f64::INFINITY, f64::min);
            let n = p.resolution.unwrap_or(128);
            let mesh = log_mesh(inner, &holes, 10.0, n, n)?;
            let model = HoleModel::Preimage { abscissae: deltas.clone() };
            for (h, d) in hs.iter().zip(&data) {
                let r = regularized_dn_form(&holo, d, &mesh, &holes, &model, QuadratureRule::RadialEdge)?;
                out.push(DnValue { h: h.clone(), q: r.extrapolated, ladder: r.ladder, model: r.model.into(), monotone: r.monotone, triangles: mesh.triangles.len() });
            }
        }
        FieldKind::Insulating { radius } => {
            let mesh = focused_mesh(*radius, &[*radius], 0.01, 0.8, 0.03, p.resolution.unwrap_or(512))?;
            for (h, d) in hs.iter().zip(&data) {
                let q = dn_form(&*f.field, d, &mesh, QuadratureRule::OnePoint)?;
                out.push(DnValue { h: h.clone(), q, ladder: Vec::new(), model: "direct".into(), monotone: true, triangles: mesh.triangles.len() });
            }
        }
        _ => {
            let mesh = TriMesh::uniform_disc(p.level)?;
            let sys = FemSystem::new(&mesh, element_sigmas(&*f.field, &mesh, QuadratureRule::ThreePoint)?)?;
            for (h, d) in hs.iter().zip(&data) {
                let q = sys.solve(d)?.energy;
                out.push(DnValue { h: h.clone(), q, ladder: Vec::new(), model: "direct".into(), monotone: true, triangles: mesh.triangles.len() });
            }
        }
    }
    Ok(out)
}

fn dn_table(vals: &[DnValue]) -> Table {
    let mut t = Table::new(&["h", "r", "hole_radius", "q", "q_over_pi"]);
    for v in vals {
        for (r, hole, q) in &v.ladder {
            t.row([Cell::from(v.h.as_str()), (*r).into(), (*hole).into(), (*q).into(), (q / PI).into()]);
        }
        t.row([Cell::from(v.h.as_str()), "0".into(), "".into(), v.q.into(), (v.q / PI).into()]);
    }
    t
}

pub fn run_dn(f: &BuiltField, hs: &[String], p: &DnParams, out: &Path, manifest: Manifest) -> CliResult<Value> {
    let vals = compute_dn(f, hs, p)?;
    dn_table(&vals).write(&out.join("dn.csv"))?;
    finish(out, manifest, Some(f), json!({ "h": hs, "dn": p }), &["dn.csv"], json!(vals))
}

#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub h: String,
    pub q_a: f64,
    pub q_b: f64,
    pub rel_diff: f64,
    pub verdict: &'static str,
}

pub fn compare(a: &[DnValue], b: &[DnValue], tol: f64) -> Vec<Comparison> {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let rel = (x.q - y.q).abs() / x.q.abs().max(y.q.abs()).max(1e-300);
            Comparison { h: x.h.clone(), q_a: x.q, q_b: y.q, rel_diff: rel, verdict: if rel <= tol { "match" } else { "mismatch" } }
        })
        .collect()
}

pub fn run_compare_dn(a: &BuiltField, b: &BuiltField, hs: &[String], p: &DnParams, tol: f64, out: &Path, mut manifest: Manifest) -> CliResult<Value> {
    if !(tol > 0.0) {
        return Err(CliError::invalid("tolerance must be positive"));
    }
    let (va, vb) = (compute_dn(a, hs, p)?, compute_dn(b, hs, p)?);
    let cmp = compare(&va, &vb, tol);
    let mut t = Table::new(&["h", "q_a", "q_b", "rel_diff", "verdict"]);
    for c in &cmp {
        t.row([Cell::from(c.h.as_str()), c.q_a.into(), c.q_b.into(), c.rel_diff.into(), c.verdict.into()]);
    }
    t.write(&out.join("compare.csv"))?;
    let all = cmp.iter().all(|c| c.verdict == "match");
    manifest.inputs = vec![a.spec.clone(), b.spec.clone()];
    let results = json!({ "verdict": if all { "match" } else { "mismatch" }, "comparisons": cmp, "a": va, "b": vb });
    manifest.parameters = json!({ "h": hs, "dn": p, "tolerance": tol });
    manifest.outputs = vec!["compare.csv".into()];
    manifest.results = results.clone();
    manifest.write(out)?;
    Ok(results)
}

// ---------------------------------------------------------------- render

#[derive(Clone, Debug, Serialize)]
pub struct RenderParams {
    /// `trace` (log₁₀ tr σ), `det` or `anisotropy` (log₁₀ √(λ₁/λ₂)).
    pub style: String,
    pub grid: usize,
    /// Boundary data driving the current lines; None draws no lines.
    pub h: Option<String>,
    pub lines: usize,
    pub seed: u64,
    pub size: u32,
}

impl Default for RenderParams {
    fn default() -> Self {
        RenderParams { style: "trace".into(), grid: 96, h: Some("cos1".into()), lines: 16, seed: 1, size: 480 }
    }
}

fn raster_value(style: &str, s: &condbench_core::mat2::Sym2) -> CliResult<f64> {
    Ok(match style {
        "trace" => s.trace().log10(),
        "det" => s.det(),
        "anisotropy" => {
            let (l1, l2) = s.eigenvalues();
            (l1 / l2).sqrt().log10()
        }
        other => return Err(CliError::invalid(format!("unknown style `{other}` (trace, det, anisotropy)"))),
    })
}

/// Colour values of a conductivity grid (NaN at degenerate samples).
pub fn raster_values(g: &GridConductivity, style: &str) -> CliResult<Vec<f64>> {
    g.data.iter().map(|s| if s.has_nan() { Ok(f64::NAN) } else { raster_value(style, s) }).collect()
}

/// Current lines of the solution with boundary data h, on a mesh and
/// excision suited to the field.
pub fn field_current_lines(f: &BuiltField, h: &DirichletData, count: usize, seed: u64) -> CliResult<Vec<Vec<[f64; 2]>>> {
    let (mesh, sigmas, core) = match &f.kind {
        FieldKind::Cloak => {
            let hole = HoleModel::Cloak.hole_radius(CLOAK_LADDER[3]);
            let mesh = focused_mesh(1.0, &[hole], 2e-3, 0.85, 0.03, 128)?;
            let s = element_sigmas(&Excised { base: f.field.clone(), radius: hole }, &mesh, QuadratureRule::ThreePoint)?;
            (mesh, s, hole)
        }
        FieldKind::Hologram { weight } => {
            let holo = hologram_conductivity(weight)?;
            let hole = holo.map.profile.inverse_rho_minus_one(HOLOGRAM_LADDER[3])?;
            let mesh = log_mesh(hole, &[hole], 6.0, 64, 32)?;
            let s = element_sigmas(&Excised { base: holo, radius: hole }, &mesh, QuadratureRule::RadialEdge)?;
            (mesh, s, 0.0)
        }
        FieldKind::Insulating { radius } => {
            let mesh = focused_mesh(*radius, &[*radius], 0.01, 0.8, 0.05, 128)?;
            let s = element_sigmas(&*f.field, &mesh, QuadratureRule::OnePoint)?;
            (mesh, s, *radius)
        }
        _ => {
            let mesh = TriMesh::uniform_disc(4)?;
            let s = element_sigmas(&*f.field, &mesh, QuadratureRule::OnePoint)?;
            (mesh, s, 0.0)
        }
    };
    let sys = FemSystem::new(&mesh, sigmas.clone())?;
    let sol = sys.solve(h)?;
    let mut rng = seeded(seed);
    let lo = (core + 0.1).min(1.8);
    let seeds: Vec<[f64; 2]> = (0..count)
        .map(|_| {
            let r = lo + (1.9 - lo) * rng.gen::<f64>();
            let t = 2.0 * PI * rng.gen::<f64>();
            [r * t.cos(), r * t.sin()]
        })
        .collect();
    Ok(current_lines(&mesh, &sol, &sigmas, &seeds, &StreamlineOptions::default())?)
}

pub fn render_svg(f: Option<&BuiltField>, grid: Option<&GridConductivity>, p: &RenderParams) -> CliResult<String> {
    let g = match (grid, f) {
        (Some(g), _) => g.clone(),
        (None, Some(f)) => {
            sample_grid(&*f.field, p.grid)?
        }
        (None, None) => return Err(CliError::invalid("nothing to render")),
    };
    let values = raster_values(&g, &p.style)?;
    let lines = match (f, &p.h) {
        (Some(f), Some(h)) if p.lines > 0 => field_current_lines(f, &parse_h(h)?, p.lines, p.seed)?,
        _ => Vec::new(),
    };
    let title = format!("{} ({})", f.map(|f| f.kind.name()).unwrap_or("grid"), p.style);
    render(&Raster { n: g.n, half_width: g.half_width, values: &values }, &lines, p.size, &title)
}

pub fn run_render(f: Option<&BuiltField>, grid: Option<&GridConductivity>, p: &RenderParams, out: &Path, manifest: Manifest) -> CliResult<Value> {
    let svg = render_svg(f, grid, p)?;
    write_atomic(&out.join("render.svg"), svg.as_bytes())?;
    finish(out, manifest, f, json!(p), &["render.svg"], json!({ "bytes": svg.len() }))
}

// ---------------------------------------------------------------- cgo

#[derive(Clone, Debug, Serialize)]
pub struct CgoParams {
    pub grid: usize,
    pub half_width: f64,
    pub k_abs: Vec<f64>,
    pub k_angle: f64,
}

impl Default for CgoParams {
    fn default() -> Self {
        CgoParams { grid: 256, half_width: 2.0, k_abs: vec![1.0, 2.0, 4.0, 8.0], k_angle: 0.3 }
    }
}

/// μ = (1 − γ)/(1 + γ) of an isotropic field equal to 1 near the grid edge.
pub fn isotropic_mu(field: &dyn ConductivityField, n: usize, half_width: f64) -> CliResult<GridField> {
    if !field.support_radius().is_finite() || field.support_radius() > 0.5 * half_width + 1e-12 {
        return Err(CliError::invalid(format!("field support {} must lie within R/2 = {}", field.support_radius(), 0.5 * half_width)));
    }
    let mut mu = GridField::zeros(n, half_width)?;
    for k in 0..mu.data.len() {
        let z = mu.point_at(k);
        if z.norm() > field.support_radius() {
            continue;
        }
        let s = field.eval(z)?;
        if !s.is_regular() || s.sigma.s12.abs() > 1e-12 * s.sigma.trace() || (s.sigma.s11 - s.sigma.s22).abs() > 1e-12 * s.sigma.trace() {
            return Err(CliError::invalid(format!("field must be isotropic and nondegenerate (fails at {z})")));
        }
        let g = s.sigma.s11;
        let m = (1.0 - g) / (1.0 + g);
        mu.data[k] = Complex64::new(if m.abs() < 1e-14 { 0.0 } else { m }, 0.0);
    }
    Ok(mu)
}

#[derive(Clone, Debug, Serialize)]
pub struct CgoInvariants {
    pub k: (f64, f64),
    pub min_abs_m_plus: f64,
    pub min_abs_m_minus: f64,
    /// max |φ(z)| − |z|.
    pub phase_excess: f64,
    pub min_re_ratio: f64,
    /// sup |φ(z) − z|.
    pub phase_deviation: f64,
    pub iterations: usize,
    pub residual: f64,
}

pub fn compute_cgo(f: &BuiltField, p: &CgoParams) -> CliResult<(Vec<CgoInvariants>, Vec<GridField>)> {
    if p.k_abs.iter().any(|k| !(*k > 0.0)) {
        return Err(CliError::invalid("|k| values must be positive"));
    }
    let mu = isotropic_mu(&*f.field, p.grid, p.half_width)?;
    let zero = mu.map(|_| Complex64::new(0.0, 0.0));
    let neg = mu.map(|v| -v);
    let plan = TransformPlan::for_grid(&mu)?;
    let opts = CgoOptions::default();
    let one = Complex64::new(1.0, 0.0);
    let mut inv = Vec::new();
    let mut ms = Vec::new();
    for &a in &p.k_abs {
        let k = Complex64::from_polar(a, p.k_angle);
        let plus = cgo_solve(&plan, &zero, &mu, k, one, &opts)?;
        let minus = cgo_solve(&plan, &zero, &neg, k, one, &opts)?;
        let ratio = plus.m.data.iter().zip(&minus.m.data).map(|(x, y)| (x / y).re).fold(f64::INFINITY, f64::min);
        inv.push(CgoInvariants {
            k: (k.re, k.im),
            min_abs_m_plus: plus.min_abs_m(),
            min_abs_m_minus: minus.min_abs_m(),
            phase_excess: plus.phase_excess(),
            min_re_ratio: ratio,
            phase_deviation: plus.sup_phase_deviation(),
            iterations: plus.iterations.max(minus.iterations),
            residual: plus.residual.max(minus.residual),
        });
        ms.push(plus.m);
    }
    Ok((inv, ms))
}

pub fn run_cgo(f: &BuiltField, p: &CgoParams, out: &Path, manifest: Manifest) -> CliResult<Value> {
    let (inv, ms) = compute_cgo(f, p)?;
    let mut t = Table::new(&["k_re", "k_im", "min_abs_m_plus", "min_abs_m_minus", "phase_excess", "min_re_ratio", "phase_deviation", "iterations", "residual"]);
    let mut outputs = vec!["invariants.csv".to_string()];
    for (j, (v, m)) in inv.iter().zip(&ms).enumerate() {
        t.row([v.k.0, v.k.1, v.min_abs_m_plus, v.min_abs_m_minus, v.phase_excess, v.min_re_ratio, v.phase_deviation].map(Cell::from).into_iter().chain([v.iterations.into(), v.residual.into()]));
        let name = format!("m_{j}.bin");
        write_complex(&out.join(&name), m)?;
        outputs.push(name);
    }
    t.write(&out.join("invariants.csv"))?;
    let decreasing = inv.windows(2).all(|w| w[1].phase_deviation < w[0].phase_deviation);
    let refs: Vec<&str> = outputs.iter().map(String::as_str).collect();
    finish(out, manifest, Some(f), json!(p), &refs, json!({ "invariants": inv, "phase_deviation_decreasing": decreasing }))
}

// ---------------------------------------------------------------- scatter

#[derive(Clone, Debug, Serialize)]
pub struct ScatterParams {
    pub grid: usize,
    pub half_width: f64,
    pub k_max: f64,
    pub step: f64,
}

impl Default for ScatterParams {
    fn default() -> Self {
        ScatterParams { grid: 128, half_width: 2.0, k_max: 8.0, step: 0.1 }
    }
}

pub fn compute_scatter(f: &BuiltField, p: &ScatterParams) -> CliResult<RadialTau> {
    if !(p.k_max > 0.0) || !(p.step > 0.0) {
        return Err(CliError::invalid("K_max and the step must be positive"));
    }
    let mu = isotropic_mu(&*f.field, p.grid, p.half_width)?;
    let plan = TransformPlan::for_grid(&mu)?;
    Ok(RadialTau::compute(&plan, &mu, p.k_max, p.step, TauConvention::Equation, &CgoOptions::default())?)
}

pub fn run_scatter(f: &BuiltField, p: &ScatterParams, out: &Path, manifest: Manifest) -> CliResult<Value> {
    let tau = compute_scatter(f, p)?;
    let mut t = Table::new(&["k", "tau_re", "tau_im"]);
    let mut sup = 0.0f64;
    for (j, v) in tau.values.iter().enumerate() {
        t.row([j as f64 * tau.step, v.re, v.im].map(Cell::from));
        sup = sup.max(v.norm());
    }
    t.write(&out.join("tau.csv"))?;
    finish(out, manifest, Some(f), json!(p), &["tau.csv"], json!({ "convention": tau.convention.as_str(), "sup_abs_tau": sup, "nodes": tau.values.len() }))
}

// ---------------------------------------------------------------- dbar

#[derive(Clone, Debug, Serialize)]
pub struct DbarParams {
    pub k_max: f64,
    pub k_grid: usize,
    pub z_grid: usize,
    pub cgo_grid: usize,
    pub tau_step: f64,
}

impl Default for DbarParams {
    fn default() -> Self {
        let d = ReconstructionOptions::default();
        DbarParams { k_max: d.k_max, k_grid: d.k_grid, z_grid: d.z_grid, cgo_grid: d.cgo_grid, tau_step: d.tau_step }
    }
}

impl DbarParams {
    pub fn options(&self) -> ReconstructionOptions {
        ReconstructionOptions {
            k_max: self.k_max,
            k_grid: self.k_grid,
            z_grid: self.z_grid,
            cgo_grid: self.cgo_grid,
            tau_step: self.tau_step,
            dbar: GmresOptions { restart: 40, max_iter: 400, tol: 1e-10 },
            ..ReconstructionOptions::default()
        }
    }
}

pub fn compute_dbar(f: &BuiltField, p: &DbarParams) -> CliResult<ReconstructionReport> {
    if !(p.k_max > 0.0) || !p.k_max.is_finite() {
        return Err(CliError::at("/k_max", "K_max must be positive"));
    }
    Ok(reconstruct_sigma(&*f.field, &p.options(), &Rayon::new())?)
}

pub fn run_dbar(f: &BuiltField, p: &DbarParams, out: &Path, manifest: Manifest) -> CliResult<Value> {
    let r = compute_dbar(f, p)?;
    write_complex(&out.join("sigma_rec.bin"), &r.sigma_rec)?;
    write_complex(&out.join("sigma_true.bin"), &r.sigma_true)?;
    write_complex(&out.join("mu_rec.bin"), &r.mu_rec)?;
    let n = r.sigma_rec.n;
    let mut t = Table::new(&["x", "sigma_rec", "sigma_true"]);
    let i = n / 2;
    for j in 0..n {
        t.row([r.sigma_rec.point(i, j).re, r.sigma_rec.data[i * n + j].re, r.sigma_true.data[i * n + j].re].map(Cell::from));
    }
    t.write(&out.join("profile.csv"))?;
    let results = json!({
        "rel_l2_error": r.rel_l2_error,
        "contrast_error": r.contrast_error,
        "max_abs_error": r.max_abs_error,
        "mu_rel_error": r.mu_rel_error,
        "max_dbar_iterations": r.max_dbar_iterations,
        "warning": r.warning,
    });
    finish(
        out,
        manifest,
        Some(f),
        json!(p),
        &["sigma_rec.bin", "sigma_rec.json", "sigma_true.bin", "sigma_true.json", "mu_rec.bin", "mu_rec.json", "profile.csv"],
        results,
    )
}

// ---------------------------------------------------------------- flatten

#[derive(Clone, Debug, Serialize)]
pub struct FlattenParams {
    pub grid: usize,
    pub half_width: f64,
    pub terms: usize,
    pub samples: usize,
}

impl Default for FlattenParams {
    fn default() -> Self {
        let d = FlattenOptions::default();
        FlattenParams { grid: d.n, half_width: d.half_width, terms: d.m_max, samples: d.samples }
    }
}

pub fn compute_flatten(f: &BuiltField, p: &FlattenParams) -> CliResult<Flattening> {
    let o = FlattenOptions { n: p.grid, half_width: p.half_width, m_max: p.terms, truncation: None, samples: p.samples };
    Ok(isothermal_flatten(&*f.field, &o)?)
}

pub fn run_flatten(f: &BuiltField, p: &FlattenParams, out: &Path, manifest: Manifest) -> CliResult<Value> {
    let fl = compute_flatten(f, p)?;
    let mut t = Table::new(&["x", "y", "fx", "fy", "p11", "p12", "p22", "det_sigma", "k_map", "k_sigma"]);
    for s in &fl.samples {
        t.row([s.z.re, s.z.im, s.y.re, s.y.im, s.pushed.s11, s.pushed.s12, s.pushed.s22, s.det_sigma, s.k_map, s.k_sigma].map(Cell::from));
    }
    t.write(&out.join("flatten.csv"))?;
    write_complex(&out.join("map.bin"), &fl.map.phi)?;
    let results = json!({
        "max_offdiag": fl.max_offdiag,
        "max_anisotropy": fl.max_anisotropy,
        "max_det_error": fl.max_det_error,
        "max_k_error": fl.max_k_error,
        "truncation": fl.truncation,
        "terms": fl.map.term_norms.len(),
    });
    finish(out, manifest, Some(f), json!(p), &["flatten.csv", "map.bin", "map.json"], results)
}
