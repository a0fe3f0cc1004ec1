//! JSON conductivity specs.
//!
//! ```json
//! {"kind": "cloak"}
//! {"kind": "hologram", "weight": {"kind": "sublinear", "eps": 2}}
//! {"kind": "radial", "gamma": "1"}
//! {"kind": "radial", "gamma": {"r": [0, 0.5, 1], "values": [2, 1.5, 1]}, "support": 1}
//! {"kind": "bump", "amplitude": 0.5, "radius": 0.8}
//! {"kind": "constant", "s11": 2, "s12": 0, "s22": 2}
//! {"kind": "patch", "s11": 4, "s12": 0, "s22": 0.25, "r0": 0.4, "r1": 0.9}
//! {"kind": "insulating", "radius": 1}
//! ```
//! Errors carry the JSON pointer of the offending value.

use std::path::Path;
use std::sync::Arc;

use condbench_core::conductivity::{radial_bump, BlendedPatch, ConductivityField, ConstantField, InsulatingDisc, RadialField, RadialFn, DOMAIN_RADIUS};
use condbench_core::gauge::{WeightGauge, WeightKind};
use condbench_core::maps::{hologram_conductivity, standard_cloak};
use condbench_core::mat2::Sym2;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

/// What a spec describes, with the parameters the jobs need.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldKind {
    Identity,
    Constant(Sym2),
    Radial,
    Bump { amplitude: f64, radius: f64 },
    Cloak,
    Hologram { weight: WeightGauge },
    Insulating { radius: f64 },
    Patch { sigma: Sym2, r0: f64, r1: f64 },
}

impl FieldKind {
    pub fn name(&self) -> &'static str {
        match self {
            FieldKind::Identity => "identity",
            FieldKind::Constant(_) => "constant",
            FieldKind::Radial => "radial",
            FieldKind::Bump { .. } => "bump",
            FieldKind::Cloak => "cloak",
            FieldKind::Hologram { .. } => "hologram",
            FieldKind::Insulating { .. } => "insulating",
            FieldKind::Patch { .. } => "patch",
        }
    }
}

#[derive(Clone)]
pub struct BuiltField {
    pub kind: FieldKind,
    pub field: Arc<dyn ConductivityField>,
    /// The spec as given.
    pub spec: Value,
}

impl std::fmt::Debug for BuiltField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BuiltField").field("kind", &self.kind).finish_non_exhaustive()
    }
}

pub fn load(path: &Path) -> CliResult<BuiltField> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> CliResult<BuiltField> {
    let v: Value = serde_json::from_str(text).map_err(|e| CliError::at("", format!("invalid JSON: {e}")))?;
    parse(&v)
}

pub fn parse(v: &Value) -> CliResult<BuiltField> {
    let obj = object(v, "")?;
    let kind = string(obj, "kind", "")?;
    let ptr = |k: &str| format!("/{k}");
    let (kind, field): (FieldKind, Arc<dyn ConductivityField>) = match kind {
        "identity" => (FieldKind::Identity, Arc::new(ConstantField(Sym2::IDENTITY))),
        "constant" => {
            let s = sym2(obj, "")?;
            (FieldKind::Constant(s), Arc::new(ConstantField(s)))
        }
        "radial" => {
            let support = optional_number(obj, "support", "")?.unwrap_or(DOMAIN_RADIUS);
            if !(support > 0.0 && support <= DOMAIN_RADIUS) {
                return Err(CliError::at(ptr("support"), "support must lie in (0, 2]"));
            }
            let gamma = profile(obj.get("gamma"), &ptr("gamma"))?;
            let field = match obj.get("tangential") {
                None => RadialField::isotropic(gamma, support),
                Some(t) => RadialField::anisotropic(gamma, profile(Some(t), &ptr("tangential"))?, support),
            };
            (FieldKind::Radial, Arc::new(field))
        }
        "bump" => {
            let amplitude = number(obj, "amplitude", "")?;
            let radius = number(obj, "radius", "")?;
            if !(amplitude > -1.0) {
                return Err(CliError::at(ptr("amplitude"), "amplitude must exceed -1"));
            }
            if !(radius > 0.0 && radius <= DOMAIN_RADIUS) {
                return Err(CliError::at(ptr("radius"), "radius must lie in (0, 2]"));
            }
            (FieldKind::Bump { amplitude, radius }, Arc::new(radial_bump(amplitude, radius)))
        }
        "cloak" => (FieldKind::Cloak, Arc::new(standard_cloak())),
        "hologram" => {
            let w = obj.get("weight").ok_or_else(|| CliError::at(ptr("weight"), "missing weight"))?;
            let weight = weight(w, "/weight")?;
            if !matches!(weight.kind(), WeightKind::Sublinear { .. }) {
                return Err(CliError::at("/weight/kind", "weight must be sublinear for hologram"));
            }
            let h = hologram_conductivity(&weight).map_err(|e| CliError::at(ptr("weight"), e.to_string()))?;
            (FieldKind::Hologram { weight }, Arc::new(h))
        }
        "insulating" => {
            let radius = number(obj, "radius", "")?;
            if !(radius > 0.0 && radius < DOMAIN_RADIUS) {
                return Err(CliError::at(ptr("radius"), "radius must lie in (0, 2)"));
            }
            (FieldKind::Insulating { radius }, Arc::new(InsulatingDisc { radius }))
        }
        "patch" => {
            let sigma = sym2(obj, "")?;
            let (r0, r1) = (number(obj, "r0", "")?, number(obj, "r1", "")?);
            let p = BlendedPatch::new(sigma, r0, r1).map_err(|e| CliError::at(ptr("r0"), e.to_string()))?;
            (FieldKind::Patch { sigma, r0, r1 }, Arc::new(p))
        }
        other => return Err(CliError::at("/kind", format!("unknown kind `{other}`"))),
    };
    Ok(BuiltField { kind, field, spec: v.clone() })
}

/// Weight specs: `{"kind": "sublinear", "eps": ε}`, `{"kind": "almost-linear"}`,
/// `{"kind": "affine", "p": p}`.
pub fn weight(v: &Value, at: &str) -> CliResult<WeightGauge> {
    let obj = object(v, at)?;
    let r = match string(obj, "kind", at)? {
        "sublinear" => WeightGauge::sublinear(number(obj, "eps", at)?),
        "almost-linear" => Ok(WeightGauge::almost_linear()),
        "affine" => WeightGauge::affine(number(obj, "p", at)?),
        other => return Err(CliError::at(format!("{at}/kind"), format!("unknown weight kind `{other}`"))),
    };
    r.map_err(|e| CliError::at(at.to_string(), e.to_string()))
}

fn object<'a>(v: &'a Value, at: &str) -> CliResult<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| CliError::at(at.to_string(), "expected an object"))
}

fn string<'a>(obj: &'a Map<String, Value>, key: &str, at: &str) -> CliResult<&'a str> {
    match obj.get(key) {
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(CliError::at(format!("{at}/{key}"), "expected a string")),
        None => Err(CliError::at(format!("{at}/{key}"), "missing field")),
    }
}

fn as_number(v: &Value, at: &str) -> CliResult<f64> {
    let x = match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse::<f64>().ok(),
        _ => None,
    };
    match x {
        Some(x) if x.is_finite() => Ok(x),
        _ => Err(CliError::at(at.to_string(), "expected a finite number")),
    }
}

fn number(obj: &Map<String, Value>, key: &str, at: &str) -> CliResult<f64> {
    let p = format!("{at}/{key}");
    as_number(obj.get(key).ok_or_else(|| CliError::at(p.clone(), "missing field"))?, &p)
}

fn optional_number(obj: &Map<String, Value>, key: &str, at: &str) -> CliResult<Option<f64>> {
    obj.get(key).map(|v| as_number(v, &format!("{at}/{key}"))).transpose()
}

fn sym2(obj: &Map<String, Value>, at: &str) -> CliResult<Sym2> {
    let s = Sym2::new(number(obj, "s11", at)?, optional_number(obj, "s12", at)?.unwrap_or(0.0), number(obj, "s22", at)?);
    if !(s.det() > 0.0 && s.trace() > 0.0) {
        return Err(CliError::at(format!("{at}/s11"), "matrix must be positive definite"));
    }
    Ok(s)
}

/// A positive radial profile: a constant, or piecewise linear through
/// `{"r": [...], "values": [...]}` (held constant past the last node).
fn profile(v: Option<&Value>, at: &str) -> CliResult<RadialFn> {
    let v = v.ok_or_else(|| CliError::at(at.to_string(), "missing field"))?;
    if let Value::Object(obj) = v {
        let arr = |key: &str| -> CliResult<Vec<f64>> {
            let p = format!("{at}/{key}");
            let a = obj.get(key).and_then(Value::as_array).ok_or_else(|| CliError::at(p.clone(), "expected an array"))?;
            a.iter().enumerate().map(|(i, x)| as_number(x, &format!("{p}/{i}"))).collect()
        };
        let (r, g) = (arr("r")?, arr("values")?);
        if r.len() != g.len() || r.is_empty() {
            return Err(CliError::at(format!("{at}/values"), "r and values must be nonempty and of equal length"));
        }
        if r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CliError::at(format!("{at}/r"), "radii must increase"));
        }
        if let Some(i) = g.iter().position(|x| !(*x > 0.0)) {
            return Err(CliError::at(format!("{at}/values/{i}"), "values must be positive"));
        }
        return Ok(Arc::new(move |x: f64| {
            let k = r.partition_point(|t| *t <= x);
            if k == 0 {
                g[0]
            } else if k == r.len() {
                g[g.len() - 1]
            } else {
                let t = (x - r[k - 1]) / (r[k] - r[k - 1]);
                g[k - 1] + t * (g[k] - g[k - 1])
            }
        }));
    }
    let c = as_number(v, at)?;
    if !(c > 0.0) {
        return Err(CliError::at(at.to_string(), "value must be positive"));
    }
    Ok(Arc::new(move |_| c))
}
