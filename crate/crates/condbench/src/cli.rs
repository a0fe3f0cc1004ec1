//! Command-line parsing and dispatch.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::io::read_conductivity;
use crate::jobs::*;
use crate::manifest::Manifest;
use crate::spec::{self, BuiltField};

#[derive(Parser, Debug)]
#[command(name = "condbench", version, about = "Degenerate conductivities, DN forms, CGO solutions and D-bar reconstruction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample a field spec: grid binary, spectral CSV and integrability ladders.
    Build {
        #[command(flatten)]
        io: Io,
        /// Grid size n of the n×n field file over [−2, 2]².
        #[arg(long, default_value_t = 128)]
        grid: usize,
        /// Random sample points for the spectral report.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Finite-element solve with Dirichlet data on |z| = 2 (nondegenerate fields).
    Solve {
        #[command(flatten)]
        io: Io,
        /// Boundary data, e.g. `cos1`, `sin2`, `0.5*cos3+sin1`.
        #[arg(long, default_value = "cos1")]
        h: String,
        /// Uniform disc refinement level (0..=9).
        #[arg(long, default_value_t = 5)]
        level: u32,
    },
    /// DN quadratic form Q_σ[h]; cloak and hologram use an excision ladder with extrapolation.
    Dn {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        dn: DnArgs,
    },
    /// Compare the DN forms of two fields.
    CompareDn {
        /// First field spec (path or inline JSON).
        #[arg(long)]
        a: String,
        /// Second field spec (path or inline JSON).
        #[arg(long)]
        b: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        dn: DnArgs,
        /// Relative tolerance for a match.
        #[arg(long, default_value_t = 0.02)]
        tol: f64,
    },
    /// SVG of a field (colour map) with current lines of a solution.
    Render {
        /// Field spec (path or inline JSON).
        #[arg(long, conflicts_with = "field", required_unless_present = "field")]
        spec: Option<String>,
        /// A grid file written by `build` (no current lines).
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// trace (log₁₀ tr σ), det, or anisotropy (log₁₀ √(λ₁/λ₂)).
        #[arg(long, default_value = "trace")]
        style: String,
        #[arg(long, default_value_t = 96)]
        grid: usize,
        /// Boundary data for the current lines, or `none`.
        #[arg(long, default_value = "cos1")]
        h: String,
        #[arg(long, default_value_t = 16)]
        lines: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 480)]
        size: u32,
    },
    /// Exponentially growing solutions for μ = (1 − γ)/(1 + γ) and their invariants.
    Cgo {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long, default_value_t = 2.0)]
        half_width: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        k_abs: Vec<f64>,
        #[arg(long, default_value_t = 0.3)]
        k_angle: f64,
    },
    /// Radial scattering data τ(|k|) on [0, K_max].
    Scatter {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 128)]
        grid: usize,
        #[arg(long, default_value_t = 2.0)]
        half_width: f64,
        #[arg(long, default_value_t = 8.0)]
        k_max: f64,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
    },
    /// Full reconstruction σ → τ → u → μ → σ_rec with error metrics.
    Dbar {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 8.0, allow_negative_numbers = true)]
        k_max: f64,
        #[arg(long, default_value_t = 64)]
        k_grid: usize,
        #[arg(long, default_value_t = 128)]
        z_grid: usize,
        #[arg(long, default_value_t = 128)]
        cgo_grid: usize,
        #[arg(long, default_value_t = 0.1)]
        tau_step: f64,
    },
    /// Isothermal coordinates F with F_*σ isotropic.
    Flatten {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long, default_value_t = 2.0)]
        half_width: f64,
        /// Neumann series terms.
        #[arg(long, default_value_t = 400)]
        terms: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Run independent jobs in parallel: a JSON array of argument lists.
    Batch {
        #[arg(long)]
        jobs: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct Io {
    /// Field spec: a JSON file or inline JSON.
    #[arg(long)]
    pub spec: String,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct DnArgs {
    /// Boundary data (repeatable).
    #[arg(long, default_values_t = vec!["cos1".to_string()])]
    pub h: Vec<String>,
    /// Outer ring node count (default per field kind: cloak 512, hologram 128, insulating 512).
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Excision ladder (cloak r values or hologram ρ − 1 values), decreasing.
    #[arg(long, value_delimiter = ',')]
    pub ladder: Option<Vec<f64>>,
    /// Uniform disc level for nondegenerate fields.
    #[arg(long, default_value_t = 6)]
    pub level: u32,
}

impl DnArgs {
    fn params(&self) -> DnParams {
        DnParams { resolution: self.resolution, ladder: self.ladder.clone(), level: self.level }
    }
}

/// A spec given as a path or inline JSON.
pub fn load_spec(s: &str) -> CliResult<BuiltField> {
    if s.trim_start().starts_with('{') {
        spec::parse_str(s)
    } else {
        spec::load(Path::new(s))
    }
}

/// Parses `args` (without the program name) and runs the job.
pub fn run(args: &[String]) -> CliResult<Value> {
    let argv = std::iter::once("condbench".to_string()).chain(args.iter().cloned());
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::invalid(e.to_string()))?;
    let name = args.first().cloned().unwrap_or_default();
    let manifest = Manifest::new(&name, args.iter().skip(1).cloned().collect());
    match cli.command {
        Command::Build { io, grid, samples, seed } => {
            let f = load_spec(&io.spec)?;
            let mut m = manifest;
            m.seed = Some(seed);
            run_build(&f, &BuildParams { grid, samples, seed }, &io.out, m)
        }
        Command::Solve { io, h, level } => run_solve(&load_spec(&io.spec)?, &SolveParams { h, level }, &io.out, manifest),
        Command::Dn { io, dn } => run_dn(&load_spec(&io.spec)?, &dn.h, &dn.params(), &io.out, manifest),
        Command::CompareDn { a, b, out, dn, tol } => run_compare_dn(&load_spec(&a)?, &load_spec(&b)?, &dn.h, &dn.params(), tol, &out, manifest),
        Command::Render { spec, field, out, style, grid, h, lines, seed, size } => {
            let f = spec.as_deref().map(load_spec).transpose()?;
            let g = field.as_deref().map(read_conductivity).transpose()?;
            let p = RenderParams { style, grid, h: (h != "none").then_some(h), lines, seed, size };
            let mut m = manifest;
            m.seed = Some(seed);
            run_render(f.as_ref(), g.as_ref(), &p, &out, m)
        }
        Command::Cgo { io, grid, half_width, k_abs, k_angle } => run_cgo(&load_spec(&io.spec)?, &CgoParams { grid, half_width, k_abs, k_angle }, &io.out, manifest),
        Command::Scatter { io, grid, half_width, k_max, step } => run_scatter(&load_spec(&io.spec)?, &ScatterParams { grid, half_width, k_max, step }, &io.out, manifest),
        Command::Dbar { io, k_max, k_grid, z_grid, cgo_grid, tau_step } => {
            run_dbar(&load_spec(&io.spec)?, &DbarParams { k_max, k_grid, z_grid, cgo_grid, tau_step }, &io.out, manifest)
        }
        Command::Flatten { io, grid, half_width, terms, samples } => run_flatten(&load_spec(&io.spec)?, &FlattenParams { grid, half_width, terms, samples }, &io.out, manifest),
        Command::Batch { jobs } => run_batch(&jobs),
    }
}

/// Each job runs in isolation; one failing job does not stop the others.
fn run_batch(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let jobs: Vec<Vec<String>> = serde_json::from_str(&text).map_err(|e| CliError::at("", format!("batch file must be an array of argument arrays: {e}")))?;
    if let Some(i) = jobs.iter().position(|j| j.first().map(String::as_str) == Some("batch")) {
        return Err(CliError::at(format!("/{i}/0"), "batches cannot nest"));
    }
    let results: Vec<Value> = jobs
        .par_iter()
        .map(|args| match run(args) {
            Ok(v) => json!({ "ok": true, "result": v }),
            Err(e) => json!({ "ok": false, "exit_code": e.exit_code(), "error": e.to_string() }),
        })
        .collect();
    let failed = results.iter().filter(|r| r["ok"] == false).count();
    Ok(json!({ "jobs": results.len(), "failed": failed, "results": results }))
}
