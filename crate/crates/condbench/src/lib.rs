//! Files, specs and jobs around `condbench-core`: JSON field specs, grid and
//! CSV output, SVG rendering, run manifests and a rayon executor. The
//! `condbench` binary is a thin clap layer over [`jobs`].

pub mod cli;
pub mod error;
pub mod exec;
pub mod io;
pub mod jobs;
pub mod manifest;
pub mod spec;
pub mod svg;

pub use error::{CliError, CliResult};
