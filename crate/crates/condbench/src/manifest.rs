//! Run manifests: everything needed to repeat a run, and nothing that
//! changes between identical runs (no timestamps, no timings).

use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::CliResult;
use crate::io::write_json;

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    /// The command line arguments after the subcommand.
    pub args: Vec<String>,
    /// Every numeric parameter after defaults were applied.
    pub parameters: Value,
    /// Field specs the run read, inlined.
    pub inputs: Vec<Value>,
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
    pub versions: Versions,
    /// Summary values of the run (verdicts, errors, invariants).
    pub results: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Versions {
    pub condbench: &'static str,
    pub condbench_core: &'static str,
}

pub const VERSIONS: Versions = Versions { condbench: env!("CARGO_PKG_VERSION"), condbench_core: condbench_core::VERSION };

impl Manifest {
    pub fn new(command: &str, args: Vec<String>) -> Self {
        Manifest {
            command: command.to_string(),
            args,
            parameters: Value::Null,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed: None,
            versions: VERSIONS,
            results: Value::Null,
        }
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        write_json(&dir.join("manifest.json"), self)
    }
}
