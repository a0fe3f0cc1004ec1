//! Output files. Every write goes to a temporary file in the target directory
//! and is renamed into place.
//!
//! Grids are raw little-endian f64 in row-major order (row i has Im z =
//! −R + i·h), with a JSON sidecar `<name>.json` describing the layout. NaN entries in a
//! conductivity grid mark degenerate points.

use std::io::Write;
use std::path::{Path, PathBuf};

use condbench_core::conductivity::GridConductivity;
use condbench_core::grid::GridField;
use condbench_core::mat2::Sym2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// A CSV table built in memory and written in one piece.
pub struct Table {
    w: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        Table { w }
    }

    /// Appends a row; numbers use the shortest round-trip representation.
    pub fn row<I: IntoIterator<Item = Cell>>(&mut self, cells: I) {
        let rec: Vec<String> = cells.into_iter().map(|c| c.0).collect();
        self.w.write_record(&rec).expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.w.into_inner().expect("in-memory flush")
    }

    pub fn write(self, path: &Path) -> CliResult<()> {
        write_atomic(path, &self.into_bytes())
    }
}

pub struct Cell(String);

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell(format!("{x:?}"))
    }
}
impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell(x.to_string())
    }
}
impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell(x.to_string())
    }
}
impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell(x)
    }
}
impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell(x.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub n: usize,
    pub half_width: f64,
    /// Per-point components: `["s11", "s12", "s22"]` or `["re", "im"]`.
    pub components: Vec<String>,
    pub byte_order: String,
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn write_grid(path: &Path, header: GridHeader, values: impl Iterator<Item = f64>) -> CliResult<()> {
    let bytes: Vec<u8> = values.flat_map(f64::to_le_bytes).collect();
    write_atomic(path, &bytes)?;
    write_json(&sidecar(path), &header)
}

fn read_grid(path: &Path, components: &[&str]) -> CliResult<(GridHeader, Vec<f64>)> {
    let side = sidecar(path);
    let text = std::fs::read_to_string(&side).map_err(|e| CliError::io(&side, e))?;
    let header: GridHeader = serde_json::from_str(&text).map_err(|e| CliError::invalid(format!("{}: {e}", side.display())))?;
    if header.components != components {
        return Err(CliError::at("/components", format!("expected {components:?}, found {:?}", header.components)));
    }
    if header.byte_order != "little" {
        return Err(CliError::at("/byte_order", "only little-endian grids are supported"));
    }
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let want = header.n * header.n * components.len() * 8;
    if bytes.len() != want {
        return Err(CliError::invalid(format!("{}: {} bytes, expected {want}", path.display(), bytes.len())));
    }
    let vals = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((header, vals))
}

pub fn write_conductivity(path: &Path, g: &GridConductivity) -> CliResult<()> {
    let header = GridHeader {
        n: g.n,
        half_width: g.half_width,
        components: vec!["s11".into(), "s12".into(), "s22".into()],
        byte_order: "little".into(),
    };
    write_grid(path, header, g.data.iter().flat_map(|s| [s.s11, s.s12, s.s22]))
}

pub fn read_conductivity(path: &Path) -> CliResult<GridConductivity> {
    let (h, v) = read_grid(path, &["s11", "s12", "s22"])?;
    if h.n < 2 {
        return Err(CliError::at("/n", "empty field"));
    }
    // NaN entries mark degenerate or undefined samples, as written by `sample`
    let data = v.chunks_exact(3).map(|c| Sym2::new(c[0], c[1], c[2])).collect();
    Ok(GridConductivity { n: h.n, half_width: h.half_width, data })
}

pub fn write_complex(path: &Path, g: &GridField) -> CliResult<()> {
    let header = GridHeader { n: g.n, half_width: g.half_width, components: vec!["re".into(), "im".into()], byte_order: "little".into() };
    write_grid(path, header, g.data.iter().flat_map(|c| [c.re, c.im]))
}

pub fn read_complex(path: &Path) -> CliResult<GridField> {
    let (h, v) = read_grid(path, &["re", "im"])?;
    let mut g = GridField::zeros(h.n, h.half_width)?;
    for (d, c) in g.data.iter_mut().zip(v.chunks_exact(2)) {
        *d = Complex64::new(c[0], c[1]);
    }
    Ok(g)
}
