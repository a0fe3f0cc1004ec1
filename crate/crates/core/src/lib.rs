//! Numerical kernels for anisotropic conductivities in the plane: weights and
//! Orlicz gauges, conductivity fields and their push-forwards, a P1 forward
//! solver, Beltrami and CGO solvers, the D-bar pipeline and flattening.
//!
//! The crate is `no_std` with `alloc`; IO and the CLI live in `condbench`.

#![no_std]
// `Float` goes unused whenever another crate in the build links std, whose
// inherent f64 methods take precedence.
#![allow(unused_imports)]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod beltrami;
pub mod cgo;
pub mod coeffs;
pub mod conductivity;
pub mod dbar;
pub mod error;
pub mod exec;
pub mod fem;
pub mod fft;
pub mod flatten;
pub mod gauge;
pub mod gmres;
pub mod grid;
pub mod maps;
pub mod mat2;
pub mod mesh;
pub mod quad;
pub mod sparse;
pub mod transforms;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
