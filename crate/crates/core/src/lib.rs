//! Fourier-side analysis of shift-invariant subspaces of `L^2(R^n)`.
//!
//! Systems of generators are described by closed-form spectra. From their
//! fibers the crate builds Gramians and dual Gramians, certifies normalized
//! tight frame generators, evaluates local trace functions (dimension and
//! spectral functions among them) and checks the structural identities those
//! functions satisfy, including the wavelet characterization equations.

pub mod certificate;
pub mod cli;
pub mod error;
pub mod gramian;
pub mod grid;
pub mod lattice;
pub mod linalg;
pub mod spectra;
pub mod trace;
pub mod wavelet;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
