//! Spectral pollution diagnostics for self-adjoint operators.
//!
//! Galerkin (first-order) spectra and second-order relative spectra of
//! Fourier and finite-element discretizations, together with the enclosure,
//! disk-exclusion and classification checks that separate trustworthy
//! eigenvalues from spurious ones.

pub mod analysis;
pub mod eig;
mod error;
pub mod fem;
pub mod fourier;
pub mod models;
mod quad;

pub use error::{Error, Result};
pub use faer::c64;
