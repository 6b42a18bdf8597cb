//! Numerical laboratory for spectral instability of non-selfadjoint operators.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`] dense complex kernels (eigenvalues, smallest singular values,
//!   Schur-accelerated and banded resolvent norms);
//! * [`gallery`] model operators together with their principal symbols;
//! * [`symbol`] classical-spectrum and Poisson-bracket computations on symbols;
//! * [`pseudospectrum`] grid scans of `σ_min(P − z)`, ε-regions, contours and
//!   resolvent growth fits;
//! * [`quasimode`] explicit quasimodes (Jordan vectors, Gaussian beams);
//! * [`lab`] seeded Monte Carlo experiments with random perturbations.

pub mod error;
pub mod fit;
pub mod gallery;
pub mod lab;
pub mod linalg;
pub mod parallel;
pub mod pseudospectrum;
pub mod quasimode;
pub mod symbol;

pub use error::{Error, Result};

pub use gallery::{Basis, DiscretizedOperator, Domain, ModelKind, PhaseBox, Rectangle, SymbolModel};
pub use linalg::{ComplexMatrix, SchurForm};
pub use num_complex::Complex64;
pub use pseudospectrum::{ComplexGrid, SigmaMinField};
pub use symbol::PhaseSpacePoint;


