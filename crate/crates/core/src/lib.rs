//! Classical emulation of a time-domain quantum algorithm for the dynamic
//! structure factor S(q, ω) in the dipole approximation.
//!
//! The pipeline mirrors what would run on a fault-tolerant device:
//!
//! 1. [`operator`] reads second-quantized Hamiltonians (FCIDUMP) and dipole
//!    matrices and maps them to qubit operators with Jordan–Wigner.
//! 2. [`ci`] applies dipole components to a determinant expansion of the
//!    ground state and produces normalized dipole-rotated states.
//! 3. [`emulator`] evolves those states with a second-order Trotter program and
//!    reproduces the statistics of the two-state Hadamard test.
//! 4. [`spectrum`] allocates shots, assembles Green's-function series and
//!    reconstructs intensity functions, S(q, ω), isotropic averages and cross
//!    sections.
//!
//! [`oracle`] provides the exact-diagonalization reference used to verify all
//! of the above, [`resources`] estimates fault-tolerant costs, and
//! [`fixtures`] generates deterministic model systems.

pub mod ci;
pub mod emulator;
pub mod error;
pub mod fixtures;
pub mod operator;
pub mod oracle;
pub mod pipeline;
pub mod resources;
pub mod rng;
pub mod spectrum;
pub mod units;
pub mod validation;

pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use num_complex::Complex64;
