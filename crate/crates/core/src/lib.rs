//! Constellation evaluation and design for AWGN channels with Tikhonov
//! (von Mises) distributed residual phase noise.
//!
//! The crate is `no_std` and only needs `alloc`. It covers:
//!
//! * [`model`]: constellations, labelings, channel parameters and the
//!   reference PSK/QAM/APSK sets.
//! * [`likelihood`]: per-symbol metrics, the peak-phase approximation of the
//!   phase integral and the exact likelihood used as a reference.
//! * [`quadrature`]: Gauss-Hermite rules and the noise grids built from them.
//! * [`capacity`]: achievable mutual information (AMI) and its bit-wise
//!   pragmatic counterpart (PAMI), by quadrature and by Monte Carlo.
//! * [`annealer`]: simulated annealing over point positions and labels.
//! * [`analysis`]: sweeps, design campaigns and mismatch studies.
//!
//! IO, file formats, the CLI and the parallel evaluators live in the
//! `phasecon` crate.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod annealer;
pub mod capacity;
mod error;
pub mod likelihood;
pub mod model;
pub mod quadrature;
pub mod special;

pub use error::{Error, Result};
pub use num_complex::Complex64;
