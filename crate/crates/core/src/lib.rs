//! Exact simulation of finite superpositions of multimode coherent states.
//!
//! States are kept as `Σ_k c_k |α_k1, …, α_kM⟩`. Linear optics acts on the
//! amplitudes directly, and measurements contract a mode against a bra whose
//! overlap with every coherent amplitude is known in closed form. The
//! [`fockoracle`] module is an independent truncated number-basis simulator
//! used to cross-check everything else.

// parameter guards are written as `!(x > 0.0)` so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod cstate;
pub mod error;
pub mod fockoracle;
pub mod measure;
pub mod metrology;
pub mod optics;
pub mod qgates;
pub mod table;

pub use cstate::{CoherentSuperposition, CoherentTerm};
pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Photon-number cutoff that leaves a Poisson tail far below `1e-12` for a
/// coherent amplitude of magnitude `amp`.
pub fn default_cutoff(amp: f64) -> usize {
    (amp * amp + 10.0 * amp + 20.0).ceil() as usize
}
