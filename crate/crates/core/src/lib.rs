//! Quantum and classical Fisher information for resolving two coherent
//! CARS emitters.
//!
//! The crate computes the quantum Fisher information (QFI) for the separation
//! of two point emitters driven by plane-wave or vortex excitation, the
//! classical Fisher information of direct imaging and Hermite-Gauss mode
//! sorting (SPADE), and checks the closed forms against quadrature, series
//! and Monte Carlo oracles.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod adjudication;
pub mod cli;
pub mod error;
pub mod excitation;
pub mod fisher;
pub mod montecarlo;
pub mod numerics;
pub mod psf_modes;
pub mod spectral;

pub use error::{Error, Result};
