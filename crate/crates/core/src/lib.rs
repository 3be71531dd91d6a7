//! Nonlinear fiber propagation models for passive optical network studies.
//!
//! The crate provides a split-step Fourier reference solver, six closed-form
//! first-order perturbation models (regular, logarithmic and frequency
//! logarithmic expansions in γ and in β₂), a coherent QPSK transceiver over a
//! two-span PON link, model-trained symbol detectors, and hard-decision FEC
//! rate evaluation.

pub mod accumulators;
pub mod detection;
pub mod error;
pub mod fec;
pub mod fiber;
pub mod models;
pub mod signal;
pub mod ssfm;
pub mod transceiver;

pub use error::{Error, Result};
