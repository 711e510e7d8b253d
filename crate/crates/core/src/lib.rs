//! Core library for the exclusion-process mixing laboratory.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`] builds and validates the finite graphs every process runs on,
//!   including degree inflation with zero-rate dummy edges.
//! * [`spectral`] and [`profile`] perform dense spectral analysis of the
//!   single-walk generator: heat kernels, mixing functionals, spectral and
//!   isoperimetric profiles and log-Sobolev brackets.
//! * [`inequality`] evaluates the classical functional inequalities and the
//!   eigenfunction lower bound on top of those spectra.
//! * [`exact`] enumerates the state spaces of RW(k), EX(k) and IP(k) on tiny
//!   instances and serves as the oracle for everything stochastic.
//! * [`simulate`] realises the standard and modified graphical constructions.
//! * [`chameleon`] implements the chameleon process and its reduced ink chains.
//! * [`diagnostics`] hosts the round-analysis quantities and the negative
//!   association tests.

pub mod chameleon;
pub mod check;
pub mod diagnostics;
pub mod error;
pub mod exact;
pub mod graph;
pub mod inequality;
pub mod profile;
pub mod rng;
pub mod simulate;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use graph::{Graph, GraphSpec, ModifiedGraph};
pub use spectral::SpectralData;
