//! Cooperative dynamics of 1d solid-state spin qubit arrays coupled through a
//! ferromagnetic thin-film magnon bath.
//!
//! The crate is organized bottom-up:
//!
//! * [`params`]: physical inputs in CGS units and the derived dimensionless scales.
//! * [`specfun`]: Bessel functions and the magnon-kernel quadratures.
//! * [`bath`]: spin-wave dispersion and susceptibility diagnostics.
//! * [`couplings`]: coherent and dissipative coupling matrices.
//! * [`spectrum`]: single-excitation non-Hermitian spectra and band structures.
//! * [`dynamics`]: many-body Lindblad evolution (dense and quantum-jump solvers).
//!
//! Rates are carried in units of the characteristic frequency ν by the coupling
//! layer; the dynamics layer works in whatever unit the coupling matrices are
//! expressed in (the experiment runner normalizes them to the single-qubit rate Γ₀).

pub mod bath;
pub mod couplings;
pub mod dynamics;
pub mod error;
pub mod params;
pub mod spectrum;
pub mod specfun;

pub use error::{Error, Result};
