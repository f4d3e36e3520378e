//! Equilibrium superradiance criteria, cavity-dressed mean-field phase
//! diagrams and transmission spectra for spin ensembles coupled to a single
//! resonator mode.
//!
//! Energies are angular frequencies (rad/s) with ħ = 1 throughout; kelvin,
//! tesla and densities are converted only at the edges via
//! [`units::PhysicalConstants`].

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod hamiltonian;
pub mod meanfield;
pub mod partition;
pub mod phase;
pub mod response;
pub mod sparse;
pub mod spectra;
pub mod spin;
pub mod transmission;
pub mod units;

pub use error::{Error, Result};
pub use units::{PhysicalConstants, Thermal};
