//! Simulation and verification toolkit for classical and quantum stochastic
//! models of passive circuits built from inductors, capacitors, resistors and
//! memristors.
//!
//! The pipeline goes: netlist text → [`circuit::PhaseSpaceModel`] →
//! canonical stochastic dilation ([`dilation`]) → SDE integration ([`sde`]) →
//! numerical certificates ([`verify`], [`quantum`], [`approximations`]).

pub mod approximations;
pub mod circuit;
pub mod dilation;
pub mod error;
pub mod field;
pub mod netlist;
pub mod quantum;
pub mod report;
pub mod scalar;
pub mod sde;
pub mod verify;

pub use error::CoreError;
pub use scalar::{Interval, ScalarFunction};
