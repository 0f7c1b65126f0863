//! Simulation of a spherical quantum-reflection trap for interacting
//! cold-atom wave packets.
//!
//! The trap is a sphere whose inner wall reflects slow atoms quantum
//! mechanically. In scaled units the radial dynamics reduce to a 1D
//! Gross-Pitaevskii equation with a step potential of depth `sigma^2`
//! outside the unit radius and a contact interaction of strength `gamma`.
//! The crate propagates wave packets with a Crank-Nicolson scheme and an
//! absorbing boundary layer, computes surviving-density and energy
//! observables, and carries out a Gaussian variational stability analysis.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod model;
pub mod observables;
pub mod propagator;
pub mod quad;
pub mod units;
pub mod variational;

pub use error::QrError;
