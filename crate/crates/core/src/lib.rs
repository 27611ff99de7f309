//! Separatrix crossings in slow-fast Hamiltonian systems with a symmetric
//! figure-eight separatrix: adiabatic invariants, the asymptotic return map,
//! its stable fixed points, and a direct-integration oracle.

pub mod adiabatic;
pub mod cli;
pub mod direct_sim;
pub mod error;
pub mod fast;
pub mod model;
pub mod numerics;
pub mod return_map;

pub use error::{Error, Result};
