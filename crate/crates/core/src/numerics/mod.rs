//! Numerical building blocks shared by the analysis modules.

pub mod ode;
pub mod quad;
pub mod roots;
pub mod spline;
pub mod stats;
