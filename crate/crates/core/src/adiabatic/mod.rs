//! Adiabatic and improved adiabatic invariants, slow loops, crossing
//! coefficients and phase integrals.

mod coeffs;
mod invariant;
mod phase;
mod slow;

use serde::{Deserialize, Serialize};

pub use coeffs::{jump_coefficients, CoefficientTable, Interpolated, JumpCoefficients, TableEntry};
pub use invariant::{
    averaged_h1, d_coefficients, improved_invariant, omega1, orbit_integrals, theta, theta_fd,
    u_correction, InvariantValues, OrbitIntegrals,
};
pub(crate) use invariant::{d_coefficients_in, theta_of};
pub use phase::{gamma, phase_integrals, phi_integrals, twist_scan, PhaseIntegrals, TwistSample};
pub use slow::{
    crossing_points, gamma_point, slow_center, slow_field, slow_trajectory, uncertainty_curve,
    AdiabaticTrajectory, CrossingPoint, CurvePoint, SlowField, SlowSample,
};

/// Whether slow quantities include the first-order `εℋ₁` correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Adiabatic,
    #[default]
    Improved,
}

impl std::str::FromStr for Mode {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "adiabatic" => Ok(Mode::Adiabatic),
            "improved" => Ok(Mode::Improved),
            _ => Err(crate::Error::InvalidParams(format!("unknown mode '{s}'"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Adiabatic => "adiabatic",
            Mode::Improved => "improved",
        })
    }
}
