//! Hamiltonian interface and the built-in symmetric double-well family.
//!
//! Models have the form `H = p²/2 + U(q, y, x)`; the fast pair `(p, q)` moves on
//! the unit time scale and the slow pair `(y, x)` at rate `ε`:
//! `ṗ = −H_q, q̇ = H_p, ẏ = −ε H_x, ẋ = ε H_y`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Parameters of the built-in double-well family
/// `H = p²/2 + ω_y y²/2 + ω_x x²/2 − (k0 + βx) q²/2 + q⁴/4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: f64,
    pub omega_x: f64,
    pub omega_y: f64,
    pub k0: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            beta: 0.4,
            omega_x: 1.0,
            omega_y: 1.0,
            k0: 1.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.beta, self.omega_x, self.omega_y, self.k0];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if self.omega_x <= 0.0 || self.omega_y <= 0.0 {
            return Err(Error::InvalidParams(
                "omega_x and omega_y must be positive".into(),
            ));
        }
        if self.k0 <= 0.0 {
            return Err(Error::InvalidParams("k0 must be positive".into()));
        }
        Ok(())
    }

    /// Well parameter `k(x) = k0 + βx`.
    pub fn stiffness(&self, x: f64) -> f64 {
        self.k0 + self.beta * x
    }
}

/// A point of the full phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FullState {
    pub p: f64,
    pub q: f64,
    pub y: f64,
    pub x: f64,
}

impl FullState {
    pub fn new(p: f64, q: f64, y: f64, x: f64) -> Self {
        Self { p, q, y, x }
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.q.is_finite() && self.y.is_finite() && self.x.is_finite()
    }
}

/// A slow-fast Hamiltonian `H = p²/2 + U(q, y, x)`.
pub trait SlowFastModel: Send + Sync {
    /// Potential `U(q, y, x)`.
    fn potential(&self, q: f64, y: f64, x: f64) -> f64;

    /// `(U_q, U_y, U_x)`.
    fn potential_gradient(&self, q: f64, y: f64, x: f64) -> [f64; 3];

    /// Second derivatives of `U` in the order `(q, y, x)`.
    ///
    /// The default uses central differences of the gradient (step 1e-5), which
    /// limits second-derivative accuracy to about 1e-10 relative.
    fn potential_hessian(&self, q: f64, y: f64, x: f64) -> [[f64; 3]; 3] {
        let h = 1e-5;
        let mut out = [[0.0; 3]; 3];
        for j in 0..3 {
            let mut plus = [q, y, x];
            let mut minus = [q, y, x];
            plus[j] += h;
            minus[j] -= h;
            let gp = self.potential_gradient(plus[0], plus[1], plus[2]);
            let gm = self.potential_gradient(minus[0], minus[1], minus[2]);
            for i in 0..3 {
                out[i][j] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        out
    }

    /// `U(q, y, x) − U(q_ref, y, x)`.
    ///
    /// Implementations should evaluate the difference without forming the two
    /// potentials separately when `q` and `q_ref` are close, since the
    /// near-separatrix quadratures depend on it.
    fn potential_difference(&self, q: f64, q_ref: f64, y: f64, x: f64) -> f64 {
        self.potential(q, y, x) - self.potential(q_ref, y, x)
    }

    /// Starting point for the saddle search at frozen `(y, x)`.
    fn saddle_seed(&self, _y: f64, _x: f64) -> f64 {
        0.0
    }

    /// Whether the fast system has the figure-eight portrait at `(y, x)`.
    fn admissible(&self, _y: f64, _x: f64) -> bool {
        true
    }

    /// The additive split `U = K(y) + V(q, x)`, when the model has one.
    fn separable(&self) -> Option<&dyn SeparableModel> {
        None
    }

    fn energy(&self, s: &FullState) -> f64 {
        0.5 * s.p * s.p + self.potential(s.q, s.y, s.x)
    }

    /// `(H_p, H_q, H_y, H_x)`.
    fn gradient(&self, s: &FullState) -> [f64; 4] {
        let g = self.potential_gradient(s.q, s.y, s.x);
        [s.p, g[0], g[1], g[2]]
    }
}

/// Split form `U(q, y, x) = K(y) + V(q, x)` used by splitting integrators and
/// by the slow-plane geometry.
pub trait SeparableModel: Send + Sync {
    fn slow_kinetic(&self, y: f64) -> f64;
    fn slow_kinetic_derivative(&self, y: f64) -> f64;
    /// Inverse branch of `K`: the `y` with the sign of `sign` such that `K(y) = value`.
    fn slow_kinetic_inverse(&self, value: f64, sign: f64) -> Option<f64>;
    fn coordinate_potential(&self, q: f64, x: f64) -> f64;
    /// `(V_q, V_x)`.
    fn coordinate_potential_gradient(&self, q: f64, x: f64) -> [f64; 2];
    /// Interval of `x` on which the model is admissible.
    fn slow_domain(&self) -> (f64, f64);
}

/// The built-in symmetric double-well family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleWell {
    pub params: ModelParams,
}

impl DoubleWell {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }
}

impl Default for DoubleWell {
    fn default() -> Self {
        Self {
            params: ModelParams::default(),
        }
    }
}

impl SlowFastModel for DoubleWell {
    fn potential(&self, q: f64, y: f64, x: f64) -> f64 {
        let m = &self.params;
        let q2 = q * q;
        0.5 * m.omega_y * y * y + 0.5 * m.omega_x * x * x - 0.5 * m.stiffness(x) * q2
            + 0.25 * q2 * q2
    }

    fn potential_gradient(&self, q: f64, y: f64, x: f64) -> [f64; 3] {
        let m = &self.params;
        [
            -m.stiffness(x) * q + q * q * q,
            m.omega_y * y,
            m.omega_x * x - 0.5 * m.beta * q * q,
        ]
    }

    fn potential_difference(&self, q: f64, q_ref: f64, _y: f64, x: f64) -> f64 {
        let d2 = (q - q_ref) * (q + q_ref);
        d2 * (0.25 * (q * q + q_ref * q_ref) - 0.5 * self.params.stiffness(x))
    }

    fn potential_hessian(&self, q: f64, _y: f64, x: f64) -> [[f64; 3]; 3] {
        let m = &self.params;
        [
            [-m.stiffness(x) + 3.0 * q * q, 0.0, -m.beta * q],
            [0.0, m.omega_y, 0.0],
            [-m.beta * q, 0.0, m.omega_x],
        ]
    }

    fn admissible(&self, _y: f64, x: f64) -> bool {
        self.params.stiffness(x) > 0.0
    }

    fn separable(&self) -> Option<&dyn SeparableModel> {
        Some(self)
    }
}

impl SeparableModel for DoubleWell {
    fn slow_kinetic(&self, y: f64) -> f64 {
        0.5 * self.params.omega_y * y * y
    }

    fn slow_kinetic_derivative(&self, y: f64) -> f64 {
        self.params.omega_y * y
    }

    fn slow_kinetic_inverse(&self, value: f64, sign: f64) -> Option<f64> {
        (value >= 0.0).then(|| (2.0 * value / self.params.omega_y).sqrt().copysign(sign))
    }

    fn coordinate_potential(&self, q: f64, x: f64) -> f64 {
        let q2 = q * q;
        0.5 * self.params.omega_x * x * x - 0.5 * self.params.stiffness(x) * q2 + 0.25 * q2 * q2
    }

    fn coordinate_potential_gradient(&self, q: f64, x: f64) -> [f64; 2] {
        let m = &self.params;
        [
            -m.stiffness(x) * q + q * q * q,
            m.omega_x * x - 0.5 * m.beta * q * q,
        ]
    }

    fn slow_domain(&self) -> (f64, f64) {
        let m = &self.params;
        if m.beta > 0.0 {
            (-m.k0 / m.beta, f64::INFINITY)
        } else if m.beta < 0.0 {
            (f64::NEG_INFINITY, -m.k0 / m.beta)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        }
    }
}

/// Total energy `H(s)`.
pub fn eval_h<M: SlowFastModel + ?Sized>(model: &M, s: &FullState) -> f64 {
    model.energy(s)
}

/// `(∂H/∂p, ∂H/∂q, ∂H/∂y, ∂H/∂x)`.
pub fn grad_h<M: SlowFastModel + ?Sized>(model: &M, s: &FullState) -> [f64; 4] {
    model.gradient(s)
}

/// Outcome of [`check_symmetry`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SymmetryVerdict {
    Symmetric,
    Violated {
        q: f64,
        y: f64,
        x: f64,
        difference: f64,
    },
}

impl SymmetryVerdict {
    pub fn is_symmetric(&self) -> bool {
        matches!(self, SymmetryVerdict::Symmetric)
    }
}

/// Checks `H(p, q, y, x) = H(p, −q, y, x)` on a grid of `(q, y, x)` to machine precision.
pub fn check_symmetry<M: SlowFastModel + ?Sized>(
    model: &M,
    grid: &[(f64, f64, f64)],
) -> Result<SymmetryVerdict> {
    if grid.is_empty() {
        return Err(Error::InvalidParams("symmetry grid is empty".into()));
    }
    for &(q, y, x) in grid {
        let a = model.potential(q, y, x);
        let b = model.potential(-q, y, x);
        let tol = 4.0 * f64::EPSILON * a.abs().max(b.abs());
        if (a - b).abs() > tol {
            return Ok(SymmetryVerdict::Violated {
                q,
                y,
                x,
                difference: a - b,
            });
        }
    }
    Ok(SymmetryVerdict::Symmetric)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_params() {
        let p = ModelParams {
            omega_x: 0.0,
            ..Default::default()
        };
        assert!(DoubleWell::new(p).is_err());
    }

    #[test]
    fn exact_hessian_matches_default_differences() {
        struct Plain(DoubleWell);
        impl SlowFastModel for Plain {
            fn potential(&self, q: f64, y: f64, x: f64) -> f64 {
                self.0.potential(q, y, x)
            }
            fn potential_gradient(&self, q: f64, y: f64, x: f64) -> [f64; 3] {
                self.0.potential_gradient(q, y, x)
            }
        }
        let m = DoubleWell::default();
        let exact = m.potential_hessian(0.7, -0.3, 0.4);
        let fd = Plain(m).potential_hessian(0.7, -0.3, 0.4);
        for i in 0..3 {
            for j in 0..3 {
                assert!((exact[i][j] - fd[i][j]).abs() < 1e-8);
            }
        }
    }
}
