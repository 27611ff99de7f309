//! The two half-maps across the capture and escape crossings and their composition.

use crate::adiabatic::{CoefficientTable, Interpolated, JumpCoefficients};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Tolerance on the capture test value near `0` and `1/2`.
pub const CAPTURE_TOL: f64 = 1e-9;

/// A point of the return map on the outer section: `ξ = Ĵ/ε`, pseudo-phase `η`
/// and the well `ν` the orbit enters next.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapState {
    pub xi: f64,
    pub eta: f64,
    pub branch: u8,
}

/// `α ln(2 sin πη) + d − b(η − 1/2)`.
pub fn f_value(eta: f64, alpha: f64, b: f64, d: f64) -> f64 {
    alpha * (2.0 * (PI * eta).sin()).ln() + d - b * (eta - 0.5)
}

/// `dF/dη = απ cot πη − b`.
pub fn f_slope(eta: f64, alpha: f64, b: f64) -> f64 {
    alpha * PI / (PI * eta).tan() - b
}

/// Maximizer `η*` of `F` on `(0, 1)` and the maximum `m = F(η*)`.
pub fn f_max(alpha: f64, b: f64, d: f64) -> (f64, f64) {
    // απ cot πη − b decreases from +∞ to −∞, so bisection always brackets.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f_slope(mid, alpha, b) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let eta = 0.5 * (lo + hi);
    (eta, f_value(eta, alpha, b, d))
}

/// `F₋(η)` of the capture crossing.
pub fn f_minus(c: &JumpCoefficients, eta: f64) -> f64 {
    f_value(eta, c.alpha_minus, c.b_minus, c.d_minus)
}

/// `F₊(η)` of the escape crossing.
pub fn f_plus(c: &JumpCoefficients, eta: f64) -> f64 {
    f_value(eta, c.alpha_plus, c.b_plus, c.d_plus)
}

/// Admissible pseudo-phases `[1/c₁, 1 − 1/c₁]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaWindow {
    pub lo: f64,
    pub hi: f64,
}

impl EtaWindow {
    pub fn new(c1: f64) -> Result<Self> {
        if !(c1 > 2.0) {
            return Err(Error::InvalidParams(format!(
                "window constant must exceed 2, got {c1}"
            )));
        }
        Ok(Self {
            lo: 1.0 / c1,
            hi: 1.0 - 1.0 / c1,
        })
    }

    pub fn contains(&self, eta: f64) -> bool {
        eta >= self.lo && eta <= self.hi
    }

    pub fn check(&self, eta: f64) -> Result<()> {
        if self.contains(eta) {
            Ok(())
        } else {
            Err(Error::EtaWindowViolation {
                eta,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }
}

/// Fractional part in `[0, 1)`.
pub fn frac(v: f64) -> f64 {
    let f = v - v.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Capture map: `Ĵ⁽¹⁾ = Ĵ⁽⁰⁾ − εF₋(η⁽⁰⁾)`, `η⁽¹⁾ = {η⁽⁰⁾ + ε⁻¹Φ₁(Ĵ⁽¹⁾)}`.
///
/// `phi1` returns `Φ₁(Ĵ, ε)`.
pub fn map_m1<P>(
    jhat0: f64,
    eta0: f64,
    c: &JumpCoefficients,
    phi1: P,
    eps: f64,
    window: &EtaWindow,
) -> Result<(f64, f64)>
where
    P: Fn(f64) -> Result<f64>,
{
    window.check(eta0)?;
    let j1 = jhat0 - eps * f_minus(c, eta0);
    let eta1 = frac(eta0 + phi1(j1)? / eps);
    window.check(eta1)?;
    Ok((j1, eta1))
}

/// Result of the escape map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeImage {
    pub jhat: f64,
    pub eta: f64,
    /// `{(ε⁻¹Φ₂ + η⁽¹⁾)/2}`.
    pub capture_value: f64,
    /// Whether the next capture is into the same well.
    pub same_branch: bool,
}

/// Escape map: `Ĵ⁽²⁾ = Ĵ⁽¹⁾ + εF₊(η⁽¹⁾)`, `η⁽²⁾ = {η⁽¹⁾ + ε⁻¹Φ₂(Ĵ⁽²⁾)}`, and the
/// next well from the half-open test on `{(ε⁻¹Φ₂ + η⁽¹⁾)/2}`.
pub fn map_m2<P>(
    jhat1: f64,
    eta1: f64,
    c: &JumpCoefficients,
    phi2: P,
    eps: f64,
    window: &EtaWindow,
) -> Result<EscapeImage>
where
    P: Fn(f64) -> Result<f64>,
{
    window.check(eta1)?;
    let j2 = jhat1 + eps * f_plus(c, eta1);
    let turn = phi2(j2)? / eps + eta1;
    let eta2 = frac(turn);
    let v = frac(0.5 * turn);
    if v < CAPTURE_TOL || (v - 0.5).abs() < CAPTURE_TOL || v > 1.0 - CAPTURE_TOL {
        return Err(Error::CaptureBoundary { value: v });
    }
    window.check(eta2)?;
    Ok(EscapeImage {
        jhat: j2,
        eta: eta2,
        capture_value: v,
        same_branch: v < 0.5,
    })
}

/// Both half-steps of one circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitImage {
    pub j1: f64,
    pub eta1: f64,
    pub j2: f64,
    pub eta2: f64,
    pub capture_value: f64,
    pub next: MapState,
}

/// The asymptotic return map driven by interpolated coefficient tables.
#[derive(Debug, Clone)]
pub struct ReturnMap {
    pub eps: f64,
    pub window: EtaWindow,
    tables: Vec<CoefficientTable>,
    mirror: bool,
}

impl ReturnMap {
    /// Map with one table per branch in `tables`.
    pub fn new(eps: f64, c1: f64, tables: Vec<CoefficientTable>) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParams(format!(
                "epsilon must be positive, got {eps}"
            )));
        }
        if tables.is_empty() {
            return Err(Error::InvalidParams(
                "return map needs a coefficient table".into(),
            ));
        }
        Ok(Self {
            eps,
            window: EtaWindow::new(c1)?,
            tables,
            mirror: false,
        })
    }

    /// Map for a model whose two wells are congruent: one table serves both branches.
    pub fn symmetric(eps: f64, c1: f64, table: CoefficientTable) -> Result<Self> {
        let mut m = Self::new(eps, c1, vec![table])?;
        m.mirror = true;
        Ok(m)
    }

    pub fn table(&self, branch: u8) -> Result<&CoefficientTable> {
        self.tables
            .iter()
            .find(|t| t.branch == branch)
            .or_else(|| self.mirror.then(|| &self.tables[0]))
            .ok_or_else(|| {
                Error::InvalidParams(format!("no coefficient table for branch {branch}"))
            })
    }

    pub fn data(&self, branch: u8, jhat: f64) -> Result<Interpolated> {
        self.table(branch)?.eval(jhat)
    }

    /// One circuit from the outer section through well `s.branch` and back.
    pub fn step(&self, s: &MapState) -> Result<CircuitImage> {
        let eps = self.eps;
        let j0 = eps * s.xi;
        let table = self.table(s.branch)?;
        let c0 = table.eval(j0)?.coeffs;
        let (j1, eta1) = map_m1(
            j0,
            s.eta,
            &c0,
            |j| Ok(table.eval(j)?.phi(eps)[0]),
            eps,
            &self.window,
        )?;
        let c1 = table.eval(j1)?.coeffs;
        let esc = map_m2(
            j1,
            eta1,
            &c1,
            |j| Ok(table.eval(j)?.phi(eps)[1]),
            eps,
            &self.window,
        )?;
        let branch = if esc.same_branch {
            s.branch
        } else {
            3 - s.branch
        };
        Ok(CircuitImage {
            j1,
            eta1,
            j2: esc.jhat,
            eta2: esc.eta,
            capture_value: esc.capture_value,
            next: MapState {
                xi: esc.jhat / eps,
                eta: esc.eta,
                branch,
            },
        })
    }

    /// Jacobian of one circuit in `(ξ, η)` by central differences.
    pub fn jacobian(&self, s: &MapState, h_xi: f64, h_eta: f64) -> Result<[[f64; 2]; 2]> {
        let img = |dxi: f64, deta: f64| -> Result<(f64, f64)> {
            let t = self.step(&MapState {
                xi: s.xi + dxi,
                eta: s.eta + deta,
                branch: s.branch,
            })?;
            Ok((t.next.xi, t.eta2))
        };
        let base = img(0.0, 0.0)?.1;
        let unwrap = |e: f64| e - (e - base).round();
        let (a, b) = (img(h_xi, 0.0)?, img(-h_xi, 0.0)?);
        let (c, d) = (img(0.0, h_eta)?, img(0.0, -h_eta)?);
        Ok([
            [(a.0 - b.0) / (2.0 * h_xi), (c.0 - d.0) / (2.0 * h_eta)],
            [
                (unwrap(a.1) - unwrap(b.1)) / (2.0 * h_xi),
                (unwrap(c.1) - unwrap(d.1)) / (2.0 * h_eta),
            ],
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractional_part_stays_below_one() {
        assert_eq!(frac(-1e-18), 0.0);
        assert_eq!(frac(3.25), 0.25);
        assert!((frac(-0.25) - 0.75).abs() < 1e-15);
    }
}
