//! Coefficients of the jump formulas at the two crossings, and their table over
//! an action interval for the return-map sweep.

use super::invariant::{d_coefficients_in, theta_of};
use super::phase::{gamma, phase_integrals};
use super::slow::crossing_points;
use super::Mode;
use crate::error::{Error, Result};
use crate::fast::{FastSystem, RegionId};
use crate::model::SlowFastModel;
use crate::numerics::spline::CubicSpline;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Crossing data at capture (`minus`) and escape (`plus`), with the derived
/// coefficients of the map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpCoefficients {
    pub a_minus: f64,
    pub a_plus: f64,
    pub theta_minus: f64,
    pub theta_plus: f64,
    /// `b_j` for `j = 1, 2, 3` at capture.
    pub bj_minus: [f64; 3],
    pub bj_plus: [f64; 3],
    /// `d_j` for `j = 1, 2, 3` at capture.
    pub dj_minus: [f64; 3],
    pub dj_plus: [f64; 3],
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    pub d_minus: f64,
    pub d_plus: f64,
    pub b_minus: f64,
    pub b_plus: f64,
}

impl JumpCoefficients {
    /// Derives `α±`, `d±`, `b±` from the crossing data for branch `nu`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_crossings(
        nu: u8,
        a_minus: f64,
        a_plus: f64,
        theta_minus: f64,
        theta_plus: f64,
        bj_minus: [f64; 3],
        bj_plus: [f64; 3],
        dj_minus: [f64; 3],
        dj_plus: [f64; 3],
    ) -> Result<Self> {
        let k = match nu {
            1 => 0,
            2 => 1,
            _ => {
                return Err(Error::InvalidParams(format!(
                    "branch must be 1 or 2, got {nu}"
                )))
            }
        };
        let tp = 2.0 * PI;
        Ok(Self {
            a_minus,
            a_plus,
            theta_minus,
            theta_plus,
            bj_minus,
            bj_plus,
            dj_minus,
            dj_plus,
            alpha_minus: a_minus * theta_minus / tp,
            alpha_plus: -a_plus * theta_plus / tp,
            d_minus: -(dj_minus[k] - 0.5 * dj_minus[2]) / tp,
            d_plus: -(dj_plus[k] - 0.5 * dj_plus[2]) / tp,
            b_minus: theta_minus * (bj_minus[k] - 0.5 * bj_minus[2]) / tp,
            b_plus: theta_plus * (bj_plus[k] - 0.5 * bj_plus[2]) / tp,
        })
    }

    /// Coefficients with only `α±`, `b±`, `d±` set (the rest zero), for
    /// synthetic studies of the map.
    pub fn synthetic(
        alpha_minus: f64,
        alpha_plus: f64,
        b_minus: f64,
        b_plus: f64,
        d_minus: f64,
        d_plus: f64,
    ) -> Self {
        Self {
            a_minus: 0.0,
            a_plus: 0.0,
            theta_minus: 0.0,
            theta_plus: 0.0,
            bj_minus: [0.0; 3],
            bj_plus: [0.0; 3],
            dj_minus: [0.0; 3],
            dj_plus: [0.0; 3],
            alpha_minus,
            alpha_plus,
            d_minus,
            d_plus,
            b_minus,
            b_plus,
        }
    }
}

fn crossing_data<M: SlowFastModel + ?Sized>(
    model: &M,
    y: f64,
    x: f64,
) -> Result<(f64, f64, [f64; 3], [f64; 3])> {
    let sys = FastSystem::new(model, y, x)?;
    let mut b = [0.0; 3];
    for (k, r) in [RegionId::G1, RegionId::G2, RegionId::G3]
        .into_iter()
        .enumerate()
    {
        b[k] = sys.period_expansion(r)?.b;
    }
    Ok((sys.saddle().a, theta_of(&sys)?, b, d_coefficients_in(&sys)?))
}

/// Jump coefficients of the loop with action `Ĵ` on the level `h₀`.
pub fn jump_coefficients<M: SlowFastModel + ?Sized>(
    model: &M,
    jhat: f64,
    nu: u8,
    h0: f64,
) -> Result<JumpCoefficients> {
    let (cap, esc) = crossing_points(model, jhat, nu, h0)?;
    let (am, tm, bm, dm) = crossing_data(model, cap.y, cap.x)?;
    let (ap, tpl, bp, dp) = crossing_data(model, esc.y, esc.x)?;
    JumpCoefficients::from_crossings(nu, am, ap, tm, tpl, bm, bp, dm, dp)
}

/// Everything the map needs at one action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub i: f64,
    pub coeffs: JumpCoefficients,
    pub phi1: f64,
    pub phi2: f64,
    pub phi1_eps: f64,
    pub phi2_eps: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

const FIELDS: usize = 16;

fn fields(e: &TableEntry) -> [f64; FIELDS] {
    let c = &e.coeffs;
    [
        c.alpha_minus,
        c.alpha_plus,
        c.b_minus,
        c.b_plus,
        c.d_minus,
        c.d_plus,
        c.theta_minus,
        c.theta_plus,
        c.a_minus,
        c.a_plus,
        e.phi1,
        e.phi2,
        e.phi1_eps,
        e.phi2_eps,
        e.gamma1,
        e.gamma2,
    ]
}

/// Interpolated map data at one action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interpolated {
    pub coeffs: JumpCoefficients,
    /// `(Φ₁, Φ₂)` at `ε = 0`.
    pub phi0: [f64; 2],
    /// `∂Φ/∂ε`.
    pub phi_eps: [f64; 2],
    /// `∂Φ/∂I` of the interpolant of `Φ(·, 0)`.
    pub dphi: [f64; 2],
    /// Tabulated `γ⁰`.
    pub gamma: [f64; 2],
}

impl Interpolated {
    pub fn phi(&self, eps: f64) -> [f64; 2] {
        [
            self.phi0[0] + eps * self.phi_eps[0],
            self.phi0[1] + eps * self.phi_eps[1],
        ]
    }
}

/// Coefficients on a uniform action grid with natural cubic splines.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub branch: u8,
    pub h0: f64,
    pub lo: f64,
    pub hi: f64,
    pub mode: Mode,
    pub entries: Vec<TableEntry>,
    #[serde(skip)]
    splines: Vec<CubicSpline>,
}

impl CoefficientTable {
    /// Tabulates `n ≥ 4` nodes over `[lo, hi]`, evaluating nodes in parallel.
    pub fn build<M: SlowFastModel + ?Sized>(
        model: &M,
        nu: u8,
        h0: f64,
        lo: f64,
        hi: f64,
        n: usize,
        mode: Mode,
    ) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) || n < 4 {
            return Err(Error::InvalidParams(format!(
                "table needs 0 < lo < hi and n >= 4, got [{lo}, {hi}], n = {n}"
            )));
        }
        let step = 1e-4 * (hi - lo);
        let entries = (0..n)
            .into_par_iter()
            .map(|k| -> Result<TableEntry> {
                let i = lo + (hi - lo) * k as f64 / (n - 1) as f64;
                let coeffs = jump_coefficients(model, i, nu, h0)?;
                let ph = phase_integrals(model, i, nu, h0, mode)?;
                let (gamma1, gamma2) = gamma(model, i, nu, h0, step)?;
                Ok(TableEntry {
                    i,
                    coeffs,
                    phi1: ph.phi1,
                    phi2: ph.phi2,
                    phi1_eps: ph.phi1_eps,
                    phi2_eps: ph.phi2_eps,
                    gamma1,
                    gamma2,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_entries(nu, h0, mode, entries)
    }

    /// Rebuilds the splines from stored entries (sorted by action).
    pub fn from_entries(nu: u8, h0: f64, mode: Mode, entries: Vec<TableEntry>) -> Result<Self> {
        if entries.len() < 4 {
            return Err(Error::InsufficientSamples(
                "table needs >= 4 entries".into(),
            ));
        }
        let xs: Vec<f64> = entries.iter().map(|e| e.i).collect();
        let rows: Vec<[f64; FIELDS]> = entries.iter().map(fields).collect();
        let splines = (0..FIELDS)
            .map(|f| CubicSpline::new(xs.clone(), rows.iter().map(|r| r[f]).collect()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            branch: nu,
            h0,
            lo: xs[0],
            hi: xs[xs.len() - 1],
            mode,
            entries,
            splines,
        })
    }

    /// Interpolated data at action `i`; outside the grid is an error.
    pub fn eval(&self, i: f64) -> Result<Interpolated> {
        let slack = 1e-12 * (self.hi - self.lo);
        if !(i >= self.lo - slack && i <= self.hi + slack) {
            return Err(Error::CoefficientInterpolationGap(i));
        }
        let v: Vec<(f64, f64)> = self
            .splines
            .iter()
            .map(|s| s.eval_with_derivative(i))
            .collect();
        let mut coeffs =
            JumpCoefficients::synthetic(v[0].0, v[1].0, v[2].0, v[3].0, v[4].0, v[5].0);
        coeffs.theta_minus = v[6].0;
        coeffs.theta_plus = v[7].0;
        coeffs.a_minus = v[8].0;
        coeffs.a_plus = v[9].0;
        Ok(Interpolated {
            coeffs,
            phi0: [v[10].0, v[11].0],
            phi_eps: [v[12].0, v[13].0],
            dphi: [v[10].1, v[11].1],
            gamma: [v[14].0, v[15].0],
        })
    }
}
