//! Phase integrals `Φ₁`, `Φ₂` over the two segments of the adiabatic loop and
//! their action derivatives `γ₁⁰`, `γ₂⁰`.
//!
//! For models with a split slow kinetic energy the loop is a graph over `x` on
//! each branch, so the slow-time integrals become `x`-quadratures with a
//! graded mesh at the crossing and a square-root substitution at the slow
//! turning point. Other models fall back to integrating the slow flow.

use super::invariant::averaged_h1_in;
use super::slow::{crossing_points, energy_clamped, slow_trajectory};
use super::Mode;
use crate::error::{Error, Result};
use crate::fast::{FastSystem, RegionId};
use crate::model::{SeparableModel, SlowFastModel};
use crate::numerics::quad::{integrate_n, QuadConfig};
use crate::numerics::roots::brent;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::f64::consts::PI;

/// Geometry of the adiabatic loop of a split model: both crossings share `x_c`.
pub(crate) struct SplitLoop<'m, M: SlowFastModel + ?Sized> {
    model: &'m M,
    sep: &'m dyn SeparableModel,
    h0: f64,
    jhat: f64,
    pub x_c: f64,
    /// Slow turning point of the well segment.
    pub x_well: f64,
    /// Slow turning point of the outer segment.
    pub x_outer: f64,
    /// `dS/dx` at the crossing.
    pub s_prime: f64,
}

impl<'m, M: SlowFastModel + ?Sized> SplitLoop<'m, M> {
    pub(crate) fn new(model: &'m M, jhat: f64, nu: u8, h0: f64) -> Result<Self> {
        let sep = model.separable().ok_or(Error::SeparabilityUnsupported)?;
        let well = RegionId::well(nu)?;
        let (cap, esc) = crossing_points(model, jhat, nu, h0)?;
        let x_c = 0.5 * (cap.x + esc.x);
        if (cap.x - esc.x).abs() > 1e-9 * (1.0 + x_c.abs()) {
            return Err(Error::AssumptionBViolated(
                "split model crossings at different x".into(),
            ));
        }
        let sys = FastSystem::new(model, 0.0, x_c)?;
        let s_prime = sys.loop_area_gradient(well)?[1];
        if s_prime == 0.0 {
            return Err(Error::AssumptionBViolated(
                "loop area is stationary at the crossing".into(),
            ));
        }
        let mut lp = Self {
            model,
            sep,
            h0,
            jhat,
            x_c,
            x_well: x_c,
            x_outer: x_c,
            s_prime,
        };
        let span = (cap.y - esc.y).abs().max(1e-3);
        lp.x_well = lp.turning(well, s_prime.signum(), span)?;
        lp.x_outer = lp.turning(RegionId::G3, -s_prime.signum(), span)?;
        // The outer turning point pushes the flow towards the capture branch.
        let sys = FastSystem::new(model, 0.0, lp.x_outer)?;
        let e = energy_clamped(&sys, 2.0 * jhat, RegionId::G3)?;
        let av = sys.orbit_averages(e, RegionId::G3)?;
        let dy = -(sys.saddle_energy_gradient()[1] + av.mean_ex);
        if dy.signum() != cap.y.signum() || (lp.x_c - lp.x_outer).signum() != cap.y.signum() {
            return Err(Error::AssumptionBViolated(
                "loop orientation inconsistent with capture".into(),
            ));
        }
        Ok(lp)
    }

    fn action_in(&self, region: RegionId) -> f64 {
        if region == RegionId::G3 {
            2.0 * self.jhat
        } else {
            self.jhat
        }
    }

    /// Slow kinetic energy left at `x` on the segment of `region`, with the
    /// fast energy and period there.
    fn budget(&self, x: f64, region: RegionId) -> Result<(f64, f64, f64)> {
        let sys = FastSystem::new(self.model, 0.0, x)?;
        let e = energy_clamped(&sys, self.action_in(region), region)?;
        let k0 = self.sep.slow_kinetic(0.0);
        let k = self.h0 - (sys.saddle().h_s - k0) - e;
        Ok((k, e, sys.period(e, region)?))
    }

    fn turning(&self, region: RegionId, dir: f64, span: f64) -> Result<f64> {
        let f = |x: f64| {
            self.budget(x, region)
                .map(|b| b.0 - self.sep.slow_kinetic(0.0))
        };
        let mut good = 0.0;
        let mut d = 0.02 * span;
        for _ in 0..400 {
            match f(self.x_c + dir * d) {
                Ok(v) if v <= 0.0 => {
                    let (a, b) = (self.x_c + dir * good, self.x_c + dir * d);
                    return brent(|x| f(x).unwrap_or(f64::NAN), a.min(b), a.max(b), 0.0, 300);
                }
                Ok(_) => {
                    good = d;
                    d *= 1.5;
                }
                Err(_) => {
                    d = 0.5 * (good + d);
                    if d - good < 1e-12 {
                        break;
                    }
                }
            }
        }
        Err(Error::AssumptionBViolated(format!(
            "{region:?} segment of the loop does not close"
        )))
    }

    /// `(1/|K'(y₊)|, 1/|K'(y₋)|, y₊, y₋)` for slow kinetic energy `k`.
    fn branches(&self, k: f64) -> Option<(f64, f64, f64, f64)> {
        let yp = self.sep.slow_kinetic_inverse(k, 1.0)?;
        let ym = self.sep.slow_kinetic_inverse(k, -1.0)?;
        let wp = 1.0 / self.sep.slow_kinetic_derivative(yp).abs();
        let wm = 1.0 / self.sep.slow_kinetic_derivative(ym).abs();
        (wp.is_finite() && wm.is_finite()).then_some((wp, wm, yp, ym))
    }

    fn segment_end(&self, region: RegionId) -> f64 {
        if region == RegionId::G3 {
            self.x_outer
        } else {
            self.x_well
        }
    }

    /// `∫ f(x) |dx|` over the segment of `region`, where `f` carries the
    /// `1/|K'(y)|` turning-point singularity.
    fn segment_quad<const N: usize, F>(
        &self,
        region: RegionId,
        cfg: &QuadConfig,
        decades: i32,
        f: F,
    ) -> Result<[f64; N]>
    where
        F: Fn(f64) -> Result<[f64; N]>,
    {
        let x_t = self.segment_end(region);
        let len = (x_t - self.x_c).abs();
        let dir = (x_t - self.x_c).signum();
        let failure: RefCell<Option<Error>> = RefCell::new(None);
        let call = |x: f64| match f(x) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                [0.0; N]
            }
        };
        let mut total = [0.0; N];
        let mut add = |v: [f64; N]| {
            for k in 0..N {
                total[k] += v[k];
            }
        };
        // Geometric pieces towards the crossing.
        for k in 1..=decades {
            let a = len * 10f64.powi(-k - 1);
            let b = len * 10f64.powi(-k);
            add(integrate_n(|d| call(self.x_c + dir * d), a, b, cfg)?.value);
        }
        let tail = len * 10f64.powi(-decades - 1);
        let v_tail = call(self.x_c + dir * tail);
        add(v_tail.map(|v| v * tail));
        // Main piece with x = x_t − dir·v².
        let v_max = (0.9 * len).sqrt();
        let v_floor = 1e-3 * len.sqrt();
        let sub = |v: f64| {
            let v = v.max(v_floor);
            call(x_t - dir * v * v).map(|w| 2.0 * v * w)
        };
        add(integrate_n(sub, 0.0, v_max, cfg)?.value);
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        Ok(total)
    }

    /// Phase integral and the two branch durations of the segment of `region`.
    pub(crate) fn phase_and_durations(&self, region: RegionId) -> Result<[f64; 3]> {
        let m = if region == RegionId::G3 { 2.0 } else { 1.0 };
        let cfg = QuadConfig {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_intervals: 2000,
            fail_tol: 1e-7,
        };
        let k0 = self.sep.slow_kinetic(0.0);
        self.segment_quad(region, &cfg, 9, |x| {
            let (k, _, t) = self.budget(x, region)?;
            let (wp, wm, _, _) = self
                .branches(k.max(k0))
                .ok_or_else(|| Error::OutOfRange(format!("no slow momentum at x = {x}")))?;
            Ok([m * (wp + wm) / t, wp, wm])
        })
    }

    /// `∫ ℋ₁ dτ` over both branches of the segment of `region`.
    fn h1_integral(&self, region: RegionId) -> Result<f64> {
        let cfg = QuadConfig {
            abs_tol: 1e-12,
            rel_tol: 1e-9,
            max_intervals: 1000,
            fail_tol: 1e-6,
        };
        let j = self.action_in(region);
        let k0 = self.sep.slow_kinetic(0.0);
        let [v] = self.segment_quad(region, &cfg, 6, |x| {
            let (k, _, _) = self.budget(x, region)?;
            let (wp, wm, yp, ym) = self
                .branches(k.max(k0))
                .ok_or_else(|| Error::OutOfRange(format!("no slow momentum at x = {x}")))?;
            let hp = averaged_h1_in(&FastSystem::new(self.model, yp, x)?, j, region)?;
            let hm = averaged_h1_in(&FastSystem::new(self.model, ym, x)?, j, region)?;
            Ok([hp * wp + hm * wm])
        })?;
        Ok(v)
    }

    /// First-order change of the segment phase per unit `ε` in improved mode,
    /// from the area of the loop segment on the level `Ĥ = h₀`.
    fn phase_correction(&self, region: RegionId, nu: u8) -> Result<f64> {
        let m = if region == RegionId::G3 { 2.0 } else { 1.0 };
        let j = self.action_in(region);
        let dj = 1e-4 * j;
        let other = |jj: f64| -> Result<f64> {
            let jh = if region == RegionId::G3 { 0.5 * jj } else { jj };
            SplitLoop::new(self.model, jh, nu, self.h0)?.h1_integral(region)
        };
        let g_prime = (other(j + dj)? - other(j - dj)?) / (2.0 * dj);
        // Crossing drift with the action: S(x_c) = 2πĴ, i.e. π·J₃ in G₃.
        let xc_prime = if region == RegionId::G3 {
            PI / self.s_prime
        } else {
            2.0 * PI / self.s_prime
        };
        let sigma = (self.segment_end(region) - self.x_c).signum();
        let (k, _, _) = self.budget(self.x_c, region)?;
        let (_, _, yp, ym) = self
            .branches(k)
            .ok_or_else(|| Error::OutOfRange("no slow momentum at the crossing".into()))?;
        let h = |yy: f64| averaged_h1_in(&FastSystem::new(self.model, yy, self.x_c)?, j, region);
        let kp = self.sep.slow_kinetic_derivative(yp);
        let km = self.sep.slow_kinetic_derivative(ym);
        let d_gap = -h(yp)? / kp + h(ym)? / km;
        Ok(m * (g_prime - sigma * xc_prime * d_gap) / (2.0 * PI))
    }
}

/// `Φ₁`, `Φ₂` at `ε = 0` and their first-order improved corrections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseIntegrals {
    pub phi1: f64,
    pub phi2: f64,
    /// `∂Φ₁/∂ε` (zero in adiabatic mode).
    pub phi1_eps: f64,
    pub phi2_eps: f64,
    /// Slow time spent in the well and outside.
    pub tau_well: f64,
    pub tau_outer: f64,
}

impl PhaseIntegrals {
    pub fn at(&self, eps: f64) -> (f64, f64) {
        (
            self.phi1 + eps * self.phi1_eps,
            self.phi2 + eps * self.phi2_eps,
        )
    }
}

/// Phase integrals of the loop of action `Ĵ`; improved mode adds the
/// `ε`-linear correction.
pub fn phase_integrals<M: SlowFastModel + ?Sized>(
    model: &M,
    jhat: f64,
    nu: u8,
    h0: f64,
    mode: Mode,
) -> Result<PhaseIntegrals> {
    if model.separable().is_none() {
        let t = slow_trajectory(model, jhat, nu, h0, 0.0, Mode::Adiabatic)?;
        let (phi1_eps, phi2_eps) = if mode == Mode::Improved {
            let d = 1e-3;
            let p = slow_trajectory(model, jhat, nu, h0, d, Mode::Improved)?;
            let q = slow_trajectory(model, jhat, nu, h0, -d, Mode::Improved)?;
            ((p.phi1 - q.phi1) / (2.0 * d), (p.phi2 - q.phi2) / (2.0 * d))
        } else {
            (0.0, 0.0)
        };
        return Ok(PhaseIntegrals {
            phi1: t.phi1,
            phi2: t.phi2,
            phi1_eps,
            phi2_eps,
            tau_well: t.tau_plus - t.tau_minus,
            tau_outer: t.period - (t.tau_plus - t.tau_minus),
        });
    }
    let well = RegionId::well(nu)?;
    let lp = SplitLoop::new(model, jhat, nu, h0)?;
    let [phi1, a1, b1] = lp.phase_and_durations(well)?;
    let [phi2, a2, b2] = lp.phase_and_durations(RegionId::G3)?;
    let (phi1_eps, phi2_eps) = if mode == Mode::Improved {
        (
            lp.phase_correction(well, nu)?,
            lp.phase_correction(RegionId::G3, nu)?,
        )
    } else {
        (0.0, 0.0)
    };
    Ok(PhaseIntegrals {
        phi1,
        phi2,
        phi1_eps,
        phi2_eps,
        tau_well: a1 + b1,
        tau_outer: a2 + b2,
    })
}

/// `(Φ₁, Φ₂)` at `(Ĵ, ε)`.
pub fn phi_integrals<M: SlowFastModel + ?Sized>(
    model: &M,
    jhat: f64,
    nu: u8,
    h0: f64,
    eps: f64,
    mode: Mode,
) -> Result<(f64, f64)> {
    Ok(phase_integrals(model, jhat, nu, h0, mode)?.at(eps))
}

/// `γ_k⁰ = dΦ_k(I, 0)/dI` by central differences with step `step`, checked
/// against the half step.
pub fn gamma<M: SlowFastModel + ?Sized>(
    model: &M,
    i: f64,
    nu: u8,
    h0: f64,
    step: f64,
) -> Result<(f64, f64)> {
    let phi = |ii: f64| phi_integrals(model, ii, nu, h0, 0.0, Mode::Adiabatic);
    let diff = |d: f64| -> Result<(f64, f64)> {
        let (p1, p2) = phi(i + d)?;
        let (m1, m2) = phi(i - d)?;
        Ok(((p1 - m1) / (2.0 * d), (p2 - m2) / (2.0 * d)))
    };
    let full = diff(step)?;
    let half = diff(0.5 * step)?;
    for (a, b) in [(full.0, half.0), (full.1, half.1)] {
        if (a - b).abs() > 1e-3 * a.abs().max(b.abs()) {
            return Err(Error::DifferentiationFailure(format!(
                "γ estimates {a} and {b} disagree under step halving"
            )));
        }
    }
    // Richardson combination of the two central differences.
    Ok(((4.0 * half.0 - full.0) / 3.0, (4.0 * half.1 - full.1) / 3.0))
}

/// One row of the scan for the twist condition `d/dI(γ₁⁰/γ₂⁰) ≠ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwistSample {
    pub i: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub ratio: f64,
    /// Centred difference of `γ₁⁰/γ₂⁰` (one-sided at the ends).
    pub ratio_slope: f64,
}

/// Scans `γ₁⁰/γ₂⁰` over `n ≥ 3` equally spaced actions in `[lo, hi]`.
pub fn twist_scan<M: SlowFastModel + ?Sized>(
    model: &M,
    nu: u8,
    h0: f64,
    lo: f64,
    hi: f64,
    n: usize,
) -> Result<Vec<TwistSample>> {
    if n < 3 || !(hi > lo) {
        return Err(Error::InvalidParams(
            "twist scan needs n >= 3 and lo < hi".into(),
        ));
    }
    let step = 1e-4 * (hi - lo);
    let mut rows = Vec::with_capacity(n);
    for k in 0..n {
        let i = lo + (hi - lo) * k as f64 / (n - 1) as f64;
        let (g1, g2) = gamma(model, i, nu, h0, step)?;
        rows.push(TwistSample {
            i,
            gamma1: g1,
            gamma2: g2,
            ratio: g1 / g2,
            ratio_slope: 0.0,
        });
    }
    for k in 0..n {
        let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
        rows[k].ratio_slope = (rows[b].ratio - rows[a].ratio) / (rows[b].i - rows[a].i);
    }
    Ok(rows)
}
