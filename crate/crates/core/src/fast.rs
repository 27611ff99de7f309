//! The frozen fast system: saddle, regions, separatrix loop areas, action and
//! period quadratures, and the near-separatrix period expansion.

use crate::error::{Error, Result};
use crate::model::{FullState, SlowFastModel};
use crate::numerics::quad::{integrate_n, QuadConfig};
use crate::numerics::roots::brent;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Region of the fast phase plane. `G1` is the well at `q > q_c`, `G2` the
/// well at `q < q_c`, `G3` the outer region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionId {
    G1,
    G2,
    G3,
    Separatrix,
}

impl RegionId {
    pub fn is_well(self) -> bool {
        matches!(self, RegionId::G1 | RegionId::G2)
    }

    /// Well region for branch index 1 or 2.
    pub fn well(nu: u8) -> Result<Self> {
        match nu {
            1 => Ok(RegionId::G1),
            2 => Ok(RegionId::G2),
            _ => Err(Error::InvalidParams(format!(
                "branch must be 1 or 2, got {nu}"
            ))),
        }
    }

    /// Branch index of a well region.
    pub fn branch(self) -> Option<u8> {
        match self {
            RegionId::G1 => Some(1),
            RegionId::G2 => Some(2),
            _ => None,
        }
    }
}

/// Saddle point of the frozen fast system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleInfo {
    pub p_c: f64,
    pub q_c: f64,
    pub h_s: f64,
    /// Hessian determinant of `E` at the saddle (negative).
    pub g: f64,
    /// `1/√(−g)`.
    pub a: f64,
    /// Depth of the shallower well, used to scale energy tolerances.
    pub energy_scale: f64,
}

/// Near-separatrix expansion `T = −a ln|E| + b + O(E ln|E|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodExpansion {
    pub region: RegionId,
    /// Fitted coefficient of `−ln|E|` (twice the saddle value in `G3`).
    pub a: f64,
    pub b: f64,
    pub fit_residual: f64,
}

/// Orbit averages needed by the slow dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitAverages {
    pub action: f64,
    pub period: f64,
    /// `⟨∂E/∂y⟩`, equal to `∂E/∂y` at fixed action.
    pub mean_ey: f64,
    /// `⟨∂E/∂x⟩`, equal to `∂E/∂x` at fixed action.
    pub mean_ex: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Well {
    bottom: f64,
    depth: f64,
    outer0: f64,
}

/// The fast system with the slow variables frozen at `(y, x)`.
///
/// Energies passed to its methods are measured from the saddle, `E = H − h_s`.
pub struct FastSystem<'m, M: SlowFastModel + ?Sized> {
    model: &'m M,
    pub y: f64,
    pub x: f64,
    saddle: SaddleInfo,
    wells: [Well; 2],
    quad: QuadConfig,
}

impl<M: SlowFastModel + ?Sized> Clone for FastSystem<'_, M> {
    fn clone(&self) -> Self {
        Self {
            model: self.model,
            y: self.y,
            x: self.x,
            saddle: self.saddle,
            wells: self.wells,
            quad: self.quad,
        }
    }
}

fn locate_saddle<M: SlowFastModel + ?Sized>(model: &M, y: f64, x: f64) -> Result<(f64, f64)> {
    let mut q = model.saddle_seed(y, x);
    for _ in 0..50 {
        let gq = model.potential_gradient(q, y, x)[0];
        let hqq = model.potential_hessian(q, y, x)[0][0];
        if hqq == 0.0 || !hqq.is_finite() {
            return Err(Error::NotASaddle { g: hqq });
        }
        let dq = gq / hqq;
        q -= dq;
        if dq.abs() <= 1e-15 * (1.0 + q.abs()) {
            let g = model.potential_hessian(q, y, x)[0][0];
            let resid = model.potential_gradient(q, y, x)[0];
            if resid.abs() > 1e-12 {
                break;
            }
            return Ok((q, g));
        }
    }
    Err(Error::NoConvergence {
        what: "saddle Newton iteration",
        iterations: 50,
    })
}

impl<'m, M: SlowFastModel + ?Sized> FastSystem<'m, M> {
    pub fn new(model: &'m M, y: f64, x: f64) -> Result<Self> {
        if !(y.is_finite() && x.is_finite()) {
            return Err(Error::OutOfRange(format!(
                "non-finite slow point ({y}, {x})"
            )));
        }
        let (q_c, g) = locate_saddle(model, y, x)?;
        if g >= 0.0 {
            return Err(Error::NotASaddle { g });
        }
        let h_s = model.potential(q_c, y, x);
        let mut sys = Self {
            model,
            y,
            x,
            saddle: SaddleInfo {
                p_c: 0.0,
                q_c,
                h_s,
                g,
                a: 1.0 / (-g).sqrt(),
                energy_scale: 0.0,
            },
            wells: [Well {
                bottom: 0.0,
                depth: 0.0,
                outer0: 0.0,
            }; 2],
            quad: QuadConfig::default(),
        };
        sys.wells = [sys.find_well(1.0)?, sys.find_well(-1.0)?];
        sys.saddle.energy_scale = sys.wells[0].depth.abs().min(sys.wells[1].depth.abs());
        Ok(sys)
    }

    /// Replaces the quadrature tolerances of the orbit integrals.
    pub fn with_quad(mut self, quad: QuadConfig) -> Self {
        self.quad = quad;
        self
    }

    pub fn model(&self) -> &'m M {
        self.model
    }

    pub fn saddle(&self) -> &SaddleInfo {
        &self.saddle
    }

    /// Separatrix classification tolerance `1e-10 ·` energy scale.
    pub fn tol_sep(&self) -> f64 {
        1e-10 * self.saddle.energy_scale
    }

    /// Energy (relative to the saddle) of the bottom of a well.
    pub fn well_depth(&self, region: RegionId) -> Result<f64> {
        Ok(self.well(region)?.depth)
    }

    /// Position of the bottom of a well.
    pub fn well_bottom(&self, region: RegionId) -> Result<f64> {
        Ok(self.well(region)?.bottom)
    }

    fn well(&self, region: RegionId) -> Result<&Well> {
        match region {
            RegionId::G1 => Ok(&self.wells[0]),
            RegionId::G2 => Ok(&self.wells[1]),
            _ => Err(Error::OutOfRange(format!("{region:?} is not a well"))),
        }
    }

    /// `U(q) − U(q_ref)` at the frozen slow point.
    pub fn dv(&self, q: f64, q_ref: f64) -> f64 {
        self.model.potential_difference(q, q_ref, self.y, self.x)
    }

    fn uq(&self, q: f64) -> f64 {
        self.model.potential_gradient(q, self.y, self.x)[0]
    }

    /// Fast energy of a phase point measured from the saddle.
    pub fn energy_of(&self, p: f64, q: f64) -> f64 {
        0.5 * (p - self.saddle.p_c).powi(2) + self.dv(q, self.saddle.q_c)
    }

    /// `(∂E/∂y, ∂E/∂x)` at position `q` (the saddle energy moves with `(y, x)`).
    pub fn energy_slow_gradient(&self, q: f64) -> [f64; 2] {
        let g = self.model.potential_gradient(q, self.y, self.x);
        let gc = self
            .model
            .potential_gradient(self.saddle.q_c, self.y, self.x);
        [g[1] - gc[1], g[2] - gc[2]]
    }

    /// `(∂h_s/∂y, ∂h_s/∂x)`.
    pub fn saddle_energy_gradient(&self) -> [f64; 2] {
        let gc = self
            .model
            .potential_gradient(self.saddle.q_c, self.y, self.x);
        [gc[1], gc[2]]
    }

    fn find_well(&self, side: f64) -> Result<Well> {
        let q_c = self.saddle.q_c;
        let len = 1.0f64.max(q_c.abs());
        let mut d = 1e-6 * len;
        let mut lo = q_c;
        let mut hi = None;
        for _ in 0..80 {
            let q = q_c + side * d;
            if side * self.uq(q) >= 0.0 {
                hi = Some(q);
                break;
            }
            lo = q;
            d *= 2.0;
        }
        let hi = hi.ok_or_else(|| Error::OutOfRange("no well bottom found".into()))?;
        let bottom = brent(|q| self.uq(q), lo, hi, 0.0, 200)?;
        let depth = self.dv(bottom, q_c);
        if depth >= 0.0 {
            return Err(Error::OutOfRange("well has no depth".into()));
        }
        let step = (bottom - q_c).abs();
        let mut lo = bottom;
        let mut d = step;
        for _ in 0..80 {
            let q = bottom + side * d;
            if self.dv(q, q_c) >= 0.0 {
                let outer0 = brent(|s| self.dv(s, q_c), lo, q, 0.0, 200)?;
                return Ok(Well {
                    bottom,
                    depth,
                    outer0,
                });
            }
            lo = q;
            d *= 2.0;
        }
        Err(Error::OutOfRange("well is not bounded".into()))
    }

    fn check_energy(&self, e: f64, region: RegionId) -> Result<()> {
        let ok = match region {
            RegionId::G1 | RegionId::G2 => e <= 0.0 && e > self.well(region)?.depth,
            RegionId::G3 => e >= 0.0 && e.is_finite(),
            RegionId::Separatrix => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::OutOfRange(format!(
                "energy {e} invalid for {region:?}"
            )))
        }
    }

    fn outer_root(&self, e: f64, start: f64, side: f64) -> Result<f64> {
        let q_c = self.saddle.q_c;
        let mut lo = start;
        let mut d = (start - q_c).abs().max(1e-3);
        for _ in 0..200 {
            let q = start + side * d;
            if self.dv(q, q_c) - e >= 0.0 {
                return brent(|s| self.dv(s, q_c) - e, lo, q, 0.0, 300);
            }
            lo = q;
            d *= 2.0;
        }
        Err(Error::OutOfRange(format!(
            "energy {e} has no outer turning point"
        )))
    }

    /// Turning points `(q_left, q_right)` of the orbit with energy `e` in `region`.
    pub fn turning_points(&self, e: f64, region: RegionId) -> Result<(f64, f64)> {
        self.check_energy(e, region)?;
        let q_c = self.saddle.q_c;
        match region {
            RegionId::G1 | RegionId::G2 => {
                let w = self.well(region)?;
                let f = |s: f64| self.dv(s, q_c) - e;
                // Near the bottom, measure from it to avoid cancellation.
                let rel = e - w.depth;
                let g = |s: f64| self.dv(s, w.bottom) - rel;
                let near = rel < 0.5 * w.depth.abs();
                let inner = if near {
                    brent(g, q_c, w.bottom, 0.0, 300)?
                } else {
                    brent(f, q_c, w.bottom, 0.0, 300)?
                };
                let outer = if e == 0.0 {
                    w.outer0
                } else if near {
                    brent(g, w.bottom, w.outer0, 0.0, 300)?
                } else {
                    brent(f, w.bottom, w.outer0, 0.0, 300)?
                };
                Ok(if region == RegionId::G1 {
                    (inner, outer)
                } else {
                    (outer, inner)
                })
            }
            RegionId::G3 => {
                let right = self.outer_root(e, self.wells[0].outer0, 1.0)?;
                let left = self.outer_root(e, self.wells[1].outer0, -1.0)?;
                Ok((left, right))
            }
            RegionId::Separatrix => unreachable!(),
        }
    }

    /// `∫ g(q, p) dq` from the turning point `q_turn` to `q_end` using `q = q_turn ± u²`.
    /// Far from the turning point the kinetic energy is `e_mid − U(q) + U(q_end)`.
    fn half_integral<const N: usize, G>(
        &self,
        e_mid: f64,
        q_turn: f64,
        q_end: f64,
        g: &G,
    ) -> Result<[f64; N]>
    where
        G: Fn(f64, f64) -> [f64; N],
    {
        let span = q_end - q_turn;
        let dir = span.signum();
        let half = 0.5 * span.abs();
        let slope = self.uq(q_turn).abs();
        let integrand = |u: f64| {
            let q = q_turn + dir * u * u;
            // Exact offset of the rounded node keeps p and dq/du consistent.
            let du2 = (q - q_turn).abs();
            let u = du2.sqrt();
            let mut w = if du2 < half {
                -self.dv(q, q_turn)
            } else {
                e_mid - self.dv(q, q_end)
            };
            if w <= 0.0 {
                w = slope * du2;
            }
            let p = (2.0 * w).sqrt();
            let mut r = g(q, p);
            for v in r.iter_mut() {
                *v *= 2.0 * u;
            }
            r
        };
        Ok(integrate_n(integrand, 0.0, span.abs().sqrt(), &self.quad)?.value)
    }

    /// `∫ g(q, p) dq` along the upper (`p > 0`) half of the orbit with energy `e`.
    pub fn orbit_integral<const N: usize, G>(
        &self,
        e: f64,
        region: RegionId,
        g: G,
    ) -> Result<[f64; N]>
    where
        G: Fn(f64, f64) -> [f64; N],
    {
        let (l, r) = self.turning_points(e, region)?;
        let (mid, e_mid) = match region {
            RegionId::G3 => (self.saddle.q_c, e),
            _ => {
                let w = self.well(region)?;
                (w.bottom, e - w.depth)
            }
        };
        let a = self.half_integral(e_mid, l, mid, &g)?;
        let b = self.half_integral(e_mid, r, mid, &g)?;
        let mut out = [0.0; N];
        for k in 0..N {
            out[k] = a[k] + b[k];
        }
        Ok(out)
    }

    /// Action `I = (1/2π) ∮ p dq`.
    pub fn action(&self, e: f64, region: RegionId) -> Result<f64> {
        let [s] = self.orbit_integral(e, region, |_, p| [p])?;
        Ok(s / PI)
    }

    /// Period `T = ∮ dq / p`.
    pub fn period(&self, e: f64, region: RegionId) -> Result<f64> {
        self.nonseparatrix(e)?;
        let [s] = self.orbit_integral(e, region, |_, p| [1.0 / p])?;
        Ok(2.0 * s)
    }

    /// Action and period in one pass.
    pub fn action_period(&self, e: f64, region: RegionId) -> Result<(f64, f64)> {
        self.nonseparatrix(e)?;
        let [s, t] = self.orbit_integral(e, region, |_, p| [p, 1.0 / p])?;
        Ok((s / PI, 2.0 * t))
    }

    /// Time average of `f(q)` over the orbit.
    pub fn average<F: Fn(f64) -> f64>(&self, e: f64, region: RegionId, f: F) -> Result<f64> {
        self.nonseparatrix(e)?;
        let [t, s] = self.orbit_integral(e, region, |q, p| [1.0 / p, f(q) / p])?;
        Ok(s / t)
    }

    /// Action, period and the orbit-averaged slow derivatives of `E`.
    pub fn orbit_averages(&self, e: f64, region: RegionId) -> Result<OrbitAverages> {
        self.nonseparatrix(e)?;
        let [s, t, ey, ex] = self.orbit_integral(e, region, |q, p| {
            let [gy, gx] = self.energy_slow_gradient(q);
            [p, 1.0 / p, gy / p, gx / p]
        })?;
        Ok(OrbitAverages {
            action: s / PI,
            period: 2.0 * t,
            mean_ey: ey / t,
            mean_ex: ex / t,
        })
    }

    fn nonseparatrix(&self, e: f64) -> Result<()> {
        if e.abs() < self.tol_sep() {
            Err(Error::NearSeparatrix { energy: e })
        } else {
            Ok(())
        }
    }

    /// Separatrix loop area `S_j`; `S_3 = S_1 + S_2`.
    pub fn loop_area(&self, region: RegionId) -> Result<f64> {
        match region {
            RegionId::G1 | RegionId::G2 => Ok(2.0 * PI * self.action(0.0, region)?),
            RegionId::G3 => Ok(self.loop_area(RegionId::G1)? + self.loop_area(RegionId::G2)?),
            RegionId::Separatrix => Err(Error::OutOfRange(
                "loop area of the separatrix itself".into(),
            )),
        }
    }

    /// `(∂S/∂y, ∂S/∂x)` by differentiating under the loop integral.
    pub fn loop_area_gradient(&self, region: RegionId) -> Result<[f64; 2]> {
        match region {
            RegionId::G1 | RegionId::G2 => {
                let [sy, sx] = self.orbit_integral(0.0, region, |q, p| {
                    let [gy, gx] = self.energy_slow_gradient(q);
                    if p == 0.0 {
                        [0.0, 0.0]
                    } else {
                        [-gy / p, -gx / p]
                    }
                })?;
                Ok([2.0 * sy, 2.0 * sx])
            }
            RegionId::G3 => {
                let a = self.loop_area_gradient(RegionId::G1)?;
                let b = self.loop_area_gradient(RegionId::G2)?;
                Ok([a[0] + b[0], a[1] + b[1]])
            }
            RegionId::Separatrix => Err(Error::OutOfRange(
                "gradient of the separatrix itself".into(),
            )),
        }
    }

    /// Energy `E` whose orbit in `region` has action `i_target`.
    pub fn energy_for_action(&self, i_target: f64, region: RegionId) -> Result<f64> {
        let i_sep = self.loop_area(region)? / (2.0 * PI);
        let (mut lo, mut hi) = match region {
            RegionId::G1 | RegionId::G2 => {
                if !(i_target > 0.0 && i_target < i_sep) {
                    return Err(Error::OutOfRange(format!(
                        "action {i_target} outside (0, {i_sep}) for {region:?}"
                    )));
                }
                (self.well(region)?.depth, 0.0)
            }
            RegionId::G3 => {
                if !(i_target > i_sep && i_target.is_finite()) {
                    return Err(Error::OutOfRange(format!(
                        "action {i_target} not above {i_sep} in G3"
                    )));
                }
                let mut hi = self.saddle.energy_scale.max(1e-12);
                for _ in 0..200 {
                    if self.action(hi, region)? > i_target {
                        break;
                    }
                    hi *= 2.0;
                }
                (0.0, hi)
            }
            RegionId::Separatrix => {
                return Err(Error::OutOfRange("separatrix has no action family".into()))
            }
        };
        // Harmonic or linear first guess, then safeguarded Newton with dI/dE = T/2π.
        let mut e = match region {
            RegionId::G3 => 0.5 * (lo + hi),
            _ => {
                let w = self.well(region)?;
                let curv = self.model.potential_hessian(w.bottom, self.y, self.x)[0][0].max(1e-300);
                (w.depth + i_target * curv.sqrt()).min(0.5 * w.depth)
            }
        };
        if !(e > lo && e < hi) {
            e = 0.5 * (lo + hi);
        }
        let edge = if region == RegionId::G3 { 2.0 } else { -2.0 } * self.tol_sep();
        let mut best = (f64::INFINITY, e);
        for _ in 0..100 {
            let (i, t) = match self.action_period(e, region) {
                Ok(v) => v,
                Err(Error::NearSeparatrix { .. }) => {
                    // Roots inside the separatrix band are reported at its edge.
                    let (i, _) = self.action_period(edge, region)?;
                    let inside = if region == RegionId::G3 {
                        i >= i_target
                    } else {
                        i <= i_target
                    };
                    if inside {
                        return Ok(edge);
                    }
                    e = edge;
                    self.action_period(e, region)?
                }
                Err(err) => return Err(err),
            };
            let f = i - i_target;
            if f.abs() < best.0 {
                best = (f.abs(), e);
            }
            // Quadrature noise bounds how small the residual can be made.
            if f.abs() <= 2e-15 * i_target.max(i_sep) {
                return Ok(e);
            }
            if f > 0.0 {
                hi = hi.min(e);
            } else {
                lo = lo.max(e);
            }
            let newton = e - f * 2.0 * PI / t;
            let scale = e.abs().max(newton.abs()).max(1e-300);
            if (newton - e).abs() <= 4.0 * f64::EPSILON * scale {
                return Ok(newton);
            }
            e = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 1e-15 * lo.abs().max(hi.abs()) {
                return Ok(e);
            }
        }
        if best.0 <= 1e-12 * i_target.max(i_sep) {
            return Ok(best.1);
        }
        Err(Error::NoConvergence {
            what: "energy-for-action inversion",
            iterations: 100,
        })
    }

    /// Fits `T + m·a·ln|E|` on a geometric energy grid and extrapolates to `E → 0`.
    pub fn period_expansion(&self, region: RegionId) -> Result<PeriodExpansion> {
        let m = if region == RegionId::G3 { 2.0 } else { 1.0 };
        let sign = if region == RegionId::G3 { 1.0 } else { -1.0 };
        let scale = self.saddle.energy_scale;
        let es: Vec<f64> = (0..=16).map(|k| scale * 1e-3 * 0.5f64.powi(k)).collect();
        let mut ts = Vec::with_capacity(es.len());
        for &e in &es {
            ts.push(self.period(sign * e, region)?);
        }
        let a = self.saddle.a;
        let bs: Vec<f64> = es
            .iter()
            .zip(&ts)
            .map(|(e, t)| t + m * a * e.ln())
            .collect();
        let mut estimates = Vec::new();
        for k in 0..es.len() - 2 {
            let e0 = es[k];
            let rows: Vec<[f64; 3]> = (k..k + 3)
                .map(|j| {
                    let s = es[j] / e0;
                    [1.0, s * es[j].ln(), s]
                })
                .collect();
            let sol = solve3(&rows, &[bs[k], bs[k + 1], bs[k + 2]])?;
            estimates.push(sol[0]);
        }
        let b = *estimates.last().expect("grid has >= 3 points");
        let diffs: Vec<f64> = estimates.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let last = *diffs.last().expect("grid has >= 4 points");
        if last > 1e-6 * (1.0 + b.abs()) && last > diffs[0] {
            return Err(Error::FitDiverged(format!(
                "period extrapolation differences grow to {last:e} as E shrinks"
            )));
        }
        // Log coefficient from pairwise slopes, one Richardson step.
        let n = es.len();
        let slope = |j: usize| -(ts[j + 1] - ts[j]) / (es[j + 1].ln() - es[j].ln());
        let a_fit = 2.0 * slope(n - 2) - slope(n - 3);
        // Residual of the remainder model b + c E ln E + d E (c, d by least squares).
        let e0 = es[0];
        let cols: Vec<[f64; 2]> = es.iter().map(|e| [e / e0 * e.ln(), e / e0]).collect();
        let rhs: Vec<f64> = bs.iter().map(|v| v - b).collect();
        let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (c, r) in cols.iter().zip(&rhs) {
            s11 += c[0] * c[0];
            s12 += c[0] * c[1];
            s22 += c[1] * c[1];
            r1 += c[0] * r;
            r2 += c[1] * r;
        }
        let det = s11 * s22 - s12 * s12;
        let (cc, dd) = if det.abs() > 0.0 {
            ((r1 * s22 - r2 * s12) / det, (s11 * r2 - s12 * r1) / det)
        } else {
            (0.0, 0.0)
        };
        let fit_residual = cols
            .iter()
            .zip(&rhs)
            .map(|(c, r)| (r - cc * c[0] - dd * c[1]).abs())
            .fold(0.0, f64::max);
        Ok(PeriodExpansion {
            region,
            a: a_fit,
            b,
            fit_residual,
        })
    }
}

/// Gaussian elimination with partial pivoting for a 3×3 system.
pub(crate) fn solve3(rows: &[[f64; 3]], rhs: &[f64; 3]) -> Result<[f64; 3]> {
    let mut a = [[0.0; 4]; 3];
    for i in 0..3 {
        a[i][..3].copy_from_slice(&rows[i]);
        a[i][3] = rhs[i];
    }
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("nonempty range");
        if a[piv][col] == 0.0 {
            return Err(Error::FitDiverged("singular 3x3 system".into()));
        }
        a.swap(col, piv);
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            for c in col..4 {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let mut s = a[i][3];
        for j in i + 1..3 {
            s -= a[i][j] * x[j];
        }
        x[i] = s / a[i][i];
    }
    Ok(x)
}

/// Saddle of the fast system at `(y, x)`.
pub fn find_saddle<M: SlowFastModel + ?Sized>(model: &M, y: f64, x: f64) -> Result<SaddleInfo> {
    Ok(*FastSystem::new(model, y, x)?.saddle())
}

/// Region of a full state; `Separatrix` when `|E| < 1e-10 ·` energy scale.
pub fn classify<M: SlowFastModel + ?Sized>(
    model: &M,
    s: &FullState,
    saddle: &SaddleInfo,
) -> RegionId {
    let e =
        0.5 * (s.p - saddle.p_c).powi(2) + model.potential_difference(s.q, saddle.q_c, s.y, s.x);
    if e.abs() < 1e-10 * saddle.energy_scale {
        RegionId::Separatrix
    } else if e < 0.0 {
        if s.q > saddle.q_c {
            RegionId::G1
        } else {
            RegionId::G2
        }
    } else {
        RegionId::G3
    }
}

/// Separatrix loop area of `region` at `(y, x)`.
pub fn loop_area<M: SlowFastModel + ?Sized>(
    model: &M,
    y: f64,
    x: f64,
    region: RegionId,
) -> Result<f64> {
    FastSystem::new(model, y, x)?.loop_area(region)
}

/// Action of the orbit with total energy `h` in `region`.
pub fn action<M: SlowFastModel + ?Sized>(
    model: &M,
    h: f64,
    y: f64,
    x: f64,
    region: RegionId,
) -> Result<f64> {
    let sys = FastSystem::new(model, y, x)?;
    sys.action(h - sys.saddle().h_s, region)
}

/// Period of the orbit with total energy `h` in `region`.
pub fn period<M: SlowFastModel + ?Sized>(
    model: &M,
    h: f64,
    y: f64,
    x: f64,
    region: RegionId,
) -> Result<f64> {
    let sys = FastSystem::new(model, y, x)?;
    sys.period(h - sys.saddle().h_s, region)
}

/// Near-separatrix period expansion in `region` at `(y, x)`.
pub fn period_expansion<M: SlowFastModel + ?Sized>(
    model: &M,
    y: f64,
    x: f64,
    region: RegionId,
) -> Result<PeriodExpansion> {
    FastSystem::new(model, y, x)?.period_expansion(region)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DoubleWell;

    #[test]
    fn solve3_identity() {
        let x = solve3(
            &[[2.0, 0.0, 0.0], [0.0, 3.0, 0.0], [1.0, 0.0, 1.0]],
            &[2.0, 6.0, 4.0],
        )
        .unwrap();
        assert_eq!(x, [1.0, 2.0, 3.0]);
    }

    #[test]
    fn turning_points_are_roots() {
        let m = DoubleWell::default();
        let sys = FastSystem::new(&m, 0.3, 0.2).unwrap();
        for (e, r) in [
            (-0.1, RegionId::G1),
            (-0.1, RegionId::G2),
            (0.2, RegionId::G3),
        ] {
            let (l, rr) = sys.turning_points(e, r).unwrap();
            assert!((sys.dv(l, 0.0) - e).abs() < 1e-14);
            assert!((sys.dv(rr, 0.0) - e).abs() < 1e-14);
            assert!(l < rr);
        }
    }
}
