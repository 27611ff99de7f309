//! Slow motion on a fixed energy level: the uncertainty curve `h_s = h₀`, the
//! averaged slow flow, and the closed adiabatic loop through `G₃` and `G_ν`.

use super::invariant::{averaged_h1_in, theta_of};
use super::Mode;
use crate::error::{Error, Result};
use crate::fast::{FastSystem, RegionId};
use crate::model::SlowFastModel;
use crate::numerics::ode::Dopri5;
use crate::numerics::roots::brent;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::f64::consts::PI;

/// Point of a sampled slow-plane curve with its cumulative arc length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub y: f64,
    pub x: f64,
    pub arc: f64,
}

fn saddle_energy<M: SlowFastModel + ?Sized>(model: &M, y: f64, x: f64) -> Result<f64> {
    Ok(FastSystem::new(model, y, x)?.saddle().h_s)
}

/// Minimizes along a line given the derivative: walks downhill with doubling
/// steps until the derivative changes sign, then refines with Brent.
fn line_min(deriv: &dyn Fn(f64) -> Result<f64>, t0: f64) -> Result<f64> {
    let g0 = deriv(t0)?;
    if g0 == 0.0 {
        return Ok(t0);
    }
    let dir = -g0.signum();
    let mut good = 0.0;
    let mut d: f64 = 0.05;
    for _ in 0..300 {
        match deriv(t0 + dir * d) {
            Ok(g) if g == 0.0 => return Ok(t0 + dir * d),
            Ok(g) if g.signum() != g0.signum() => {
                let (a, b) = (t0 + dir * good, t0 + dir * d);
                return brent(
                    |t| deriv(t).unwrap_or(f64::NAN),
                    a.min(b),
                    a.max(b),
                    0.0,
                    300,
                );
            }
            Ok(_) => {
                good = d;
                d *= 2.0;
            }
            Err(_) => {
                d = 0.5 * (good + d);
                if d - good < 1e-12 {
                    break;
                }
            }
        }
    }
    Err(Error::OutOfRange(
        "saddle energy has no interior minimum".into(),
    ))
}

/// Minimum point `(y, x)` of `h_s` by alternating line minimizations.
pub fn slow_center<M: SlowFastModel + ?Sized>(model: &M) -> Result<(f64, f64)> {
    let (mut y, mut x) = (0.0, 0.0);
    for _ in 0..60 {
        let nx = line_min(
            &|t| Ok(FastSystem::new(model, y, t)?.saddle_energy_gradient()[1]),
            x,
        )?;
        let ny = line_min(
            &|t| Ok(FastSystem::new(model, t, nx)?.saddle_energy_gradient()[0]),
            y,
        )?;
        let done = (nx - x).abs() + (ny - y).abs() < 1e-13;
        x = nx;
        y = ny;
        if done {
            break;
        }
    }
    Ok((y, x))
}

/// Point of `{h_s = h₀}` on the ray from `center` at angle `phi`
/// (`y = y_c + r sin φ`, `x = x_c + r cos φ`).
pub fn gamma_point<M: SlowFastModel + ?Sized>(
    model: &M,
    h0: f64,
    center: (f64, f64),
    phi: f64,
) -> Result<(f64, f64)> {
    let (s, c) = phi.sin_cos();
    let at = |r: f64| (center.0 + r * s, center.1 + r * c);
    let f = |r: f64| -> Result<f64> {
        let (y, x) = at(r);
        Ok(saddle_energy(model, y, x)? - h0)
    };
    let mut good = 0.0;
    let mut d: f64 = 0.05;
    for _ in 0..300 {
        match f(d) {
            Ok(v) if v >= 0.0 => {
                let r = brent(|r| f(r).unwrap_or(f64::NAN), good, d, 0.0, 300)?;
                return Ok(at(r));
            }
            Ok(_) => {
                good = d;
                d *= 2.0;
            }
            Err(_) => {
                d = 0.5 * (good + d);
                if d - good < 1e-12 {
                    break;
                }
            }
        }
    }
    Err(Error::OutOfRange(format!(
        "level h_s = {h0} is not closed in direction {phi}"
    )))
}

/// Polyline sampling of the uncertainty curve `{h_s(y, x) = h₀}` (closed: the
/// last point repeats the first).
pub fn uncertainty_curve<M: SlowFastModel + ?Sized>(
    model: &M,
    h0: f64,
    n: usize,
) -> Result<Vec<CurvePoint>> {
    let center = slow_center(model)?;
    let h_min = saddle_energy(model, center.0, center.1)?;
    let tol = 1e-12 * (1.0 + h0.abs());
    if h0 < h_min - tol {
        return Err(Error::EmptyLevelSet);
    }
    if h0 <= h_min + tol {
        return Ok(vec![CurvePoint {
            y: center.0,
            x: center.1,
            arc: 0.0,
        }]);
    }
    let n = n.max(8);
    let mut pts: Vec<CurvePoint> = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let (y, x) = if i == n {
            (pts[0].y, pts[0].x)
        } else {
            gamma_point(model, h0, center, 2.0 * PI * i as f64 / n as f64)?
        };
        let arc = pts.last().map_or(0.0, |p| p.arc + (y - p.y).hypot(x - p.x));
        pts.push(CurvePoint { y, x, arc });
    }
    Ok(pts)
}

/// Intersection of the uncertainty curve with `{S_ν = 2πĴ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingPoint {
    pub y: f64,
    pub x: f64,
    pub theta: f64,
}

/// The capture (`Θ > 0`) and escape (`Θ < 0`) points of the adiabatic loop of action `Ĵ`.
pub fn crossing_points<M: SlowFastModel + ?Sized>(
    model: &M,
    jhat: f64,
    nu: u8,
    h0: f64,
) -> Result<(CrossingPoint, CrossingPoint)> {
    let well = RegionId::well(nu)?;
    let center = slow_center(model)?;
    let h_min = saddle_energy(model, center.0, center.1)?;
    if h0 <= h_min {
        return Err(Error::EmptyLevelSet);
    }
    let g = |phi: f64| -> Result<f64> {
        let (y, x) = gamma_point(model, h0, center, phi)?;
        Ok(FastSystem::new(model, y, x)?.loop_area(well)? - 2.0 * PI * jhat)
    };
    let n = 256;
    let phis: Vec<f64> = (0..=n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
    let mut vals = Vec::with_capacity(n + 1);
    for &p in &phis[..n] {
        vals.push(g(p)?);
    }
    vals.push(vals[0]);
    let mut found = Vec::new();
    for i in 0..n {
        let (a, b) = (vals[i], vals[i + 1]);
        if a == 0.0 || a.signum() != b.signum() && b != 0.0 {
            let phi = if a == 0.0 {
                phis[i]
            } else {
                brent(|p| g(p).unwrap_or(f64::NAN), phis[i], phis[i + 1], 0.0, 300)?
            };
            let (y, x) = gamma_point(model, h0, center, phi)?;
            let theta = theta_of(&FastSystem::new(model, y, x)?)?;
            found.push(CrossingPoint { y, x, theta });
        }
    }
    if found.len() != 2 {
        return Err(Error::AssumptionBViolated(format!(
            "loop of action {jhat} meets the uncertainty curve {} times",
            found.len()
        )));
    }
    let cap = found.iter().find(|c| c.theta > 0.0);
    let esc = found.iter().find(|c| c.theta < 0.0);
    match (cap, esc) {
        (Some(c), Some(e)) => Ok((*c, *e)),
        _ => Err(Error::AssumptionBViolated(format!(
            "bracket signs at the crossings are {} and {}",
            found[0].theta, found[1].theta
        ))),
    }
}

/// Fast energy for action `j` in `region`, clamped to the separatrix when `j`
/// lies beyond the loop area (slow-flow stages can step slightly past a crossing).
pub(crate) fn energy_clamped<M: SlowFastModel + ?Sized>(
    sys: &FastSystem<'_, M>,
    j: f64,
    region: RegionId,
) -> Result<f64> {
    let i_sep = sys.loop_area(region)? / (2.0 * PI);
    let beyond = match region {
        RegionId::G3 => j <= i_sep,
        _ => j >= i_sep,
    };
    let edge = 2.0 * sys.tol_sep();
    if beyond {
        return Ok(if region == RegionId::G3 { edge } else { -edge });
    }
    let e = sys.energy_for_action(j, region)?;
    Ok(if e.abs() < edge { edge.copysign(e) } else { e })
}

/// Slow velocity `(dy/dτ, dx/dτ)` and frequency `ω = ∂Ĥ/∂J` at a slow point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlowField {
    pub dy: f64,
    pub dx: f64,
    pub omega: f64,
}

/// Averaged slow vector field of the orbit with action `j` (full action in
/// `G₃`) in `region`, with the `εℋ₁` correction in improved mode.
pub fn slow_field<M: SlowFastModel + ?Sized>(
    model: &M,
    y: f64,
    x: f64,
    j: f64,
    region: RegionId,
    eps: f64,
    mode: Mode,
) -> Result<SlowField> {
    let sys = FastSystem::new(model, y, x)?;
    let e = energy_clamped(&sys, j, region)?;
    let av = sys.orbit_averages(e, region)?;
    let [cy, cx] = sys.saddle_energy_gradient();
    let mut f = SlowField {
        dy: -(cx + av.mean_ex),
        dx: cy + av.mean_ey,
        omega: 2.0 * PI / av.period,
    };
    if mode == Mode::Improved && eps != 0.0 {
        let h1 = |yy: f64, xx: f64, jj: f64| -> Result<f64> {
            let s = FastSystem::new(model, yy, xx)?;
            averaged_h1_in(&s, jj, region)
        };
        let d = 1e-5;
        let dj = 1e-5 * j.abs().max(1e-3);
        let h_y = (h1(y + d, x, j)? - h1(y - d, x, j)?) / (2.0 * d);
        let h_x = (h1(y, x + d, j)? - h1(y, x - d, j)?) / (2.0 * d);
        let h_j = (h1(y, x, j + dj)? - h1(y, x, j - dj)?) / (2.0 * dj);
        f.dy -= eps * h_x;
        f.dx += eps * h_y;
        f.omega += eps * h_j;
    }
    Ok(f)
}

/// Sample of the slow trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlowSample {
    pub tau: f64,
    pub y: f64,
    pub x: f64,
}

/// One closed adiabatic loop: `G_ν` from capture to escape, then `G₃` back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticTrajectory {
    pub branch: u8,
    /// Conserved action `Ĵ` (halved in `G₃`).
    pub action: f64,
    pub h0: f64,
    pub mode: Mode,
    pub epsilon: f64,
    pub samples: Vec<SlowSample>,
    /// Capture point `(x₋, y₋)`.
    pub capture: (f64, f64),
    /// Escape point `(x₊, y₊)`.
    pub escape: (f64, f64),
    pub tau_minus: f64,
    pub tau_plus: f64,
    /// Period `T₀` of the full loop.
    pub period: f64,
    pub theta_minus: f64,
    pub theta_plus: f64,
    /// `Φ₁`, accumulated along the well segment.
    pub phi1: f64,
    /// `Φ₂`, accumulated along the outer segment.
    pub phi2: f64,
    /// Distance between the start and the point reached after `T₀`.
    pub closure: f64,
}

struct Segment {
    end_tau: f64,
    end: [f64; 3],
}

#[allow(clippy::too_many_arguments)]
fn run_segment<M: SlowFastModel + ?Sized>(
    model: &M,
    start: [f64; 3],
    tau0: f64,
    jhat: f64,
    nu: u8,
    region: RegionId,
    eps: f64,
    mode: Mode,
    samples: &mut Vec<SlowSample>,
) -> Result<Segment> {
    let well = RegionId::well(nu)?;
    let (j, factor) = if region == RegionId::G3 {
        (2.0 * jhat, 1.0 / PI)
    } else {
        (jhat, 0.5 / PI)
    };
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let rhs = |_: f64, s: &[f64; 3]| match slow_field(model, s[0], s[1], j, region, eps, mode) {
        Ok(f) => [f.dy, f.dx, factor * f.omega],
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            [f64::NAN; 3]
        }
    };
    let inside = |s: &[f64; 3]| -> bool {
        match FastSystem::new(model, s[0], s[1]).and_then(|sys| sys.loop_area(well)) {
            Ok(area) => (area > 2.0 * PI * jhat) == (region != RegionId::G3),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                false
            }
        }
    };
    let ode = Dopri5 {
        rtol: 1e-11,
        atol: 1e-13,
        max_steps: 100_000,
        initial_step: 1e-3,
    };
    let mut armed = false;
    let stop = ode.solve_until(&rhs, tau0, start, tau0 + 1e4, |t, s| {
        samples.push(SlowSample {
            tau: t,
            y: s[0],
            x: s[1],
        });
        let inn = inside(s);
        if inn {
            armed = true;
        }
        armed && !inn
    });
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    let stop = stop?;
    if !stop.stopped {
        return Err(Error::OpenTrajectory(f64::INFINITY));
    }
    // Bisection in slow time between the last inside step and the first outside one.
    let (mut lo, mut hi) = (stop.t_prev, stop.t);
    let mut s_hi = stop.y;
    for _ in 0..80 {
        if hi - lo <= 1e-13 * (1.0 + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let s_mid = ode.solve(&rhs, stop.t_prev, stop.y_prev, mid)?;
        if inside(&s_mid) {
            lo = mid;
        } else {
            hi = mid;
            s_hi = s_mid;
        }
    }
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    samples.retain(|p| p.tau <= hi);
    samples.push(SlowSample {
        tau: hi,
        y: s_hi[0],
        x: s_hi[1],
    });
    Ok(Segment {
        end_tau: hi,
        end: s_hi,
    })
}

/// Integrates the averaged slow flow around the loop of action `Ĵ₀` on `h₀`,
/// starting at the capture point.
pub fn slow_trajectory<M: SlowFastModel + ?Sized>(
    model: &M,
    jhat: f64,
    nu: u8,
    h0: f64,
    eps: f64,
    mode: Mode,
) -> Result<AdiabaticTrajectory> {
    let well = RegionId::well(nu)?;
    let (cap, esc) = crossing_points(model, jhat, nu, h0)?;
    let mut samples = vec![SlowSample {
        tau: 0.0,
        y: cap.y,
        x: cap.x,
    }];
    let start = [cap.y, cap.x, 0.0];
    let a = run_segment(model, start, 0.0, jhat, nu, well, eps, mode, &mut samples)?;
    let phi1 = a.end[2];
    let b = run_segment(
        model,
        [a.end[0], a.end[1], 0.0],
        a.end_tau,
        jhat,
        nu,
        RegionId::G3,
        eps,
        mode,
        &mut samples,
    )?;
    let phi2 = b.end[2];
    let closure = (b.end[0] - cap.y).hypot(b.end[1] - cap.x);
    if closure > 1e-6 {
        return Err(Error::OpenTrajectory(closure));
    }
    let theta_plus = theta_of(&FastSystem::new(model, a.end[0], a.end[1])?)?;
    if esc.theta.signum() != theta_plus.signum() {
        return Err(Error::AssumptionBViolated(
            "escape bracket changed sign".into(),
        ));
    }
    Ok(AdiabaticTrajectory {
        branch: nu,
        action: jhat,
        h0,
        mode,
        epsilon: eps,
        samples,
        capture: (cap.x, cap.y),
        escape: (a.end[1], a.end[0]),
        tau_minus: 0.0,
        tau_plus: a.end_tau,
        period: b.end_tau,
        theta_minus: cap.theta,
        theta_plus,
        phi1,
        phi2,
        closure,
    })
}
