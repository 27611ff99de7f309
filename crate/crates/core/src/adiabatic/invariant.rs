//! The improved adiabatic invariant `J = I + εu`, the crossing bracket `Θ`,
//! the constants `d_j` and the averaged first-order correction `ℋ₁`.

use crate::error::{Error, Result};
use crate::fast::{solve3, FastSystem, RegionId};
use crate::model::{FullState, SlowFastModel};
use crate::numerics::ode::Dopri5;
use std::f64::consts::PI;

/// `Θ = {S, h_s} = S_x h_{s,y} − S_y h_{s,x}`, with `S` the area of one well.
pub fn theta<M: SlowFastModel + ?Sized>(model: &M, y: f64, x: f64) -> Result<f64> {
    let sys = FastSystem::new(model, y, x)?;
    theta_of(&sys)
}

pub(crate) fn theta_of<M: SlowFastModel + ?Sized>(sys: &FastSystem<'_, M>) -> Result<f64> {
    let [s_y, s_x] = sys.loop_area_gradient(RegionId::G1)?;
    let [h_y, h_x] = sys.saddle_energy_gradient();
    Ok(s_x * h_y - s_y * h_x)
}

/// `Θ` from central differences of `S` and `h_s` with step `1e-5`.
pub fn theta_fd<M: SlowFastModel + ?Sized>(model: &M, y: f64, x: f64) -> Result<f64> {
    let d = 1e-5;
    let eval = |yy: f64, xx: f64| -> Result<(f64, f64)> {
        let sys = FastSystem::new(model, yy, xx)?;
        Ok((sys.loop_area(RegionId::G1)?, sys.saddle().h_s))
    };
    let (sxp, hxp) = eval(y, x + d)?;
    let (sxm, hxm) = eval(y, x - d)?;
    let (syp, hyp) = eval(y + d, x)?;
    let (sym, hym) = eval(y - d, x)?;
    let s_x = (sxp - sxm) / (2.0 * d);
    let s_y = (syp - sym) / (2.0 * d);
    let h_x = (hxp - hxm) / (2.0 * d);
    let h_y = (hyp - hym) / (2.0 * d);
    Ok(s_x * h_y - s_y * h_x)
}

/// Time integrals along one period of a frozen orbit, started at a given point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitIntegrals {
    pub region: RegionId,
    pub energy: f64,
    pub period: f64,
    /// Correction `u` of the improved invariant at the starting point.
    pub u: f64,
    /// Averaged correction `ℋ₁` with the generating function anchored at the starting point.
    pub h1: f64,
    /// Distance between the start and the end of the integrated orbit.
    pub closure: f64,
}

fn region_of<M: SlowFastModel + ?Sized>(
    sys: &FastSystem<'_, M>,
    e: f64,
    q: f64,
) -> Result<RegionId> {
    if e.abs() < sys.tol_sep() {
        return Err(Error::NearSeparatrix { energy: e });
    }
    Ok(if e > 0.0 {
        RegionId::G3
    } else if q > sys.saddle().q_c {
        RegionId::G1
    } else {
        RegionId::G2
    })
}

/// Integrates the frozen orbit through `(p0, q0)` for one period together with
/// the running integrals of `E_x`, `E_y`, `E_y·∫E_x`, `t·E_x` and `t·E_y`.
pub fn orbit_integrals<M: SlowFastModel + ?Sized>(
    sys: &FastSystem<'_, M>,
    p0: f64,
    q0: f64,
) -> Result<OrbitIntegrals> {
    let e = sys.energy_of(p0, q0);
    let region = region_of(sys, e, q0)?;
    let t = sys.period(e, region)?;
    let model = sys.model();
    let (y, x) = (sys.y, sys.x);
    let [c_y, c_x] = sys.saddle_energy_gradient();
    let rhs = |s: f64, v: &[f64; 7]| {
        let g = model.potential_gradient(v[0], y, x);
        let ex = g[2] - c_x;
        let ey = g[1] - c_y;
        [v[1], -g[0], ex, ey, ey * v[2], s * ex, s * ey]
    };
    let ode = Dopri5 {
        rtol: 1e-13,
        atol: 1e-16,
        ..Dopri5::default()
    };
    let v = ode.solve(rhs, 0.0, [q0, p0, 0.0, 0.0, 0.0, 0.0, 0.0], t)?;
    let [_, _, gx, gy, pp, tx, ty] = v;
    let closure = ((v[0] - q0).powi(2) + (v[1] - p0).powi(2)).sqrt();
    let k = 2.0 * pp - gx * gy;
    let f1 = c_y * gx - c_x * gy;
    let f2 = c_y * tx - c_x * ty;
    let u = k / (4.0 * PI) + (0.5 * t * f1 - f2) / (2.0 * PI);
    let mean_ex = gx / t;
    let mean_ey = gy / t;
    let a = mean_ex * ty + c_y * mean_ex * t * t / 2.0 - pp - c_y * (t * gx - tx);
    let b = mean_ey * t * t / 2.0 - t * gy + ty;
    let h1 = a / t - (c_x + mean_ex) * b / t;
    Ok(OrbitIntegrals {
        region,
        energy: e,
        period: t,
        u,
        h1,
        closure,
    })
}

/// Correction `u(p, q, y, x)` of the improved adiabatic invariant.
pub fn u_correction<M: SlowFastModel + ?Sized>(
    model: &M,
    p: f64,
    q: f64,
    y: f64,
    x: f64,
) -> Result<f64> {
    let sys = FastSystem::new(model, y, x)?;
    Ok(orbit_integrals(&sys, p, q)?.u)
}

/// Action, improved invariant and their continuous rescalings at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantValues {
    pub region: RegionId,
    pub i: f64,
    pub j: f64,
    pub i_hat: f64,
    pub j_hat: f64,
}

/// `I`, `J = I + εu`, and `Î`, `Ĵ` (halved in `G₃`) at the state `s`.
pub fn improved_invariant<M: SlowFastModel + ?Sized>(
    model: &M,
    s: &FullState,
    eps: f64,
) -> Result<InvariantValues> {
    let sys = FastSystem::new(model, s.y, s.x)?;
    improved_invariant_in(&sys, s.p, s.q, eps)
}

pub(crate) fn improved_invariant_in<M: SlowFastModel + ?Sized>(
    sys: &FastSystem<'_, M>,
    p: f64,
    q: f64,
    eps: f64,
) -> Result<InvariantValues> {
    let e = sys.energy_of(p, q);
    let region = region_of(sys, e, q)?;
    let i = sys.action(e, region)?;
    let j = if eps == 0.0 {
        i
    } else {
        i + eps * orbit_integrals(sys, p, q)?.u
    };
    let f = if region == RegionId::G3 { 0.5 } else { 1.0 };
    Ok(InvariantValues {
        region,
        i,
        j,
        i_hat: f * i,
        j_hat: f * j,
    })
}

/// Anchor point of the generating function on the orbit with energy `e`: the
/// inner turning point in a well, the upward crossing of `q = q_c` in `G₃`.
pub(crate) fn gauge_point<M: SlowFastModel + ?Sized>(
    sys: &FastSystem<'_, M>,
    e: f64,
    region: RegionId,
) -> Result<(f64, f64)> {
    let q_c = sys.saddle().q_c;
    match region {
        RegionId::G1 => Ok((0.0, sys.turning_points(e, region)?.0)),
        RegionId::G2 => Ok((0.0, sys.turning_points(e, region)?.1)),
        RegionId::G3 => Ok(((2.0 * e).sqrt(), q_c)),
        RegionId::Separatrix => Err(Error::OutOfRange("separatrix has no gauge point".into())),
    }
}

/// Limits `d_j = lim 2πu` as `E → 0` at the gauge points of `G₁`, `G₂`, `G₃`.
pub fn d_coefficients<M: SlowFastModel + ?Sized>(model: &M, y: f64, x: f64) -> Result<[f64; 3]> {
    let sys = FastSystem::new(model, y, x)?;
    d_coefficients_in(&sys)
}

pub(crate) fn d_coefficients_in<M: SlowFastModel + ?Sized>(
    sys: &FastSystem<'_, M>,
) -> Result<[f64; 3]> {
    let scale = sys.saddle().energy_scale;
    // Below ~1e-6·scale the saddle passage amplifies integration error like 1/E.
    let es: Vec<f64> = (0..7).map(|k| scale * 1e-2 * 0.25f64.powi(k)).collect();
    let mut out = [0.0; 3];
    for (slot, region) in [RegionId::G1, RegionId::G2, RegionId::G3]
        .into_iter()
        .enumerate()
    {
        let sign = if region == RegionId::G3 { 1.0 } else { -1.0 };
        let mut vals = Vec::with_capacity(es.len());
        for &e in &es {
            let (p, q) = gauge_point(sys, sign * e, region)?;
            vals.push(2.0 * PI * orbit_integrals(sys, p, q)?.u);
        }
        out[slot] = extrapolate_sqrt_log(&es, &vals)?;
    }
    Ok(out)
}

/// Extrapolates `v(E) = d + c√E ln E + c'√E + …` to `E → 0` with sliding 3-point fits.
fn extrapolate_sqrt_log(es: &[f64], vals: &[f64]) -> Result<f64> {
    let mut estimates = Vec::new();
    for k in 0..es.len() - 2 {
        let rows: Vec<[f64; 3]> = (k..k + 3)
            .map(|j| {
                let r = (es[j] / es[k]).sqrt();
                [1.0, r * es[j].ln(), r]
            })
            .collect();
        estimates.push(solve3(&rows, &[vals[k], vals[k + 1], vals[k + 2]])?[0]);
    }
    let d = *estimates.last().expect("grid has >= 3 points");
    let diffs: Vec<f64> = estimates.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let last = *diffs.last().expect("grid has >= 4 points");
    let floor = 1e-9 * (1.0 + vals.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    if last > floor && last > 1e-6 * (1.0 + d.abs()) && last > diffs[0] {
        return Err(Error::FitDiverged(format!(
            "u extrapolation differences grow to {last:e} as E shrinks"
        )));
    }
    Ok(d)
}

/// Averaged correction `ℋ₁(J, y, x)` on the orbit of action `j` in `region`
/// (`j` is the full action, not halved, in `G₃`).
pub fn averaged_h1<M: SlowFastModel + ?Sized>(
    model: &M,
    j: f64,
    y: f64,
    x: f64,
    region: RegionId,
) -> Result<f64> {
    let sys = FastSystem::new(model, y, x)?;
    averaged_h1_in(&sys, j, region)
}

pub(crate) fn averaged_h1_in<M: SlowFastModel + ?Sized>(
    sys: &FastSystem<'_, M>,
    j: f64,
    region: RegionId,
) -> Result<f64> {
    let e = super::slow::energy_clamped(sys, j, region)?;
    let (p, q) = gauge_point(sys, e, region)?;
    Ok(orbit_integrals(sys, p, q)?.h1)
}

/// `ω₁ = ∂ℋ₁/∂J` by central differences with relative step `rel_step`.
pub fn omega1<M: SlowFastModel + ?Sized>(
    model: &M,
    j: f64,
    y: f64,
    x: f64,
    region: RegionId,
    rel_step: f64,
) -> Result<f64> {
    let sys = FastSystem::new(model, y, x)?;
    let d = rel_step * j.abs().max(1e-6);
    let hp = averaged_h1_in(&sys, j + d, region)?;
    let hm = averaged_h1_in(&sys, j - d, region)?;
    let r = (hp - hm) / (2.0 * d);
    if !r.is_finite() {
        return Err(Error::DifferentiationFailure("non-finite dℋ₁/dJ".into()));
    }
    Ok(r)
}
