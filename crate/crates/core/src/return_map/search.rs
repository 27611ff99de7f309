//! Stable fixed points of the return map as crossings of the moving point
//! `ε⁻¹Φ(εξ, ε)` with the moving curve `Λ(εξ)` on the torus, and the density
//! of such crossings in action.

use super::curve::{
    chi, is_stable_q, partner, segments_for, stability_q, torus_coords, Root, StableSegment,
    CURVE_SAMPLES,
};
use super::map::{f_minus, f_plus, frac, EtaWindow, MapState, ReturnMap, CAPTURE_TOL};
use crate::adiabatic::{CoefficientTable, Interpolated};
use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Solution of the fixed-point system with its stability verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSolution {
    pub branch: u8,
    pub xi: f64,
    /// `I = εξ`.
    pub i: f64,
    pub eta: f64,
    pub eta1: f64,
    pub q: f64,
    pub stable: bool,
    /// Residuals of the level, phase and return equations.
    pub residuals: [f64; 3],
    /// `{(ε⁻¹Φ₂ + η⁽¹⁾)/2}`.
    pub capture_value: f64,
}

fn wrap(v: f64, period: f64) -> f64 {
    v - period * (v / period).round()
}

/// Residuals of `F₋(η) = F₊(η⁽¹⁾)`, `s₁ = ε⁻¹Φ₁ mod 1`, `s₂ = ε⁻¹Φ₂ mod 2` at `εξ`.
pub fn residuals(eta: f64, eta1: f64, d: &Interpolated, eps: f64) -> [f64; 3] {
    let c = &d.coeffs;
    let phi = d.phi(eps);
    let (s1, s2) = torus_coords(eta, eta1, c, d.gamma[0]);
    [
        f_minus(c, eta) - f_plus(c, eta1),
        wrap(s1 - phi[0] / eps, 1.0),
        wrap(s2 - phi[1] / eps, 2.0),
    ]
}

/// Default window constant `c₁`.
pub const DEFAULT_C1: f64 = 20.0;

/// Parameters of the `ξ` sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub eps: f64,
    /// Action interval `Ξ₀`.
    pub lo: f64,
    pub hi: f64,
    pub c1: f64,
    /// Largest torus displacement of `ε⁻¹Φ` per sweep step.
    pub max_advance: f64,
    /// Newton residual target.
    pub newton_tol: f64,
}

impl SearchConfig {
    pub fn new(eps: f64, lo: f64, hi: f64) -> Self {
        Self {
            eps,
            lo,
            hi,
            c1: DEFAULT_C1,
            max_advance: 0.1,
            newton_tol: 1e-12,
        }
    }
}

/// Outcome of the sweep: accepted solutions sorted by `ξ`, and bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSearch {
    pub solutions: Vec<FixedPointSolution>,
    /// Crossings whose Newton refinement failed.
    pub diverged: usize,
    /// Converged crossings rejected by the stability, window or capture filters.
    pub rejected: usize,
}

/// Newton iteration on the 3×3 system in `(ξ, η, η⁽¹⁾)` with a central-difference Jacobian.
pub fn newton_fixed_point(
    table: &CoefficientTable,
    eps: f64,
    guess: (f64, f64, f64),
    tol: f64,
) -> Result<(f64, f64, f64, [f64; 3])> {
    let eval = |x: &[f64; 3]| -> Result<[f64; 3]> {
        if !(x[1] > 0.0 && x[1] < 1.0 && x[2] > 0.0 && x[2] < 1.0) {
            return Err(Error::NewtonDiverged(format!(
                "pseudo-phase left (0, 1) at {x:?}"
            )));
        }
        Ok(residuals(x[1], x[2], &table.eval(eps * x[0])?, eps))
    };
    let norm = |r: &[f64; 3]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut x = [guess.0, guess.1, guess.2];
    let mut r = eval(&x)?;
    let h = [1e-6, 1e-8, 1e-8];
    for _ in 0..60 {
        if norm(&r) < tol {
            return Ok((x[0], x[1], x[2], r));
        }
        let mut jac = [[0.0; 3]; 3];
        for k in 0..3 {
            let mut p = x;
            let mut m = x;
            p[k] += h[k];
            m[k] -= h[k];
            let (rp, rm) = (eval(&p)?, eval(&m)?);
            for i in 0..3 {
                jac[i][k] = wrap(rp[i] - rm[i], if i == 2 { 2.0 } else { 1.0 }) / (2.0 * h[k]);
            }
        }
        let dx =
            solve_3x3(&jac, &r).ok_or_else(|| Error::NewtonDiverged("singular Jacobian".into()))?;
        let mut lambda = 1.0;
        loop {
            let trial = [
                x[0] - lambda * dx[0],
                x[1] - lambda * dx[1],
                x[2] - lambda * dx[2],
            ];
            if let Ok(rt) = eval(&trial) {
                if norm(&rt) < norm(&r) || lambda < 1e-3 {
                    x = trial;
                    r = rt;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-3 {
                return Err(Error::NewtonDiverged(format!("no descent from {x:?}")));
            }
        }
    }
    if norm(&r) < 1e-10 {
        return Ok((x[0], x[1], x[2], r));
    }
    Err(Error::NewtonDiverged(format!(
        "residual {} after 60 iterations",
        norm(&r)
    )))
}

fn solve_3x3(a: &[[f64; 3]; 3], b: &[f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for row in 0..3 {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in col..4 {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

/// A converged Newton solution with its `Q`, capture value and stability verdict
/// (stable means `−4 < Q < 0`, both pseudo-phases in the window, and capture away
/// from the branch boundary).
pub fn classify_solution(
    table: &CoefficientTable,
    eps: f64,
    c1: f64,
    (xi, eta, eta1, res): (f64, f64, f64, [f64; 3]),
) -> Result<FixedPointSolution> {
    let window = EtaWindow::new(c1)?;
    let i = eps * xi;
    let d = table.eval(i)?;
    let q = stability_q(eta, eta1, &d.coeffs, d.gamma);
    let v = frac(0.5 * (d.phi(eps)[1] / eps + eta1));
    let capture_ok = v > CAPTURE_TOL && v < 0.5 - CAPTURE_TOL;
    Ok(FixedPointSolution {
        branch: table.branch,
        xi,
        i,
        eta,
        eta1,
        q,
        stable: is_stable_q(q) && window.contains(eta) && window.contains(eta1) && capture_ok,
        residuals: res,
        capture_value: v,
    })
}

/// Verdict on a converged solution: `None` when it fails a filter.
fn accept(
    table: &CoefficientTable,
    eps: f64,
    window: &EtaWindow,
    sol: (f64, f64, f64, [f64; 3]),
) -> Result<Option<FixedPointSolution>> {
    let i = eps * sol.0;
    if i < table.lo || i > table.hi {
        return Ok(None);
    }
    let s = classify_solution(table, eps, 1.0 / window.lo, sol)?;
    Ok(s.stable.then_some(s))
}

struct Frozen {
    i: f64,
    segments: Vec<Vec<(f64, f64, f64, f64)>>,
}

fn freeze(table: &CoefficientTable, i: f64, window: &EtaWindow) -> Result<Frozen> {
    let d = table.eval(i)?;
    let segs = segments_for(&d.coeffs, d.gamma, window, CURVE_SAMPLES)?;
    let segments = segs
        .iter()
        .map(|s| {
            s.points
                .iter()
                .map(|&(e, e1)| {
                    let (s1, s2) = torus_coords(e, e1, &d.coeffs, d.gamma[0]);
                    (e, e1, s1, s2)
                })
                .collect()
        })
        .collect();
    Ok(Frozen { i, segments })
}

/// Crossing parameters `(t, u)` of `p + t·dp` with `a + u·(b − a)`, both in `[0, 1]`.
fn segment_hit(p: (f64, f64), dp: (f64, f64), a: (f64, f64), b: (f64, f64)) -> Option<(f64, f64)> {
    let e = (b.0 - a.0, b.1 - a.1);
    let den = dp.0 * e.1 - dp.1 * e.0;
    if den == 0.0 {
        return None;
    }
    let w = (a.0 - p.0, a.1 - p.1);
    let t = (w.0 * e.1 - w.1 * e.0) / den;
    let u = (w.0 * dp.1 - w.1 * dp.0) / den;
    ((0.0..1.0).contains(&t) && (0.0..=1.0).contains(&u)).then_some((t, u))
}

/// Initial guesses `(ξ, η, η⁽¹⁾)` from one sweep step.
fn step_crossings(
    frozen: &Frozen,
    xi: f64,
    dxi: f64,
    p: (f64, f64),
    p_next: (f64, f64),
) -> Vec<(f64, f64, f64)> {
    let dp = (p_next.0 - p.0, p_next.1 - p.1);
    let (pmin1, pmax1) = (p.0.min(p_next.0), p.0.max(p_next.0));
    let (pmin2, pmax2) = (p.1.min(p_next.1), p.1.max(p_next.1));
    let mut out = Vec::new();
    for seg in &frozen.segments {
        for w in seg.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (emin1, emax1) = (a.2.min(b.2), a.2.max(b.2));
            let (emin2, emax2) = (a.3.min(b.3), a.3.max(b.3));
            // Lattice shifts (m, 2n) for which the bounding boxes overlap.
            let m_lo = (pmin1 - emax1).ceil() as i64;
            let m_hi = (pmax1 - emin1).floor() as i64;
            let n_lo = ((pmin2 - emax2) / 2.0).ceil() as i64;
            let n_hi = ((pmax2 - emin2) / 2.0).floor() as i64;
            for m in m_lo..=m_hi {
                for n in n_lo..=n_hi {
                    let (sm, sn) = (m as f64, 2.0 * n as f64);
                    if let Some((t, u)) =
                        segment_hit(p, dp, (a.2 + sm, a.3 + sn), (b.2 + sm, b.3 + sn))
                    {
                        out.push((xi + t * dxi, a.0 + u * (b.0 - a.0), a.1 + u * (b.1 - a.1)));
                    }
                }
            }
        }
    }
    out
}

fn sweep_chunk(
    table: &CoefficientTable,
    cfg: &SearchConfig,
    window: &EtaWindow,
    xi_start: f64,
    xi_end: f64,
) -> Result<FixedPointSearch> {
    let eps = cfg.eps;
    let refreeze = 1e-3 * (cfg.hi - cfg.lo);
    let mut out = FixedPointSearch {
        solutions: Vec::new(),
        diverged: 0,
        rejected: 0,
    };
    let mut xi = xi_start;
    let mut frozen: Option<Frozen> = None;
    let point = |xi: f64| -> Result<(f64, f64)> {
        let phi = table.eval(eps * xi)?.phi(eps);
        Ok((phi[0] / eps, phi[1] / eps))
    };
    let mut p = point(xi)?;
    while xi < xi_end {
        let g = table.eval(eps * xi)?.gamma;
        let speed = g[0].hypot(g[1]).max(1e-12);
        let dxi = (cfg.max_advance / speed).min(xi_end - xi);
        let mid = eps * (xi + 0.5 * dxi);
        if frozen
            .as_ref()
            .map_or(true, |f| (f.i - mid).abs() > refreeze)
        {
            frozen = Some(freeze(table, mid, window)?);
        }
        let p_next = point(xi + dxi)?;
        for guess in step_crossings(frozen.as_ref().expect("frozen"), xi, dxi, p, p_next) {
            match newton_fixed_point(table, eps, guess, cfg.newton_tol) {
                Ok(sol) => match accept(table, eps, window, sol)? {
                    Some(s) => out.solutions.push(s),
                    None => out.rejected += 1,
                },
                Err(Error::NewtonDiverged(msg)) => {
                    log::debug!("crossing near xi = {} discarded: {msg}", guess.0);
                    out.diverged += 1;
                }
                Err(Error::CoefficientInterpolationGap(_)) => out.rejected += 1,
                Err(e) => return Err(e),
            }
        }
        xi += dxi;
        p = p_next;
    }
    Ok(out)
}

/// Sweeps `ξ` over `Ξ₀/ε` in independent chunks and returns the distinct
/// stable solutions sorted by `ξ`.
pub fn find_fixed_points(table: &CoefficientTable, cfg: &SearchConfig) -> Result<FixedPointSearch> {
    if !(cfg.eps > 0.0) {
        return Err(Error::InvalidParams(format!(
            "epsilon must be positive, got {}",
            cfg.eps
        )));
    }
    if !(cfg.hi > cfg.lo) {
        return Err(Error::InvalidParams(format!(
            "empty action interval [{}, {}]",
            cfg.lo, cfg.hi
        )));
    }
    if cfg.lo < table.lo || cfg.hi > table.hi {
        return Err(Error::CoefficientInterpolationGap(if cfg.lo < table.lo {
            cfg.lo
        } else {
            cfg.hi
        }));
    }
    let window = EtaWindow::new(cfg.c1)?;
    let (a, b) = (cfg.lo / cfg.eps, cfg.hi / cfg.eps);
    let chunks = 16usize;
    let parts = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let s = a + (b - a) * k as f64 / chunks as f64;
            let e = a + (b - a) * (k + 1) as f64 / chunks as f64;
            sweep_chunk(table, cfg, &window, s, e)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut all = FixedPointSearch {
        solutions: Vec::new(),
        diverged: 0,
        rejected: 0,
    };
    for p in parts {
        all.solutions.extend(p.solutions);
        all.diverged += p.diverged;
        all.rejected += p.rejected;
    }
    all.solutions.sort_by(|x, y| x.xi.total_cmp(&y.xi));
    let mut distinct: Vec<FixedPointSolution> = Vec::with_capacity(all.solutions.len());
    for s in all.solutions {
        let dup = distinct
            .iter()
            .rev()
            .take_while(|t| s.xi - t.xi < 1e-6)
            .any(|t| (t.eta - s.eta).abs() < 1e-6 && (t.eta1 - s.eta1).abs() < 1e-6);
        if !dup {
            distinct.push(s);
        }
    }
    all.solutions = distinct;
    Ok(all)
}

/// Up to `max` distinct solutions with `Q` outside `(−4, 0)` and both
/// pseudo-phases in the window, found by Newton from points of the level curve
/// where `Q` is outside the interval, at `n` values of `ξ` spread over `Ξ₀/ε`.
pub fn unstable_fixed_points(
    table: &CoefficientTable,
    cfg: &SearchConfig,
    n: usize,
    max: usize,
) -> Result<Vec<FixedPointSolution>> {
    let window = EtaWindow::new(cfg.c1)?;
    let eps = cfg.eps;
    let mut out: Vec<FixedPointSolution> = Vec::new();
    for k in 0..n {
        if out.len() >= max {
            break;
        }
        let xi = (cfg.lo + (cfg.hi - cfg.lo) * (k as f64 + 0.5) / n as f64) / eps;
        let d = table.eval(eps * xi)?;
        for m in 1..20 {
            let eta = m as f64 / 20.0;
            for root in [Root::Lower, Root::Upper] {
                let Some(e1) = partner(&d.coeffs, eta, root) else {
                    continue;
                };
                if is_stable_q(stability_q(eta, e1, &d.coeffs, d.gamma))
                    || !window.contains(eta)
                    || !window.contains(e1)
                {
                    continue;
                }
                let Ok(sol) = newton_fixed_point(table, eps, (xi, eta, e1), cfg.newton_tol) else {
                    continue;
                };
                let s = classify_solution(table, eps, cfg.c1, sol)?;
                let fresh = out
                    .iter()
                    .all(|o| (o.xi - s.xi).abs() > 1e-6 || (o.eta - s.eta).abs() > 1e-6);
                if !is_stable_q(s.q) && window.contains(s.eta) && window.contains(s.eta1) && fresh {
                    out.push(s);
                }
                if out.len() >= max {
                    return Ok(out);
                }
            }
        }
    }
    Ok(out)
}

/// Refines a solution of the fixed-point system into an exact fixed point of
/// the (table-driven) return map by Newton in `(ξ, η)`.
pub fn refine_on_map(map: &ReturnMap, sol: &FixedPointSolution) -> Result<MapState> {
    let f = |xi: f64, eta: f64| -> Result<[f64; 2]> {
        let s = MapState {
            xi,
            eta,
            branch: sol.branch,
        };
        let t = map.step(&s)?;
        Ok([t.next.xi - xi, wrap(t.eta2 - eta, 1.0)])
    };
    let (mut xi, mut eta) = (sol.xi, sol.eta);
    let (hx, he) = (1e-6, 1e-8);
    for _ in 0..40 {
        let r = f(xi, eta)?;
        if r[0].abs() < 1e-11 && r[1].abs() < 1e-11 {
            return Ok(MapState {
                xi,
                eta,
                branch: sol.branch,
            });
        }
        let (a, b) = (f(xi + hx, eta)?, f(xi - hx, eta)?);
        let (c, d) = (f(xi, eta + he)?, f(xi, eta - he)?);
        let j = [
            [(a[0] - b[0]) / (2.0 * hx), (c[0] - d[0]) / (2.0 * he)],
            [
                wrap(a[1] - b[1], 1.0) / (2.0 * hx),
                wrap(c[1] - d[1], 1.0) / (2.0 * he),
            ],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-300 {
            return Err(Error::NewtonDiverged("singular map Jacobian".into()));
        }
        xi -= (j[1][1] * r[0] - j[0][1] * r[1]) / det;
        eta -= (-j[1][0] * r[0] + j[0][0] * r[1]) / det;
    }
    Err(Error::NewtonDiverged(format!(
        "map fixed point near xi = {} did not converge",
        sol.xi
    )))
}

/// `χ`, `ρ = χ/2` at one action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensitySample {
    pub i: f64,
    pub chi: f64,
    pub rho: f64,
}

pub fn density_at(table: &CoefficientTable, i: f64, c1: f64) -> Result<DensitySample> {
    let window = EtaWindow::new(c1)?;
    let d = table.eval(i)?;
    let segs: Vec<StableSegment> = segments_for(&d.coeffs, d.gamma, &window, CURVE_SAMPLES)?;
    let x = chi(&segs, &d.coeffs, d.gamma);
    Ok(DensitySample {
        i,
        chi: x,
        rho: 0.5 * x,
    })
}

/// `χ` on `n` (odd) equally spaced actions in `[lo, hi]` and the predicted
/// count `(1/2ε)∫χ dI` by Simpson and by the trapezoid rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub samples: Vec<DensitySample>,
    pub integral_simpson: f64,
    pub integral_trapezoid: f64,
}

impl DensityReport {
    pub fn predicted_count(&self, eps: f64) -> f64 {
        0.5 * self.integral_simpson / eps
    }
}

pub fn density(
    table: &CoefficientTable,
    lo: f64,
    hi: f64,
    n: usize,
    c1: f64,
) -> Result<DensityReport> {
    if !(hi > lo) || n < 3 {
        return Err(Error::InvalidParams(format!(
            "density needs lo < hi and n >= 3, got [{lo}, {hi}], {n}"
        )));
    }
    let n = if n % 2 == 0 { n + 1 } else { n };
    let h = (hi - lo) / (n - 1) as f64;
    let samples = (0..n)
        .into_par_iter()
        .map(|k| density_at(table, lo + h * k as f64, c1))
        .collect::<Result<Vec<_>>>()?;
    let mut simpson = 0.0;
    let mut trap = 0.0;
    for (k, s) in samples.iter().enumerate() {
        let end = k == 0 || k == n - 1;
        simpson += s.chi
            * if end {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
        trap += s.chi * if end { 0.5 } else { 1.0 };
    }
    Ok(DensityReport {
        samples,
        integral_simpson: simpson * h / 3.0,
        integral_trapezoid: trap * h,
    })
}
