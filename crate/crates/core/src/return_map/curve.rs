//! The level set `F₋(η) = F₊(η⁽¹⁾)`, its stable stretches, and their image on
//! the torus `{(s₁ mod 1, s₂ mod 2)}`.

use super::map::{f_max, f_minus, f_plus, f_slope, EtaWindow};
use crate::adiabatic::JumpCoefficients;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which root of `F₊(η⁽¹⁾) = F₋(η)` a branch follows: below or above the maximizer of `F₊`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Root {
    Lower,
    Upper,
}

/// A traced branch of the level set, parametrized by `η`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelBranch {
    pub root: Root,
    /// `(η, η⁽¹⁾)` samples in increasing `η`.
    pub points: Vec<(f64, f64)>,
}

/// Both branches with the maxima `m₋`, `m₊`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCurve {
    pub m_minus: f64,
    pub m_plus: f64,
    pub eta_star_minus: f64,
    pub eta_star_plus: f64,
    pub branches: Vec<LevelBranch>,
}

impl LevelCurve {
    /// The branch through `A = (0, 0)` (lower) or `B = (0, 1)` (upper).
    pub fn branch(&self, root: Root) -> Option<&LevelBranch> {
        self.branches.iter().find(|b| b.root == root)
    }
}

/// Root of the monotone `g` on `[a, b]` with `g(a)`, `g(b)` of opposite signs.
fn monotone_root(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> Option<f64> {
    let ga = g(a);
    if ga == 0.0 {
        return Some(a);
    }
    let gb = g(b);
    if gb == 0.0 {
        return Some(b);
    }
    if ga.signum() == gb.signum() || !ga.is_finite() && !gb.is_finite() {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a.min(b) || m >= a.max(b) {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return Some(m);
        }
        if gm.signum() == ga.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// `η⁽¹⁾` on the given root for capture pseudo-phase `η`, if the level is attained.
pub fn partner(c: &JumpCoefficients, eta: f64, root: Root) -> Option<f64> {
    let (star, m) = f_max(c.alpha_plus, c.b_plus, c.d_plus);
    let v = f_minus(c, eta);
    if v > m {
        return None;
    }
    if v == m {
        return Some(star);
    }
    let g = |e: f64| f_plus(c, e) - v;
    match root {
        Root::Lower => monotone_root(g, f64::MIN_POSITIVE, star),
        Root::Upper => monotone_root(g, star, 1.0 - f64::EPSILON),
    }
}

fn refine_edge(
    c: &JumpCoefficients,
    root: Root,
    a: (f64, f64),
    b: (f64, f64),
    depth: usize,
    out: &mut Vec<(f64, f64)>,
) -> Result<()> {
    if depth == 0 || (b.1 - a.1).abs() <= 2e-3 {
        out.push(b);
        return Ok(());
    }
    let mid = 0.5 * (a.0 + b.0);
    let m = partner(c, mid, root).ok_or(Error::TracingStalled(mid))?;
    refine_edge(c, root, a, (mid, m), depth - 1, out)?;
    refine_edge(c, root, (mid, m), b, depth - 1, out)
}

/// Traces both branches over `η ∈ [lo, hi]` with `n` base samples, subdividing
/// wherever `η⁽¹⁾` moves by more than `2e-3` between samples.
pub fn level_curve(c: &JumpCoefficients, lo: f64, hi: f64, n: usize) -> Result<LevelCurve> {
    if !(c.alpha_minus > 0.0 && c.alpha_plus > 0.0) {
        return Err(Error::InvalidParams("level curve needs alpha_± > 0".into()));
    }
    if !(0.0 < lo && lo < hi && hi < 1.0) || n < 2 {
        return Err(Error::InvalidParams(format!(
            "bad tracing interval [{lo}, {hi}] with n = {n}"
        )));
    }
    let (eta_star_minus, m_minus) = f_max(c.alpha_minus, c.b_minus, c.d_minus);
    let (eta_star_plus, m_plus) = f_max(c.alpha_plus, c.b_plus, c.d_plus);
    let mut branches = Vec::new();
    for root in [Root::Lower, Root::Upper] {
        let mut points: Vec<(f64, f64)> = Vec::new();
        let mut prev: Option<(f64, f64)> = None;
        for k in 0..n {
            let eta = lo + (hi - lo) * k as f64 / (n - 1) as f64;
            let Some(e1) = partner(c, eta, root) else {
                prev = None;
                continue;
            };
            match prev {
                Some(p) => refine_edge(c, root, p, (eta, e1), 12, &mut points)?,
                None => points.push((eta, e1)),
            }
            prev = Some((eta, e1));
        }
        branches.push(LevelBranch { root, points });
    }
    Ok(LevelCurve {
        m_minus,
        m_plus,
        eta_star_minus,
        eta_star_plus,
        branches,
    })
}

/// `Q = (u₂ − u₁)(γ₂ + γ₁) − u₂u₁γ₂γ₁` with `u₁ = F₋'(η)`, `u₂ = F₊'(η⁽¹⁾)`.
pub fn stability_q(eta: f64, eta1: f64, c: &JumpCoefficients, gamma: [f64; 2]) -> f64 {
    let u1 = f_slope(eta, c.alpha_minus, c.b_minus);
    let u2 = f_slope(eta1, c.alpha_plus, c.b_plus);
    let [g1, g2] = gamma;
    (u2 - u1) * (g2 + g1) - u2 * u1 * g2 * g1
}

pub fn is_stable_q(q: f64) -> bool {
    q > -4.0 && q < 0.0
}

/// A maximal stretch of one branch where `−4 < Q < 0` and both pseudo-phases are in the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableSegment {
    pub root: Root,
    pub eta_lo: f64,
    pub eta_hi: f64,
    /// `(η, η⁽¹⁾)` samples including both refined endpoints.
    pub points: Vec<(f64, f64)>,
}

/// Stable stretches of the traced curve; an empty list is reported as `EmptySegment`.
pub fn stable_segments(
    curve: &LevelCurve,
    c: &JumpCoefficients,
    gamma: [f64; 2],
    window: &EtaWindow,
) -> Result<Vec<StableSegment>> {
    let mut out = Vec::new();
    for br in &curve.branches {
        let good = |eta: f64| -> Option<(f64, f64)> {
            let e1 = partner(c, eta, br.root)?;
            let ok = window.contains(eta)
                && window.contains(e1)
                && is_stable_q(stability_q(eta, e1, c, gamma));
            ok.then_some((eta, e1))
        };
        // Boundary between a good sample `g` and a bad sample `b`.
        let edge = |mut g: f64, mut b: f64| -> (f64, f64) {
            while (g - b).abs() > 1e-12 {
                let m = 0.5 * (g + b);
                if good(m).is_some() {
                    g = m;
                } else {
                    b = m;
                }
            }
            good(g).unwrap_or((g, partner(c, g, br.root).unwrap_or(f64::NAN)))
        };
        let mut current: Vec<(f64, f64)> = Vec::new();
        let mut last_bad: Option<f64> = None;
        for (i, &(eta, e1)) in br.points.iter().enumerate() {
            let ok = window.contains(eta)
                && window.contains(e1)
                && is_stable_q(stability_q(eta, e1, c, gamma));
            if ok {
                if current.is_empty() {
                    match last_bad {
                        Some(b) if i > 0 => current.push(edge(eta, b)),
                        _ => {}
                    }
                }
                if current.last().map_or(true, |p| p.0 < eta) {
                    current.push((eta, e1));
                }
            } else {
                if !current.is_empty() {
                    let g = current.last().expect("non-empty").0;
                    let p = edge(g, eta);
                    if p.0 > g {
                        current.push(p);
                    }
                    push_segment(&mut out, br.root, std::mem::take(&mut current));
                }
                last_bad = Some(eta);
            }
        }
        if !current.is_empty() {
            push_segment(&mut out, br.root, current);
        }
    }
    if out.is_empty() {
        return Err(Error::EmptySegment);
    }
    Ok(out)
}

/// Shortest kept stretch: where the two branches touch at the maximum of `F₊`
/// the partner root is only accurate to about `√ϵ`, which can fake slivers.
const MIN_SEGMENT: f64 = 1e-6;

fn push_segment(out: &mut Vec<StableSegment>, root: Root, points: Vec<(f64, f64)>) {
    if points.len() < 2 || points[points.len() - 1].0 - points[0].0 < MIN_SEGMENT {
        return;
    }
    out.push(StableSegment {
        root,
        eta_lo: points[0].0,
        eta_hi: points[points.len() - 1].0,
        points,
    });
}

/// Point of the torus `{(s₁ mod 1, s₂ mod 2)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub s1: f64,
    pub s2: f64,
}

impl TorusPoint {
    /// Representative in `[0, 1) × [0, 2)`.
    pub fn reduced(s1: f64, s2: f64) -> Self {
        Self {
            s1: s1.rem_euclid(1.0),
            s2: s2.rem_euclid(2.0),
        }
    }

    /// Distance on the torus.
    pub fn distance(&self, other: &TorusPoint) -> f64 {
        let d1 = (self.s1 - other.s1).rem_euclid(1.0);
        let d2 = (self.s2 - other.s2).rem_euclid(2.0);
        d1.min(1.0 - d1).hypot(d2.min(2.0 - d2))
    }
}

/// `(s₁, s₂)` before reduction: `s₁ = η⁽¹⁾ − η + γ₁F₋(η)`, `s₂ = η − η⁽¹⁾`.
pub fn torus_coords(eta: f64, eta1: f64, c: &JumpCoefficients, gamma1: f64) -> (f64, f64) {
    (eta1 - eta + gamma1 * f_minus(c, eta), eta - eta1)
}

pub fn torus_map(eta: f64, eta1: f64, c: &JumpCoefficients, gamma1: f64) -> TorusPoint {
    let (s1, s2) = torus_coords(eta, eta1, c, gamma1);
    TorusPoint::reduced(s1, s2)
}

/// Absolute flux `χ = ∫_Λ |(γ, n)| dl` of `γ` across the images of the segments.
pub fn chi(segments: &[StableSegment], c: &JumpCoefficients, gamma: [f64; 2]) -> f64 {
    let mut total = 0.0;
    for seg in segments {
        let pts: Vec<(f64, f64)> = seg
            .points
            .iter()
            .map(|&(e, e1)| torus_coords(e, e1, c, gamma[0]))
            .collect();
        for w in pts.windows(2) {
            let (d1, d2) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            total += (gamma[0] * d2 - gamma[1] * d1).abs();
        }
    }
    total
}

/// Default tracing resolution used by the search and the density.
pub const CURVE_SAMPLES: usize = 241;

/// Traces the curve over the window and returns its stable segments, or an
/// empty list when there are none.
pub fn segments_for(
    c: &JumpCoefficients,
    gamma: [f64; 2],
    window: &EtaWindow,
    n: usize,
) -> Result<Vec<StableSegment>> {
    let pad = 1e-9;
    let curve = level_curve(c, window.lo + pad, window.hi - pad, n)?;
    match stable_segments(&curve, c, gamma, window) {
        Ok(s) => Ok(s),
        Err(Error::EmptySegment) => Ok(Vec::new()),
        Err(e) => Err(e),
    }
}
