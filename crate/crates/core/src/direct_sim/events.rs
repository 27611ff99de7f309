//! Axis, section and separatrix events along a trajectory, refined by
//! root finding on partial steps, and the pseudo-phases read off them.

use super::integrator::{SaddleTracker, Trajectory, TrajectoryPoint};
use crate::error::{Error, Result};
use crate::fast::RegionId;
use crate::model::{FullState, SlowFastModel};
use crate::numerics::roots::brent;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// A straight segment `origin + s·direction`, `s ∈ [0, length]`, in the slow plane `(y, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub origin: (f64, f64),
    /// Unit vector.
    pub direction: (f64, f64),
    pub length: f64,
}

impl Section {
    pub fn new(origin: (f64, f64), direction: (f64, f64), length: f64) -> Result<Self> {
        let n = direction.0.hypot(direction.1);
        if !(n > 0.0 && length > 0.0 && n.is_finite() && length.is_finite()) {
            return Err(Error::InvalidParams(
                "section needs a nonzero direction and positive length".into(),
            ));
        }
        Ok(Self {
            origin,
            direction: (direction.0 / n, direction.1 / n),
            length,
        })
    }

    pub fn point(&self, s: f64) -> (f64, f64) {
        (
            self.origin.0 + s * self.direction.0,
            self.origin.1 + s * self.direction.1,
        )
    }

    /// Signed distance of `(y, x)` from the section line.
    pub fn side(&self, y: f64, x: f64) -> f64 {
        self.direction.0 * (x - self.origin.1) - self.direction.1 * (y - self.origin.0)
    }

    /// Position of the projection of `(y, x)` along the section.
    pub fn along(&self, y: f64, x: f64) -> f64 {
        self.direction.0 * (y - self.origin.0) + self.direction.1 * (x - self.origin.1)
    }
}

/// The two sections: `s3` in the outer region, `s_nu` in the well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionPair {
    pub s3: Section,
    pub s_nu: Section,
}

impl SectionPair {
    /// Rays from the slow center through the points of `Γ(h₀)` where the
    /// separatrix loop of branch `nu` is smallest (`s3`) and largest (`s_nu`),
    /// each extended to `1.5` times the radius of `Γ(h₀)` on the ray.
    pub fn default_for<M: SlowFastModel + ?Sized>(model: &M, nu: u8, h0: f64) -> Result<Self> {
        let well = RegionId::well(nu)?;
        let center = crate::adiabatic::slow_center(model)?;
        let n = 72;
        let mut best: Option<((f64, f64, f64), (f64, f64, f64))> = None;
        for k in 0..n {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let Ok((y, x)) = crate::adiabatic::gamma_point(model, h0, center, phi) else {
                continue;
            };
            let Ok(area) = crate::fast::loop_area(model, y, x, well) else {
                continue;
            };
            let r = (y - center.0).hypot(x - center.1);
            let cand = (area, phi, r);
            best = Some(match best {
                None => (cand, cand),
                Some((lo, hi)) => (
                    if area < lo.0 { cand } else { lo },
                    if area > hi.0 { cand } else { hi },
                ),
            });
        }
        let (lo, hi) = best.ok_or(Error::EmptyLevelSet)?;
        let ray =
            |(_, phi, r): (f64, f64, f64)| Section::new(center, (phi.sin(), phi.cos()), 1.5 * r);
        Ok(Self {
            s3: ray(lo)?,
            s_nu: ray(hi)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// `p` changes sign.
    AxisCrossing,
    SectionS3,
    SectionSnu,
    /// `E` changes sign.
    SeparatrixTransit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingEvent {
    pub time: f64,
    pub state: FullState,
    /// Fast energy relative to the saddle.
    pub energy: f64,
    pub region: RegionId,
    pub kind: EventKind,
    /// Axis crossings only: the turning point on the saddle side of the well
    /// (the force points away from `q_c`).
    pub near_saddle: bool,
    pub q_c: f64,
}

fn region_of(energy: f64, q: f64, q_c: f64) -> RegionId {
    if energy == 0.0 {
        RegionId::Separatrix
    } else if energy < 0.0 {
        if q > q_c {
            RegionId::G1
        } else {
            RegionId::G2
        }
    } else {
        RegionId::G3
    }
}

/// Default `|p|` target at refined axis crossings.
pub const AXIS_TOL: f64 = 1e-12;
/// Absolute `|E|` target at refined separatrix transits.
pub const TRANSIT_TOL: f64 = 1e-10;

/// Event stream over a trajectory.
pub struct EventStream<'m, M: SlowFastModel + ?Sized> {
    traj: Trajectory<'m, M>,
    sections: Option<SectionPair>,
    prev: Option<TrajectoryPoint>,
    queue: VecDeque<CrossingEvent>,
    failed: bool,
}

/// Wraps a trajectory; section events are produced only when `sections` is set.
pub fn detect_events<M: SlowFastModel + ?Sized>(
    traj: Trajectory<'_, M>,
    sections: Option<SectionPair>,
) -> EventStream<'_, M> {
    EventStream {
        traj,
        sections,
        prev: None,
        queue: VecDeque::new(),
        failed: false,
    }
}

impl<'m, M: SlowFastModel + ?Sized> EventStream<'m, M> {
    pub fn trajectory(&self) -> &Trajectory<'m, M> {
        &self.traj
    }

    /// The last trajectory sample consumed.
    pub fn current(&self) -> Option<&TrajectoryPoint> {
        self.prev.as_ref()
    }

    fn scan(&mut self, a: &TrajectoryPoint, b: &TrajectoryPoint) -> Result<()> {
        let mut found: Vec<CrossingEvent> = Vec::new();
        let sa = &a.state;
        let sb = &b.state;
        if sa.p != 0.0 && (sa.p.signum() != sb.p.signum() || sb.p == 0.0) {
            let tol = self.traj.config().event_tol;
            found.push(self.refine(a, b.h, EventKind::AxisCrossing, |s, _| s.p, tol)?);
        }
        if a.energy != 0.0 && (a.energy.signum() != b.energy.signum() || b.energy == 0.0) {
            found.push(self.refine(a, b.h, EventKind::SeparatrixTransit, |_, e| e, TRANSIT_TOL)?);
        }
        if let Some(sec) = self.sections {
            for (kind, section) in [
                (EventKind::SectionS3, sec.s3),
                (EventKind::SectionSnu, sec.s_nu),
            ] {
                let (da, db) = (section.side(sa.y, sa.x), section.side(sb.y, sb.x));
                if da != 0.0 && (da.signum() != db.signum() || db == 0.0) {
                    let ev = self.refine(a, b.h, kind, |s, _| section.side(s.y, s.x), 1e-13)?;
                    let s = section.along(ev.state.y, ev.state.x);
                    if (0.0..=section.length).contains(&s) {
                        found.push(ev);
                    }
                }
            }
        }
        found.sort_by(|x, y| x.time.total_cmp(&y.time));
        self.queue.extend(found);
        Ok(())
    }

    /// Root of `g` on `(0, h]` for partial steps from `a`.
    fn refine<G: Fn(&FullState, f64) -> f64>(
        &self,
        a: &TrajectoryPoint,
        h: f64,
        kind: EventKind,
        g: G,
        tol: f64,
    ) -> Result<CrossingEvent> {
        let integ = self.traj.integrator();
        let model = integ.model();
        let mut tracker = SaddleTracker { q_c: a.q_c };
        let eval = |tau: f64, tracker: &mut SaddleTracker| -> (FullState, f64, f64) {
            let mut s = a.state;
            if tau != 0.0 {
                integ.step(&mut s, tau);
            }
            let e = tracker.energy(model, &s);
            (s, e, g(&s, e))
        };
        let fail = || Error::EventRefinementFailure(a.t);
        let mut tau = brent(
            |tau| eval(tau, &mut tracker.clone()).2,
            0.0,
            h,
            1e-15 * h.max(1.0),
            200,
        )
        .map_err(|_| fail())?;
        let (mut s, mut e, mut v) = eval(tau, &mut tracker);
        // Secant polish: brent stops on the bracket width, the target is on |g|.
        let mut k = 0;
        while v.abs() > tol && k < 8 {
            let dt = 1e-7 * h;
            let (_, _, v2) = eval(tau + dt, &mut tracker.clone());
            let slope = (v2 - v) / dt;
            if slope == 0.0 || !slope.is_finite() {
                break;
            }
            tau -= v / slope;
            (s, e, v) = eval(tau, &mut tracker);
            k += 1;
        }
        if v.abs() > tol || !(tau > -1e-9 * h && tau < h * (1.0 + 1e-9)) {
            return Err(fail());
        }
        let q_c = tracker.q_c;
        let near_saddle = kind == EventKind::AxisCrossing && {
            let uq = model.potential_gradient(s.q, s.y, s.x)[0];
            (s.q - q_c) * uq < 0.0
        };
        Ok(CrossingEvent {
            time: a.t + tau,
            state: s,
            energy: e,
            region: if kind == EventKind::SeparatrixTransit {
                RegionId::Separatrix
            } else {
                region_of(e, s.q, q_c)
            },
            kind,
            near_saddle,
            q_c,
        })
    }
}

impl<M: SlowFastModel + ?Sized> Iterator for EventStream<'_, M> {
    type Item = Result<CrossingEvent>;

    fn next(&mut self) -> Option<Result<CrossingEvent>> {
        if self.failed {
            return None;
        }
        loop {
            if let Some(ev) = self.queue.pop_front() {
                return Some(Ok(ev));
            }
            let b = self.traj.next()?;
            if let Some(a) = self.prev {
                if let Err(e) = self.scan(&a, &b) {
                    self.failed = true;
                    return Some(Err(e));
                }
            }
            self.prev = Some(b);
        }
    }
}

/// Which definition produced a pseudo-phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaKind {
    /// First near-saddle axis crossing after capture: `η = 1 − |h/εΘ₋|`.
    Capture,
    /// Last near-saddle axis crossing before escape: `η = |h/εΘ₊|`.
    Escape,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaMeasurement {
    pub eta: f64,
    pub kind: EtaKind,
    /// Fast energy at the crossing.
    pub h: f64,
    pub theta: f64,
}

/// Pseudo-phase from the energy `h` at the designated axis crossing.
pub fn measure_eta(h: f64, theta: f64, eps: f64, kind: EtaKind) -> Result<EtaMeasurement> {
    if !(eps > 0.0 && theta != 0.0 && theta.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "measure_eta needs eps > 0 and theta != 0, got {eps}, {theta}"
        )));
    }
    let r = (h / (eps * theta)).abs();
    let eta = match kind {
        EtaKind::Capture => 1.0 - r,
        EtaKind::Escape => r,
    };
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::OutOfUnitInterval(eta));
    }
    Ok(EtaMeasurement {
        eta,
        kind,
        h,
        theta,
    })
}
