//! Circuits `S₃ → G_ν → S₃` of the exact system: passages through the
//! sections and the crossings, seeds on `S₃`, and the empirical return map.

use super::events::{
    detect_events, measure_eta, CrossingEvent, EtaKind, EtaMeasurement, EventKind, EventStream,
    SectionPair,
};
use super::integrator::{integrate, IntegratorConfig};
use super::Section;
use crate::adiabatic::{crossing_points, improved_invariant, CoefficientTable};
use crate::error::{Error, Result};
use crate::fast::{FastSystem, RegionId};
use crate::model::{FullState, SlowFastModel};
use crate::numerics::ode::Dopri5;
use crate::numerics::roots::brent;
use serde::{Deserialize, Serialize};

/// `Θ₋` at capture and `Θ₊` at escape for the adiabatic loop of action `Ĵ`.
pub trait CrossingReference: Sync {
    fn thetas(&self, jhat: f64) -> Result<(f64, f64)>;
}

impl CrossingReference for CoefficientTable {
    fn thetas(&self, jhat: f64) -> Result<(f64, f64)> {
        let c = self.eval(jhat)?.coeffs;
        Ok((c.theta_minus, c.theta_plus))
    }
}

/// `Θ∓` computed from the crossing points directly.
pub struct DirectCrossings<'m, M: SlowFastModel + ?Sized> {
    pub model: &'m M,
    pub nu: u8,
    pub h0: f64,
}

impl<M: SlowFastModel + ?Sized> CrossingReference for DirectCrossings<'_, M> {
    fn thetas(&self, jhat: f64) -> Result<(f64, f64)> {
        let (c, e) = crossing_points(self.model, jhat, self.nu, self.h0)?;
        Ok((c.theta, e.theta))
    }
}

/// Everything a circuit run needs besides the model and the seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitConfig {
    /// `t_max` bounds the whole run, not one circuit.
    pub integrator: IntegratorConfig,
    pub nu: u8,
    pub sections: SectionPair,
    /// Admissible action interval `Ξ`; leaving it is `EscapeFromXi`.
    pub xi: (f64, f64),
    /// Record pseudo-phases that fall outside `[0, 1]` instead of failing.
    /// Multi-circuit runs use this: `η` overshoots the interval by `O(ε)`.
    #[serde(default)]
    pub lenient_eta: bool,
}

/// Invariants at a section passage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionRecord {
    pub t: f64,
    pub state: FullState,
    pub i_hat: f64,
    pub j_hat: f64,
}

/// The designated near-saddle axis crossing of a capture or an escape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingRecord {
    pub t: f64,
    pub state: FullState,
    pub branch: u8,
    pub eta: EtaMeasurement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Passage {
    SectionS3(SectionRecord),
    Capture(CrossingRecord),
    SectionSnu(SectionRecord),
    Escape(CrossingRecord),
}

/// One circuit: `(Ĵ⁽⁰⁾, η⁽⁰⁾) → (Ĵ⁽¹⁾, η⁽¹⁾) → (Ĵ⁽²⁾, η⁽²⁾, l)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitRecord {
    pub start: SectionRecord,
    pub capture: CrossingRecord,
    pub middle: SectionRecord,
    pub escape: CrossingRecord,
    pub end: SectionRecord,
    pub recapture: CrossingRecord,
    /// Largest `|H − H(seed)|` over the recorded passages.
    pub energy_error: f64,
}

impl CircuitRecord {
    pub fn jhat0(&self) -> f64 {
        self.start.j_hat
    }
    pub fn eta0(&self) -> f64 {
        self.capture.eta.eta
    }
    pub fn jhat1(&self) -> f64 {
        self.middle.j_hat
    }
    pub fn eta1(&self) -> f64 {
        self.escape.eta.eta
    }
    pub fn jhat2(&self) -> f64 {
        self.end.j_hat
    }
    pub fn eta2(&self) -> f64 {
        self.recapture.eta.eta
    }
}

/// Turns the event stream into section passages, captures and escapes.
pub struct PassageTracker<'a, 'm, M: SlowFastModel + ?Sized> {
    events: EventStream<'m, M>,
    model: &'m M,
    reference: &'a dyn CrossingReference,
    eps: f64,
    xi: (f64, f64),
    lenient_eta: bool,
    inside: Option<u8>,
    last_inner: Option<CrossingEvent>,
    last_section: Option<EventKind>,
    /// `Ĵ` at the last section passage, used to look up `Θ∓`.
    j_ref: f64,
    h_init: f64,
    energy_error: f64,
}

impl<'a, 'm, M: SlowFastModel + ?Sized> PassageTracker<'a, 'm, M> {
    /// Starts at a seed on `S₃`; the seed itself is the first section passage.
    pub fn start(
        model: &'m M,
        cfg: &CircuitConfig,
        reference: &'a dyn CrossingReference,
        seed: FullState,
    ) -> Result<(Self, SectionRecord)> {
        let eps = cfg.integrator.epsilon;
        let traj = integrate(model, &cfg.integrator, seed)?;
        let inv = improved_invariant(model, &seed, eps)?;
        if inv.region != RegionId::G3 {
            return Err(Error::InvalidParams(format!(
                "seed is in {:?}, not in the outer region",
                inv.region
            )));
        }
        let first = SectionRecord {
            t: 0.0,
            state: seed,
            i_hat: inv.i_hat,
            j_hat: inv.j_hat,
        };
        let tracker = Self {
            events: detect_events(traj, Some(cfg.sections)),
            model,
            reference,
            eps,
            xi: cfg.xi,
            lenient_eta: cfg.lenient_eta,
            inside: None,
            last_inner: None,
            last_section: Some(EventKind::SectionS3),
            j_ref: inv.j_hat,
            h_init: model.energy(&seed),
            energy_error: 0.0,
        };
        tracker.check_xi(inv.i_hat)?;
        Ok((tracker, first))
    }

    fn check_xi(&self, i_hat: f64) -> Result<()> {
        if i_hat < self.xi.0 || i_hat > self.xi.1 {
            return Err(Error::EscapeFromXi(i_hat));
        }
        Ok(())
    }

    pub fn energy_error(&self) -> f64 {
        self.energy_error
    }

    fn section(&mut self, ev: &CrossingEvent) -> Result<SectionRecord> {
        let inv = improved_invariant(self.model, &ev.state, self.eps)?;
        self.check_xi(inv.i_hat)?;
        self.j_ref = inv.j_hat;
        self.energy_error = self
            .energy_error
            .max((self.model.energy(&ev.state) - self.h_init).abs());
        Ok(SectionRecord {
            t: ev.time,
            state: ev.state,
            i_hat: inv.i_hat,
            j_hat: inv.j_hat,
        })
    }

    fn crossing(&mut self, ev: &CrossingEvent, kind: EtaKind) -> Result<CrossingRecord> {
        let (tm, tp) = self.reference.thetas(self.j_ref)?;
        let theta = if kind == EtaKind::Capture { tm } else { tp };
        let eta = match measure_eta(ev.energy, theta, self.eps, kind) {
            Err(Error::OutOfUnitInterval(v)) if self.lenient_eta => EtaMeasurement {
                eta: v,
                kind,
                h: ev.energy,
                theta,
            },
            r => r?,
        };
        self.energy_error = self
            .energy_error
            .max((self.model.energy(&ev.state) - self.h_init).abs());
        Ok(CrossingRecord {
            t: ev.time,
            state: ev.state,
            branch: ev.region.branch().expect("well crossing"),
            eta,
        })
    }

    /// The next passage, or `NoConvergence` when the horizon is reached first.
    pub fn next_passage(&mut self) -> Result<Passage> {
        let mut steps = 0usize;
        while let Some(ev) = self.events.next() {
            let ev = ev?;
            steps += 1;
            match ev.kind {
                EventKind::SectionS3 | EventKind::SectionSnu => {
                    if self.last_section == Some(ev.kind) {
                        continue;
                    }
                    self.last_section = Some(ev.kind);
                    let rec = self.section(&ev)?;
                    return Ok(if ev.kind == EventKind::SectionS3 {
                        Passage::SectionS3(rec)
                    } else {
                        Passage::SectionSnu(rec)
                    });
                }
                EventKind::AxisCrossing => {
                    let in_well = ev.energy < 0.0 && ev.region.is_well();
                    if in_well && ev.near_saddle {
                        let captured = self.inside.is_none();
                        self.last_inner = Some(ev);
                        if captured {
                            self.inside = ev.region.branch();
                            return Ok(Passage::Capture(self.crossing(&ev, EtaKind::Capture)?));
                        }
                    } else if ev.energy > 0.0 && self.inside.is_some() {
                        self.inside = None;
                        let inner = self
                            .last_inner
                            .take()
                            .expect("inner crossing recorded at capture");
                        return Ok(Passage::Escape(self.crossing(&inner, EtaKind::Escape)?));
                    }
                }
                EventKind::SeparatrixTransit => {}
            }
        }
        Err(Error::NoConvergence {
            what: "circuit within the time horizon",
            iterations: steps,
        })
    }
}

fn expect_capture(p: Passage) -> Result<CrossingRecord> {
    match p {
        Passage::Capture(c) => Ok(c),
        other => Err(Error::OutOfRange(format!(
            "expected a capture, got {other:?}"
        ))),
    }
}

fn expect_escape(p: Passage) -> Result<CrossingRecord> {
    match p {
        Passage::Escape(c) => Ok(c),
        other => Err(Error::OutOfRange(format!(
            "expected an escape, got {other:?}"
        ))),
    }
}

fn expect_section(p: Passage, s3: bool) -> Result<SectionRecord> {
    match (p, s3) {
        (Passage::SectionS3(r), true) | (Passage::SectionSnu(r), false) => Ok(r),
        (other, _) => Err(Error::OutOfRange(format!(
            "expected a passage through {}, got {other:?}",
            if s3 { "S3" } else { "S_nu" }
        ))),
    }
}

/// Up to `n` consecutive circuits from a seed on `S₃`. `stop` sees each
/// completed circuit and ends the run early by returning true.
pub fn run_circuits<M: SlowFastModel + ?Sized>(
    model: &M,
    cfg: &CircuitConfig,
    reference: &dyn CrossingReference,
    seed: FullState,
    n: usize,
    mut stop: impl FnMut(&CircuitRecord) -> bool,
) -> Result<Vec<CircuitRecord>> {
    let (mut tracker, mut start) = PassageTracker::start(model, cfg, reference, seed)?;
    let mut capture = expect_capture(tracker.next_passage()?)?;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let middle = expect_section(tracker.next_passage()?, false)?;
        let escape = expect_escape(tracker.next_passage()?)?;
        let end = expect_section(tracker.next_passage()?, true)?;
        let recapture = expect_capture(tracker.next_passage()?)?;
        let rec = CircuitRecord {
            start,
            capture,
            middle,
            escape,
            end,
            recapture,
            energy_error: tracker.energy_error(),
        };
        out.push(rec);
        if stop(&rec) {
            break;
        }
        start = end;
        capture = recapture;
    }
    Ok(out)
}

/// One circuit of the exact system from a seed on `S₃`.
pub fn empirical_return_map<M: SlowFastModel + ?Sized>(
    model: &M,
    cfg: &CircuitConfig,
    reference: &dyn CrossingReference,
    seed: FullState,
) -> Result<CircuitRecord> {
    Ok(run_circuits(model, cfg, reference, seed, 1, |_| false)?[0])
}

/// First capture after a seed on `S₃`.
pub fn first_capture<M: SlowFastModel + ?Sized>(
    model: &M,
    cfg: &CircuitConfig,
    reference: &dyn CrossingReference,
    seed: FullState,
) -> Result<CrossingRecord> {
    let (mut tracker, _) = PassageTracker::start(model, cfg, reference, seed)?;
    expect_capture(tracker.next_passage()?)
}

/// Points of `S₃` on the energy level `h₀` parametrized by `(Ĵ, θ)`: the slow
/// point is where the frozen outer orbit of action `2Ĵ` has total energy `h₀`,
/// the fast point is at time `θT` after the upward crossing of `q = q_c`.
pub struct Seeder<'m, M: SlowFastModel + ?Sized> {
    pub model: &'m M,
    pub section: Section,
    pub h0: f64,
    pub eps: f64,
}

impl<'m, M: SlowFastModel + ?Sized> Seeder<'m, M> {
    pub fn new(model: &'m M, section: Section, h0: f64, eps: f64) -> Self {
        Self {
            model,
            section,
            h0,
            eps,
        }
    }

    /// Position along the section where the outer orbit of action `i3` has energy `h₀`.
    pub fn section_position(&self, i3: f64) -> Result<f64> {
        let f = |s: f64| -> f64 {
            let (y, x) = self.section.point(s);
            let Ok(sys) = FastSystem::new(self.model, y, x) else {
                return f64::NAN;
            };
            match sys.energy_for_action(i3, RegionId::G3) {
                Ok(e) => sys.saddle().h_s + e - self.h0,
                Err(_) => f64::NAN,
            }
        };
        let n = 64;
        let len = self.section.length;
        let mut prev: Option<(f64, f64)> = None;
        for k in 1..=n {
            let s = len * k as f64 / n as f64;
            let v = f(s);
            if v.is_finite() {
                if let Some((sp, vp)) = prev {
                    if vp.signum() != v.signum() {
                        return brent(f, sp, s, 1e-15, 200);
                    }
                }
                prev = Some((s, v));
            } else {
                prev = None;
            }
        }
        Err(Error::OutOfRange(format!(
            "no point of the section carries an outer orbit of action {i3} at h0 = {}",
            self.h0
        )))
    }

    /// The seed with adiabatic action `2·i_hat` at phase `theta`.
    pub fn adiabatic_seed(&self, i_hat: f64, theta: f64) -> Result<FullState> {
        let s = self.section_position(2.0 * i_hat)?;
        let (y, x) = self.section.point(s);
        let sys = FastSystem::new(self.model, y, x)?;
        let e = sys.energy_for_action(2.0 * i_hat, RegionId::G3)?;
        let period = sys.period(e, RegionId::G3)?;
        let q_c = sys.saddle().q_c;
        let t = theta.rem_euclid(1.0) * period;
        let start = [(2.0 * e).sqrt(), q_c];
        let ode = Dopri5 {
            rtol: 1e-13,
            atol: 1e-15,
            max_steps: 1_000_000,
            initial_step: 1e-3,
        };
        let model = self.model;
        let end = if t > 0.0 {
            ode.solve(
                |_, z: &[f64; 2]| [-model.potential_gradient(z[1], y, x)[0], z[0]],
                0.0,
                start,
                t,
            )?
        } else {
            start
        };
        Ok(FullState::new(end[0], end[1], y, x))
    }

    /// The seed whose improved invariant is `j_hat`, at phase `theta`.
    pub fn seed(&self, j_hat: f64, theta: f64) -> Result<FullState> {
        let mut i_hat = j_hat;
        let mut s = self.adiabatic_seed(i_hat, theta)?;
        for _ in 0..4 {
            let inv = improved_invariant(self.model, &s, self.eps)?;
            let err = inv.j_hat - j_hat;
            if err.abs() < 1e-14 {
                break;
            }
            i_hat -= err;
            s = self.adiabatic_seed(i_hat, theta)?;
        }
        Ok(s)
    }
}

/// A seed whose first capture has the requested pseudo-phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotSeed {
    pub j_hat: f64,
    pub theta: f64,
    pub state: FullState,
    pub eta0: f64,
}

/// Tunes the phase `θ` of a seed with invariant `Ĵ` so that the first capture
/// is into `ν` with `η⁽⁰⁾` within `tol` of `eta`.
pub fn shoot_seed<M: SlowFastModel + ?Sized>(
    seeder: &Seeder<'_, M>,
    cfg: &CircuitConfig,
    reference: &dyn CrossingReference,
    j_hat: f64,
    eta: f64,
    tol: f64,
) -> Result<ShotSeed> {
    let eval = |theta: f64| -> Result<(FullState, Option<f64>)> {
        let s = seeder.seed(j_hat, theta)?;
        match first_capture(seeder.model, cfg, reference, s) {
            Ok(c) => Ok((s, (c.branch == cfg.nu).then_some(c.eta.eta))),
            Err(Error::OutOfUnitInterval(_)) => Ok((s, None)),
            Err(e) => Err(e),
        }
    };
    let n = 24;
    let grid: Vec<(f64, Option<f64>)> = (0..=n)
        .map(|k| {
            let th = k as f64 / n as f64;
            eval(th).map(|(_, v)| (th, v))
        })
        .collect::<Result<_>>()?;
    for w in grid.windows(2) {
        let ((ta, Some(ea)), (tb, Some(eb))) = (w[0], w[1]) else {
            continue;
        };
        if (eb - ea).abs() > 0.5 || (ea - eta) * (eb - eta) > 0.0 {
            continue;
        }
        // Illinois false position on θ.
        let (mut a, mut fa, mut b, mut fb) = (ta, ea - eta, tb, eb - eta);
        let mut side = 0i8;
        for _ in 0..80 {
            let t = if fb != fa {
                b - fb * (b - a) / (fb - fa)
            } else {
                0.5 * (a + b)
            };
            let t = if t > a.min(b) && t < a.max(b) {
                t
            } else {
                0.5 * (a + b)
            };
            let (s, v) = eval(t)?;
            let Some(v) = v else {
                break;
            };
            let ft = v - eta;
            if ft.abs() < tol {
                return Ok(ShotSeed {
                    j_hat,
                    theta: t,
                    state: s,
                    eta0: v,
                });
            }
            if ft.signum() == fb.signum() {
                b = t;
                fb = ft;
                if side == 1 {
                    fa *= 0.5;
                }
                side = 1;
            } else {
                a = t;
                fa = ft;
                if side == -1 {
                    fb *= 0.5;
                }
                side = -1;
            }
        }
    }
    Err(Error::NoConvergence {
        what: "seed shooting for the capture pseudo-phase",
        iterations: n,
    })
}

/// Finite-difference Jacobian of the one-circuit map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalJacobian {
    /// `∂(Ĵ⁽²⁾, η⁽²⁾)/∂(Ĵ⁽⁰⁾, η⁽⁰⁾)`.
    pub m: [[f64; 2]; 2],
    pub trace: f64,
    pub det: f64,
    /// `∂(Ĵ⁽⁰⁾, η⁽⁰⁾)/∂(Ĵ_s, θ_s)` in seed coordinates.
    pub seed_to_map: [[f64; 2]; 2],
    /// Determinant of the map in the seed coordinates `(Ĵ_s, θ_s)`, the
    /// section-phase surrogate.
    pub det_section: f64,
}

fn wrap_half(v: f64) -> f64 {
    v - v.round()
}

/// Central differences over the four seeds `(Ĵ_s ± dj, θ_s)`, `(Ĵ_s, θ_s ± dtheta)`.
pub fn empirical_jacobian<M: SlowFastModel + ?Sized>(
    seeder: &Seeder<'_, M>,
    cfg: &CircuitConfig,
    reference: &dyn CrossingReference,
    j_hat: f64,
    theta: f64,
    dj: f64,
    dtheta: f64,
) -> Result<EmpiricalJacobian> {
    let run = |j: f64, th: f64| -> Result<CircuitRecord> {
        let s = seeder.seed(j, th)?;
        let rec = empirical_return_map(seeder.model, cfg, reference, s)?;
        if rec.capture.branch != cfg.nu || rec.recapture.branch != cfg.nu {
            return Err(Error::DifferentiationFailure(format!(
                "neighbouring seed at (J = {j}, theta = {th}) changed branch"
            )));
        }
        Ok(rec)
    };
    let seeds = [
        (j_hat + dj, theta),
        (j_hat - dj, theta),
        (j_hat, theta + dtheta),
        (j_hat, theta - dtheta),
    ];
    let recs: Vec<CircuitRecord> = seeds
        .iter()
        .map(|&(j, t)| run(j, t))
        .collect::<Result<_>>()?;
    let col = |p: &CircuitRecord, m: &CircuitRecord, h: f64| -> ([f64; 2], [f64; 2]) {
        let a = [
            (p.jhat0() - m.jhat0()) / (2.0 * h),
            wrap_half(p.eta0() - m.eta0()) / (2.0 * h),
        ];
        let b = [
            (p.jhat2() - m.jhat2()) / (2.0 * h),
            wrap_half(p.eta2() - m.eta2()) / (2.0 * h),
        ];
        (a, b)
    };
    let (a0, b0) = col(&recs[0], &recs[1], dj);
    let (a1, b1) = col(&recs[2], &recs[3], dtheta);
    let a = [[a0[0], a1[0]], [a0[1], a1[1]]];
    let b = [[b0[0], b1[0]], [b0[1], b1[1]]];
    let det_a = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det_a == 0.0 || !det_a.is_finite() {
        return Err(Error::DifferentiationFailure(
            "seed coordinates are degenerate".into(),
        ));
    }
    let inv = [
        [a[1][1] / det_a, -a[0][1] / det_a],
        [-a[1][0] / det_a, a[0][0] / det_a],
    ];
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = b[i][0] * inv[0][j] + b[i][1] * inv[1][j];
        }
    }
    let det_section = section_det(seeder, &recs, dj, dtheta)?;
    Ok(EmpiricalJacobian {
        m,
        trace: m[0][0] + m[1][1],
        det: m[0][0] * m[1][1] - m[0][1] * m[1][0],
        seed_to_map: a,
        det_section,
    })
}

/// Phase of the fast point at a section passage: time since the last upward
/// crossing of `q = q_c` over the frozen period, obtained by integrating the
/// frozen orbit backwards.
pub fn section_phase<M: SlowFastModel + ?Sized>(model: &M, s: &FullState) -> Result<f64> {
    let sys = FastSystem::new(model, s.y, s.x)?;
    let e = sys.energy_of(s.p, s.q);
    let region = if e > 0.0 {
        RegionId::G3
    } else {
        return Err(Error::OutOfRange(
            "section phase needs an outer orbit".into(),
        ));
    };
    let period = sys.period(e, region)?;
    let q_c = sys.saddle().q_c;
    let ode = Dopri5 {
        rtol: 1e-13,
        atol: 1e-15,
        max_steps: 1_000_000,
        initial_step: 1e-3,
    };
    let (y, x) = (s.y, s.x);
    let f = |_: f64, z: &[f64; 2]| [model.potential_gradient(z[1], y, x)[0], -z[0]];
    // Backward in time: stop where q falls through q_c with p > 0.
    let mut above = s.q >= q_c;
    let stop = ode.solve_until(f, 0.0, [s.p, s.q], period * 1.01, |_, z| {
        let now = z[1] >= q_c;
        let hit = above && !now && z[0] > 0.0;
        above = now;
        hit
    })?;
    if !stop.stopped {
        return Err(Error::OutOfRange(
            "no upward crossing within one period".into(),
        ));
    }
    let z0 = stop.y_prev;
    let (t0, t1) = (stop.t_prev, stop.t);
    let tau = brent(
        |t| {
            if t == t0 {
                return z0[1] - q_c;
            }
            ode.solve(f, t0, z0, t)
                .map(|z| z[1] - q_c)
                .unwrap_or(f64::NAN)
        },
        t0,
        t1,
        1e-14,
        200,
    )?;
    Ok((tau / period).rem_euclid(1.0))
}

fn section_det<M: SlowFastModel + ?Sized>(
    seeder: &Seeder<'_, M>,
    recs: &[CircuitRecord],
    dj: f64,
    dtheta: f64,
) -> Result<f64> {
    let ph: Vec<f64> = recs
        .iter()
        .map(|r| section_phase(seeder.model, &r.end.state))
        .collect::<Result<_>>()?;
    let d11 = (recs[0].end.j_hat - recs[1].end.j_hat) / (2.0 * dj);
    let d12 = (recs[2].end.j_hat - recs[3].end.j_hat) / (2.0 * dtheta);
    let d21 = wrap_half(ph[0] - ph[1]) / (2.0 * dj);
    let d22 = wrap_half(ph[2] - ph[3]) / (2.0 * dtheta);
    Ok(d11 * d22 - d12 * d21)
}
