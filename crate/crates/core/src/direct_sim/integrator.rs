//! Fixed-step symmetric integrators for the full system: kinetic/potential
//! splitting for separable models, implicit midpoint otherwise, both composed
//! to order 2, 4 or 6.

use crate::error::{Error, Result};
use crate::model::{FullState, SeparableModel, SlowFastModel};
use serde::{Deserialize, Serialize};

/// Settings of a fixed-step run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub epsilon: f64,
    /// Fast-time step.
    pub step: f64,
    /// Composition order: 2, 4 or 6.
    pub order: u8,
    /// Fast-time horizon.
    pub t_max: f64,
    /// Step divisor used while `|E| < 10ε`.
    pub refine: u32,
    /// `|p|` target of refined axis crossings.
    #[serde(default = "default_event_tol")]
    pub event_tol: f64,
}

fn default_event_tol() -> f64 {
    super::events::AXIS_TOL
}

impl IntegratorConfig {
    pub fn new(epsilon: f64, step: f64, order: u8, t_max: f64) -> Self {
        Self {
            epsilon,
            step,
            order,
            t_max,
            refine: 4,
            event_tol: default_event_tol(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon <= 0.05) {
            return Err(Error::InvalidParams(format!(
                "epsilon {} outside [0, 0.05]",
                self.epsilon
            )));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if !matches!(self.order, 2 | 4 | 6) {
            return Err(Error::InvalidParams(format!(
                "order must be 2, 4 or 6, got {}",
                self.order
            )));
        }
        if !(self.t_max >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "t_max must be non-negative, got {}",
                self.t_max
            )));
        }
        if !(self.event_tol > 0.0) {
            return Err(Error::InvalidParams(format!(
                "event_tol must be positive, got {}",
                self.event_tol
            )));
        }
        if self.refine == 0 {
            return Err(Error::InvalidParams("refine must be at least 1".into()));
        }
        Ok(())
    }
}

/// Weights of the symmetric composition of a second-order step.
fn composition(order: u8) -> Vec<f64> {
    match order {
        4 => {
            let c = 2f64.cbrt();
            let w1 = 1.0 / (2.0 - c);
            vec![w1, 1.0 - 2.0 * w1, w1]
        }
        6 => {
            // Yoshida's solution A.
            let w1 = -1.177_679_984_178_87;
            let w2 = 0.235_573_213_359_357;
            let w3 = 0.784_513_610_477_560;
            let w0 = 1.0 - 2.0 * (w1 + w2 + w3);
            vec![w3, w2, w1, w0, w1, w2, w3]
        }
        _ => vec![1.0],
    }
}

enum Scheme<'m> {
    Splitting {
        split: &'m dyn SeparableModel,
        /// Kick coefficients (one more than drifts).
        kicks: Vec<f64>,
        drifts: Vec<f64>,
    },
    Midpoint {
        weights: Vec<f64>,
    },
}

/// A fixed-step integrator bound to one model and `ε`.
pub struct Integrator<'m, M: SlowFastModel + ?Sized> {
    model: &'m M,
    eps: f64,
    scheme: Scheme<'m>,
}

impl<'m, M: SlowFastModel + ?Sized> Integrator<'m, M> {
    /// Splitting for separable models, implicit midpoint otherwise.
    pub fn new(model: &'m M, epsilon: f64, order: u8) -> Result<Self> {
        match Self::splitting(model, epsilon, order) {
            Err(Error::SeparabilityUnsupported) => Self::implicit(model, epsilon, order),
            r => r,
        }
    }

    /// The kinetic/potential splitting; `SeparabilityUnsupported` for
    /// non-separable models.
    pub fn splitting(model: &'m M, epsilon: f64, order: u8) -> Result<Self> {
        check_order(order)?;
        let split = model.separable().ok_or(Error::SeparabilityUnsupported)?;
        let w = composition(order);
        let mut kicks = vec![0.0; w.len() + 1];
        for (i, &wi) in w.iter().enumerate() {
            kicks[i] += 0.5 * wi;
            kicks[i + 1] += 0.5 * wi;
        }
        Ok(Self {
            model,
            eps: epsilon,
            scheme: Scheme::Splitting {
                split,
                kicks,
                drifts: w,
            },
        })
    }

    /// Composed implicit midpoint rule; works for any model, several times slower.
    pub fn implicit(model: &'m M, epsilon: f64, order: u8) -> Result<Self> {
        check_order(order)?;
        Ok(Self {
            model,
            eps: epsilon,
            scheme: Scheme::Midpoint {
                weights: composition(order),
            },
        })
    }

    pub fn is_splitting(&self) -> bool {
        matches!(self.scheme, Scheme::Splitting { .. })
    }

    pub fn epsilon(&self) -> f64 {
        self.eps
    }

    pub fn model(&self) -> &'m M {
        self.model
    }

    /// Advances `s` by one step of size `h` (negative `h` integrates backwards).
    pub fn step(&self, s: &mut FullState, h: f64) {
        match &self.scheme {
            Scheme::Splitting {
                split,
                kicks,
                drifts,
            } => {
                let eps = self.eps;
                for (i, &k) in kicks.iter().enumerate() {
                    let g = split.coordinate_potential_gradient(s.q, s.x);
                    s.p -= k * h * g[0];
                    s.y -= k * h * eps * g[1];
                    if let Some(&d) = drifts.get(i) {
                        s.q += d * h * s.p;
                        s.x += d * h * eps * split.slow_kinetic_derivative(s.y);
                    }
                }
            }
            Scheme::Midpoint { weights } => {
                for &w in weights {
                    self.midpoint(s, w * h);
                }
            }
        }
    }

    fn field(&self, s: &FullState) -> [f64; 4] {
        let g = self.model.potential_gradient(s.q, s.y, s.x);
        [-g[0], s.p, -self.eps * g[2], self.eps * g[1]]
    }

    fn midpoint(&self, s: &mut FullState, h: f64) {
        let z0 = [s.p, s.q, s.y, s.x];
        let mut z1 = z0;
        for _ in 0..100 {
            let mid = FullState::new(
                0.5 * (z0[0] + z1[0]),
                0.5 * (z0[1] + z1[1]),
                0.5 * (z0[2] + z1[2]),
                0.5 * (z0[3] + z1[3]),
            );
            let f = self.field(&mid);
            let mut change = 0.0f64;
            for k in 0..4 {
                let next = z0[k] + h * f[k];
                change = change.max((next - z1[k]).abs());
                z1[k] = next;
            }
            if change <= 1e-16 * (1.0 + z1.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
                break;
            }
        }
        *s = FullState::new(z1[0], z1[1], z1[2], z1[3]);
    }
}

fn check_order(order: u8) -> Result<()> {
    if matches!(order, 2 | 4 | 6) {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "order must be 2, 4 or 6, got {order}"
        )))
    }
}

/// Tracks the saddle `q_c(y, x)` along a trajectory by Newton from the last value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleTracker {
    pub q_c: f64,
}

impl SaddleTracker {
    pub fn new<M: SlowFastModel + ?Sized>(model: &M, y: f64, x: f64) -> Result<Self> {
        let s = crate::fast::find_saddle(model, y, x)?;
        Ok(Self { q_c: s.q_c })
    }

    pub fn update<M: SlowFastModel + ?Sized>(&mut self, model: &M, y: f64, x: f64) -> f64 {
        let mut q = self.q_c;
        for _ in 0..30 {
            let g = model.potential_gradient(q, y, x)[0];
            if g == 0.0 {
                break;
            }
            let h = model.potential_hessian(q, y, x)[0][0];
            let dq = g / h;
            q -= dq;
            if dq.abs() <= 1e-15 * (1.0 + q.abs()) {
                break;
            }
        }
        self.q_c = q;
        q
    }

    /// Fast energy `E = p²/2 + U(q) − U(q_c)` after updating the saddle.
    pub fn energy<M: SlowFastModel + ?Sized>(&mut self, model: &M, s: &FullState) -> f64 {
        let q_c = self.update(model, s.y, s.x);
        0.5 * s.p * s.p + model.potential_difference(s.q, q_c, s.y, s.x)
    }
}

/// One sample of a trajectory: the step `h` that produced it is kept for event refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub h: f64,
    pub state: FullState,
    /// Fast energy relative to the saddle.
    pub energy: f64,
    pub q_c: f64,
}

/// Fixed-step trajectory from `s0` up to `t_max`, refining the step near the separatrix.
pub struct Trajectory<'m, M: SlowFastModel + ?Sized> {
    integ: Integrator<'m, M>,
    cfg: IntegratorConfig,
    tracker: SaddleTracker,
    current: TrajectoryPoint,
    started: bool,
}

impl<'m, M: SlowFastModel + ?Sized> Trajectory<'m, M> {
    pub fn integrator(&self) -> &Integrator<'m, M> {
        &self.integ
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.cfg
    }

    pub fn current(&self) -> &TrajectoryPoint {
        &self.current
    }

    pub fn tracker(&self) -> SaddleTracker {
        self.tracker
    }

    fn advance(&mut self) -> Option<TrajectoryPoint> {
        if !self.started {
            self.started = true;
            return Some(self.current);
        }
        let remaining = self.cfg.t_max - self.current.t;
        if remaining <= 1e-12 * self.cfg.step {
            return None;
        }
        let mut h = self.cfg.step;
        if self.current.energy.abs() < 10.0 * self.cfg.epsilon {
            h /= self.cfg.refine as f64;
        }
        let h = h.min(remaining);
        let mut s = self.current.state;
        self.integ.step(&mut s, h);
        let energy = self.tracker.energy(self.integ.model, &s);
        self.current = TrajectoryPoint {
            t: self.current.t + h,
            h,
            state: s,
            energy,
            q_c: self.tracker.q_c,
        };
        Some(self.current)
    }
}

impl<M: SlowFastModel + ?Sized> Iterator for Trajectory<'_, M> {
    type Item = TrajectoryPoint;

    fn next(&mut self) -> Option<TrajectoryPoint> {
        self.advance()
    }
}

/// Starts a trajectory at `s0`; the first item is `s0` itself at `t = 0`.
pub fn integrate<'m, M: SlowFastModel + ?Sized>(
    model: &'m M,
    cfg: &IntegratorConfig,
    s0: FullState,
) -> Result<Trajectory<'m, M>> {
    cfg.validate()?;
    if !s0.is_finite() {
        return Err(Error::InvalidParams("initial state is not finite".into()));
    }
    let integ = Integrator::new(model, cfg.epsilon, cfg.order)?;
    let mut tracker = SaddleTracker::new(model, s0.y, s0.x)?;
    let energy = tracker.energy(model, &s0);
    Ok(Trajectory {
        integ,
        cfg: *cfg,
        tracker,
        current: TrajectoryPoint {
            t: 0.0,
            h: 0.0,
            state: s0,
            energy,
            q_c: tracker.q_c,
        },
        started: false,
    })
}
