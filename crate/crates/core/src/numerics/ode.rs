//! Dormand-Prince 5(4) adaptive integrator for small fixed-size systems.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Where [`Dopri5::solve_until`] ended, with the state one step earlier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopPoint<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub t_prev: f64,
    pub y_prev: [f64; N],
    pub stopped: bool,
}

/// Tolerances for [`Dopri5`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub initial_step: f64,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-13,
            max_steps: 200_000,
            initial_step: 1e-3,
        }
    }
}

impl Dopri5 {
    /// Integrates `y' = f(t, y)` from `t0` to `t1`, calling `observe` after every accepted step.
    pub fn solve_observed<const N: usize, F, O>(
        &self,
        f: F,
        t0: f64,
        y0: [f64; N],
        t1: f64,
        mut observe: O,
    ) -> Result<[f64; N]>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
        O: FnMut(f64, &[f64; N]),
    {
        let out = self.solve_until(f, t0, y0, t1, |t, y| {
            observe(t, y);
            false
        })?;
        Ok(out.y)
    }

    /// Integrates until `stop(t, y)` returns true after an accepted step, or `t1`.
    pub fn solve_until<const N: usize, F, S>(
        &self,
        mut f: F,
        t0: f64,
        y0: [f64; N],
        t1: f64,
        mut stop: S,
    ) -> Result<StopPoint<N>>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
        S: FnMut(f64, &[f64; N]) -> bool,
    {
        let dir = if t1 >= t0 { 1.0 } else { -1.0 };
        let span = (t1 - t0).abs();
        if span == 0.0 {
            return Ok(StopPoint {
                t: t0,
                y: y0,
                t_prev: t0,
                y_prev: y0,
                stopped: false,
            });
        }
        let mut t = t0;
        let mut y = y0;
        let mut h = self.initial_step.min(span);
        let mut k = [[0.0; N]; 7];
        k[0] = f(t, &y);
        let mut steps = 0;
        while (t1 - t) * dir > 0.0 {
            if steps >= self.max_steps {
                return Err(Error::NoConvergence {
                    what: "Dormand-Prince integration",
                    iterations: steps,
                });
            }
            steps += 1;
            let remaining = (t1 - t).abs();
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            let hs = h * dir;
            for s in 1..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        for i in 0..N {
                            ys[i] += hs * a * kj[i];
                        }
                    }
                }
                k[s] = f(t + C[s] * hs, &ys);
            }
            let mut y_new = y;
            for i in 0..N {
                let mut acc = 0.0;
                for s in 0..6 {
                    acc += A[6][s] * k[s][i];
                }
                y_new[i] += hs * acc;
            }
            let mut err = 0.0;
            for i in 0..N {
                let mut e = 0.0;
                for s in 0..7 {
                    e += E[s] * k[s][i];
                }
                let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err += (hs * e / sc).powi(2);
            }
            let err = (err / N as f64).sqrt();
            if !err.is_finite() {
                h *= 0.1;
                if h < 1e-300 {
                    return Err(Error::NoConvergence {
                        what: "Dormand-Prince integration",
                        iterations: steps,
                    });
                }
                continue;
            }
            if err <= 1.0 {
                let (t_prev, y_prev) = (t, y);
                t = if last { t1 } else { t + hs };
                y = y_new;
                k[0] = k[6];
                if stop(t, &y) {
                    return Ok(StopPoint {
                        t,
                        y,
                        t_prev,
                        y_prev,
                        stopped: true,
                    });
                }
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                h *= fac;
            } else {
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            }
        }
        Ok(StopPoint {
            t,
            y,
            t_prev: t,
            y_prev: y,
            stopped: false,
        })
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t1`.
    pub fn solve<const N: usize, F>(&self, f: F, t0: f64, y0: [f64; N], t1: f64) -> Result<[f64; N]>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        self.solve_observed(f, t0, y0, t1, |_, _| {})
    }
}
