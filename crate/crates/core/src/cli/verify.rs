//! The eleven acceptance checks: closed forms, structural identities,
//! invariant quality, jump and phase formulas, capture rule, fixed-point
//! census, stability, islands, density and symplecticity.

use crate::adiabatic::{d_coefficients, CoefficientTable};
use crate::direct_sim::{
    control_ensemble, empirical_jacobian, invariant_drift, island_probe, jump_scaling_study,
    probe_seed, shoot_seed, EmpiricalJacobian, IntegratorConfig, IslandConfig, IslandScan,
    JumpScalingReport, SectionPair, Seeder, ShotSeed, StudyConfig,
};
use crate::error::{Error, Result};
use crate::fast::{FastSystem, RegionId};
use crate::model::{DoubleWell, FullState};
use crate::numerics::stats::{fit_line, LineFit};
use crate::return_map::{
    density, find_fixed_points, unstable_fixed_points, FixedPointSolution, SearchConfig,
};
use serde::Serialize;
use serde_json::{json, Value};
use std::cell::OnceCell;

/// Outcome of one acceptance check.
#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub summary: String,
    pub details: Value,
}

impl Criterion {
    /// A failed check that could not be evaluated.
    pub fn error(id: u8, title: &'static str, e: &Error) -> Self {
        Self {
            id,
            title,
            passed: false,
            summary: format!("error: {e}"),
            details: json!({ "error": e.to_string() }),
        }
    }

    /// One line: `criterion  4 PASS  jump formula: ...`.
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {}  {}: {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.summary
        )
    }
}

/// Settings of the checks that are not fixed by the checks themselves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifySettings {
    pub nu: u8,
    pub h0: f64,
    pub xi0: (f64, f64),
    pub c1: f64,
    pub newton_tol: f64,
    pub step: f64,
    pub order: u8,
    pub jump_trials: usize,
    pub island_circuits: usize,
    pub control_trials: usize,
    pub density_samples: usize,
    pub seed: u64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            nu: 1,
            h0: 2.0,
            xi0: (0.16, 0.40),
            c1: 20.0,
            newton_tol: 1e-12,
            step: 0.02,
            order: 6,
            jump_trials: 100,
            island_circuits: 50,
            control_trials: 20,
            density_samples: 65,
            seed: 7,
        }
    }
}

/// A stable or unstable fixed point followed in the exact system.
#[derive(Debug, Clone, Serialize)]
pub struct FixedPointCheck {
    pub fixed_point: FixedPointSolution,
    pub seed: ShotSeed,
    pub jacobian: EmpiricalJacobian,
}

const JUMP_EPS: [f64; 3] = [1e-2, 3e-3, 1e-3];
const CENSUS_EPS: [f64; 3] = [4e-3, 2e-3, 1e-3];
const EPS: f64 = 1e-3;
const AREA_EPS: f64 = 4e-3;
/// Slow-time length of one circuit used to size horizons (the slow loop
/// period of the built-in family at `h₀ = 2` is about 6.3).
const CIRCUIT_SLOW_TIME: f64 = 10.0;

pub struct Verifier<'a> {
    pub model: &'a DoubleWell,
    pub table: &'a CoefficientTable,
    pub settings: VerifySettings,
    sections: SectionPair,
    jumps: OnceCell<JumpScalingReport>,
    census: OnceCell<Vec<Vec<FixedPointSolution>>>,
    stable: OnceCell<(Vec<FixedPointCheck>, usize)>,
}

fn ok_or_fail(id: u8, title: &'static str, r: Result<Criterion>) -> Criterion {
    r.unwrap_or_else(|e| Criterion::error(id, title, &e))
}

fn fit_json(f: &LineFit) -> Value {
    json!({ "slope": f.slope, "intercept": f.intercept, "slope_ci95": [f.slope_ci95.0, f.slope_ci95.1] })
}

impl<'a> Verifier<'a> {
    pub fn new(
        model: &'a DoubleWell,
        table: &'a CoefficientTable,
        settings: VerifySettings,
    ) -> Result<Self> {
        let sections = SectionPair::default_for(model, settings.nu, settings.h0)?;
        Ok(Self {
            model,
            table,
            settings,
            sections,
            jumps: OnceCell::new(),
            census: OnceCell::new(),
            stable: OnceCell::new(),
        })
    }

    pub fn study(&self) -> StudyConfig {
        let s = &self.settings;
        StudyConfig {
            nu: s.nu,
            h0: s.h0,
            sections: self.sections,
            xi: (self.table.lo, self.table.hi),
            j_range: s.xi0,
            step: s.step,
            order: s.order,
            slow_horizon: 10.0 * CIRCUIT_SLOW_TIME,
            rng_seed: s.seed,
        }
    }

    fn seeder(&self, eps: f64) -> Seeder<'a, DoubleWell> {
        Seeder::new(self.model, self.sections.s3, self.settings.h0, eps)
    }

    fn search(&self, eps: f64) -> SearchConfig {
        let mut c = SearchConfig::new(eps, self.settings.xi0.0, self.settings.xi0.1);
        c.c1 = self.settings.c1;
        c.newton_tol = self.settings.newton_tol;
        c
    }

    /// Runs the listed checks in order.
    pub fn run(&self, ids: &[u8]) -> Vec<Criterion> {
        ids.iter().map(|&id| self.criterion(id)).collect()
    }

    pub fn criterion(&self, id: u8) -> Criterion {
        match id {
            1 => ok_or_fail(1, "quadrature exactness", self.quadrature()),
            2 => ok_or_fail(2, "structural identities", self.identities()),
            3 => ok_or_fail(3, "invariant quality", self.invariant_quality()),
            4 => ok_or_fail(4, "jump formula", self.jump_formula()),
            5 => ok_or_fail(5, "phase formula", self.phase_formula()),
            6 => ok_or_fail(6, "capture rule", self.capture_rule()),
            7 => ok_or_fail(7, "fixed-point census", self.census_check()),
            8 => ok_or_fail(8, "stability cross-check", self.stability()),
            9 => ok_or_fail(9, "island persistence", self.islands(None)),
            10 => ok_or_fail(10, "density", self.density_check()),
            11 => ok_or_fail(11, "symplecticity", self.symplecticity()),
            _ => Criterion {
                id,
                title: "unknown",
                passed: false,
                summary: format!("no criterion {id}"),
                details: Value::Null,
            },
        }
    }

    fn quadrature(&self) -> Result<Criterion> {
        let p = self.model.params;
        let (mut e_s, mut e_a) = (0.0f64, 0.0f64);
        for k in 0..20 {
            let x = -1.5 + 3.0 * k as f64 / 19.0;
            let k_x = p.stiffness(x);
            let sys = FastSystem::new(self.model, 0.3, x)?;
            e_s = e_s.max((sys.loop_area(RegionId::G1)? - 4.0 / 3.0 * k_x.powf(1.5)).abs());
            e_a = e_a.max((sys.saddle().a - k_x.powf(-0.5)).abs());
        }
        Ok(Criterion {
            id: 1,
            title: "quadrature exactness",
            passed: e_s < 1e-9 && e_a < 1e-10,
            summary: format!("max |S1 - closed form| = {e_s:.2e} (< 1e-9), max |a - closed form| = {e_a:.2e} (< 1e-10)"),
            details: json!({ "max_area_error": e_s, "max_a_error": e_a, "points": 20 }),
        })
    }

    fn identities(&self) -> Result<Criterion> {
        let (mut e_s, mut e_b, mut e_d) = (0.0f64, 0.0f64, 0.0f64);
        for k in 0..20 {
            let x = -1.5 + 3.0 * k as f64 / 19.0;
            let y = -1.0 + 2.0 * ((k * 7) % 20) as f64 / 19.0;
            let sys = FastSystem::new(self.model, y, x)?;
            e_s = e_s.max((sys.loop_area(RegionId::G1)? - sys.loop_area(RegionId::G2)?).abs());
            let b = [RegionId::G1, RegionId::G2, RegionId::G3]
                .map(|r| sys.period_expansion(r).map(|e| e.b))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            e_b = e_b.max((b[2] - b[0] - b[1]).abs());
            let d = d_coefficients(self.model, y, x)?;
            e_d = e_d.max((d[2] - d[0] - d[1]).abs());
        }
        Ok(Criterion {
            id: 2,
            title: "structural identities",
            passed: e_s < 1e-6 && e_b < 1e-6 && e_d < 1e-6,
            summary: format!("|S1 - S2| = {e_s:.2e}, |b3 - b1 - b2| = {e_b:.2e}, |d3 - d1 - d2| = {e_d:.2e} (each < 1e-6)"),
            details: json!({ "s": e_s, "b": e_b, "d": e_d }),
        })
    }

    fn invariant_quality(&self) -> Result<Criterion> {
        // Deep in the right well: the orbit stays far from the separatrix over slow time 1.
        let s0 = FullState::new(0.0, 1.2, 0.3, 0.2);
        let mut di = Vec::new();
        let mut dj = Vec::new();
        for &eps in &JUMP_EPS {
            let cfg = IntegratorConfig::new(eps, self.settings.step, self.settings.order, 0.0);
            let d = invariant_drift(self.model, &cfg, s0, 1.0, 200)?;
            di.push(d.max_delta_i);
            dj.push(d.max_delta_j);
        }
        let le: Vec<f64> = JUMP_EPS.iter().map(|e| e.ln()).collect();
        let fj = fit_line(&le, &dj.iter().map(|v| v.ln()).collect::<Vec<_>>())?;
        let fi = fit_line(&le, &di.iter().map(|v| v.ln()).collect::<Vec<_>>())?;
        let passed = (1.7..=2.3).contains(&fj.slope) && (0.8..=1.2).contains(&fi.slope);
        Ok(Criterion {
            id: 3,
            title: "invariant quality",
            passed,
            summary: format!(
                "slope of max|dJ| = {:.3} (in [1.7, 2.3]), slope of max|dI| = {:.3} (in [0.8, 1.2])",
                fj.slope, fi.slope
            ),
            details: json!({ "epsilon": JUMP_EPS, "max_delta_j": dj, "max_delta_i": di, "fit_j": fit_json(&fj), "fit_i": fit_json(&fi) }),
        })
    }

    /// The jump study, if a criterion has already run it.
    pub fn cached_jumps(&self) -> Option<&JumpScalingReport> {
        self.jumps.get()
    }

    pub fn jump_report(&self) -> Result<&JumpScalingReport> {
        if let Some(r) = self.jumps.get() {
            return Ok(r);
        }
        let r = jump_scaling_study(
            self.model,
            self.table,
            &self.study(),
            &JUMP_EPS,
            self.settings.jump_trials,
        )?;
        Ok(self.jumps.get_or_init(|| r))
    }

    fn jump_formula(&self) -> Result<Criterion> {
        let r = self.jump_report()?;
        let (e, raw) = (r.jump_error_fit.slope, r.raw_jump_fit.slope);
        Ok(Criterion {
            id: 4,
            title: "jump formula",
            passed: e >= 1.4 && (0.9..=1.1).contains(&raw),
            summary: format!("prediction-error slope = {e:.3} (>= 1.4), raw jump slope = {raw:.3} (in [0.9, 1.1])"),
            details: json!({
                "error_fit": fit_json(&r.jump_error_fit),
                "raw_fit": fit_json(&r.raw_jump_fit),
                "median_error": r.summaries.iter().map(|s| s.median_jump_error).collect::<Vec<_>>(),
                "median_raw": r.summaries.iter().map(|s| s.median_raw_jump).collect::<Vec<_>>(),
                "epsilon": JUMP_EPS,
            }),
        })
    }

    fn phase_formula(&self) -> Result<Criterion> {
        let r = self.jump_report()?;
        let med: Vec<f64> = r.summaries.iter().map(|s| s.median_eta1_error).collect();
        let last = *med.last().expect("three epsilons");
        let decreasing = r.eta1_error_fit.slope > 0.0 && med[0] > last;
        Ok(Criterion {
            id: 5,
            title: "phase formula",
            passed: decreasing && last < 0.05,
            summary: format!(
                "median circular eta1 error {:.2e} / {:.2e} / {:.2e} at eps = 1e-2 / 3e-3 / 1e-3 (slope {:.3}); < 0.05 at 1e-3",
                med[0], med[1], med[2], r.eta1_error_fit.slope
            ),
            details: json!({ "median_eta1_error": med, "fit": fit_json(&r.eta1_error_fit), "epsilon": JUMP_EPS }),
        })
    }

    fn capture_rule(&self) -> Result<Criterion> {
        let r = self.jump_report()?;
        let s = r.summaries.last().expect("three epsilons");
        Ok(Criterion {
            id: 6,
            title: "capture rule",
            passed: s.capture_accuracy >= 0.95,
            summary: format!(
                "branch prediction accuracy {:.3} (>= 0.95) over {} of {} trials at eps = 1e-3 away from the boundaries",
                s.capture_accuracy, s.capture_trials, s.trials
            ),
            details: json!({
                "accuracy": r.summaries.iter().map(|s| s.capture_accuracy).collect::<Vec<_>>(),
                "judged": r.summaries.iter().map(|s| s.capture_trials).collect::<Vec<_>>(),
                "epsilon": JUMP_EPS,
            }),
        })
    }

    /// Stable fixed points at `4e-3`, `2e-3` and `1e-3`.
    pub fn census(&self) -> Result<&Vec<Vec<FixedPointSolution>>> {
        if let Some(c) = self.census.get() {
            return Ok(c);
        }
        let c = CENSUS_EPS
            .iter()
            .map(|&e| find_fixed_points(self.table, &self.search(e)).map(|r| r.solutions))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.census.get_or_init(|| c))
    }

    fn census_check(&self) -> Result<Criterion> {
        let n: Vec<usize> = self.census()?.iter().map(Vec::len).collect();
        let r1 = n[1] as f64 / n[0] as f64;
        let r2 = n[2] as f64 / n[1] as f64;
        let ok = |r: f64| (1.6..=2.4).contains(&r);
        Ok(Criterion {
            id: 7,
            title: "fixed-point census",
            passed: ok(r1) && ok(r2),
            summary: format!(
                "N = {} / {} / {} at eps = 4e-3 / 2e-3 / 1e-3, ratios {r1:.3} and {r2:.3} (in [1.6, 2.4])",
                n[0], n[1], n[2]
            ),
            details: json!({ "epsilon": CENSUS_EPS, "counts": n, "ratios": [r1, r2] }),
        })
    }

    fn circuit_config(&self, eps: f64, circuits: usize) -> crate::direct_sim::CircuitConfig {
        let mut cfg = self.study().circuit_config(eps);
        cfg.integrator.t_max = (circuits as f64 + 2.0) * CIRCUIT_SLOW_TIME / eps;
        cfg
    }

    fn check_point(&self, fp: &FixedPointSolution, eps: f64) -> Result<FixedPointCheck> {
        let seeder = self.seeder(eps);
        let cfg = self.circuit_config(eps, 2);
        let seed = shoot_seed(&seeder, &cfg, self.table, fp.i, fp.eta, 1e-6)?;
        let jacobian = empirical_jacobian(
            &seeder, &cfg, self.table, seed.j_hat, seed.theta, 1e-6, 1e-4,
        )?;
        Ok(FixedPointCheck {
            fixed_point: *fp,
            seed,
            jacobian,
        })
    }

    /// The first `want` points, in the given order, whose seed and Jacobian
    /// could be computed, and the number that could not.
    fn check_points(
        &self,
        fps: &[FixedPointSolution],
        want: usize,
        eps: f64,
    ) -> Result<(Vec<FixedPointCheck>, usize)> {
        let mut out = Vec::new();
        let mut skipped = 0;
        for fp in fps {
            if out.len() >= want {
                break;
            }
            match self.check_point(fp, eps) {
                Ok(c) => out.push(c),
                Err(
                    Error::NoConvergence { .. }
                    | Error::DifferentiationFailure(_)
                    | Error::OutOfUnitInterval(_),
                ) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
        Ok((out, skipped))
    }

    /// Stable points at `1e-3`, most robust (`Q` closest to `−2`) first.
    pub fn stable_checks(&self) -> Result<&(Vec<FixedPointCheck>, usize)> {
        if let Some(c) = self.stable.get() {
            return Ok(c);
        }
        let mut fps = self.census()?[2].clone();
        fps.sort_by(|a, b| (a.q + 2.0).abs().total_cmp(&(b.q + 2.0).abs()));
        let c = self.check_points(&fps, 5, EPS)?;
        Ok(self.stable.get_or_init(|| c))
    }

    fn stability(&self) -> Result<Criterion> {
        let (stable, skipped) = self.stable_checks()?;
        let unstable_fps = unstable_fixed_points(self.table, &self.search(EPS), 16, 12)?;
        let (unstable, skipped_u) = self.check_points(&unstable_fps, 3, EPS)?;
        let stable_ok = stable.len() >= 5
            && stable.iter().all(|c| {
                let t = c.jacobian.trace;
                t > -2.0 && t < 2.0 && (t - (2.0 + c.fixed_point.q)).abs() < 0.3
            });
        let unstable_ok =
            unstable.len() >= 3 && unstable.iter().all(|c| c.jacobian.trace.abs() > 2.0);
        let worst = stable
            .iter()
            .map(|c| (c.jacobian.trace - 2.0 - c.fixed_point.q).abs())
            .fold(0.0f64, f64::max);
        let min_unstable = unstable
            .iter()
            .map(|c| c.jacobian.trace.abs())
            .fold(f64::INFINITY, f64::min);
        let row = |c: &FixedPointCheck| json!({ "i": c.fixed_point.i, "eta": c.fixed_point.eta, "q": c.fixed_point.q, "trace": c.jacobian.trace, "det": c.jacobian.det });
        Ok(Criterion {
            id: 8,
            title: "stability cross-check",
            passed: stable_ok && unstable_ok,
            summary: format!(
                "{} stable points: max |trace - (2 + Q)| = {worst:.3} (< 0.3), traces in (-2, 2): {}; {} points with Q outside (-4, 0): min |trace| = {min_unstable:.2} (> 2)",
                stable.len(),
                stable.iter().all(|c| c.jacobian.trace.abs() < 2.0),
                unstable.len()
            ),
            details: json!({
                "stable": stable.iter().map(row).collect::<Vec<_>>(),
                "unstable": unstable.iter().map(row).collect::<Vec<_>>(),
                "skipped": [skipped, skipped_u],
            }),
        })
    }

    /// Island checks; `fixed` replaces the stable points at `1e-3` used for
    /// the persistence runs.
    pub fn islands(&self, fixed: Option<&[FixedPointSolution]>) -> Result<Criterion> {
        let s = self.settings;
        let n = s.island_circuits;
        let bound = 5.0 * EPS;
        let cfg = self.circuit_config(EPS, n);
        let seeds: Vec<(FixedPointSolution, ShotSeed)> = match fixed {
            Some(fps) => {
                let seeder = self.seeder(EPS);
                let mut v = Vec::new();
                for fp in fps {
                    if v.len() >= 3 {
                        break;
                    }
                    match shoot_seed(&seeder, &cfg, self.table, fp.i, fp.eta, 1e-6) {
                        Ok(sh) => v.push((*fp, sh)),
                        Err(Error::NoConvergence { .. }) => {}
                        Err(e) => return Err(e),
                    }
                }
                v
            }
            None => self
                .stable_checks()?
                .0
                .iter()
                .take(3)
                .map(|c| (c.fixed_point, c.seed))
                .collect(),
        };
        let mut persistence = Vec::new();
        for (fp, sh) in &seeds {
            let run = probe_seed(
                self.model, &cfg, self.table, sh.state, None, n, bound, false,
            )?;
            persistence.push((fp.i, fp.q, run.max_delta_i / EPS, run.circuits));
        }
        let persist_ok =
            persistence.len() >= 3 && persistence.iter().all(|p| p.2 < 5.0 && p.3 == n);

        let control = control_ensemble(
            self.model,
            self.table,
            &self.study(),
            &cfg,
            s.control_trials,
            n,
            bound,
        )?;
        let control_ok = 2 * control.exceeded > control.trials.len();

        let scan = IslandScan {
            n_j: 16,
            n_theta: 8,
            half_width_j: 8.0,
            half_width_theta: 0.5,
        };
        let ic = IslandConfig {
            n_circuits: n,
            scan: Some(scan),
            ..IslandConfig::default()
        };
        let mut areas = Vec::new();
        for eps in [AREA_EPS, EPS] {
            let mut fps = if eps == EPS {
                self.census()?[2].clone()
            } else {
                self.census()?[0].clone()
            };
            fps.sort_by(|a, b| (a.q + 2.0).abs().total_cmp(&(b.q + 2.0).abs()));
            let seeder = self.seeder(eps);
            let cfg = self.circuit_config(eps, n);
            let mut report = None;
            for fp in fps.iter().take(4) {
                match island_probe(&seeder, &cfg, self.table, fp, &ic) {
                    Ok(r) => {
                        report = Some(r);
                        break;
                    }
                    Err(Error::NoConvergence { .. } | Error::DifferentiationFailure(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            areas.push(report.ok_or(Error::InsufficientSamples(format!(
                "no island probe succeeded at eps = {eps}"
            )))?);
        }
        let a4 = areas[0].area.unwrap_or(f64::NAN);
        let a1 = areas[1].area.unwrap_or(f64::NAN);
        let ratio = a4 / a1;
        let area_ok = ratio >= 2.0 && ratio <= 8.0;
        let saturated = areas.iter().all(|r| r.island_cells == r.started_inside);
        let worst = persistence.iter().map(|p| p.2).fold(0.0f64, f64::max);
        Ok(Criterion {
            id: 9,
            title: "island persistence",
            passed: persist_ok && control_ok && area_ok,
            summary: format!(
                "{} fixed points: max|dI|/eps = {worst:.2} over {n} circuits (< 5); control: {} of {} trials exceed 5 eps (need a majority); area ratio 4e-3/1e-3 = {ratio:.2} (in [2, 8]){}",
                persistence.len(),
                control.exceeded,
                control.trials.len(),
                if saturated { ", scan saturated: every cell starting within the bound stayed" } else { "" }
            ),
            details: json!({
                "persistence": persistence.iter().map(|p| json!({ "i": p.0, "q": p.1, "max_delta_i_over_eps": p.2, "circuits": p.3 })).collect::<Vec<_>>(),
                "control": control.trials.iter().map(|t| json!({ "j": t.j_hat, "eta": t.eta, "max_delta_i_over_eps": t.run.max_delta_i / EPS })).collect::<Vec<_>>(),
                "control_exceeded": control.exceeded,
                "areas": areas.iter().zip([AREA_EPS, EPS]).map(|(r, eps)| json!({
                    "epsilon": eps,
                    "i": r.fixed_point.i,
                    "q": r.fixed_point.q,
                    "bound": r.bound,
                    "island_cells": r.island_cells,
                    "started_inside": r.started_inside,
                    "scanned": r.scanned,
                    "area_seed": r.area_seed,
                    "area": r.area,
                })).collect::<Vec<_>>(),
                "area_ratio": ratio,
                "saturated": saturated,
            }),
        })
    }

    fn density_check(&self) -> Result<Criterion> {
        let s = self.settings;
        let d = density(self.table, s.xi0.0, s.xi0.1, s.density_samples, s.c1)?;
        let predicted = d.predicted_count(EPS);
        let observed = self.census()?[2].len() as f64;
        let rel = (predicted - observed).abs() / observed;
        Ok(Criterion {
            id: 10,
            title: "density",
            passed: rel < 0.15,
            summary: format!("predicted {predicted:.1} vs observed {observed} stable points at eps = 1e-3, relative difference {rel:.3} (< 0.15)"),
            details: json!({
                "predicted": predicted,
                "observed": observed,
                "integral_simpson": d.integral_simpson,
                "integral_trapezoid": d.integral_trapezoid,
            }),
        })
    }

    fn symplecticity(&self) -> Result<Criterion> {
        let (stable, _) = self.stable_checks()?;
        let worst = stable
            .iter()
            .map(|c| (c.jacobian.det - 1.0).abs())
            .fold(0.0f64, f64::max);
        let worst_section = stable
            .iter()
            .map(|c| (c.jacobian.det_section - 1.0).abs())
            .fold(0.0f64, f64::max);
        Ok(Criterion {
            id: 11,
            title: "symplecticity",
            passed: !stable.is_empty() && worst < 1e-2 && worst_section < 1e-2,
            summary: format!(
                "{} circuit maps at eps = 1e-3: max |det - 1| = {worst:.2e} in (J, eta) and {worst_section:.2e} in (J, section phase) (< 1e-2)",
                stable.len()
            ),
            details: json!({
                "det": stable.iter().map(|c| c.jacobian.det).collect::<Vec<_>>(),
                "det_section": stable.iter().map(|c| c.jacobian.det_section).collect::<Vec<_>>(),
            }),
        })
    }
}
