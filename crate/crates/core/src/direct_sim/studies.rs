//! Studies on the exact system: drift of the invariants, scaling of the jump
//! and phase formulas with `ε`, and stability-island probes.

use super::circuit::{
    empirical_jacobian, run_circuits, shoot_seed, CircuitConfig, CircuitRecord, EmpiricalJacobian,
    Seeder, ShotSeed,
};
use super::integrator::{integrate, IntegratorConfig};
use crate::adiabatic::{improved_invariant, CoefficientTable};
use crate::error::{Error, Result};
use crate::model::{FullState, SlowFastModel};
use crate::numerics::stats::{circular_distance, fit_line, median, LineFit};
use crate::return_map::{
    f_minus, f_plus, frac, segments_for, EtaWindow, FixedPointSolution, CURVE_SAMPLES, DEFAULT_C1,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest deviations of `I` and `J` from their initial values along a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantDrift {
    pub epsilon: f64,
    pub max_delta_i: f64,
    pub max_delta_j: f64,
    pub samples: usize,
    /// Smallest `|E|` seen at the samples.
    pub min_energy: f64,
}

/// Samples `I` and `J` at `n` equally spaced times over slow time `slow_time`
/// (fast time `slow_time/ε`). The run must stay in one region.
pub fn invariant_drift<M: SlowFastModel + ?Sized>(
    model: &M,
    cfg: &IntegratorConfig,
    s0: FullState,
    slow_time: f64,
    n: usize,
) -> Result<InvariantDrift> {
    if n < 2 || !(cfg.epsilon > 0.0) {
        return Err(Error::InvalidParams(
            "drift study needs eps > 0 and n >= 2".into(),
        ));
    }
    let t_end = slow_time / cfg.epsilon;
    let mut c = *cfg;
    c.t_max = t_end;
    c.refine = 1;
    let per = (t_end / n as f64 / cfg.step).ceil().max(1.0) as usize;
    c.step = t_end / (n * per) as f64;
    let first = improved_invariant(model, &s0, cfg.epsilon)?;
    let mut out = InvariantDrift {
        epsilon: cfg.epsilon,
        max_delta_i: 0.0,
        max_delta_j: 0.0,
        samples: 1,
        min_energy: f64::INFINITY,
    };
    for (k, pt) in integrate(model, &c, s0)?.enumerate().skip(1) {
        if k % per != 0 {
            continue;
        }
        let v = improved_invariant(model, &pt.state, cfg.epsilon)?;
        if v.region != first.region {
            return Err(Error::NearSeparatrix { energy: pt.energy });
        }
        out.max_delta_i = out.max_delta_i.max((v.i - first.i).abs());
        out.max_delta_j = out.max_delta_j.max((v.j - first.j).abs());
        out.min_energy = out.min_energy.min(pt.energy.abs());
        out.samples += 1;
    }
    Ok(out)
}

/// Settings shared by the `ε` studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub nu: u8,
    pub h0: f64,
    pub sections: super::SectionPair,
    pub xi: (f64, f64),
    /// Seeds draw `Ĵ` uniformly from this interval.
    pub j_range: (f64, f64),
    pub step: f64,
    pub order: u8,
    /// Fast-time horizon in units of `1/ε`.
    pub slow_horizon: f64,
    pub rng_seed: u64,
}

impl StudyConfig {
    pub fn circuit_config(&self, eps: f64) -> CircuitConfig {
        CircuitConfig {
            integrator: IntegratorConfig::new(eps, self.step, self.order, self.slow_horizon / eps),
            nu: self.nu,
            sections: self.sections,
            xi: self.xi,
            lenient_eta: false,
        }
    }
}

/// One circuit compared with the asymptotic formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpTrial {
    pub record: CircuitRecord,
    /// `|ΔĴ − ΔĴ_formula|` at capture and at escape.
    pub jump_error: [f64; 2],
    /// `|ΔĴ|` at capture and at escape.
    pub raw_jump: [f64; 2],
    /// `{η⁽⁰⁾ + ε⁻¹Φ₁(Ĵ⁽¹⁾)}` with `Ĵ⁽¹⁾` from the jump formula.
    pub eta1_predicted: f64,
    /// Circular distance to the measured `η⁽¹⁾`.
    pub eta1_error: f64,
    /// The same with the measured `Ĵ⁽¹⁾`.
    pub eta1_predicted_measured_j: f64,
    pub eta1_error_measured_j: f64,
    /// `{(ε⁻¹Φ₂(Ĵ⁽²⁾) + η⁽¹⁾)/2}`.
    pub capture_value: f64,
    pub same_branch_predicted: bool,
    pub same_branch: bool,
}

fn f_table(table: &CoefficientTable, j: f64, eta: f64, minus: bool) -> Result<f64> {
    let c = table.eval(j)?.coeffs;
    Ok(if minus {
        f_minus(&c, eta)
    } else {
        f_plus(&c, eta)
    })
}

/// Compares one circuit with the jump, phase and capture formulas.
pub fn compare_circuit(table: &CoefficientTable, eps: f64, r: &CircuitRecord) -> Result<JumpTrial> {
    let pred1 = r.jhat0() - eps * f_table(table, r.jhat0(), r.eta0(), true)?;
    let pred2 = r.jhat1() + eps * f_table(table, r.jhat1(), r.eta1(), false)?;
    let phi1 = table.eval(pred1)?.phi(eps)[0];
    let phi1_measured = table.eval(r.jhat1())?.phi(eps)[0];
    let eta1_predicted = frac(r.eta0() + phi1 / eps);
    let eta1_predicted_measured_j = frac(r.eta0() + phi1_measured / eps);
    let capture_value = frac(0.5 * (table.eval(r.jhat2())?.phi(eps)[1] / eps + r.eta1()));
    Ok(JumpTrial {
        record: *r,
        jump_error: [(r.jhat1() - pred1).abs(), (r.jhat2() - pred2).abs()],
        raw_jump: [(r.jhat1() - r.jhat0()).abs(), (r.jhat2() - r.jhat1()).abs()],
        eta1_predicted,
        eta1_error: circular_distance(eta1_predicted, r.eta1(), 1.0),
        eta1_predicted_measured_j,
        eta1_error_measured_j: circular_distance(eta1_predicted_measured_j, r.eta1(), 1.0),
        capture_value,
        same_branch_predicted: capture_value < 0.5,
        same_branch: r.recapture.branch == r.capture.branch,
    })
}

/// Summary at one `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpSummary {
    pub epsilon: f64,
    pub trials: usize,
    /// Median over both jumps of every circuit.
    pub median_jump_error: f64,
    pub median_raw_jump: f64,
    pub median_eta1_error: f64,
    pub median_eta1_error_measured_j: f64,
    /// Fraction of correct branch predictions among trials at least
    /// `capture_margin` away from the boundaries `0`, `½`, `1`.
    pub capture_accuracy: f64,
    pub capture_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpScalingReport {
    pub summaries: Vec<JumpSummary>,
    /// `log median error` against `log ε`.
    pub jump_error_fit: LineFit,
    pub raw_jump_fit: LineFit,
    pub eta1_error_fit: LineFit,
    pub trials: Vec<Vec<JumpTrial>>,
}

/// Distance of a capture value from the branch boundaries.
pub fn capture_margin(v: f64) -> f64 {
    v.min((v - 0.5).abs()).min(1.0 - v)
}

/// `n` single circuits from random seeds on `S₃`, captured into `ν`. Seeds
/// whose measured pseudo-phase falls outside `[0, 1]` (an `O(ε)` effect at
/// the largest `ε`) are redrawn.
pub fn jump_trials<M: SlowFastModel + ?Sized>(
    model: &M,
    table: &CoefficientTable,
    study: &StudyConfig,
    eps: f64,
    n: usize,
) -> Result<Vec<JumpTrial>> {
    let cfg = study.circuit_config(eps);
    let seeder = Seeder::new(model, study.sections.s3, study.h0, eps);
    let mut rng = ChaCha8Rng::seed_from_u64(study.rng_seed);
    let mut out: Vec<JumpTrial> = Vec::with_capacity(n);
    let mut batch = 0;
    while out.len() < n {
        if batch > 8 {
            return Err(Error::InsufficientSamples(format!(
                "only {} of {n} seeds were captured into branch {}",
                out.len(),
                study.nu
            )));
        }
        let want = 2 * (n - out.len());
        let draws: Vec<(f64, f64)> = (0..want)
            .map(|_| {
                (
                    rng.gen_range(study.j_range.0..study.j_range.1),
                    rng.gen::<f64>(),
                )
            })
            .collect();
        let results: Vec<Result<Option<JumpTrial>>> = draws
            .par_iter()
            .map(|&(j, th)| {
                let s = seeder.seed(j, th)?;
                let r = match run_circuits(model, &cfg, table, s, 1, |_| false) {
                    Ok(r) => r[0],
                    Err(Error::OutOfUnitInterval(_) | Error::EscapeFromXi(_)) => return Ok(None),
                    Err(e) => return Err(e),
                };
                if r.capture.branch != study.nu {
                    return Ok(None);
                }
                compare_circuit(table, eps, &r).map(Some)
            })
            .collect();
        for r in results {
            if let Some(t) = r? {
                if out.len() < n {
                    out.push(t);
                }
            }
        }
        batch += 1;
    }
    Ok(out)
}

pub fn summarize(eps: f64, trials: &[JumpTrial], margin: f64) -> JumpSummary {
    let errs: Vec<f64> = trials.iter().flat_map(|t| t.jump_error).collect();
    let raws: Vec<f64> = trials.iter().flat_map(|t| t.raw_jump).collect();
    let eta: Vec<f64> = trials.iter().map(|t| t.eta1_error).collect();
    let eta_m: Vec<f64> = trials.iter().map(|t| t.eta1_error_measured_j).collect();
    let judged: Vec<&JumpTrial> = trials
        .iter()
        .filter(|t| capture_margin(t.capture_value) >= margin)
        .collect();
    let right = judged
        .iter()
        .filter(|t| t.same_branch == t.same_branch_predicted)
        .count();
    JumpSummary {
        epsilon: eps,
        trials: trials.len(),
        median_jump_error: median(&errs),
        median_raw_jump: median(&raws),
        median_eta1_error: median(&eta),
        median_eta1_error_measured_j: median(&eta_m),
        capture_accuracy: if judged.is_empty() {
            f64::NAN
        } else {
            right as f64 / judged.len() as f64
        },
        capture_trials: judged.len(),
    }
}

/// Regression of the jump-formula error, the raw jump and the phase error
/// against `ε` over a list spanning at least one decade.
pub fn jump_scaling_study<M: SlowFastModel + ?Sized>(
    model: &M,
    table: &CoefficientTable,
    study: &StudyConfig,
    eps_list: &[f64],
    n: usize,
) -> Result<JumpScalingReport> {
    let (lo, hi) = eps_list
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &e| (a.min(e), b.max(e)));
    if eps_list.len() < 2 || hi < 10.0 * lo * (1.0 - 1e-9) || n < 3 {
        return Err(Error::InsufficientSamples(format!(
            "need >= 2 values of eps spanning a decade and n >= 3, got {eps_list:?}, n = {n}"
        )));
    }
    let mut summaries = Vec::new();
    let mut trials = Vec::new();
    for &eps in eps_list {
        let t = jump_trials(model, table, study, eps, n)?;
        summaries.push(summarize(eps, &t, 0.02));
        trials.push(t);
    }
    let le: Vec<f64> = summaries.iter().map(|s| s.epsilon.ln()).collect();
    let fit = |f: &dyn Fn(&JumpSummary) -> f64| -> Result<LineFit> {
        let y: Vec<f64> = summaries.iter().map(|s| f(s).ln()).collect();
        fit_line(&le, &y)
    };
    Ok(JumpScalingReport {
        jump_error_fit: fit(&|s| s.median_jump_error)?,
        raw_jump_fit: fit(&|s| s.median_raw_jump)?,
        eta1_error_fit: fit(&|s| s.median_eta1_error)?,
        summaries,
        trials,
    })
}

/// Grid of perturbed seeds around a fixed point, in seed coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IslandScan {
    pub n_j: usize,
    pub n_theta: usize,
    /// Half width in `Ĵ`, in units of `ε`.
    pub half_width_j: f64,
    pub half_width_theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IslandConfig {
    pub n_circuits: usize,
    /// Island criterion `max|ΔÎ| < threshold·ε·Θ-scale`.
    pub threshold: f64,
    pub scan: Option<IslandScan>,
    /// Seed-coordinate steps of the Jacobian.
    pub jacobian_steps: (f64, f64),
}

impl Default for IslandConfig {
    fn default() -> Self {
        Self {
            n_circuits: 50,
            threshold: 3.0,
            scan: None,
            jacobian_steps: (1e-6, 1e-4),
        }
    }
}

/// Outcome of a multi-circuit run from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeRun {
    pub max_delta_i: f64,
    pub circuits: usize,
    pub escaped: bool,
}

/// `max|Î − i_ref|` over the seed and the `S₃` passages of up to `n`
/// circuits (`i_ref = None` measures from the seed itself); stops once it
/// reaches `bound` when `early` is set. Leaving `Ξ` counts as escape.
#[allow(clippy::too_many_arguments)]
pub fn probe_seed<M: SlowFastModel + ?Sized>(
    model: &M,
    cfg: &CircuitConfig,
    table: &CoefficientTable,
    seed: FullState,
    i_ref: Option<f64>,
    n: usize,
    bound: f64,
    early: bool,
) -> Result<ProbeRun> {
    let i0 = improved_invariant(model, &seed, cfg.integrator.epsilon)?.i_hat;
    let i_ref = i_ref.unwrap_or(i0);
    let mut max = (i0 - i_ref).abs();
    if early && max >= bound {
        return Ok(ProbeRun {
            max_delta_i: max,
            circuits: 0,
            escaped: true,
        });
    }
    let cfg = CircuitConfig {
        lenient_eta: true,
        ..*cfg
    };
    let mut done = 0;
    let res = run_circuits(model, &cfg, table, seed, n, |r| {
        done += 1;
        max = max.max((r.end.i_hat - i_ref).abs());
        early && max >= bound
    });
    match res {
        Ok(rs) => Ok(ProbeRun {
            max_delta_i: max,
            circuits: rs.len(),
            escaped: max >= bound,
        }),
        Err(Error::EscapeFromXi(i)) => Ok(ProbeRun {
            max_delta_i: max.max((i - i_ref).abs()),
            circuits: done,
            escaped: true,
        }),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IslandReport {
    pub fixed_point: FixedPointSolution,
    pub seed: ShotSeed,
    pub center: ProbeRun,
    /// Island threshold on `|ΔÎ|`.
    pub bound: f64,
    pub jacobian: Option<EmpiricalJacobian>,
    /// Island cells and scanned cells of the grid.
    pub island_cells: usize,
    pub scanned: usize,
    /// Cells whose seed starts within `bound` of the fixed point; the scan
    /// is saturated when all of them are island cells.
    pub started_inside: usize,
    /// Island area in seed coordinates `(Ĵ_s, θ_s)` and in `(Ĵ, η)`.
    pub area_seed: Option<f64>,
    pub area: Option<f64>,
}

/// Seeds the exact system at the fixed point, follows it for `n_circuits`,
/// and optionally scans a grid of perturbed seeds for the island area.
/// `cfg.integrator.t_max` must cover `n_circuits` circuits.
pub fn island_probe<M: SlowFastModel + ?Sized>(
    seeder: &Seeder<'_, M>,
    cfg: &CircuitConfig,
    table: &CoefficientTable,
    fp: &FixedPointSolution,
    ic: &IslandConfig,
) -> Result<IslandReport> {
    let eps = cfg.integrator.epsilon;
    let model = seeder.model;
    let d = table.eval(fp.i)?;
    let theta_scale = d.coeffs.theta_minus.abs().max(d.coeffs.theta_plus.abs());
    let bound = ic.threshold * eps * theta_scale;
    let seed = shoot_seed(seeder, cfg, table, fp.i, fp.eta, 1e-6)?;
    let i_ref = improved_invariant(model, &seed.state, eps)?.i_hat;
    let center = probe_seed(
        model,
        cfg,
        table,
        seed.state,
        Some(i_ref),
        ic.n_circuits,
        bound,
        false,
    )?;
    let mut report = IslandReport {
        fixed_point: *fp,
        seed,
        center,
        bound,
        jacobian: None,
        island_cells: 0,
        scanned: 0,
        started_inside: 0,
        area_seed: None,
        area: None,
    };
    let Some(scan) = ic.scan else {
        return Ok(report);
    };
    let jac = empirical_jacobian(
        seeder,
        cfg,
        table,
        seed.j_hat,
        seed.theta,
        ic.jacobian_steps.0,
        ic.jacobian_steps.1,
    )?;
    let det_a = (jac.seed_to_map[0][0] * jac.seed_to_map[1][1]
        - jac.seed_to_map[0][1] * jac.seed_to_map[1][0])
        .abs();
    let wj = scan.half_width_j * eps;
    let cell_j = 2.0 * wj / scan.n_j as f64;
    let cell_t = 2.0 * scan.half_width_theta / scan.n_theta as f64;
    let cells: Vec<(f64, f64)> = (0..scan.n_j)
        .flat_map(|a| {
            (0..scan.n_theta).map(move |b| {
                (
                    seed.j_hat - wj + (a as f64 + 0.5) * cell_j,
                    seed.theta - scan.half_width_theta + (b as f64 + 0.5) * cell_t,
                )
            })
        })
        .collect();
    let runs: Vec<Result<Option<(f64, bool)>>> = cells
        .par_iter()
        .map(|&(j, th)| {
            let Ok(s) = seeder.seed(j, th) else {
                return Ok(None);
            };
            let start = (improved_invariant(model, &s, eps)?.i_hat - i_ref).abs();
            let run = probe_seed(
                model,
                cfg,
                table,
                s,
                Some(i_ref),
                ic.n_circuits,
                bound,
                true,
            )?;
            Ok(Some((start, !run.escaped)))
        })
        .collect();
    let (mut inside, mut started_inside) = (0, 0);
    for r in runs {
        if let Some((start, island)) = r? {
            started_inside += usize::from(start < bound);
            inside += usize::from(island);
        }
    }
    let area_seed = inside as f64 * cell_j * cell_t;
    report.jacobian = Some(jac);
    report.island_cells = inside;
    report.scanned = cells.len();
    report.started_inside = started_inside;
    report.area_seed = Some(area_seed);
    report.area = Some(area_seed * det_a);
    Ok(report)
}

/// Middle of the widest gap between stable segments at `Ĵ`, a pseudo-phase
/// in the region `Q > 0` of the level set.
pub fn unstable_eta(table: &CoefficientTable, j_hat: f64, c1: f64) -> Result<f64> {
    let window = EtaWindow::new(c1)?;
    let d = table.eval(j_hat)?;
    let mut segs: Vec<(f64, f64)> = segments_for(&d.coeffs, d.gamma, &window, CURVE_SAMPLES)?
        .iter()
        .map(|s| (s.eta_lo, s.eta_hi))
        .collect();
    segs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best: Option<(f64, f64)> = None;
    let mut reach = f64::NEG_INFINITY;
    for &(lo, hi) in &segs {
        if reach.is_finite() && lo > reach && best.map_or(true, |(w, _)| lo - reach > w) {
            best = Some((lo - reach, 0.5 * (lo + reach)));
        }
        reach = reach.max(hi);
    }
    best.map(|(_, m)| m).ok_or(Error::EmptySegment)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlTrial {
    pub j_hat: f64,
    pub eta: f64,
    pub run: ProbeRun,
}

/// Contrast runs seeded between the stable segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlReport {
    pub bound: f64,
    pub trials: Vec<ControlTrial>,
    /// Trials whose `max|ΔÎ|` reached `bound`.
    pub exceeded: usize,
}

/// `n` seeds with `Ĵ` drawn from `study.j_range` and `η⁽⁰⁾` midway between
/// stable segments, each followed for `n_circuits` circuits from its own `Î`.
pub fn control_ensemble<M: SlowFastModel + ?Sized>(
    model: &M,
    table: &CoefficientTable,
    study: &StudyConfig,
    cfg: &CircuitConfig,
    n: usize,
    n_circuits: usize,
    bound: f64,
) -> Result<ControlReport> {
    let eps = cfg.integrator.epsilon;
    let seeder = Seeder::new(model, study.sections.s3, study.h0, eps);
    let mut rng = ChaCha8Rng::seed_from_u64(study.rng_seed ^ 0x5eed);
    let mut trials = Vec::with_capacity(n);
    let mut attempts = 0;
    while trials.len() < n {
        if attempts >= 4 * n {
            return Err(Error::InsufficientSamples(format!(
                "only {} of {n} control seeds could be placed",
                trials.len()
            )));
        }
        let want = n - trials.len();
        let draws: Vec<f64> = (0..want)
            .map(|_| rng.gen_range(study.j_range.0..study.j_range.1))
            .collect();
        attempts += want;
        let results: Vec<Result<Option<ControlTrial>>> = draws
            .par_iter()
            .map(|&j| {
                let eta = unstable_eta(table, j, DEFAULT_C1)?;
                let seed = match shoot_seed(&seeder, cfg, table, j, eta, 1e-6) {
                    Ok(s) => s,
                    Err(Error::NoConvergence { .. }) => return Ok(None),
                    Err(e) => return Err(e),
                };
                let run = probe_seed(
                    model, cfg, table, seed.state, None, n_circuits, bound, false,
                )?;
                Ok(Some(ControlTrial { j_hat: j, eta, run }))
            })
            .collect();
        for r in results {
            if let Some(t) = r? {
                trials.push(t);
            }
        }
    }
    let exceeded = trials.iter().filter(|t| t.run.max_delta_i >= bound).count();
    Ok(ControlReport {
        bound,
        trials,
        exceeded,
    })
}
