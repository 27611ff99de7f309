//! Configuration, the four pipeline commands and their file outputs.

pub mod config;
pub mod output;
pub mod verify;

use crate::adiabatic::{d_coefficients_in, theta_of, CoefficientTable};
use crate::fast::{FastSystem, RegionId};
use crate::model::DoubleWell;
use crate::numerics::quad::QuadConfig;
use crate::return_map::{
    density, find_fixed_points, level_curve, EtaWindow, FixedPointSolution, SearchConfig,
    CURVE_SAMPLES,
};
use config::{ConfigError, RunConfig};
use output::{write_atomic, Cell, Csv};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;
use verify::{Criterion, Verifier, VerifySettings};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numerical(#[from] crate::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("{0} acceptance criteria failed")]
    AcceptanceFailed(usize),
}

impl CliError {
    /// Process exit code: 2 configuration or missing input, 3 numerical
    /// failure or I/O, 4 failed acceptance.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::MissingInput(_) => 2,
            CliError::Numerical(_) | CliError::Io { .. } => 3,
            CliError::AcceptanceFailed(_) => 4,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    write_atomic(path, text.as_bytes()).map_err(io_err(path))
}

/// Reads a configuration file.
pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(RunConfig::parse(&text)?)
}

pub fn model_of(cfg: &RunConfig) -> CliResult<DoubleWell> {
    Ok(DoubleWell::new(cfg.model)?)
}

#[derive(Serialize, Deserialize)]
struct CachedTable {
    key: String,
    table: CoefficientTable,
}

fn table_key(cfg: &RunConfig, lo: f64, hi: f64) -> String {
    let m = &cfg.model;
    format!(
        "beta={:e} omega_x={:e} omega_y={:e} k0={:e} branch={} h0={:e} mode={} lo={:e} hi={:e} nodes={}",
        m.beta, m.omega_x, m.omega_y, m.k0, cfg.branch, cfg.h0, cfg.mode, lo, hi, cfg.table_nodes
    )
}

/// Coefficient table over `Ξ₀` widened by the margin, read from
/// `cache_dir/table_nu{branch}.json` when its key matches and built otherwise.
pub fn coefficient_table(
    cfg: &RunConfig,
    model: &DoubleWell,
    cache_dir: &Path,
) -> CliResult<CoefficientTable> {
    let lo = cfg.xi_lo - cfg.table_margin;
    let hi = cfg.xi_hi + cfg.table_margin;
    let key = table_key(cfg, lo, hi);
    let path = cache_dir.join(format!("table_nu{}.json", cfg.branch));
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(c) = serde_json::from_str::<CachedTable>(&text) {
            if c.key == key {
                let t = c.table;
                return Ok(CoefficientTable::from_entries(
                    t.branch, t.h0, t.mode, t.entries,
                )?);
            }
        }
    }
    log::info!(
        "building coefficient table over [{lo}, {hi}] with {} nodes",
        cfg.table_nodes
    );
    let table =
        CoefficientTable::build(model, cfg.branch, cfg.h0, lo, hi, cfg.table_nodes, cfg.mode)?;
    let text = serde_json::to_string(&CachedTable {
        key,
        table: table.clone(),
    })
    .expect("table serializes");
    write(&path, &text)?;
    Ok(table)
}

fn grid(n: usize, half: f64) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n)
        .map(|k| -half + 2.0 * half * k as f64 / (n - 1) as f64)
        .collect()
}

fn region_name(r: RegionId) -> &'static str {
    match r {
        RegionId::G1 => "G1",
        RegionId::G2 => "G2",
        RegionId::G3 => "G3",
        RegionId::Separatrix => "separatrix",
    }
}

/// `fast_grid.csv`: saddle data, loop areas, expansion coefficients and `Θ`
/// over the slow grid; `fast_orbits.csv`: action and period of one orbit per
/// region (half the well depth inside, the same energy above the saddle outside).
pub fn cmd_analyze_fast(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let model = model_of(cfg)?;
    let quad = QuadConfig {
        rel_tol: cfg.quad_tol,
        ..QuadConfig::default()
    };
    let mut g = Csv::new(&[
        "y", "x", "q_c", "h_s", "S1", "S2", "S3", "a", "b1", "b2", "b3", "d1", "d2", "d3", "theta",
    ]);
    let mut o = Csv::new(&["y", "x", "region", "E", "I", "T"]);
    for &y in &grid(cfg.grid_n, cfg.grid_y) {
        for &x in &grid(cfg.grid_n, cfg.grid_x) {
            let sys = FastSystem::new(&model, y, x)?.with_quad(quad);
            let sd = *sys.saddle();
            let s1 = sys.loop_area(RegionId::G1)?;
            let s2 = sys.loop_area(RegionId::G2)?;
            let b: Vec<f64> = [RegionId::G1, RegionId::G2, RegionId::G3]
                .into_iter()
                .map(|r| sys.period_expansion(r).map(|e| e.b))
                .collect::<crate::Result<_>>()?;
            let d = d_coefficients_in(&sys)?;
            let theta = theta_of(&sys)?;
            let mut row = vec![
                Cell::F(y),
                Cell::F(x),
                Cell::F(sd.q_c),
                Cell::F(sd.h_s),
                Cell::F(s1),
                Cell::F(s2),
            ];
            row.extend([s1 + s2, sd.a, b[0], b[1], b[2], d[0], d[1], d[2], theta].map(Cell::F));
            g.row(&row);
            for r in [RegionId::G1, RegionId::G2] {
                let e = 0.5 * sys.well_depth(r)?;
                let (i, t) = sys.action_period(e, r)?;
                o.row(&[
                    Cell::F(y),
                    Cell::F(x),
                    Cell::S(region_name(r).into()),
                    Cell::F(e),
                    Cell::F(i),
                    Cell::F(t),
                ]);
            }
            let e = -0.5 * sys.well_depth(RegionId::G1)?;
            let (i, t) = sys.action_period(e, RegionId::G3)?;
            o.row(&[
                Cell::F(y),
                Cell::F(x),
                Cell::S("G3".into()),
                Cell::F(e),
                Cell::F(i),
                Cell::F(t),
            ]);
        }
    }
    write(&out.join("fast_grid.csv"), &g.into_string())?;
    write(&out.join("fast_orbits.csv"), &o.into_string())
}

fn search_config(cfg: &RunConfig) -> SearchConfig {
    let mut s = SearchConfig::new(cfg.epsilon, cfg.xi_lo, cfg.xi_hi);
    s.c1 = cfg.c1;
    s.newton_tol = cfg.newton_tol;
    s
}

/// `fixed_points.jsonl`: stable solutions in `Ξ₀`; `level_curve.csv`: the
/// level curve at the middle of `Ξ₀`; `sweep.csv`: `Φ/ε` across `Ξ₀`.
pub fn cmd_fixed_points(cfg: &RunConfig, out: &Path) -> CliResult<Vec<FixedPointSolution>> {
    if !(cfg.xi_hi > cfg.xi_lo) {
        return Err(crate::Error::InvalidParams(format!(
            "empty action interval [{}, {}]",
            cfg.xi_lo, cfg.xi_hi
        ))
        .into());
    }
    let model = model_of(cfg)?;
    let table = coefficient_table(cfg, &model, out)?;
    let found = find_fixed_points(&table, &search_config(cfg))?;
    if found.solutions.is_empty() {
        return Err(crate::Error::InsufficientSamples(format!(
            "no stable fixed points in [{}, {}] at eps = {}",
            cfg.xi_lo, cfg.xi_hi, cfg.epsilon
        ))
        .into());
    }
    let mut lines = String::new();
    for s in &found.solutions {
        lines.push_str(&serde_json::to_string(s).expect("solution serializes"));
        lines.push('\n');
    }
    write(&out.join("fixed_points.jsonl"), &lines)?;

    let window = EtaWindow::new(cfg.c1)?;
    let mid = table.eval(0.5 * (cfg.xi_lo + cfg.xi_hi))?;
    let curve = level_curve(&mid.coeffs, window.lo, window.hi, CURVE_SAMPLES)?;
    let mut c = Csv::new(&["root", "eta", "eta1"]);
    for b in &curve.branches {
        let root = format!("{:?}", b.root).to_lowercase();
        for &(eta, eta1) in &b.points {
            c.row(&[Cell::S(root.clone()), Cell::F(eta), Cell::F(eta1)]);
        }
    }
    write(&out.join("level_curve.csv"), &c.into_string())?;

    let mut s = Csv::new(&["I", "phi1_over_eps", "phi2_over_eps"]);
    let n = 201;
    for k in 0..n {
        let i = cfg.xi_lo + (cfg.xi_hi - cfg.xi_lo) * k as f64 / (n - 1) as f64;
        let d = table.eval(i)?;
        let phi = |j: usize| (d.phi0[j] + cfg.epsilon * d.phi_eps[j]) / cfg.epsilon;
        s.row(&[Cell::F(i), Cell::F(phi(0)), Cell::F(phi(1))]);
    }
    write(&out.join("sweep.csv"), &s.into_string())?;
    Ok(found.solutions)
}

/// Reads `fixed_points.jsonl` written by `fixed-points`.
pub fn read_fixed_points(out: &Path) -> CliResult<Vec<FixedPointSolution>> {
    let path = out.join("fixed_points.jsonl");
    let text = std::fs::read_to_string(&path).map_err(|_| {
        CliError::MissingInput(format!("{} (run fixed-points first)", path.display()))
    })?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l)
                .map_err(|e| CliError::MissingInput(format!("{}: {e}", path.display())))
        })
        .collect()
}

/// `density.csv`: `χ`, `ρ = χ/2`, the predicted count per unit `I` (`ρ/ε`)
/// and the observed count of fixed points in the cell around each sample.
pub fn cmd_density(cfg: &RunConfig, out: &Path) -> CliResult<(f64, usize)> {
    let fps = read_fixed_points(out)?;
    let model = model_of(cfg)?;
    let table = coefficient_table(cfg, &model, out)?;
    let d = density(&table, cfg.xi_lo, cfg.xi_hi, cfg.density_samples, cfg.c1)?;
    let h = (cfg.xi_hi - cfg.xi_lo) / (cfg.density_samples - 1) as f64;
    let mut c = Csv::new(&["I", "chi", "rho", "predicted_count_density", "observed"]);
    for s in &d.samples {
        let observed = fps
            .iter()
            .filter(|f| f.i >= s.i - 0.5 * h && f.i < s.i + 0.5 * h)
            .count();
        c.row(&[
            Cell::F(s.i),
            Cell::F(s.chi),
            Cell::F(s.rho),
            Cell::F(s.rho / cfg.epsilon),
            Cell::I(observed as i64),
        ]);
    }
    write(&out.join("density.csv"), &c.into_string())?;
    Ok((d.predicted_count(cfg.epsilon), fps.len()))
}

pub fn verify_settings(cfg: &RunConfig) -> VerifySettings {
    VerifySettings {
        nu: cfg.branch,
        h0: cfg.h0,
        xi0: (cfg.xi_lo, cfg.xi_hi),
        c1: cfg.c1,
        newton_tol: cfg.newton_tol,
        step: cfg.step,
        order: cfg.order,
        jump_trials: cfg.jump_trials,
        island_circuits: cfg.island_circuits,
        density_samples: cfg.density_samples,
        seed: cfg.seed,
        ..VerifySettings::default()
    }
}

/// Runs the configured criteria and writes `verify_report.json` and
/// `jump_cloud.csv` (`ε`, `η⁽⁰⁾`, `ΔĴ` at capture). Island probing reads the
/// stable points from `fixed_points.jsonl`.
pub fn cmd_verify(cfg: &RunConfig, out: &Path) -> CliResult<Vec<Criterion>> {
    let fixed = if cfg.criteria.contains(&9) {
        Some(read_fixed_points(out)?)
    } else {
        None
    };
    let model = model_of(cfg)?;
    let table = coefficient_table(cfg, &model, out)?;
    let v = Verifier::new(&model, &table, verify_settings(cfg))?;
    let mut results = Vec::new();
    for &id in &cfg.criteria {
        let c = match (id, &fixed) {
            (9, Some(fps)) => {
                let mut fps = fps.clone();
                fps.sort_by(|a, b| (a.q + 2.0).abs().total_cmp(&(b.q + 2.0).abs()));
                v.islands(Some(&fps))
                    .unwrap_or_else(|e| Criterion::error(9, "island persistence", &e))
            }
            _ => v.criterion(id),
        };
        log::info!("{}", c.line());
        results.push(c);
    }
    let report = serde_json::json!({
        "epsilon": cfg.epsilon,
        "seed": cfg.seed,
        "criteria": results,
        "all_passed": results.iter().all(|c| c.passed),
    });
    write(
        &out.join("verify_report.json"),
        &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"),
    )?;
    if let Some(j) = v.cached_jumps() {
        let mut c = Csv::new(&["epsilon", "eta0", "delta_j"]);
        for (trials, s) in j.trials.iter().zip(&j.summaries) {
            for t in trials {
                let r = &t.record;
                c.row(&[
                    Cell::F(s.epsilon),
                    Cell::F(r.eta0()),
                    Cell::F(r.jhat1() - r.jhat0()),
                ]);
            }
        }
        write(&out.join("jump_cloud.csv"), &c.into_string())?;
    }
    let failed = results.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::AcceptanceFailed(failed));
    }
    Ok(results)
}
