//! Plain-text run configuration: one `key = value` per line, `#` starts a comment.

use crate::adiabatic::Mode;
use crate::model::ModelParams;
use std::fmt::Write as _;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelParams,
    pub epsilon: f64,
    pub h0: f64,
    /// Action interval `Ξ₀ = [xi_lo, xi_hi]`.
    pub xi_lo: f64,
    pub xi_hi: f64,
    pub branch: u8,
    pub mode: Mode,
    /// Relative tolerance of the orbit quadratures in `analyze-fast`.
    pub quad_tol: f64,
    pub newton_tol: f64,
    /// `|p|` target of refined axis crossings.
    pub event_tol: f64,
    /// Window constant `c₁`.
    pub c1: f64,
    pub table_nodes: usize,
    /// Margin added on both sides of `Ξ₀` for the coefficient table.
    pub table_margin: f64,
    pub step: f64,
    pub order: u8,
    /// `analyze-fast` grid: `grid_n × grid_n` points of `|y| ≤ grid_y`, `|x| ≤ grid_x`.
    pub grid_n: usize,
    pub grid_y: f64,
    pub grid_x: f64,
    pub density_samples: usize,
    pub jump_trials: usize,
    pub island_circuits: usize,
    /// Criteria run by `verify`: `all` or a comma-separated list of numbers.
    pub criteria: Vec<u8>,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelParams::default(),
            epsilon: 1e-3,
            h0: 2.0,
            xi_lo: 0.16,
            xi_hi: 0.40,
            branch: 1,
            mode: Mode::Improved,
            quad_tol: 1e-13,
            newton_tol: 1e-12,
            event_tol: 1e-12,
            c1: 20.0,
            table_nodes: 64,
            table_margin: 0.01,
            step: 0.02,
            order: 6,
            grid_n: 9,
            grid_y: 1.5,
            grid_x: 1.5,
            density_samples: 65,
            jump_trials: 100,
            island_circuits: 50,
            criteria: (1..=11).collect(),
            out_dir: PathBuf::from("out"),
            seed: 7,
        }
    }
}

const KEYS: &[&str] = &[
    "beta",
    "omega_x",
    "omega_y",
    "k0",
    "epsilon",
    "h0",
    "xi_lo",
    "xi_hi",
    "branch",
    "mode",
    "quad_tol",
    "newton_tol",
    "event_tol",
    "c1",
    "table_nodes",
    "table_margin",
    "step",
    "order",
    "grid_n",
    "grid_y",
    "grid_x",
    "density_samples",
    "jump_trials",
    "island_circuits",
    "criteria",
    "out_dir",
    "seed",
];

fn parse_criteria(v: &str) -> Result<Vec<u8>, String> {
    if v == "all" {
        return Ok((1..=11).collect());
    }
    let mut out = Vec::new();
    for part in v.split(',') {
        let n: u8 = part
            .trim()
            .parse()
            .map_err(|_| format!("bad criterion '{}'", part.trim()))?;
        if !(1..=11).contains(&n) {
            return Err(format!("criterion {n} is not in 1..=11"));
        }
        if !out.contains(&n) {
            out.push(n);
        }
    }
    out.sort_unstable();
    Ok(out)
}

impl RunConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("cannot parse '{v}'"))
        }
        match key {
            "beta" => self.model.beta = num(value)?,
            "omega_x" => self.model.omega_x = num(value)?,
            "omega_y" => self.model.omega_y = num(value)?,
            "k0" => self.model.k0 = num(value)?,
            "epsilon" => self.epsilon = num(value)?,
            "h0" => self.h0 = num(value)?,
            "xi_lo" => self.xi_lo = num(value)?,
            "xi_hi" => self.xi_hi = num(value)?,
            "branch" => self.branch = num(value)?,
            "mode" => self.mode = value.parse().map_err(|e: crate::Error| e.to_string())?,
            "quad_tol" => self.quad_tol = num(value)?,
            "newton_tol" => self.newton_tol = num(value)?,
            "event_tol" => self.event_tol = num(value)?,
            "c1" => self.c1 = num(value)?,
            "table_nodes" => self.table_nodes = num(value)?,
            "table_margin" => self.table_margin = num(value)?,
            "step" => self.step = num(value)?,
            "order" => self.order = num(value)?,
            "grid_n" => self.grid_n = num(value)?,
            "grid_y" => self.grid_y = num(value)?,
            "grid_x" => self.grid_x = num(value)?,
            "density_samples" => self.density_samples = num(value)?,
            "jump_trials" => self.jump_trials = num(value)?,
            "island_circuits" => self.island_circuits = num(value)?,
            "criteria" => self.criteria = parse_criteria(value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "seed" => self.seed = num(value)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Parses a configuration; keys not given keep their defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen: Vec<&str> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let err = |message: String| ConfigError::Line { line, message };
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| err(format!("expected 'key = value', got '{body}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(err(format!("missing value for '{key}'")));
            }
            if seen.contains(&key) {
                return Err(err(format!("duplicate key '{key}'")));
            }
            cfg.set(key, value).map_err(err)?;
            if let Some(k) = KEYS.iter().find(|k| **k == key) {
                seen.push(k);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        self.model
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(self.epsilon > 0.0 && self.epsilon <= 0.05) {
            return bad(format!(
                "epsilon must be in (0, 0.05], got {}",
                self.epsilon
            ));
        }
        if !(self.xi_lo > 0.0 && self.xi_lo < self.xi_hi) {
            return bad(format!(
                "need 0 < xi_lo < xi_hi, got [{}, {}]",
                self.xi_lo, self.xi_hi
            ));
        }
        if !matches!(self.branch, 1 | 2) {
            return bad(format!("branch must be 1 or 2, got {}", self.branch));
        }
        for (name, v) in [
            ("quad_tol", self.quad_tol),
            ("newton_tol", self.newton_tol),
            ("event_tol", self.event_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.h0.is_finite()) {
            return bad("h0 must be finite".into());
        }
        if !(self.c1 > 2.0) {
            return bad(format!("c1 must exceed 2, got {}", self.c1));
        }
        if self.table_nodes < 4 {
            return bad("table_nodes must be at least 4".into());
        }
        if !(self.table_margin >= 0.0 && self.table_margin < self.xi_lo) {
            return bad(format!(
                "table_margin must be in [0, xi_lo), got {}",
                self.table_margin
            ));
        }
        if !(self.step > 0.0) {
            return bad(format!("step must be positive, got {}", self.step));
        }
        if !matches!(self.order, 2 | 4 | 6) {
            return bad(format!("order must be 2, 4 or 6, got {}", self.order));
        }
        if self.grid_n < 1 || !(self.grid_y >= 0.0) || !(self.grid_x >= 0.0) {
            return bad("grid needs grid_n >= 1 and non-negative half widths".into());
        }
        if self.density_samples < 3 {
            return bad("density_samples must be at least 3".into());
        }
        if self.jump_trials < 3 {
            return bad("jump_trials must be at least 3".into());
        }
        if self.island_circuits < 50 {
            return bad(format!(
                "island_circuits must be at least 50, got {}",
                self.island_circuits
            ));
        }
        Ok(())
    }

    /// Serializes every key in a fixed order; `parse` of the result gives back `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let m = &self.model;
        let criteria = if self.criteria == (1..=11).collect::<Vec<u8>>() {
            "all".to_string()
        } else {
            self.criteria
                .iter()
                .map(u8::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        let values: [String; 27] = [
            m.beta.to_string(),
            m.omega_x.to_string(),
            m.omega_y.to_string(),
            m.k0.to_string(),
            self.epsilon.to_string(),
            self.h0.to_string(),
            self.xi_lo.to_string(),
            self.xi_hi.to_string(),
            self.branch.to_string(),
            self.mode.to_string(),
            self.quad_tol.to_string(),
            self.newton_tol.to_string(),
            self.event_tol.to_string(),
            self.c1.to_string(),
            self.table_nodes.to_string(),
            self.table_margin.to_string(),
            self.step.to_string(),
            self.order.to_string(),
            self.grid_n.to_string(),
            self.grid_y.to_string(),
            self.grid_x.to_string(),
            self.density_samples.to_string(),
            self.jump_trials.to_string(),
            self.island_circuits.to_string(),
            criteria,
            self.out_dir.display().to_string(),
            self.seed.to_string(),
        ];
        for (k, v) in KEYS.iter().zip(values) {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}
