use proptest::prelude::*;
use sepcross::cli::config::{ConfigError, RunConfig};
use sepcross::cli::{self, CliError};
use sepcross::return_map::FixedPointSolution;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;

const BIN: &str = env!("CARGO_BIN_EXE_sepcross");

fn tmp(name: &str) -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR"))
        .join("cli")
        .join(name);
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

/// Narrow action interval and a coarse table keep the search tests fast.
fn search_config(eps: f64) -> RunConfig {
    RunConfig {
        epsilon: eps,
        xi_lo: 0.2,
        xi_hi: 0.3,
        table_nodes: 24,
        ..RunConfig::default()
    }
}

/// Directory holding a cached table for `search_config`; built once.
fn table_dir() -> &'static Path {
    static DIR: OnceLock<PathBuf> = OnceLock::new();
    DIR.get_or_init(|| {
        let d = tmp("table");
        let cfg = search_config(1e-3);
        cli::coefficient_table(&cfg, &cli::model_of(&cfg).unwrap(), &d).unwrap();
        d
    })
}

fn with_table(name: &str) -> PathBuf {
    let d = tmp(name);
    std::fs::copy(table_dir().join("table_nu1.json"), d.join("table_nu1.json")).unwrap();
    d
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let (h, rows) = read_csv(path);
    let k = h.iter().position(|c| c == name).unwrap();
    rows.into_iter().map(|r| r[k].clone()).collect()
}

#[test]
fn defaults_parse_from_empty_text() {
    assert_eq!(
        RunConfig::parse("# nothing\n\n").unwrap(),
        RunConfig::default()
    );
}

#[test]
fn config_round_trip_of_defaults() {
    let c = RunConfig::default();
    assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
}

#[test]
fn config_errors_carry_line_numbers() {
    let cases = [
        ("epsilon = 1e-3\nbogus = 1\n", 2),
        ("# c\n\nepsilon = 1e-3\nepsilon = 2e-3\n", 4),
        ("beta = x\n", 1),
        ("h0 =\n", 1),
        ("\n\n\njust text\n", 4),
        ("criteria = 1,12\n", 1),
    ];
    for (text, line) in cases {
        match RunConfig::parse(text) {
            Err(ConfigError::Line { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
}

#[test]
fn config_rejects_invalid_values() {
    for text in [
        "epsilon = 0\n",
        "epsilon = -1e-3\n",
        "xi_lo = 0.3\nxi_hi = 0.3\n",
        "newton_tol = 0\n",
        "quad_tol = -1\n",
        "branch = 3\n",
        "order = 5\n",
        "island_circuits = 10\n",
    ] {
        assert!(
            matches!(RunConfig::parse(text), Err(ConfigError::Invalid(_))),
            "{text:?}"
        );
    }
}

#[test]
fn comments_and_order_do_not_matter() {
    let a = RunConfig::parse("epsilon = 2e-3 # coarse\nseed = 11\nmode = adiabatic\n").unwrap();
    let b = RunConfig::parse("mode = adiabatic\n# header\nseed = 11\nepsilon = 0.002\n").unwrap();
    assert_eq!(a, b);
    assert_eq!(a.criteria, (1..=11).collect::<Vec<u8>>());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn config_round_trip(
        beta in -0.5f64..0.5,
        eps in 1e-5f64..0.05,
        lo in 0.05f64..0.3,
        width in 1e-3f64..0.3,
        h0 in -3.0f64..3.0,
        seed in any::<u64>(),
        crit in proptest::collection::btree_set(1u8..=11, 1..11),
        adiabatic in any::<bool>(),
    ) {
        let c = RunConfig {
            model: sepcross::model::ModelParams { beta, ..Default::default() },
            epsilon: eps,
            xi_lo: lo,
            xi_hi: lo + width,
            h0,
            seed,
            criteria: crit.into_iter().collect(),
            mode: if adiabatic { sepcross::adiabatic::Mode::Adiabatic } else { sepcross::adiabatic::Mode::Improved },
            table_margin: 0.5 * lo,
            ..RunConfig::default()
        };
        prop_assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }
}

fn small_grid() -> RunConfig {
    RunConfig {
        grid_n: 4,
        ..RunConfig::default()
    }
}

#[test]
fn analyze_fast_symmetry_and_determinism() {
    let d = tmp("fast");
    let cfg = small_grid();
    cli::cmd_analyze_fast(&cfg, &d).unwrap();
    let grid = d.join("fast_grid.csv");
    let (h, rows) = read_csv(&grid);
    assert_eq!(h.len(), 15);
    assert_eq!(rows.len(), 16);
    assert_eq!(column(&grid, "S1"), column(&grid, "S2"));
    let first = std::fs::read(&grid).unwrap();
    let orbits = std::fs::read(d.join("fast_orbits.csv")).unwrap();
    cli::cmd_analyze_fast(&cfg, &d).unwrap();
    assert_eq!(std::fs::read(&grid).unwrap(), first);
    assert_eq!(std::fs::read(d.join("fast_orbits.csv")).unwrap(), orbits);
}

#[test]
fn analyze_fast_zero_coupling_gives_zero_theta() {
    let d = tmp("fast_beta0");
    let mut cfg = small_grid();
    cfg.model.beta = 0.0;
    cli::cmd_analyze_fast(&cfg, &d).unwrap();
    for v in column(&d.join("fast_grid.csv"), "theta") {
        assert_eq!(v.parse::<f64>().unwrap(), 0.0, "{v}");
    }
}

#[test]
fn floats_have_seventeen_significant_digits() {
    let d = tmp("digits");
    cli::cmd_analyze_fast(&small_grid(), &d).unwrap();
    for v in column(&d.join("fast_grid.csv"), "a") {
        let mantissa = v.split('e').next().unwrap().replace(['-', '.'], "");
        assert_eq!(mantissa.len(), 17, "{v}");
        assert_eq!(
            v.parse::<f64>()
                .unwrap()
                .to_string()
                .parse::<f64>()
                .unwrap(),
            v.parse::<f64>().unwrap()
        );
    }
}

fn fixed_points(name: &str, eps: f64) -> (PathBuf, Vec<FixedPointSolution>) {
    let d = with_table(name);
    let fps = cli::cmd_fixed_points(&search_config(eps), &d).unwrap();
    (d, fps)
}

#[test]
fn fixed_points_are_stable_and_scale_with_inverse_epsilon() {
    let (d1, fine) = fixed_points("fp_fine", 1e-3);
    let (_, coarse) = fixed_points("fp_coarse", 2e-3);
    let ratio = fine.len() as f64 / coarse.len() as f64;
    assert!(
        (1.6..=2.4).contains(&ratio),
        "{} / {}",
        fine.len(),
        coarse.len()
    );
    let read = cli::read_fixed_points(&d1).unwrap();
    assert_eq!(read, fine);
    for s in &read {
        assert!(s.q > -4.0 && s.q < 0.0 && s.stable, "{s:?}");
        assert!(s.i >= 0.2 && s.i <= 0.3);
    }
    for f in ["level_curve.csv", "sweep.csv"] {
        assert!(read_csv(&d1.join(f)).1.len() > 10, "{f}");
    }
}

#[test]
fn fixed_points_rerun_is_byte_identical() {
    let (d, _) = fixed_points("fp_rerun", 2e-3);
    let first = std::fs::read(d.join("fixed_points.jsonl")).unwrap();
    cli::cmd_fixed_points(&search_config(2e-3), &d).unwrap();
    assert_eq!(std::fs::read(d.join("fixed_points.jsonl")).unwrap(), first);
}

#[test]
fn empty_action_interval_is_an_error() {
    let d = with_table("fp_empty");
    let mut cfg = search_config(1e-3);
    cfg.xi_hi = cfg.xi_lo;
    let e = cli::cmd_fixed_points(&cfg, &d).unwrap_err();
    assert!(matches!(e, CliError::Numerical(_)), "{e:?}");
    assert!(!d.join("fixed_points.jsonl").exists());
}

#[test]
fn density_table_is_consistent() {
    let (d, fps) = fixed_points("density", 1e-3);
    let (predicted, observed) = cli::cmd_density(&search_config(1e-3), &d).unwrap();
    assert_eq!(observed, fps.len());
    assert!(
        (predicted - observed as f64).abs() < 0.15 * observed as f64,
        "{predicted} vs {observed}"
    );
    let path = d.join("density.csv");
    let i: Vec<f64> = column(&path, "I")
        .iter()
        .map(|v| v.parse().unwrap())
        .collect();
    let chi: Vec<f64> = column(&path, "chi")
        .iter()
        .map(|v| v.parse().unwrap())
        .collect();
    assert!(chi.iter().all(|&c| c >= 0.0));
    let h = i[1] - i[0];
    let n = chi.len() - 1;
    let trap = h * (chi.iter().sum::<f64>() - 0.5 * (chi[0] + chi[n]));
    let simpson = h / 3.0
        * (chi[0]
            + chi[n]
            + (1..n)
                .map(|k| {
                    if k % 2 == 1 {
                        4.0 * chi[k]
                    } else {
                        2.0 * chi[k]
                    }
                })
                .sum::<f64>());
    assert!(
        (trap - simpson).abs() < 0.01 * simpson,
        "{trap} vs {simpson}"
    );
    let binned: i64 = column(&path, "observed")
        .iter()
        .map(|v| v.parse::<i64>().unwrap())
        .sum();
    assert_eq!(binned as usize, fps.len());
}

#[test]
fn density_needs_fixed_points() {
    let d = with_table("density_missing");
    let e = cli::cmd_density(&search_config(1e-3), &d).unwrap_err();
    assert!(matches!(e, CliError::MissingInput(_)));
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn verify_writes_report_for_closed_form_checks() {
    let d = with_table("verify");
    let cfg = RunConfig {
        criteria: vec![1, 2],
        ..search_config(1e-3)
    };
    let r = cli::cmd_verify(&cfg, &d).unwrap();
    assert_eq!(r.len(), 2);
    assert!(r.iter().all(|c| c.passed));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("verify_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["all_passed"], true);
    assert_eq!(report["criteria"].as_array().unwrap().len(), 2);
}

#[test]
fn verify_island_check_needs_fixed_points() {
    let d = with_table("verify_missing");
    let cfg = RunConfig {
        criteria: vec![9],
        ..search_config(1e-3)
    };
    assert!(matches!(
        cli::cmd_verify(&cfg, &d),
        Err(CliError::MissingInput(_))
    ));
}

fn run(args: &[&str]) -> (i32, String) {
    let o = Command::new(BIN)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    (
        o.status.code().unwrap(),
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )
}

#[test]
fn exit_codes() {
    let d = tmp("exit");
    let good = d.join("good.cfg");
    std::fs::write(&good, "grid_n = 2\ncriteria = 1\n").unwrap();
    let bad = d.join("bad.cfg");
    std::fs::write(&bad, "grid_n = 2\nnonsense = 1\n").unwrap();
    let out = d.join("out");
    let out = out.to_str().unwrap();

    assert_eq!(
        run(&[
            "analyze-fast",
            "--config",
            good.to_str().unwrap(),
            "--out",
            out
        ])
        .0,
        0
    );
    assert!(Path::new(out).join("fast_grid.csv").exists());

    let (code, err) = run(&[
        "analyze-fast",
        "--config",
        bad.to_str().unwrap(),
        "--out",
        out,
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("line 2"), "{err}");

    assert_eq!(
        run(&[
            "analyze-fast",
            "--config",
            good.to_str().unwrap(),
            "--epsilon",
            "-1"
        ])
        .0,
        2
    );
    assert_eq!(run(&["analyze-fast", "--out", out]).0, 2);
    assert_eq!(
        run(&["density", "--config", good.to_str().unwrap(), "--out", out]).0,
        2
    );

    // Zero stiffness at x = -2.5: the frozen system has no figure eight.
    let numeric = d.join("numeric.cfg");
    std::fs::write(&numeric, "grid_n = 3\ngrid_x = 2.5\n").unwrap();
    assert_eq!(
        run(&[
            "analyze-fast",
            "--config",
            numeric.to_str().unwrap(),
            "--out",
            out
        ])
        .0,
        3
    );
}
