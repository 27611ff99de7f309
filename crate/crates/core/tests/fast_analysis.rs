mod common;

use proptest::prelude::*;
use sepcross::fast::{self, FastSystem, RegionId};
use sepcross::model::{DoubleWell, FullState, ModelParams};
use std::f64::consts::PI;

fn family() -> DoubleWell {
    DoubleWell::default()
}

#[test]
fn saddle_at_origin_with_expected_energy() {
    let m = family();
    for &(y, x) in &[(0.0, 0.0), (0.7, -1.2), (-1.5, 1.9)] {
        let s = fast::find_saddle(&m, y, x).unwrap();
        assert_eq!(s.q_c, 0.0);
        assert_eq!(s.p_c, 0.0);
        assert!((s.h_s - (0.5 * y * y + 0.5 * x * x)).abs() < 1e-15);
    }
}

#[test]
fn saddle_hessian_and_log_coefficient() {
    let m = family();
    let s = fast::find_saddle(&m, 0.0, 0.0).unwrap();
    assert!((s.g + 1.0).abs() < 1e-15);
    assert!((s.a - 1.0).abs() < 1e-15);
    let s = fast::find_saddle(&m, 0.0, 1.0).unwrap();
    assert!((s.a - 1.4f64.powf(-0.5)).abs() < 1e-15);
}

#[test]
fn not_a_saddle_when_well_structure_lost() {
    let m = family();
    assert!(matches!(
        fast::find_saddle(&m, 0.0, -3.0),
        Err(sepcross::Error::NotASaddle { .. })
    ));
}

#[test]
fn classify_examples() {
    let m = family();
    let s = fast::find_saddle(&m, 0.0, 0.0).unwrap();
    let c = |p: f64, q: f64| fast::classify(&m, &FullState::new(p, q, 0.0, 0.0), &s);
    assert_eq!(c(0.0, 1.0), RegionId::G1);
    assert_eq!(c(0.0, -1.0), RegionId::G2);
    assert_eq!(c(0.0, 2.0 * 2f64.sqrt()), RegionId::G3);
    assert_eq!(c(0.0, 2f64.sqrt()), RegionId::Separatrix);
}

#[test]
fn loop_area_matches_closed_form_at_twenty_points() {
    let m = family();
    for i in 0..20 {
        let x = -2.0 + 4.0 * i as f64 / 19.0;
        let k = 1.0 + 0.4 * x;
        let s1 = fast::loop_area(&m, 0.3, x, RegionId::G1).unwrap();
        let s2 = fast::loop_area(&m, 0.3, x, RegionId::G2).unwrap();
        let s3 = fast::loop_area(&m, 0.3, x, RegionId::G3).unwrap();
        assert!((s1 - common::loop_area(k)).abs() < 1e-9, "x={x}: {s1}");
        assert!((s1 - s2).abs() < 1e-10);
        assert_eq!(s3, s1 + s2);
    }
}

#[test]
fn well_period_matches_elliptic_oracle() {
    let m = family();
    for &x in &[0.0, 1.0, -1.5] {
        let k = 1.0 + 0.4 * x;
        let sys = FastSystem::new(&m, 0.2, x).unwrap();
        for &f in &[0.9, 0.5, 0.1, 1e-3, 1e-6] {
            let e = -f * k * k / 4.0;
            let t = sys.period(e, RegionId::G1).unwrap();
            let t2 = sys.period(e, RegionId::G2).unwrap();
            let oracle = common::well_period(e, k);
            assert!((t - oracle).abs() < 1e-9 * oracle, "E={e}: {t} vs {oracle}");
            assert!((t - t2).abs() < 1e-10 * t);
        }
    }
}

#[test]
fn outer_period_matches_elliptic_oracle() {
    let m = family();
    for &x in &[0.0, 0.8] {
        let k = 1.0 + 0.4 * x;
        let sys = FastSystem::new(&m, 0.0, x).unwrap();
        for &e in &[2.0, 0.3, 1e-3, 1e-7] {
            let t = sys.period(e, RegionId::G3).unwrap();
            let oracle = common::outer_period(e, k);
            assert!((t - oracle).abs() < 1e-9 * oracle, "E={e}: {t} vs {oracle}");
        }
    }
}

#[test]
fn harmonic_limit_of_well() {
    let m = family();
    let x = 0.5;
    let k: f64 = 1.2;
    let sys = FastSystem::new(&m, 0.0, x).unwrap();
    let e_min = -k * k / 4.0;
    let w = (2.0_f64 * k).sqrt();
    let e = e_min + 1e-7;
    let (i, t) = sys.action_period(e, RegionId::G1).unwrap();
    assert!((t - 2.0 * PI / w).abs() < 1e-5);
    assert!((i - (e - e_min) / w).abs() < 1e-11);
}

#[test]
fn outer_action_tends_to_loop_area() {
    let m = family();
    let sys = FastSystem::new(&m, 0.0, 0.0).unwrap();
    let s3 = sys.loop_area(RegionId::G3).unwrap();
    let i = sys.action(1e-12, RegionId::G3).unwrap();
    assert!((i - s3 / (2.0 * PI)).abs() < 1e-9);
    let iw = sys.action(-1e-12, RegionId::G1).unwrap();
    assert!((iw - s3 / (4.0 * PI)).abs() < 1e-9);
}

#[test]
fn action_derivative_equals_period() {
    let m = family();
    let sys = FastSystem::new(&m, 0.4, -0.6).unwrap();
    for (e, r) in [
        (-0.05_f64, RegionId::G1),
        (-0.001, RegionId::G2),
        (0.01, RegionId::G3),
        (0.8, RegionId::G3),
    ] {
        let d = 1e-6 * e.abs();
        let ip = sys.action(e + d, r).unwrap();
        let im = sys.action(e - d, r).unwrap();
        let t = sys.period(e, r).unwrap();
        let fd = 2.0 * PI * (ip - im) / (2.0 * d);
        assert!((fd - t).abs() < 1e-6 * t, "{r:?} E={e}: {fd} vs {t}");
    }
}

#[test]
fn period_expansion_matches_closed_form() {
    let m = family();
    for &x in &[0.0, 1.0, -1.2] {
        let k = 1.0 + 0.4 * x;
        let s = fast::find_saddle(&m, 0.1, x).unwrap();
        let p1 = fast::period_expansion(&m, 0.1, x, RegionId::G1).unwrap();
        let p2 = fast::period_expansion(&m, 0.1, x, RegionId::G2).unwrap();
        let p3 = fast::period_expansion(&m, 0.1, x, RegionId::G3).unwrap();
        assert!(
            (p1.b - common::well_b(k)).abs() < 1e-6,
            "{} vs {}",
            p1.b,
            common::well_b(k)
        );
        assert!((p1.b - p2.b).abs() < 1e-10);
        assert!((p3.b - (p1.b + p2.b)).abs() < 1e-6);
        assert!((p1.a - s.a).abs() < 1e-6, "{} vs {}", p1.a, s.a);
        assert!((p3.a - 2.0 * s.a).abs() < 1e-6);
    }
}

#[test]
fn energy_for_action_inverts_action() {
    let m = family();
    let sys = FastSystem::new(&m, 0.0, 0.3).unwrap();
    let s = sys.loop_area(RegionId::G1).unwrap() / (2.0 * PI);
    for &frac in &[0.05, 0.5, 0.99, 0.999999] {
        let i = frac * s;
        let e = sys.energy_for_action(i, RegionId::G1).unwrap();
        let back = sys.action(e, RegionId::G1).unwrap();
        assert!((back - i).abs() < 1e-13, "{frac}: {back} vs {i}");
    }
    for &frac in &[1.000001, 1.2, 3.0] {
        let i = 2.0 * frac * s;
        let e = sys.energy_for_action(i, RegionId::G3).unwrap();
        assert!((sys.action(e, RegionId::G3).unwrap() - i).abs() < 1e-12);
    }
    assert!(sys.energy_for_action(1.5 * s, RegionId::G1).is_err());
}

#[test]
fn action_rejects_wrong_region() {
    let m = family();
    assert!(fast::action(&m, 0.5, 0.0, 0.0, RegionId::G1).is_err());
    assert!(fast::action(&m, -0.1, 0.0, 0.0, RegionId::G3).is_err());
    assert!(fast::action(&m, -0.3, 0.0, 0.0, RegionId::G1).is_err());
}

#[test]
fn frozen_flow_never_jumps_regions() {
    use sepcross::numerics::ode::Dopri5;
    let m = family();
    let s = fast::find_saddle(&m, 0.0, 0.0).unwrap();
    let start = [1.0, 0.2];
    let mut seen = Vec::new();
    Dopri5::default()
        .solve_observed(
            |_, u| [u[1], u[0] - u[0].powi(3)],
            0.0,
            start,
            40.0,
            |_, u| {
                seen.push(fast::classify(
                    &m,
                    &FullState::new(u[1], u[0], 0.0, 0.0),
                    &s,
                ));
            },
        )
        .unwrap();
    assert!(seen.iter().all(|r| *r == RegionId::G1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn action_scaling_law(x in -1.8f64..2.0, f in 0.02f64..0.98) {
        let m = family();
        let k = 1.0 + 0.4 * x;
        let sys = FastSystem::new(&m, 0.0, x).unwrap();
        let unit = FastSystem::new(&m, 0.0, 0.0).unwrap();
        let e_hat = -f / 4.0;
        let i = sys.action(e_hat * k * k, RegionId::G1).unwrap();
        let i_hat = unit.action(e_hat, RegionId::G1).unwrap();
        prop_assert!((i - k.powf(1.5) * i_hat).abs() < 1e-11);
    }

    #[test]
    fn action_is_monotone_in_energy(x in -1.8f64..2.0, e1 in 0.01f64..0.9, de in 0.001f64..0.05) {
        let m = family();
        let sys = FastSystem::new(&m, 0.0, x).unwrap();
        let k = 1.0 + 0.4 * x;
        let depth = k * k / 4.0;
        let a = -e1 * depth;
        let b = (a + de * depth).min(-1e-9);
        prop_assume!(b > a);
        prop_assert!(sys.action(a, RegionId::G1).unwrap() < sys.action(b, RegionId::G1).unwrap());
        prop_assert!(sys.action(-a, RegionId::G3).unwrap() > sys.action(-b, RegionId::G3).unwrap());
    }

    #[test]
    fn wells_are_congruent(y in -2.0f64..2.0, x in -1.8f64..2.0, f in 0.01f64..0.99) {
        let m = DoubleWell::new(ModelParams::default()).unwrap();
        let sys = FastSystem::new(&m, y, x).unwrap();
        let e = sys.well_depth(RegionId::G1).unwrap() * f;
        let a = sys.action_period(e, RegionId::G1).unwrap();
        let b = sys.action_period(e, RegionId::G2).unwrap();
        prop_assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-10 * a.1);
    }
}
