use proptest::prelude::*;
use sepcross::adiabatic::improved_invariant;
use sepcross::direct_sim::*;
use sepcross::fast::{FastSystem, RegionId};
use sepcross::model::{DoubleWell, FullState, SlowFastModel};
use sepcross::Error;

/// The built-in family without its separable split.
struct Opaque(DoubleWell);

impl SlowFastModel for Opaque {
    fn potential(&self, q: f64, y: f64, x: f64) -> f64 {
        self.0.potential(q, y, x)
    }
    fn potential_gradient(&self, q: f64, y: f64, x: f64) -> [f64; 3] {
        self.0.potential_gradient(q, y, x)
    }
    fn potential_hessian(&self, q: f64, y: f64, x: f64) -> [[f64; 3]; 3] {
        self.0.potential_hessian(q, y, x)
    }
    fn potential_difference(&self, q: f64, q_ref: f64, y: f64, x: f64) -> f64 {
        self.0.potential_difference(q, q_ref, y, x)
    }
}

fn well_state() -> FullState {
    FullState::new(0.3, 1.0, 0.3, 0.2)
}

fn outer_state() -> FullState {
    FullState::new(1.5, 0.0, 0.3, 0.2)
}

fn run(m: &DoubleWell, eps: f64, step: f64, order: u8, n: usize, s0: FullState) -> FullState {
    let integ = Integrator::new(m, eps, order).unwrap();
    let mut s = s0;
    for _ in 0..n {
        integ.step(&mut s, step);
    }
    s
}

fn dist(a: &FullState, b: &FullState) -> f64 {
    [a.p - b.p, a.q - b.q, a.y - b.y, a.x - b.x]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

#[test]
fn order_six_conserves_energy_over_slow_unit_times() {
    let m = DoubleWell::default();
    let eps = 0.01;
    let integ = Integrator::new(&m, eps, 6).unwrap();
    assert!(integ.is_splitting());
    for s0 in [well_state(), outer_state()] {
        let h0 = m.energy(&s0);
        let mut s = s0;
        let mut worst = 0.0f64;
        for k in 0..(10.0 / eps / 1e-3) as usize {
            integ.step(&mut s, 1e-3);
            if k % 1000 == 0 {
                worst = worst.max((m.energy(&s) - h0).abs());
            }
        }
        worst = worst.max((m.energy(&s) - h0).abs());
        assert!(worst < 1e-9, "energy error {worst:e}");
    }
}

#[test]
fn order_four_drift_over_a_million_steps() {
    let m = DoubleWell::default();
    let s0 = well_state();
    let s = run(&m, 0.01, 0.01, 4, 1_000_000, s0);
    let drift = (m.energy(&s) - m.energy(&s0)).abs();
    assert!(drift < 1e-8, "drift {drift:e}");
}

#[test]
fn frozen_well_orbit_returns_after_one_period() {
    let m = DoubleWell::default();
    let s0 = well_state();
    let sys = FastSystem::new(&m, s0.y, s0.x).unwrap();
    let e = sys.energy_of(s0.p, s0.q);
    let period = sys.period(e, RegionId::G1).unwrap();
    let n = 4000;
    let s = run(&m, 0.0, period / n as f64, 6, n, s0);
    assert!(dist(&s, &s0) < 1e-8, "{s:?}");
}

#[test]
fn forward_then_backward_returns_to_start() {
    let m = DoubleWell::default();
    let integ = Integrator::new(&m, 0.01, 6).unwrap();
    for s0 in [well_state(), outer_state()] {
        let mut s = s0;
        for _ in 0..20_000 {
            integ.step(&mut s, 0.01);
        }
        for _ in 0..20_000 {
            integ.step(&mut s, -0.01);
        }
        assert!(dist(&s, &s0) < 1e-9, "{s:?}");
    }
}

#[test]
fn implicit_scheme_agrees_with_splitting() {
    let m = DoubleWell::default();
    let opaque = Opaque(m);
    assert!(matches!(
        Integrator::splitting(&opaque, 0.01, 6),
        Err(Error::SeparabilityUnsupported)
    ));
    let fallback = Integrator::new(&opaque, 0.01, 6).unwrap();
    assert!(!fallback.is_splitting());
    let split = Integrator::new(&m, 0.01, 6).unwrap();
    let (mut a, mut b) = (outer_state(), outer_state());
    for _ in 0..500 {
        split.step(&mut a, 0.01);
        fallback.step(&mut b, 0.01);
    }
    assert!(dist(&a, &b) < 1e-9, "{a:?} vs {b:?}");
}

#[test]
fn config_validation() {
    assert!(IntegratorConfig::new(0.01, 0.02, 6, 10.0)
        .validate()
        .is_ok());
    assert!(IntegratorConfig::new(0.06, 0.02, 6, 10.0)
        .validate()
        .is_err());
    assert!(IntegratorConfig::new(0.01, 0.0, 6, 10.0)
        .validate()
        .is_err());
    assert!(IntegratorConfig::new(0.01, 0.02, 3, 10.0)
        .validate()
        .is_err());
    assert!(Integrator::new(&DoubleWell::default(), 0.01, 5).is_err());
}

fn frozen_events(s0: FullState, periods: f64) -> (Vec<CrossingEvent>, f64) {
    let m = DoubleWell::default();
    let sys = FastSystem::new(&m, s0.y, s0.x).unwrap();
    let e = sys.energy_of(s0.p, s0.q);
    let region = if e < 0.0 { RegionId::G1 } else { RegionId::G3 };
    let period = sys.period(e, region).unwrap();
    let cfg = IntegratorConfig::new(0.0, 0.01, 6, periods * period);
    let traj = integrate(&m, &cfg, s0).unwrap();
    let events = detect_events(traj, None)
        .collect::<Result<Vec<_>, _>>()
        .unwrap();
    (events, period)
}

#[test]
fn well_orbit_has_two_axis_crossings_per_period() {
    let (events, _) = frozen_events(well_state(), 10.0);
    let axis: Vec<_> = events
        .iter()
        .filter(|e| e.kind == EventKind::AxisCrossing)
        .collect();
    assert_eq!(axis.len(), 20);
    assert_eq!(axis.iter().filter(|e| e.near_saddle).count(), 10);
    for e in &axis {
        assert!(e.state.p.abs() < 1e-12, "p = {:e}", e.state.p);
        assert_eq!(e.region, RegionId::G1);
    }
    assert!(events.windows(2).all(|w| w[0].time <= w[1].time));
    assert!(events
        .iter()
        .all(|e| e.kind != EventKind::SeparatrixTransit));
}

#[test]
fn outer_orbit_turns_only_at_its_outer_points() {
    let (events, _) = frozen_events(outer_state(), 10.0);
    let axis: Vec<_> = events
        .iter()
        .filter(|e| e.kind == EventKind::AxisCrossing)
        .collect();
    assert_eq!(axis.len(), 20);
    for e in &axis {
        assert!(!e.near_saddle);
        assert!((e.state.q - e.q_c).abs() > 1.0, "q = {}", e.state.q);
        assert_eq!(e.region, RegionId::G3);
        assert!(e.state.p.abs() < 1e-12);
    }
}

#[test]
fn separatrix_transits_are_on_the_separatrix() {
    let m = DoubleWell::default();
    let eps = 0.01;
    let sections = SectionPair::default_for(&m, 1, 2.0).unwrap();
    let seeder = Seeder::new(&m, sections.s3, 2.0, eps);
    let s0 = seeder.seed(0.25, 0.3).unwrap();
    let cfg = IntegratorConfig::new(eps, 0.02, 6, 20.0 / eps);
    let traj = integrate(&m, &cfg, s0).unwrap();
    let transits: Vec<CrossingEvent> = detect_events(traj, None)
        .map(Result::unwrap)
        .filter(|e| e.kind == EventKind::SeparatrixTransit)
        .take(4)
        .collect();
    assert_eq!(transits.len(), 4);
    for t in &transits {
        assert!(t.energy.abs() < 1e-10, "E = {:e}", t.energy);
        assert_eq!(t.region, RegionId::Separatrix);
    }
}

#[test]
fn eta_formula_boundaries() {
    let (eps, theta) = (1e-3, 0.8);
    assert_eq!(
        measure_eta(0.0, theta, eps, EtaKind::Capture).unwrap().eta,
        1.0
    );
    let full = measure_eta(-eps * theta, theta, eps, EtaKind::Capture).unwrap();
    assert!(full.eta.abs() < 1e-15);
    assert_eq!(full.kind, EtaKind::Capture);
    assert_eq!(
        measure_eta(0.0, -theta, eps, EtaKind::Escape).unwrap().eta,
        0.0
    );
    let half = measure_eta(-0.5 * eps * theta, -theta, eps, EtaKind::Escape).unwrap();
    assert!((half.eta - 0.5).abs() < 1e-15);
    assert!(matches!(
        measure_eta(-2.0 * eps * theta, theta, eps, EtaKind::Capture),
        Err(Error::OutOfUnitInterval(_))
    ));
    assert!(matches!(
        measure_eta(-1e-4, 0.0, eps, EtaKind::Capture),
        Err(Error::InvalidParams(_))
    ));
}

proptest! {
    #[test]
    fn capture_and_escape_phases_are_complementary(r in 0.0f64..1.0, theta in 0.1f64..3.0, eps in 1e-4f64..0.05) {
        let h = -r * eps * theta;
        let c = measure_eta(h, theta, eps, EtaKind::Capture).unwrap().eta;
        let e = measure_eta(h, -theta, eps, EtaKind::Escape).unwrap().eta;
        prop_assert!((c + e - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&c));
    }

    #[test]
    fn reversibility_from_random_states(p in -1.0f64..1.0, q in -1.5f64..1.5, y in -0.5f64..0.5, x in -0.5f64..0.5) {
        let m = DoubleWell::default();
        let integ = Integrator::new(&m, 0.02, 6).unwrap();
        let s0 = FullState::new(p, q, y, x);
        let mut s = s0;
        for _ in 0..500 { integ.step(&mut s, 0.02); }
        for _ in 0..500 { integ.step(&mut s, -0.02); }
        prop_assert!(dist(&s, &s0) < 1e-10);
    }
}

#[test]
fn capture_phase_is_uniform_over_seed_phases() {
    let m = DoubleWell::default();
    let eps = 3e-3;
    let sections = SectionPair::default_for(&m, 1, 2.0).unwrap();
    let seeder = Seeder::new(&m, sections.s3, 2.0, eps);
    let reference = DirectCrossings {
        model: &m,
        nu: 1,
        h0: 2.0,
    };
    let cfg = CircuitConfig {
        integrator: IntegratorConfig::new(eps, 0.02, 6, 10.0 / eps),
        nu: 1,
        sections,
        xi: (0.02, 0.5),
        lenient_eta: true,
    };
    let n = 200;
    let mut etas: Vec<f64> = (0..n)
        .map(|k| {
            let theta = (k as f64 + 0.5) / n as f64;
            let j = 0.2 + 0.1 * ((k as f64 * 0.618_034) % 1.0);
            let s = seeder.seed(j, theta).unwrap();
            first_capture(&m, &cfg, &reference, s)
                .unwrap()
                .eta
                .eta
                .clamp(0.0, 1.0)
        })
        .collect();
    etas.sort_by(f64::total_cmp);
    let ks = etas
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            (v - i as f64 / n as f64)
                .abs()
                .max(((i + 1) as f64 / n as f64 - v).abs())
        })
        .fold(0.0f64, f64::max);
    assert!(ks < 0.12, "KS distance {ks}");
}

#[test]
fn one_circuit_at_moderate_epsilon() {
    let m = DoubleWell::default();
    let eps = 1e-2;
    let sections = SectionPair::default_for(&m, 1, 2.0).unwrap();
    let seeder = Seeder::new(&m, sections.s3, 2.0, eps);
    let reference = DirectCrossings {
        model: &m,
        nu: 1,
        h0: 2.0,
    };
    let cfg = CircuitConfig {
        integrator: IntegratorConfig::new(eps, 0.02, 6, 40.0 / eps),
        nu: 1,
        sections,
        xi: (0.02, 0.5),
        lenient_eta: false,
    };
    let s = seeder.seed(0.25, 0.4).unwrap();
    let r = empirical_return_map(&m, &cfg, &reference, s).unwrap();
    let times = [
        r.start.t,
        r.capture.t,
        r.middle.t,
        r.escape.t,
        r.end.t,
        r.recapture.t,
    ];
    assert!(times.windows(2).all(|w| w[0] < w[1]), "{times:?}");
    assert!(r.energy_error < 1e-9, "{:e}", r.energy_error);
    assert!((r.jhat0() - 0.25).abs() < 1e-12);
    assert!((r.jhat2() - r.jhat0()).abs() < 10.0 * eps);
    assert!([1, 2].contains(&r.capture.branch));
    for eta in [r.eta0(), r.eta1(), r.eta2()] {
        assert!((0.0..=1.0).contains(&eta));
    }
}

#[test]
fn dump_round_trip_and_layout() {
    let m = DoubleWell::default();
    let cfg = IntegratorConfig::new(0.01, 0.02, 6, 2.0);
    let points: Vec<(f64, FullState)> = integrate(&m, &cfg, well_state())
        .unwrap()
        .map(|p| (p.t, p.state))
        .collect();
    let mut buf = Vec::new();
    assert_eq!(
        write_dump(&mut buf, points.iter().copied()).unwrap(),
        points.len()
    );
    assert_eq!(buf.len(), RECORD_BYTES * points.len());
    assert_eq!(&buf[8..16], &0.3f64.to_le_bytes());
    assert_eq!(&buf[16..24], &1.0f64.to_le_bytes());
    let back = read_dump(&mut buf.as_slice()).unwrap();
    assert_eq!(back, points);
    buf.pop();
    let err = read_dump(&mut buf.as_slice()).unwrap_err();
    assert_eq!(err.kind(), std::io::ErrorKind::UnexpectedEof);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("orbit.bin");
    let mut f = std::fs::File::create(&path).unwrap();
    write_dump(&mut f, points.iter().copied()).unwrap();
    drop(f);
    let mut f = std::fs::File::open(&path).unwrap();
    assert_eq!(read_dump(&mut f).unwrap(), points);
}

#[test]
fn identical_runs_give_identical_event_streams() {
    let m = DoubleWell::default();
    let sections = SectionPair::default_for(&m, 1, 2.0).unwrap();
    let cfg = IntegratorConfig::new(0.01, 0.02, 6, 300.0);
    let collect = || -> Vec<(u64, [u64; 4], EventKind)> {
        detect_events(integrate(&m, &cfg, outer_state()).unwrap(), Some(sections))
            .map(|e| {
                let e = e.unwrap();
                let s = e.state;
                (
                    e.time.to_bits(),
                    [s.p.to_bits(), s.q.to_bits(), s.y.to_bits(), s.x.to_bits()],
                    e.kind,
                )
            })
            .collect()
    };
    let a = collect();
    assert!(!a.is_empty());
    assert_eq!(a, collect());
}

#[test]
fn frozen_action_is_constant_along_the_orbit() {
    let m = DoubleWell::default();
    let s0 = well_state();
    let sys = FastSystem::new(&m, s0.y, s0.x).unwrap();
    let i0 = sys.action(sys.energy_of(s0.p, s0.q), RegionId::G1).unwrap();
    let cfg = IntegratorConfig::new(0.0, 0.01, 6, 30.0);
    for (k, pt) in integrate(&m, &cfg, s0).unwrap().enumerate() {
        if k % 300 != 0 {
            continue;
        }
        let s = pt.state;
        let i = sys.action(sys.energy_of(s.p, s.q), RegionId::G1).unwrap();
        assert!((i - i0).abs() < 1e-9, "{i} vs {i0}");
    }
}

#[test]
fn seeds_lie_on_the_outer_section_with_the_requested_invariant() {
    let m = DoubleWell::default();
    let eps = 1e-3;
    let sections = SectionPair::default_for(&m, 1, 2.0).unwrap();
    let seeder = Seeder::new(&m, sections.s3, 2.0, eps);
    for &(j, th) in &[(0.17, 0.1), (0.25, 0.5), (0.38, 0.9)] {
        let s = seeder.seed(j, th).unwrap();
        let inv = improved_invariant(&m, &s, eps).unwrap();
        assert_eq!(inv.region, RegionId::G3);
        assert!((inv.j_hat - j).abs() < 1e-12, "{} vs {j}", inv.j_hat);
        assert!((m.energy(&s) - 2.0).abs() < 1e-10);
        assert!(sections.s3.side(s.y, s.x).abs() < 1e-12);
        let along = sections.s3.along(s.y, s.x);
        assert!(along > 0.0 && along < sections.s3.length);
    }
}

#[test]
fn invariant_drift_is_small_away_from_the_separatrix() {
    let m = DoubleWell::default();
    let cfg = IntegratorConfig::new(1e-2, 0.02, 6, 0.0);
    let d = invariant_drift(&m, &cfg, well_state(), 1.0, 50).unwrap();
    assert!(d.max_delta_j < 1e-3, "{d:?}");
    assert!(d.max_delta_i < 0.05, "{d:?}");
}
