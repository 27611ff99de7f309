//! Direct simulation of the full slow-fast system: symplectic integration,
//! event detection, measured pseudo-phases, empirical return maps and the
//! studies built on them.

mod circuit;
mod dump;
mod events;
mod integrator;
mod studies;

pub use circuit::{
    empirical_jacobian, empirical_return_map, first_capture, run_circuits, section_phase,
    shoot_seed, CircuitConfig, CircuitRecord, CrossingRecord, CrossingReference, DirectCrossings,
    EmpiricalJacobian, Passage, PassageTracker, SectionRecord, Seeder, ShotSeed,
};
pub use dump::{read_dump, write_dump, write_record, RECORD_BYTES};
pub use events::{
    detect_events, measure_eta, CrossingEvent, EtaKind, EtaMeasurement, EventKind, EventStream,
    Section, SectionPair, AXIS_TOL, TRANSIT_TOL,
};
pub use integrator::{
    integrate, Integrator, IntegratorConfig, SaddleTracker, Trajectory, TrajectoryPoint,
};
pub use studies::*;
