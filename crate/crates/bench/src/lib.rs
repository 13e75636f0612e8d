//! Shared fixtures for the criterion benches.

use superlum_core::{
    ApparatusGeometry, CyclePlan, CycleSchedule, Device, Distinguishability, GeometrySpec,
    PhysicsHypothesis, WaitingRule,
};

pub fn bench_geometry() -> ApparatusGeometry {
    ApparatusGeometry::new(GeometrySpec {
        pump_arm: 0.1,
        raise_time: 0.001,
        ..GeometrySpec::default()
    })
    .expect("bench geometry is valid")
}

pub fn null_device() -> Device {
    Device::new(bench_geometry(), PhysicsHypothesis::null(100.0).unwrap()).unwrap()
}

pub fn signaling_device() -> Device {
    let hypothesis =
        PhysicsHypothesis::signaling(2.0, 10.0, 1000.0, Distinguishability::Identity).unwrap();
    Device::new(bench_geometry(), hypothesis).unwrap()
}

pub fn bench_plan() -> CyclePlan {
    CyclePlan::new(0.010, 0.090).unwrap()
}

pub fn bench_schedule(cycles_per_level: usize) -> CycleSchedule {
    CycleSchedule::new(
        0.010,
        vec![0.09],
        cycles_per_level,
        WaitingRule::Fixed(0.0),
        vec![0.5, 1.0, 2.0],
    )
    .unwrap()
}
