//! Fixtures shared by the benchmarks.

use mnn_core::{
    differentiate, generate_fleet, init_parameters, DifferentialTrajectory, FleetSpec, NetworkParameters, Topology,
};

/// A default 2-6-2 network with small random weights.
pub fn network() -> NetworkParameters {
    init_parameters(&Topology::default(), 7, 0.1).expect("valid topology")
}

/// Differential sequences of a small noisy synthetic fleet.
pub fn fleet(count: usize) -> Vec<DifferentialTrajectory> {
    let spec = FleetSpec {
        count,
        seed: 3,
        duration_s: 30.0,
        ..FleetSpec::default()
    };
    generate_fleet(&spec)
        .expect("valid fleet")
        .database
        .iter()
        .map(|t| differentiate(t).expect("long trajectory"))
        .collect()
}
