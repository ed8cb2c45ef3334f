//! Every shipped fixture parses, round-trips and runs through the pipeline.

mod common;

use eprq_core::equilibrium::BiasClass;
use eprq_core::loss::{budget, ModeSource};
use eprq_core::netlist::{serialize_eigenmode_data, serialize_netlist};
use eprq_core::units::{to_ghz, PHI0};
use eprq_core::{
    eigensolve, epr_from_eigenmode_data, epr_from_modes, operating_point, parse_eigenmode_data, parse_netlist,
};

const NETLISTS: &[&str] = &[
    "transmon_cavity.toml",
    "lc.toml",
    "linear.toml",
    "two_transmon.toml",
    "frustrated.toml",
    "ingested_device.toml",
];

#[test]
fn netlists_round_trip() {
    for name in NETLISTS {
        let m = parse_netlist(&common::fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        let again = parse_netlist(&serialize_netlist(&m)).unwrap();
        assert_eq!(m, again, "{name}");
        // serializing is idempotent once units are normalized
        assert_eq!(serialize_netlist(&m), serialize_netlist(&again));
    }
}

#[test]
fn eigenmode_data_round_trips() {
    let d = parse_eigenmode_data(&common::fixture("ingested_device_modes.toml")).unwrap();
    assert_eq!(parse_eigenmode_data(&serialize_eigenmode_data(&d)).unwrap(), d);
}

#[test]
fn lc_resonator_quality() {
    let c = parse_netlist(&common::fixture("lc.toml")).unwrap();
    let op = operating_point(&c).unwrap();
    let basis = eigensolve(&c, &op).unwrap();
    assert!((to_ghz(basis.omega[0]) - 5.0329).abs() < 1e-4);
    let b = budget(&c, ModeSource::Algebraic { basis: &basis, data: None }).unwrap();
    let q = b.modes[0].q_total;
    assert!((q - basis.omega[0] * 10e-9 / 0.1).abs() <= 1e-9 * q);
}

#[test]
fn frustrated_loop_solves_kepler() {
    let c = parse_netlist(&common::fixture("frustrated.toml")).unwrap();
    let op = operating_point(&c).unwrap();
    let d = &op.dipoles[0];
    assert_eq!(d.bias_class, BiasClass::DcLoopSimple);
    let beta = d.energy_bare * 0.4e-9 / (PHI0 * PHI0);
    let x_ext = 0.2 * std::f64::consts::TAU;
    assert!((d.phi_eq + beta * d.phi_eq.sin() - x_ext).abs() < 1e-12);
    assert!(d.coefficient(3).unwrap() != 0.0);
    assert!(eigensolve(&c, &op).is_ok());
}

#[test]
fn ingested_device_pipeline() {
    let c = parse_netlist(&common::fixture("ingested_device.toml")).unwrap();
    let data = parse_eigenmode_data(&common::fixture("ingested_device_modes.toml")).unwrap();
    let op = operating_point(&c).unwrap();
    let t = epr_from_eigenmode_data(&data, &op.dipoles).unwrap();
    assert!((t.p[(0, 0)] - 0.9).abs() < 1e-12 && (t.p[(1, 0)] - 0.1).abs() < 1e-12);
    assert!(!t.complete);
    assert!(t.phi_zpf[(1, 0)] < 0.0);
    let b = budget(&c, ModeSource::Ingested(&data)).unwrap();
    assert!((b.modes[1].ports[0].quality - 1e5).abs() < 2e2, "{}", b.modes[1].ports[0].quality);
    assert!((b.modes[0].q_cap - 1e6 / 0.93).abs() < 1e-3);
}

#[test]
fn two_transmon_symmetric_modes() {
    let c = parse_netlist(&common::fixture("two_transmon.toml")).unwrap();
    let op = operating_point(&c).unwrap();
    let t = epr_from_modes(&op.dipoles, &eigensolve(&c, &op).unwrap());
    for m in 0..2 {
        assert!((t.p[(m, 0)] - 0.5).abs() < 1e-10 && (t.p[(m, 1)] - 0.5).abs() < 1e-10);
    }
    assert!(t.s[(0, 0)] * t.s[(0, 1)] < 0.0);
}
