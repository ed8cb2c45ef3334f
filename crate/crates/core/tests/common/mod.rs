#![allow(dead_code)]

use eprq_core::netlist::{DipoleKind, JosephsonDipole};
use eprq_core::units::ghz_energy;
use eprq_core::CircuitModel;
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random symmetric positive-definite matrix with entries of order `scale`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    (&a * a.transpose() + DMatrix::identity(n, n) * 0.5) * scale
}

/// A circuit whose first `j` branches are bare junctions: the geometric
/// inductance never shunts a junction, so the junction sum rule is exact.
pub fn random_circuit(rng: &mut ChaCha8Rng, n: usize, j: usize) -> CircuitModel {
    let cap = random_spd(rng, n, 50e-15);
    let mut l_inv = DMatrix::zeros(n, n);
    if n > j {
        let block = random_spd(rng, n - j, 1e8);
        l_inv.view_mut((j, j), (n - j, n - j)).copy_from(&block);
    }
    let junctions = (0..j)
        .map(|k| JosephsonDipole {
            label: format!("J{k}"),
            branch_index: k,
            energy_scale_bare: ghz_energy(rng.gen_range(10.0..40.0)),
            kind: DipoleKind::TunnelJunction,
            bias: None,
        })
        .collect();
    CircuitModel::new(cap, l_inv, junctions, vec![], vec![]).expect("generated circuit is valid")
}

pub fn fixture(name: &str) -> String {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}
