//! Fock-space diagonalization as an independent check of the analytic
//! parameters.

use eprq_core::epr::Provenance;
use eprq_core::fock::{converge, solve, FockInputs, Potential, DEFAULT_BUDGET};
use eprq_core::hamiltonian::kerr_matrix_p4;
use eprq_core::units::{ghz, ghz_energy};
use eprq_core::{EffectiveDipole, EprTable};
use nalgebra::DMatrix;

fn two_junction_phi() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.25, 0.12, 0.08, 0.21])
}

#[test]
fn relative_junction_sign_is_physical() {
    let w = [ghz(5.0), ghz(6.3)];
    let d = [
        EffectiveDipole::frustrated_tunnel(ghz_energy(30.0), 0.4, 0),
        EffectiveDipole::frustrated_tunnel(ghz_energy(25.0), 0.3, 1),
    ];
    let phi = two_junction_phi();
    let mut flipped = phi.clone();
    flipped[(0, 1)] *= -1.0;
    let levels = |p: &DMatrix<f64>| {
        let inputs = FockInputs { omega: &w, phi_zpf: p, dipoles: &d, potential: Potential::FullCosine };
        solve(&inputs, &[10, 10], DEFAULT_BUDGET).unwrap().eigenvalues
    };
    let (a, b) = (levels(&phi), levels(&flipped));
    let worst = a.iter().zip(&b).skip(1).take(6).map(|(x, y)| (x - y).abs() / x.abs()).fold(0.0, f64::max);
    assert!(worst > 1e-6, "{worst:e}");

    // flipping a whole mode is a gauge choice
    let mut gauge = phi.clone();
    gauge.row_mut(0).neg_mut();
    let c = levels(&gauge);
    for (x, y) in a.iter().zip(&c).skip(1) {
        assert!((x - y).abs() <= 1e-12 * x.abs());
    }
}

#[test]
fn analytic_kerr_approaches_oracle_for_weak_nonlinearity() {
    // E_J large enough that φ_tot ≈ 0.05
    let w = vec![ghz(5.0), ghz(7.0)];
    let d = vec![EffectiveDipole::tunnel(ghz_energy(900.0), 0)];
    let p = DMatrix::from_row_slice(2, 1, &[0.9, 0.1]);
    let s = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
    let t = EprTable::from_participations(p, s, &w, &[d[0].energy], Provenance::Algebraic, true);
    let analytic = kerr_matrix_p4(&t, &w, &d).unwrap();
    let inputs = FockInputs { omega: &w, phi_zpf: &t.phi_zpf, dipoles: &d, potential: Potential::FullCosine };
    let sol = converge(&inputs, &[8, 5], 1e-8, DEFAULT_BUDGET).unwrap();
    let rel = |a: f64, o: f64| (a - o).abs() / o.abs();
    assert!(rel(analytic.alpha[0], sol.alpha[0].unwrap()) < 5e-3);
    assert!(rel(analytic.chi[(0, 1)], sol.chi[0][1].unwrap()) < 5e-3);
}

#[test]
fn large_basis_uses_iterative_solver() {
    let w = [ghz(4.8), ghz(6.1), ghz(7.3)];
    let phi = DMatrix::from_row_slice(3, 1, &[0.28, 0.08, -0.06]);
    let d = [EffectiveDipole::tunnel(ghz_energy(22.0), 0)];
    let inputs = FockInputs { omega: &w, phi_zpf: &phi, dipoles: &d, potential: Potential::FullCosine };
    let big = solve(&inputs, &[16, 12, 12], DEFAULT_BUDGET).unwrap();
    let small = solve(&inputs, &[12, 10, 10], DEFAULT_BUDGET).unwrap();
    assert!(big.ambiguous.is_empty());
    let rel = (big.alpha[0].unwrap() - small.alpha[0].unwrap()).abs() / big.alpha[0].unwrap();
    assert!(rel < 1e-5, "{rel:e}");
}
