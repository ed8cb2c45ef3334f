//! Normal modes of the linearized circuit.
//!
//! Two symmetric eigendecompositions, applied in sequence:
//!
//! ```text
//! O_Lᵀ L⁻¹ O_L = Λ_L⁻¹
//! C̆ = Λ_L^½ O_Lᵀ C O_L Λ_L^½ = O_C̆ Λ_C̆ O_C̆ᵀ
//! Ω = Λ_C̆^{-½},   E = O_L Λ_L^½ O_C̆
//! ```
//!
//! so that E Eᵀ = L and the tree fluxes are Φ_t = E Φ_m. Dimensioned
//! identities are plain SI ones.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::equilibrium::OperatingPoint;
use crate::netlist::{is_positive_definite, CircuitModel};
use crate::units::HBAR;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModesError {
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

/// Relative eigenvalue gap below which two modes are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ModeBasis {
    /// ω_m (rad/s), ascending.
    pub omega: DVector<f64>,
    /// Canonical eigenvector matrix E (N×M).
    pub e_matrix: DMatrix<f64>,
    /// Φ_m^ZPF = √(ħω_m/2) (Wb).
    pub flux_zpf: DVector<f64>,
    /// Q_m^ZPF = ħ/(2Φ_m^ZPF) (C).
    pub charge_zpf: DVector<f64>,
    /// Total L⁻¹ the basis was built from (1/H).
    pub inv_inductance: DMatrix<f64>,
}

impl ModeBasis {
    pub fn mode_count(&self) -> usize {
        self.omega.len()
    }
}

/// Diagonalizes the circuit linearized at `op`.
pub fn eigensolve(circuit: &CircuitModel, op: &OperatingPoint) -> Result<ModeBasis, ModesError> {
    let l_inv = circuit.total_inverse_inductance(&op.energies());
    eigensolve_matrices(&circuit.cap_matrix, &l_inv)
}

/// Symmetric eigendecomposition of `m/scale`, eigenvalues rescaled back.
fn scaled_eigen(m: &DMatrix<f64>, what: &str) -> Result<(DVector<f64>, DMatrix<f64>), ModesError> {
    let scale = m.amax();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(ModesError::NumericalFailure(format!("{what} is zero or not finite")));
    }
    let sym = (m + m.transpose()) * (0.5 / scale);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 10_000)
        .ok_or_else(|| ModesError::NumericalFailure(format!("{what} eigensolver did not converge")))?;
    Ok((eig.eigenvalues * scale, eig.eigenvectors))
}

/// The two-stage diagonalization on explicit C and total L⁻¹.
pub fn eigensolve_matrices(cap: &DMatrix<f64>, l_inv: &DMatrix<f64>) -> Result<ModeBasis, ModesError> {
    let n = cap.nrows();
    if cap.ncols() != n || l_inv.shape() != (n, n) {
        return Err(ModesError::NumericalFailure("matrix shapes disagree".into()));
    }
    if !is_positive_definite(cap) || !is_positive_definite(l_inv) {
        return Err(ModesError::NumericalFailure(
            "C and L⁻¹ must both be positive definite".into(),
        ));
    }

    let (inv_l_eigs, o_l) = scaled_eigen(l_inv, "L⁻¹")?;
    if inv_l_eigs.iter().any(|&x| x <= 0.0) {
        return Err(ModesError::NumericalFailure("L⁻¹ has a non-positive eigenvalue".into()));
    }
    let sqrt_lambda_l = DMatrix::from_diagonal(&inv_l_eigs.map(|x| x.sqrt().recip()));
    let t = &o_l * &sqrt_lambda_l;
    let c_breve = t.transpose() * cap * &t;
    let (lambda_c, o_c) = scaled_eigen(&c_breve, "C̆")?;
    if lambda_c.iter().any(|&x| x <= 0.0) {
        return Err(ModesError::NumericalFailure("C̆ has a non-positive eigenvalue".into()));
    }

    // ascending ω is descending λ_C̆
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| lambda_c[b].total_cmp(&lambda_c[a]));
    let omega = DVector::from_iterator(n, order.iter().map(|&i| lambda_c[i].sqrt().recip()));
    let o_sorted = DMatrix::from_fn(n, n, |r, c| o_c[(r, order[c])]);
    let mut e = &t * o_sorted;

    fix_degenerate_blocks(&omega, &mut e);
    fix_sign_gauge(&mut e);

    let flux_zpf = omega.map(|w| (HBAR * w / 2.0).sqrt());
    let charge_zpf = flux_zpf.map(|f| HBAR / (2.0 * f));
    Ok(ModeBasis {
        omega,
        e_matrix: e,
        flux_zpf,
        charge_zpf,
        inv_inductance: l_inv.clone(),
    })
}

/// Rotates each degenerate block of columns into echelon form with respect
/// to ascending branch index, so the basis does not depend on the solver.
fn fix_degenerate_blocks(omega: &DVector<f64>, e: &mut DMatrix<f64>) {
    let n = omega.len();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (omega[end] - omega[start]).abs() <= DEGENERACY_TOL * omega[start] {
            end += 1;
        }
        let g = end - start;
        if g > 1 {
            let block = e.columns(start, g).into_owned();
            let scale = block.amax();
            let mut basis: Vec<DVector<f64>> = Vec::with_capacity(g);
            for r in 0..block.nrows() {
                if basis.len() == g {
                    break;
                }
                let mut v: DVector<f64> = block.row(r).transpose();
                for q in &basis {
                    let proj = q.dot(&v);
                    v -= q * proj;
                }
                let norm = v.norm();
                if norm > 1e-8 * scale {
                    basis.push(v / norm);
                }
            }
            if basis.len() == g {
                let q = DMatrix::from_columns(&basis);
                let rotated = block * q;
                e.columns_mut(start, g).copy_from(&rotated);
            }
        }
        start = end;
    }
}

/// Flips each column so its largest-magnitude entry is positive; near-ties
/// go to the lowest branch index.
fn fix_sign_gauge(e: &mut DMatrix<f64>) {
    for mut col in e.column_iter_mut() {
        let max = col.amax();
        if let Some(lead) = col.iter().position(|x| x.abs() >= max * (1.0 - 1e-9)) {
            if col[lead] < 0.0 {
                col.neg_mut();
            }
        }
    }
}

/// Φ_t^ZPF: entry (k, m) = E_km Φ_m^ZPF (Wb).
pub fn tree_zpf_matrix(basis: &ModeBasis) -> DMatrix<f64> {
    let mut z = basis.e_matrix.clone();
    for (m, mut col) in z.column_iter_mut().enumerate() {
        col *= basis.flux_zpf[m];
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn one(x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x)
    }

    #[test]
    fn single_lc() {
        let b = eigensolve_matrices(&one(100e-15), &one(1.0 / 10e-9)).unwrap();
        let f = b.omega[0] / (2.0 * PI);
        assert_relative_eq!(f, 1.0 / (2.0 * PI * (10e-9f64 * 100e-15).sqrt()), max_relative = 1e-12);
        assert!((f / 1e9 - 5.0329).abs() < 1e-4);
        let z0 = (10e-9f64 / 100e-15).sqrt();
        let zpf = tree_zpf_matrix(&b)[(0, 0)];
        assert_relative_eq!(zpf, (HBAR * z0 / 2.0).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(b.flux_zpf[0] * b.charge_zpf[0], HBAR / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn canonical_identities() {
        let c = DMatrix::from_row_slice(2, 2, &[150e-15, -40e-15, -40e-15, 300e-15]);
        let l_inv = DMatrix::from_row_slice(2, 2, &[1.5e8, -2e7, -2e7, 6e8]);
        let b = eigensolve_matrices(&c, &l_inv).unwrap();
        let l = l_inv.clone().try_inverse().unwrap();
        let eet = &b.e_matrix * b.e_matrix.transpose();
        assert!((&eet - &l).norm() / l.norm() < 1e-12);
        let e_inv = b.e_matrix.clone().try_inverse().unwrap();
        let back = e_inv.transpose() * e_inv;
        assert!((&back - &l_inv).norm() / l_inv.norm() < 1e-12);
        assert!(b.omega[0] < b.omega[1]);
    }

    #[test]
    fn symmetric_pair_has_equal_magnitudes() {
        let c = DMatrix::from_row_slice(2, 2, &[100e-15, -10e-15, -10e-15, 100e-15]);
        let l_inv = DMatrix::from_row_slice(2, 2, &[1e8, 0.0, 0.0, 1e8]);
        let b = eigensolve_matrices(&c, &l_inv).unwrap();
        let z = tree_zpf_matrix(&b);
        for m in 0..2 {
            assert_relative_eq!(z[(0, m)].abs(), z[(1, m)].abs(), max_relative = 1e-10);
        }
        // the antisymmetric mode charges the coupling capacitor, so it is lower
        assert!(z[(0, 0)] * z[(1, 0)] < 0.0);
        assert!(z[(0, 1)] * z[(1, 1)] > 0.0);
    }

    #[test]
    fn degenerate_modes_are_echelon() {
        let c = DMatrix::from_diagonal(&DVector::from_vec(vec![1e-13, 1e-13, 2e-13]));
        let l_inv = DMatrix::from_diagonal(&DVector::from_vec(vec![1e8, 1e8, 1e8]));
        let b = eigensolve_matrices(&c, &l_inv).unwrap();
        // modes 1 and 2 share a frequency; branch 0 appears only in the first
        let e = &b.e_matrix;
        assert!(e[(0, 1)] > 0.0);
        assert!(e[(0, 2)].abs() < 1e-15);
        assert!(e[(1, 2)] > 0.0);
    }

    #[test]
    fn rejects_indefinite_inputs() {
        assert!(eigensolve_matrices(&one(1e-13), &one(0.0)).is_err());
        assert!(eigensolve_matrices(&one(-1e-13), &one(1e8)).is_err());
    }
}
