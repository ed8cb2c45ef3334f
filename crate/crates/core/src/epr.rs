//! Energy-participation ratios, signs and junction zero-point fluctuations.
//!
//! p_mj is the fraction of mode m's inductive energy stored in junction j.
//! From the algebraic basis it follows from the tree ZPFs,
//! φ_mj = E_{k_j m} Φ_m^ZPF/φ₀ and p_mj = 2E_j φ_mj²/(ħω_m). From field-solver
//! data it follows from global energies and junction currents.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::equilibrium::EffectiveDipole;
use crate::modes::ModeBasis;
use crate::netlist::EigenmodeData;
use crate::units::{HBAR, PHI0};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EprError {
    #[error("mode {mode}: {junctions} junctions need per-junction currents")]
    MissingCurrents { mode: usize, junctions: usize },
    #[error("mode {mode}: expected {expected} junction {what}, found {found}")]
    LengthMismatch {
        mode: usize,
        what: &'static str,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Algebraic,
    Ingested,
}

/// Participations below this are reported as exactly zero.
pub const ZERO_THRESHOLD: f64 = 1e-14;
/// Participations in (1, 1 + CLAMP_TOL] are clamped to 1 and reported.
pub const CLAMP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct EprTable {
    /// p_mj, M×J.
    pub p: DMatrix<f64>,
    /// s_mj ∈ {−1, +1}, M×J.
    pub s: DMatrix<f64>,
    /// Signed φ_mj, M×J.
    pub phi_zpf: DMatrix<f64>,
    pub provenance: Provenance,
    /// Whether the table covers every mode of the system.
    pub complete: bool,
    /// Entries pulled back to 1, as (m, j, raw value).
    pub clamped: Vec<(usize, usize, f64)>,
}

impl EprTable {
    pub fn mode_count(&self) -> usize {
        self.p.nrows()
    }

    pub fn junction_count(&self) -> usize {
        self.p.ncols()
    }

    /// Builds a table from participations and signs, deriving φ_mj.
    pub fn from_participations(
        p: DMatrix<f64>,
        s: DMatrix<f64>,
        omega: &[f64],
        energies: &[f64],
        provenance: Provenance,
        complete: bool,
    ) -> Self {
        let phi_zpf = DMatrix::from_fn(p.nrows(), p.ncols(), |m, j| {
            s[(m, j)] * (p[(m, j)] * HBAR * omega[m] / (2.0 * energies[j])).sqrt()
        });
        EprTable {
            p,
            s,
            phi_zpf,
            provenance,
            complete,
            clamped: Vec::new(),
        }
    }

    /// φ_{j,tot}² = Σ_m φ_mj².
    pub fn phi_total_sq(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.junction_count(),
            self.phi_zpf.column_iter().map(|c| c.norm_squared()),
        )
    }

    /// Keeps only the listed modes; the result is never complete.
    pub fn select_modes(&self, modes: &[usize]) -> EprTable {
        let pick = |m: &DMatrix<f64>| m.select_rows(modes.iter());
        EprTable {
            p: pick(&self.p),
            s: pick(&self.s),
            phi_zpf: pick(&self.phi_zpf),
            provenance: self.provenance,
            complete: false,
            clamped: Vec::new(),
        }
    }
}

fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// EPRs from the algebraic eigenvector matrix.
pub fn epr_from_modes(dipoles: &[EffectiveDipole], basis: &ModeBasis) -> EprTable {
    epr_from_modes_with(dipoles, basis, ZERO_THRESHOLD)
}

pub fn epr_from_modes_with(dipoles: &[EffectiveDipole], basis: &ModeBasis, zero_threshold: f64) -> EprTable {
    let m_count = basis.mode_count();
    let j_count = dipoles.len();
    let mut p = DMatrix::zeros(m_count, j_count);
    let mut s = DMatrix::from_element(m_count, j_count, 1.0);
    let mut phi = DMatrix::zeros(m_count, j_count);
    let mut clamped = Vec::new();
    for (j, d) in dipoles.iter().enumerate() {
        for m in 0..m_count {
            let e_km = basis.e_matrix[(d.branch_index, m)];
            let mut phi_mj = e_km * basis.flux_zpf[m] / PHI0;
            let mut p_mj = 2.0 * d.energy * phi_mj * phi_mj / (HBAR * basis.omega[m]);
            if p_mj < zero_threshold {
                p_mj = 0.0;
                phi_mj = 0.0;
            } else if p_mj > 1.0 && p_mj <= 1.0 + CLAMP_TOL {
                clamped.push((m, j, p_mj));
                phi_mj /= p_mj.sqrt();
                p_mj = 1.0;
            }
            p[(m, j)] = p_mj;
            s[(m, j)] = sign(e_km);
            phi[(m, j)] = phi_mj;
        }
    }
    EprTable {
        p,
        s,
        phi_zpf: phi,
        provenance: Provenance::Algebraic,
        complete: true,
        clamped,
    }
}

/// EPRs from field-solver energies and currents.
///
/// One junction: p_m = (E_elec − E_mag)/E_elec. Several: ½L_j I_mj²/E_elec,
/// rescaled so that Σ_j p_mj equals the global inductive fraction.
pub fn epr_from_eigenmode_data(data: &EigenmodeData, dipoles: &[EffectiveDipole]) -> Result<EprTable, EprError> {
    let m_count = data.modes.len();
    let j_count = dipoles.len();
    let mut p = DMatrix::zeros(m_count, j_count);
    let mut s = DMatrix::from_element(m_count, j_count, 1.0);
    for (m, mode) in data.modes.iter().enumerate() {
        let kinetic = ((mode.energy_elec - mode.energy_mag) / mode.energy_elec).clamp(0.0, 1.0);
        if j_count > 0
            && (!mode.junction_signs.is_empty() || j_count > 1) {
                if mode.junction_signs.len() != j_count {
                    return Err(EprError::LengthMismatch {
                        mode: m,
                        what: "signs",
                        expected: j_count,
                        found: mode.junction_signs.len(),
                    });
                }
                for j in 0..j_count {
                    s[(m, j)] = mode.junction_signs[j];
                }
            }
        match j_count {
            0 => {}
            1 => p[(m, 0)] = kinetic,
            _ => {
                let currents = mode
                    .junction_currents
                    .as_ref()
                    .ok_or(EprError::MissingCurrents { mode: m, junctions: j_count })?;
                if currents.len() != j_count {
                    return Err(EprError::LengthMismatch {
                        mode: m,
                        what: "currents",
                        expected: j_count,
                        found: currents.len(),
                    });
                }
                let raw: Vec<f64> = dipoles
                    .iter()
                    .zip(currents)
                    .map(|(d, i)| 0.5 * (PHI0 * PHI0 / d.energy) * i * i / mode.energy_elec)
                    .collect();
                let total: f64 = raw.iter().sum();
                for (j, r) in raw.iter().enumerate() {
                    p[(m, j)] = if total > 0.0 { r * kinetic / total } else { 0.0 };
                }
            }
        }
        for j in 0..j_count {
            if p[(m, j)] < ZERO_THRESHOLD {
                p[(m, j)] = 0.0;
            }
        }
    }
    let omega: Vec<f64> = data.modes.iter().map(|r| r.frequency).collect();
    let energies: Vec<f64> = dipoles.iter().map(|d| d.energy).collect();
    Ok(EprTable::from_participations(
        p,
        s,
        &omega,
        &energies,
        Provenance::Ingested,
        data.modes_complete,
    ))
}

/// Tolerance on the sum rule and orthogonality residuals.
pub const PROPERTY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub name: &'static str,
    /// Worst violation found; `None` when the check was skipped.
    pub residual: Option<f64>,
    pub threshold: f64,
    pub note: Option<String>,
}

impl PropertyCheck {
    pub fn passed(&self) -> bool {
        self.residual.is_none_or(|r| r <= self.threshold)
    }

    pub fn skipped(&self) -> bool {
        self.residual.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EprDiagnostics {
    pub checks: Vec<PropertyCheck>,
}

impl EprDiagnostics {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(PropertyCheck::passed)
    }

    pub fn get(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Checks the four universal EPR properties.
///
/// Bounds are always checked. The per-junction sum rule and the orthogonality
/// relation only hold over a complete mode set, so they run only when
/// `strict_modes_complete` is set and the table says it is complete.
pub fn verify_universal_properties(table: &EprTable, strict_modes_complete: bool) -> EprDiagnostics {
    let (m_count, j_count) = table.p.shape();
    let bound = table
        .p
        .iter()
        .map(|&p| (-p).max(p - 1.0).max(0.0))
        .fold(0.0, f64::max);
    let mode_total = (0..m_count)
        .map(|m| {
            let t = table.p.row(m).sum();
            (-t).max(t - 1.0).max(0.0)
        })
        .fold(0.0, f64::max);
    let mut checks = vec![
        PropertyCheck {
            name: "participation_bounds",
            residual: Some(bound),
            threshold: CLAMP_TOL,
            note: None,
        },
        PropertyCheck {
            name: "mode_total",
            residual: Some(mode_total),
            threshold: PROPERTY_TOL,
            note: None,
        },
    ];
    let skip_note = if !strict_modes_complete {
        Some("needs the complete-modes flag".to_string())
    } else if !table.complete {
        Some("skipped: the mode set is truncated".to_string())
    } else {
        None
    };
    let (sum_rule, ortho) = if skip_note.is_some() {
        (None, None)
    } else {
        let sum = (0..j_count)
            .map(|j| (table.p.column(j).sum() - 1.0).abs())
            .fold(0.0, f64::max);
        let mut worst = 0.0f64;
        for j in 0..j_count {
            for k in (j + 1)..j_count {
                let dot: f64 = (0..m_count)
                    .map(|m| {
                        table.s[(m, j)] * table.s[(m, k)] * (table.p[(m, j)] * table.p[(m, k)]).sqrt()
                    })
                    .sum();
                worst = worst.max(dot.abs());
            }
        }
        (Some(sum), Some(worst))
    };
    checks.push(PropertyCheck {
        name: "sum_rule",
        residual: sum_rule,
        threshold: PROPERTY_TOL,
        note: skip_note.clone(),
    });
    checks.push(PropertyCheck {
        name: "orthogonality",
        residual: ortho,
        threshold: PROPERTY_TOL,
        note: skip_note,
    });
    EprDiagnostics { checks }
}
