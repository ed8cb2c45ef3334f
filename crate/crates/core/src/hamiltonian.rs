//! Nonlinear Hamiltonian parameters from the EPR table.
//!
//! With φ̂_j = Σ_m φ_mj (â_m + â_m†), the junction energies expand as
//! Σ_j E_j Σ_p c_jp φ̂_j^p. Normal ordering each power gives amplitudes
//!
//! ```text
//! C^p_{α,β} = p!/(α! β! k! 2^k) Σ_j E_j c_jp φ_j^α φ_j^β φ_{j,tot}^{2k},   k = (p − |α| − |β|)/2
//! ```
//!
//! for the operator â†^β â^α. Reported dispersive quantities use the
//! positive convention: χ_mn = −C_{(1,1),(1,1)}/ħ for m ≠ n,
//! α_m = −2C_{(2),(2)}/ħ and Δ_m = −C_{(1),(1)}/ħ, so the dressed frequency
//! is ω_m − Δ_m.

use nalgebra::{Complex, DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::epr::EprTable;
use crate::equilibrium::EffectiveDipole;
use crate::netlist::factorial;
use crate::units::HBAR;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HamiltonianError {
    #[error("junction {junction} has no Taylor coefficient at order {order}")]
    MissingCoefficient { junction: usize, order: usize },
    #[error("invalid indices: {0}")]
    InvalidIndices(String),
    #[error("order {0} is not an even order of at least 4")]
    InvalidOrder(usize),
    #[error("{count} terms exceed the budget of {budget}")]
    TermBudgetExceeded { count: u128, budget: u128 },
    #[error("pump on mode {0} overlaps a signal mode or is repeated")]
    NotStiffPump(usize),
}

/// Default cap on the number of enumerated terms.
pub const DEFAULT_TERM_BUDGET: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DispersiveReport {
    /// χ_mn (rad/s), symmetric.
    pub chi: DMatrix<f64>,
    /// α_m (rad/s).
    pub alpha: DVector<f64>,
    /// Δ_m (rad/s).
    pub lamb: DVector<f64>,
    /// ω_m − Δ_m (rad/s).
    pub dressed_freq: DVector<f64>,
    /// Highest Taylor order included.
    pub order: usize,
}

/// The order-p contribution to χ, α and Δ.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderCorrection {
    pub order: usize,
    pub chi: DMatrix<f64>,
    pub alpha: DVector<f64>,
    pub lamb: DVector<f64>,
}

fn coefficient(dipoles: &[EffectiveDipole], j: usize, p: usize) -> Result<f64, HamiltonianError> {
    dipoles[j]
        .coefficient(p)
        .ok_or(HamiltonianError::MissingCoefficient { junction: j, order: p })
}

fn check_shapes(table: &EprTable, omega: &[f64], dipoles: &[EffectiveDipole]) {
    assert_eq!(table.mode_count(), omega.len(), "one frequency per mode");
    assert_eq!(table.junction_count(), dipoles.len(), "one dipole per junction");
}

/// Leading-order Kerr matrix: χ_mn = −6 Σ_j c_j4 ħ ω_m ω_n p_mj p_nj / E_j,
/// which is Σ_j ħ ω_m ω_n p_mj p_nj/(4E_j) for cosine junctions.
pub fn kerr_matrix_p4(
    table: &EprTable,
    omega: &[f64],
    dipoles: &[EffectiveDipole],
) -> Result<DispersiveReport, HamiltonianError> {
    check_shapes(table, omega, dipoles);
    let m_count = omega.len();
    let mut chi = DMatrix::zeros(m_count, m_count);
    for (j, d) in dipoles.iter().enumerate() {
        let pref = -6.0 * coefficient(dipoles, j, 4)? * HBAR / d.energy;
        for m in 0..m_count {
            for n in 0..m_count {
                chi[(m, n)] += pref * omega[m] * omega[n] * table.p[(m, j)] * table.p[(n, j)];
            }
        }
    }
    let alpha = chi.diagonal() * 0.5;
    let lamb = DVector::from_iterator(m_count, chi.row_iter().map(|r| 0.5 * r.sum()));
    let dressed_freq = DVector::from_column_slice(omega) - &lamb;
    Ok(DispersiveReport {
        chi,
        alpha,
        lamb,
        dressed_freq,
        order: 4,
    })
}

/// φ_{j,tot}² = (ħ/2E_j) Σ_m p_mj ω_m.
pub fn phi_total_sq(table: &EprTable, omega: &[f64], dipoles: &[EffectiveDipole]) -> Vec<f64> {
    dipoles
        .iter()
        .enumerate()
        .map(|(j, d)| {
            let s: f64 = (0..omega.len()).map(|m| table.p[(m, j)] * omega[m]).sum();
            HBAR * s / (2.0 * d.energy)
        })
        .collect()
}

/// First-order contribution of the order-p term (p even, p ≥ 4):
///
/// ```text
/// χ_p = −p!/(4 k! 2^k) ħ Σ_j c_jp ω_m ω_n p_mj p_nj φ_{j,tot}^{p−4}/E_j,   k = (p−4)/2
/// Δ_p = −p!/(2 k'! 2^k') ω_m Σ_j c_jp p_mj φ_{j,tot}^{p−2},               k' = (p−2)/2
/// ```
///
/// with α_p = diag(χ_p)/2. At p = 4 this is exactly `kerr_matrix_p4`.
pub fn kerr_matrix_pth(
    table: &EprTable,
    omega: &[f64],
    dipoles: &[EffectiveDipole],
    p: usize,
) -> Result<OrderCorrection, HamiltonianError> {
    if p < 4 || p % 2 == 1 {
        return Err(HamiltonianError::InvalidOrder(p));
    }
    check_shapes(table, omega, dipoles);
    let m_count = omega.len();
    let tot = phi_total_sq(table, omega, dipoles);
    let k = (p - 4) / 2;
    let kp = (p - 2) / 2;
    let chi_pref = factorial(p) / (4.0 * factorial(k) * 2f64.powi(k as i32));
    let lamb_pref = factorial(p) / (2.0 * factorial(kp) * 2f64.powi(kp as i32));
    let mut chi = DMatrix::zeros(m_count, m_count);
    let mut lamb = DVector::zeros(m_count);
    for (j, d) in dipoles.iter().enumerate() {
        let c = coefficient(dipoles, j, p)?;
        let w4 = tot[j].powi(k as i32);
        let w2 = tot[j].powi(kp as i32);
        for m in 0..m_count {
            for n in 0..m_count {
                chi[(m, n)] -=
                    chi_pref * HBAR * c * omega[m] * omega[n] * table.p[(m, j)] * table.p[(n, j)] * w4 / d.energy;
            }
            lamb[m] -= lamb_pref * c * omega[m] * table.p[(m, j)] * w2;
        }
    }
    let alpha = chi.diagonal() * 0.5;
    Ok(OrderCorrection {
        order: p,
        chi,
        alpha,
        lamb,
    })
}

/// Sum of the first-order contributions of every even order 4..=p_max.
pub fn dispersive_to_order(
    table: &EprTable,
    omega: &[f64],
    dipoles: &[EffectiveDipole],
    p_max: usize,
) -> Result<(DispersiveReport, Vec<OrderCorrection>), HamiltonianError> {
    let mut report = kerr_matrix_p4(table, omega, dipoles)?;
    let mut corrections = Vec::new();
    for p in (6..=p_max).step_by(2) {
        let c = kerr_matrix_pth(table, omega, dipoles, p)?;
        report.chi += &c.chi;
        report.alpha += &c.alpha;
        report.lamb += &c.lamb;
        corrections.push(c);
    }
    report.dressed_freq = DVector::from_column_slice(omega) - &report.lamb;
    report.order = p_max.max(4);
    Ok((report, corrections))
}

// ---------------------------------------------------------------------------
// general normal-ordered terms

/// Amplitude of â†^β â^α in the order-p part of the Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractionTerm {
    /// Annihilation multi-index α.
    pub alpha: Vec<u32>,
    /// Creation multi-index β.
    pub beta: Vec<u32>,
    pub order: usize,
    /// C^p_{α,β} (J).
    pub amplitude: f64,
}

impl InteractionTerm {
    /// k = (p − |α| − |β|)/2.
    pub fn contractions(&self) -> usize {
        (self.order - total(&self.alpha) - total(&self.beta)) / 2
    }

    /// Operator string such as `a0†^2 a1`.
    pub fn operator_string(&self) -> String {
        let mut parts = Vec::new();
        for (m, &b) in self.beta.iter().enumerate() {
            if b > 0 {
                parts.push(power_str(&format!("a{m}†"), b));
            }
        }
        for (m, &a) in self.alpha.iter().enumerate() {
            if a > 0 {
                parts.push(power_str(&format!("a{m}"), a));
            }
        }
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join(" ")
        }
    }
}

fn power_str(op: &str, n: u32) -> String {
    if n == 1 {
        op.to_string()
    } else {
        format!("{op}^{n}")
    }
}

fn total(idx: &[u32]) -> usize {
    idx.iter().map(|&x| x as usize).sum()
}

fn multi_factorial(idx: &[u32]) -> f64 {
    idx.iter().map(|&x| factorial(x as usize)).product()
}

fn contraction_count(p: usize, alpha: &[u32], beta: &[u32]) -> Result<usize, HamiltonianError> {
    let used = total(alpha) + total(beta);
    if used > p || (p - used) % 2 == 1 {
        return Err(HamiltonianError::InvalidIndices(format!(
            "p = {p} with |α| + |β| = {used} leaves no whole number of contractions"
        )));
    }
    Ok((p - used) / 2)
}

/// Normal-ordered coefficients of (Σ_m φ_m(â_m + â_m†))^p as
/// (β, α, coefficient) triples, from the non-commutative binomial theorem.
pub fn normal_order_power(phi: &[f64], p: usize) -> Vec<(Vec<u32>, Vec<u32>, f64)> {
    let tot: f64 = phi.iter().map(|x| x * x).sum();
    index_pairs(phi.len(), p)
        .into_iter()
        .map(|(beta, alpha)| {
            let k = (p - total(&alpha) - total(&beta)) / 2;
            let c = binomial_prefactor(p, &alpha, &beta, k) * phi_power(phi, &alpha, &beta) * tot.powi(k as i32);
            (beta, alpha, c)
        })
        .collect()
}

fn binomial_prefactor(p: usize, alpha: &[u32], beta: &[u32], k: usize) -> f64 {
    factorial(p) / (multi_factorial(alpha) * multi_factorial(beta) * factorial(k) * 2f64.powi(k as i32))
}

fn phi_power(phi: &[f64], alpha: &[u32], beta: &[u32]) -> f64 {
    phi.iter()
        .zip(alpha.iter().zip(beta))
        .map(|(f, (&a, &b))| f.powi((a + b) as i32))
        .product()
}

/// C^p_{α,β} summed over junctions; `phi_zpf` is M×J.
pub fn general_coefficient(
    dipoles: &[EffectiveDipole],
    phi_zpf: &DMatrix<f64>,
    p: usize,
    alpha: &[u32],
    beta: &[u32],
) -> Result<InteractionTerm, HamiltonianError> {
    let m_count = phi_zpf.nrows();
    if alpha.len() != m_count || beta.len() != m_count {
        return Err(HamiltonianError::InvalidIndices(format!(
            "index tuples must have length {m_count}"
        )));
    }
    let k = contraction_count(p, alpha, beta)?;
    let pref = binomial_prefactor(p, alpha, beta, k);
    let mut sum = 0.0;
    for (j, d) in dipoles.iter().enumerate() {
        let c = coefficient(dipoles, j, p)?;
        if c == 0.0 {
            continue;
        }
        let col: Vec<f64> = phi_zpf.column(j).iter().copied().collect();
        let tot: f64 = col.iter().map(|x| x * x).sum();
        sum += d.energy * c * phi_power(&col, alpha, beta) * tot.powi(k as i32);
    }
    Ok(InteractionTerm {
        alpha: alpha.to_vec(),
        beta: beta.to_vec(),
        order: p,
        amplitude: pref * sum,
    })
}

/// Every multi-index of length `parts` summing to `n`, lexicographic.
pub fn compositions(n: u32, parts: usize) -> Vec<Vec<u32>> {
    if parts == 0 {
        return if n == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in compositions(n - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// (β, α) pairs valid at order p, in (|β|, β, α) lexicographic order.
fn index_pairs(m_count: usize, p: usize) -> Vec<(Vec<u32>, Vec<u32>)> {
    let mut pairs = Vec::new();
    for nb in 0..=p {
        for beta in compositions(nb as u32, m_count) {
            let mut alphas: Vec<Vec<u32>> = (0..=(p - nb))
                .filter(|na| (p - nb - na).is_multiple_of(2))
                .flat_map(|na| compositions(na as u32, m_count))
                .collect();
            alphas.sort();
            for alpha in alphas {
                pairs.push((beta.clone(), alpha));
            }
        }
    }
    pairs
}

fn binom(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of (β, α) pairs at order p over `m_count` modes.
pub fn term_count(m_count: usize, p: usize) -> u128 {
    let count = |n: usize| binom((n + m_count) as u128 - 1, m_count as u128 - 1);
    if m_count == 0 {
        return 1;
    }
    let mut c = 0u128;
    for nb in 0..=p {
        for na in 0..=(p - nb) {
            if (p - nb - na).is_multiple_of(2) {
                c += count(nb) * count(na);
            }
        }
    }
    c
}

/// All terms of orders 3..=p_max whose coefficients are not identically
/// zero for every junction, ordered by (p, |β|, β, α).
pub fn enumerate_terms(
    dipoles: &[EffectiveDipole],
    phi_zpf: &DMatrix<f64>,
    p_max: usize,
    budget: u128,
) -> Result<Vec<InteractionTerm>, HamiltonianError> {
    let m_count = phi_zpf.nrows();
    let mut orders = Vec::new();
    for p in 3..=p_max {
        let mut any = false;
        for j in 0..dipoles.len() {
            any |= coefficient(dipoles, j, p)? != 0.0;
        }
        if any {
            orders.push(p);
        }
    }
    let count: u128 = orders.iter().map(|&p| term_count(m_count, p)).sum();
    if count > budget {
        return Err(HamiltonianError::TermBudgetExceeded { count, budget });
    }
    let mut terms = Vec::with_capacity(count as usize);
    for p in orders {
        let pairs = index_pairs(m_count, p);
        let batch: Result<Vec<_>, _> = pairs
            .par_iter()
            .map(|(beta, alpha)| general_coefficient(dipoles, phi_zpf, p, alpha, beta))
            .collect();
        terms.extend(batch?);
    }
    Ok(terms)
}

// ---------------------------------------------------------------------------
// pumped processes

/// A stiffly driven mode, replaced by its coherent amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpTone {
    pub mode: usize,
    pub xi: Complex<f64>,
    /// ω_P (rad/s).
    pub freq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpRate {
    /// g (rad/s), with ħg = C Π ξ^α ξ*^β over pumped modes.
    pub g: Complex<f64>,
    /// Σ β ω − Σ α ω, with pump tones standing in for pumped modes (rad/s).
    pub detuning: f64,
}

/// Stiff-pump substitution of `pumps` into `term`.
pub fn pump_rate(
    term: &InteractionTerm,
    pumps: &[PumpTone],
    signal_modes: &[usize],
    mode_freqs: &[f64],
) -> Result<PumpRate, HamiltonianError> {
    let m_count = term.alpha.len();
    if mode_freqs.len() != m_count || term.beta.len() != m_count {
        return Err(HamiltonianError::InvalidIndices("term and frequency lengths differ".into()));
    }
    let mut freq: Vec<f64> = mode_freqs.to_vec();
    let mut g = Complex::new(term.amplitude / HBAR, 0.0);
    let mut seen = vec![false; m_count];
    for tone in pumps {
        if tone.mode >= m_count {
            return Err(HamiltonianError::InvalidIndices(format!("pump mode {} out of range", tone.mode)));
        }
        if signal_modes.contains(&tone.mode) || std::mem::replace(&mut seen[tone.mode], true) {
            return Err(HamiltonianError::NotStiffPump(tone.mode));
        }
        freq[tone.mode] = tone.freq;
        g *= tone.xi.powu(term.alpha[tone.mode]) * tone.xi.conj().powu(term.beta[tone.mode]);
    }
    let detuning = (0..m_count)
        .map(|m| (term.beta[m] as f64 - term.alpha[m] as f64) * freq[m])
        .sum();
    Ok(PumpRate { g, detuning })
}

// ---------------------------------------------------------------------------
// diagnostics

/// Warning threshold on the dispersive-validity ratio.
pub const DISPERSIVE_WARN: f64 = 0.1;

/// E|x|^p for x ~ N(0, σ²).
fn gaussian_abs_moment(sigma: f64, p: usize) -> f64 {
    let double_fact = |n: usize| (1..=n).rev().step_by(2).fold(1.0, |a, k| a * k as f64);
    let base = double_fact(p.saturating_sub(1)) * sigma.powi(p as i32);
    if p.is_multiple_of(2) {
        base
    } else {
        base * (2.0 / std::f64::consts::PI).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityRatio {
    pub m: usize,
    pub n: usize,
    /// Nonlinear energy scale over |ω_m − ω_n|.
    pub ratio: f64,
    pub warn: bool,
}

/// Ratio of Σ_j Σ_p E_j |c_jp| ⟨|φ̂_j|^p⟩ (ground state, over ħ) to every
/// mode detuning.
pub fn dispersive_validity(
    table: &EprTable,
    omega: &[f64],
    dipoles: &[EffectiveDipole],
    p_max: usize,
    threshold: f64,
) -> Vec<ValidityRatio> {
    let tot = phi_total_sq(table, omega, dipoles);
    let mut scale = 0.0;
    for (j, d) in dipoles.iter().enumerate() {
        for p in 3..=p_max {
            let c = d.coefficient(p).unwrap_or(0.0);
            scale += d.energy * c.abs() * gaussian_abs_moment(tot[j].sqrt(), p) / HBAR;
        }
    }
    let mut out = Vec::new();
    for m in 0..omega.len() {
        for n in (m + 1)..omega.len() {
            let gap = (omega[m] - omega[n]).abs();
            let ratio = if gap > 0.0 { scale / gap } else { f64::INFINITY };
            out.push(ValidityRatio {
                m,
                n,
                ratio,
                warn: ratio > threshold,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epr::Provenance;
    use crate::units::{ghz, ghz_energy};
    use approx::assert_relative_eq;

    fn fixture() -> (EprTable, Vec<f64>, Vec<EffectiveDipole>) {
        let omega = vec![ghz(5.0), ghz(7.0)];
        let d = vec![EffectiveDipole::tunnel(ghz_energy(25.0), 0)];
        let p = DMatrix::from_row_slice(2, 1, &[0.9, 0.1]);
        let s = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let t = EprTable::from_participations(p, s, &omega, &[d[0].energy], Provenance::Algebraic, true);
        (t, omega, d)
    }

    #[test]
    fn transmon_cavity_anharmonicity() {
        let (t, w, d) = fixture();
        let r = kerr_matrix_p4(&t, &w, &d).unwrap();
        // p² ω²/(8 E_J) in GHz: 0.81·25/200
        assert_relative_eq!(r.alpha[0] / ghz(1.0), 0.10125, max_relative = 1e-12);
        assert_relative_eq!(r.chi[(0, 1)], 2.0 * (r.alpha[0] * r.alpha[1]).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(r.lamb[0], 0.5 * (r.chi[(0, 0)] + r.chi[(0, 1)]), max_relative = 1e-14);
        assert_eq!(r.order, 4);
    }

    #[test]
    fn linear_circuit_has_no_kerr() {
        let (mut t, w, d) = fixture();
        t.p.fill(0.0);
        let r = kerr_matrix_p4(&t, &w, &d).unwrap();
        assert_eq!(r.chi.amax(), 0.0);
        assert_eq!(r.lamb.amax(), 0.0);
    }

    #[test]
    fn pth_reduces_at_four() {
        let (t, w, d) = fixture();
        let a = kerr_matrix_p4(&t, &w, &d).unwrap();
        let b = kerr_matrix_pth(&t, &w, &d, 4).unwrap();
        assert!((&a.chi - &b.chi).amax() <= 1e-12 * a.chi.amax());
        assert!((&a.lamb - &b.lamb).amax() <= 1e-12 * a.lamb.amax());
        assert!(matches!(kerr_matrix_pth(&t, &w, &d, 5), Err(HamiltonianError::InvalidOrder(5))));
    }

    #[test]
    fn sixth_order_matches_coefficient_route() {
        let w = vec![ghz(5.0)];
        let d = vec![EffectiveDipole::tunnel(ghz_energy(20.0), 0)];
        let p = DMatrix::from_element(1, 1, 1.0);
        let s = DMatrix::from_element(1, 1, 1.0);
        let t = EprTable::from_participations(p, s, &w, &[d[0].energy], Provenance::Algebraic, true);
        let c6 = kerr_matrix_pth(&t, &w, &d, 6).unwrap();
        let term = general_coefficient(&d, &t.phi_zpf, 6, &[2], &[2]).unwrap();
        assert_relative_eq!(c6.alpha[0], -2.0 * term.amplitude / HBAR, max_relative = 1e-12);
        let lamb = general_coefficient(&d, &t.phi_zpf, 6, &[1], &[1]).unwrap();
        assert_relative_eq!(c6.lamb[0], -lamb.amplitude / HBAR, max_relative = 1e-12);
    }

    #[test]
    fn quartic_identity() {
        let terms = normal_order_power(&[1.0], 4);
        let get = |b: u32, a: u32| {
            terms.iter().find(|(bb, aa, _)| bb[0] == b && aa[0] == a).map(|t| t.2).unwrap()
        };
        assert_eq!(terms.len(), 9);
        for (b, a, c) in [(4, 0, 1.0), (3, 1, 4.0), (2, 2, 6.0), (1, 3, 4.0), (0, 4, 1.0), (0, 2, 6.0), (1, 1, 12.0), (2, 0, 6.0), (0, 0, 3.0)] {
            assert_eq!(get(b, a), c, "a†^{b} a^{a}");
        }
    }

    #[test]
    fn parity_is_enforced() {
        let d = vec![EffectiveDipole::tunnel(1.0, 0)];
        let phi = DMatrix::from_element(1, 1, 0.1);
        assert!(matches!(
            general_coefficient(&d, &phi, 3, &[0], &[0]),
            Err(HamiltonianError::InvalidIndices(_))
        ));
    }

    #[test]
    fn enumeration_shapes() {
        let d = vec![EffectiveDipole::tunnel(1.0, 0)];
        let phi = DMatrix::from_element(1, 1, 0.1);
        assert!(enumerate_terms(&d, &phi, 3, DEFAULT_TERM_BUDGET).unwrap().is_empty());
        let terms = enumerate_terms(&d, &phi, 4, DEFAULT_TERM_BUDGET).unwrap();
        assert_eq!(terms.len(), 9);
        let ops: Vec<String> = terms.iter().map(|t| t.operator_string()).collect();
        assert_eq!(
            ops,
            ["1", "a0^2", "a0^4", "a0† a0", "a0† a0^3", "a0†^2", "a0†^2 a0^2", "a0†^3 a0", "a0†^4"]
        );
        let phi2 = DMatrix::from_row_slice(2, 1, &[0.1, 0.05]);
        let terms = enumerate_terms(&d, &phi2, 4, DEFAULT_TERM_BUDGET).unwrap();
        assert_eq!(terms.len() as u128, term_count(2, 4));
        assert!(matches!(
            enumerate_terms(&d, &phi2, 8, 10),
            Err(HamiltonianError::TermBudgetExceeded { .. })
        ));
    }

    #[test]
    fn pump_frame_algebra() {
        let term = InteractionTerm {
            alpha: vec![0, 1, 2],
            beta: vec![1, 0, 0],
            order: 4,
            amplitude: 2.0 * HBAR,
        };
        let (wr, wc) = (ghz(9.0), ghz(5.0));
        let wp = 0.5 * (wr - wc);
        let xi = Complex::new(0.3, 0.0);
        let pumps = [PumpTone { mode: 2, xi, freq: wp }];
        let r = pump_rate(&term, &pumps, &[0, 1], &[wr, wc, ghz(7.0)]).unwrap();
        assert!(r.detuning.abs() < 1e-6);
        assert_relative_eq!(r.g.re, 2.0 * 0.09, max_relative = 1e-14);
        let zero = [PumpTone { mode: 2, xi: Complex::new(0.0, 0.0), freq: wp }];
        assert_eq!(pump_rate(&term, &zero, &[], &[wr, wc, 1.0]).unwrap().g.norm(), 0.0);
        assert!(matches!(
            pump_rate(&term, &pumps, &[2], &[wr, wc, 1.0]),
            Err(HamiltonianError::NotStiffPump(2))
        ));
    }
}
