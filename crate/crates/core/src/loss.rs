//! Dissipation budgets and input-output coupling rates.
//!
//! Every lossy element contributes p_ml/Q_l to Q_m⁻¹, grouped into the
//! capacitive, inductive and radiative buckets. Resistors, whether lossy
//! elements or ports, contribute κ/ω with κ = ½RI²/E_m(0).
//!
//! In the algebraic path a mode of peak flux amplitude A stores ½A² and
//! drives the current [L⁻¹E]_km A through branch k, so κ = R [L⁻¹E]_km².
//! Ingested modes use the file's peak currents with E_m(0) = 2 E_elec.

use nalgebra::DMatrix;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::modes::ModeBasis;
use crate::netlist::{CircuitModel, EigenmodeData, LossClass, LossMechanism, ParticipationSource};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossError {
    #[error("loss element {0:?} has no participations for these modes")]
    MissingParticipation(String),
    #[error("port {0:?} has no branch and no ingested currents")]
    MissingPortCurrent(String),
    #[error("loss element {label:?}: participation {value} outside [0, 1]")]
    ParticipationRange { label: String, value: f64 },
    #[error("{what}: expected {expected} entries, found {found}")]
    LengthMismatch { what: String, expected: usize, found: usize },
}

/// Writes non-finite values as the string "inf".
pub fn serialize_quality<S: Serializer>(q: &f64, s: S) -> Result<S::Ok, S::Error> {
    if q.is_finite() {
        s.serialize_f64(*q)
    } else {
        s.serialize_str("inf")
    }
}

fn inverse(x: f64) -> f64 {
    if x == 0.0 {
        f64::INFINITY
    } else {
        1.0 / x
    }
}

/// κ_mp = ½RI²/E_m(0) (rad/s) and Q_mp = ω_m/κ_mp; zero current gives
/// κ = 0 and Q = ∞.
pub fn io_coupling(resistance: f64, current: f64, mode_energy: f64, omega: f64) -> (f64, f64) {
    let kappa = 0.5 * resistance * current * current / mode_energy;
    (kappa, if kappa == 0.0 { f64::INFINITY } else { omega / kappa })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElementContribution {
    pub label: String,
    pub mechanism: LossMechanism,
    /// p_ml; absent for lumped resistors.
    pub participation: Option<f64>,
    /// p_ml/Q_l, or κ/ω for a resistor.
    pub inverse_quality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortCoupling {
    pub label: String,
    /// κ_mp (rad/s).
    pub kappa: f64,
    #[serde(serialize_with = "serialize_quality")]
    pub quality: f64,
    /// s_mp; zero when the port is not driven by the mode.
    pub sign: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortPair {
    pub first: String,
    pub second: String,
    pub same_sign: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeBudget {
    /// ω_m (rad/s).
    pub omega: f64,
    #[serde(serialize_with = "serialize_quality")]
    pub q_total: f64,
    #[serde(serialize_with = "serialize_quality")]
    pub q_cap: f64,
    #[serde(serialize_with = "serialize_quality")]
    pub q_ind: f64,
    #[serde(serialize_with = "serialize_quality")]
    pub q_rad: f64,
    pub elements: Vec<ElementContribution>,
    pub ports: Vec<PortCoupling>,
    /// Port pairs both driven by this mode.
    pub port_pairs: Vec<PortPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossBudget {
    pub modes: Vec<ModeBudget>,
}

/// Where mode currents and participations come from.
#[derive(Debug, Clone, Copy)]
pub enum ModeSource<'a> {
    /// Lumped circuit modes; `data` optionally supplies participations by label.
    Algebraic { basis: &'a ModeBasis, data: Option<&'a EigenmodeData> },
    Ingested(&'a EigenmodeData),
}

/// Branch currents per unit flux amplitude, [L⁻¹E] (A/Wb).
pub fn branch_currents(basis: &ModeBasis) -> DMatrix<f64> {
    &basis.inv_inductance * &basis.e_matrix
}

/// Builds the per-mode budget for every element and port of `circuit`.
pub fn budget(circuit: &CircuitModel, source: ModeSource) -> Result<LossBudget, LossError> {
    let (omega, data): (Vec<f64>, Option<&EigenmodeData>) = match source {
        ModeSource::Algebraic { basis, data } => (basis.omega.iter().copied().collect(), data),
        ModeSource::Ingested(d) => (d.modes.iter().map(|m| m.frequency).collect(), Some(d)),
    };
    let m_count = omega.len();
    let currents = match source {
        ModeSource::Algebraic { basis, .. } => Some(branch_currents(basis)),
        ModeSource::Ingested(_) => None,
    };
    if let Some(d) = data {
        if d.modes.len() != m_count {
            return Err(LossError::LengthMismatch {
                what: "eigenmode data modes".into(),
                expected: m_count,
                found: d.modes.len(),
            });
        }
    }

    // (κ/ω per unit, sign) for a resistor on branch k in mode m
    let branch_rate = |k: usize, m: usize, r: f64| -> Option<(f64, f64, f64)> {
        let i = currents.as_ref()?[(k, m)];
        let (kappa, q) = io_coupling(r, i, 0.5, omega[m]);
        Some((kappa, q, if i == 0.0 { 0.0 } else { i.signum() }))
    };

    let mut modes = Vec::with_capacity(m_count);
    for m in 0..m_count {
        let mut elements = Vec::with_capacity(circuit.loss_elements.len());
        let (mut inv_cap, mut inv_ind) = (0.0, 0.0);
        for el in &circuit.loss_elements {
            let (participation, inv_q) = match &el.source {
                ParticipationSource::Ingested { participations } => {
                    let p = match participations {
                        Some(p) => {
                            if p.len() != m_count {
                                return Err(LossError::LengthMismatch {
                                    what: format!("participations of {:?}", el.label),
                                    expected: m_count,
                                    found: p.len(),
                                });
                            }
                            p[m]
                        }
                        None => {
                            let d = data.ok_or_else(|| LossError::MissingParticipation(el.label.clone()))?;
                            let col = d
                                .loss_labels
                                .iter()
                                .position(|l| *l == el.label)
                                .ok_or_else(|| LossError::MissingParticipation(el.label.clone()))?;
                            *d.modes[m]
                                .loss_participations
                                .get(col)
                                .ok_or_else(|| LossError::MissingParticipation(el.label.clone()))?
                        }
                    };
                    if !(0.0..=1.0).contains(&p) {
                        return Err(LossError::ParticipationRange { label: el.label.clone(), value: p });
                    }
                    let q = el
                        .intrinsic_quality
                        .ok_or_else(|| LossError::MissingParticipation(el.label.clone()))?;
                    (Some(p), p / q)
                }
                ParticipationSource::LumpedResistor { resistance, branch } => {
                    let (kappa, _, _) = branch_rate(*branch, m, *resistance)
                        .ok_or_else(|| LossError::MissingParticipation(el.label.clone()))?;
                    (None, kappa / omega[m])
                }
            };
            match el.mechanism.class() {
                LossClass::Capacitive => inv_cap += inv_q,
                LossClass::Inductive => inv_ind += inv_q,
            }
            elements.push(ElementContribution {
                label: el.label.clone(),
                mechanism: el.mechanism,
                participation,
                inverse_quality: inv_q,
            });
        }

        let mut ports = Vec::with_capacity(circuit.ports.len());
        let mut inv_rad = 0.0;
        for port in &circuit.ports {
            let (kappa, quality, sign) = match port.branch_index {
                Some(k) if currents.is_some() => branch_rate(k, m, port.resistance).unwrap(),
                _ => {
                    let d = data.ok_or_else(|| LossError::MissingPortCurrent(port.label.clone()))?;
                    let col = d
                        .port_labels
                        .iter()
                        .position(|l| *l == port.label)
                        .ok_or_else(|| LossError::MissingPortCurrent(port.label.clone()))?;
                    let rec = &d.modes[m];
                    let i = *rec
                        .port_currents
                        .get(col)
                        .ok_or_else(|| LossError::MissingPortCurrent(port.label.clone()))?;
                    let (kappa, q) = io_coupling(port.resistance, i, 2.0 * rec.energy_elec, omega[m]);
                    let sign = if i == 0.0 { 0.0 } else { rec.port_signs.get(col).copied().unwrap_or(1.0) };
                    (kappa, q, sign)
                }
            };
            inv_rad += kappa / omega[m];
            ports.push(PortCoupling { label: port.label.clone(), kappa, quality, sign });
        }

        let mut port_pairs = Vec::new();
        for a in 0..ports.len() {
            for b in (a + 1)..ports.len() {
                if ports[a].sign != 0.0 && ports[b].sign != 0.0 {
                    port_pairs.push(PortPair {
                        first: ports[a].label.clone(),
                        second: ports[b].label.clone(),
                        same_sign: ports[a].sign == ports[b].sign,
                    });
                }
            }
        }

        modes.push(ModeBudget {
            omega: omega[m],
            q_total: inverse(inv_cap + inv_ind + inv_rad),
            q_cap: inverse(inv_cap),
            q_ind: inverse(inv_ind),
            q_rad: inverse(inv_rad),
            elements,
            ports,
            port_pairs,
        });
    }
    Ok(LossBudget { modes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::operating_point;
    use crate::modes::eigensolve;
    use crate::netlist::{parse_netlist, LossyElement};
    use approx::assert_relative_eq;

    fn lc(extra: &str) -> CircuitModel {
        parse_netlist(&format!(
            "format_version = 1\n[circuit]\nbranches = 1\ncapacitance = [[\"100 fF\"]]\ninverse_inductance = [[\"0.1 1/nH\"]]\n{extra}"
        ))
        .unwrap()
    }

    fn run(c: &CircuitModel) -> LossBudget {
        let basis = eigensolve(c, &operating_point(c).unwrap()).unwrap();
        budget(c, ModeSource::Algebraic { basis: &basis, data: None }).unwrap()
    }

    fn dielectric(label: &str, p: f64, q: f64) -> LossyElement {
        LossyElement {
            label: label.into(),
            mechanism: LossMechanism::CapBulk,
            intrinsic_quality: Some(q),
            source: ParticipationSource::Ingested { participations: Some(vec![p]) },
        }
    }

    #[test]
    fn empty_budget_is_infinite() {
        let b = run(&lc(""));
        let m = &b.modes[0];
        assert!(m.q_total.is_infinite() && m.q_cap.is_infinite() && m.q_rad.is_infinite());
        let json = serde_json::to_string(m).unwrap();
        assert!(json.contains("\"q_total\":\"inf\""));
    }

    #[test]
    fn dielectric_budgets() {
        let mut c = lc("");
        c.loss_elements = vec![dielectric("a", 1.0, 1e6)];
        assert_relative_eq!(run(&c).modes[0].q_cap, 1e6, max_relative = 1e-12);
        c.loss_elements = vec![dielectric("a", 0.6, 1e6), dielectric("b", 0.4, 1e5)];
        let q = run(&c).modes[0].q_cap;
        assert_relative_eq!(q, 1.0 / (0.6e-6 + 4e-6), max_relative = 1e-12);
        assert!((q - 2.174e5).abs() < 1e2);
    }

    #[test]
    fn series_resistor_gives_lc_quality() {
        let c = lc("[[loss]]\nlabel = \"r\"\nmechanism = \"ind_bulk\"\nresistance = \"0.1 ohm\"\nbranch = 0\n");
        let b = run(&c);
        let w = b.modes[0].omega;
        assert_relative_eq!(b.modes[0].q_ind, w * 10e-9 / 0.1, max_relative = 1e-12);
        assert_eq!(b.modes[0].elements[0].participation, None);
    }

    #[test]
    fn coupling_scales_with_current() {
        let (k1, q1) = io_coupling(50.0, 1e-6, 1e-24, 3e10);
        let (_, q2) = io_coupling(50.0, 2e-6, 1e-24, 3e10);
        assert_relative_eq!(q1 / q2, 4.0, max_relative = 1e-15);
        assert_relative_eq!(q1 * k1, 3e10, max_relative = 1e-15);
        let (k0, q0) = io_coupling(50.0, 0.0, 1e-24, 3e10);
        assert_eq!((k0, q0), (0.0, f64::INFINITY));
    }

    #[test]
    fn buckets_add() {
        let mut c = lc("[[port]]\nlabel = \"in\"\nbranch = 0\n");
        c.loss_elements = vec![dielectric("a", 0.7, 2e6), {
            let mut e = dielectric("s", 0.3, 5e5);
            e.mechanism = LossMechanism::Seam;
            e
        }];
        let m = &run(&c).modes[0];
        let sum = 1.0 / m.q_cap + 1.0 / m.q_ind + 1.0 / m.q_rad;
        assert!((1.0 / m.q_total - sum).abs() <= 1e-12 * sum);
        assert_eq!(m.ports[0].sign, 1.0);
    }
}
