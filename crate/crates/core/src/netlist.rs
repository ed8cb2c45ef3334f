//! Circuit data model and the two TOML input formats.
//!
//! A netlist is already tree-reduced: it carries the N×N capacitance matrix,
//! the geometric inverse-inductance matrix, and the Josephson dipoles, each
//! sitting on a whole tree branch. The eigenmode-data file is the alternate
//! front end for field-solver output.

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{parse_quantity, Dimension, UnitError, PHI0};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum NetlistError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("physics error: {0}")]
    Physics(String),
    #[error("unit error at {location}: {source}")]
    Unit {
        location: String,
        #[source]
        source: UnitError,
    },
}

/// How a dipole's nonlinearity is specified.
#[derive(Debug, Clone, PartialEq)]
pub enum DipoleKind {
    /// Ordinary tunnel junction, energy −E_J cos φ.
    TunnelJunction,
    /// User-supplied Taylor coefficients `c_p` for p = 3, 4, ...
    ExplicitTaylor { coefficients: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopKind {
    /// The bias loop is open at dc (capacitor in the loop).
    Open,
    /// A dc-conducting loop closed through a linear inductance.
    Dc,
    /// The biased loop contains no junction at all.
    Linear,
}

/// External flux and current bias acting on one junction.
#[derive(Debug, Clone, PartialEq)]
pub struct FrustrationSpec {
    /// Φ_ext threading the loop (Wb).
    pub flux_ext: f64,
    /// Linear inductance closing the loop (H).
    pub loop_inductance: Option<f64>,
    /// DC current bias i_s (A).
    pub current: f64,
    pub loop_kind: LoopKind,
    /// Dipole has loops of its own (SNAIL-like).
    pub internal_loops: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JosephsonDipole {
    pub label: String,
    pub branch_index: usize,
    /// Bare E_J (J).
    pub energy_scale_bare: f64,
    pub kind: DipoleKind,
    pub bias: Option<FrustrationSpec>,
}

/// c_p of −cos φ normalized so that c₂ = 1/2.
pub fn cosine_coefficient(p: usize) -> f64 {
    if p % 2 == 1 {
        return 0.0;
    }
    let sign = if (p / 2) % 2 == 1 { 1.0 } else { -1.0 };
    sign / factorial(p)
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

impl JosephsonDipole {
    /// Bare Taylor coefficient c_p, `None` when an explicit list is too short.
    pub fn coefficient(&self, p: usize) -> Option<f64> {
        match &self.kind {
            DipoleKind::TunnelJunction => Some(cosine_coefficient(p)),
            DipoleKind::ExplicitTaylor { coefficients } => {
                p.checked_sub(3).and_then(|i| coefficients.get(i).copied())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMechanism {
    CapBulk,
    CapSurface,
    IndSurface,
    IndBulk,
    Seam,
}

impl LossMechanism {
    pub fn class(self) -> LossClass {
        match self {
            LossMechanism::CapBulk | LossMechanism::CapSurface => LossClass::Capacitive,
            LossMechanism::IndSurface | LossMechanism::IndBulk | LossMechanism::Seam => {
                LossClass::Inductive
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossClass {
    Capacitive,
    Inductive,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParticipationSource {
    /// p_ml per mode, inline or from the eigenmode-data file by label.
    Ingested { participations: Option<Vec<f64>> },
    /// Resistor in series with the inductive path of a tree branch.
    LumpedResistor { resistance: f64, branch: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossyElement {
    pub label: String,
    pub mechanism: LossMechanism,
    /// Q_l; required for ingested participations, unused for resistors.
    pub intrinsic_quality: Option<f64>,
    pub source: ParticipationSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Port {
    pub label: String,
    /// R_p (Ω).
    pub resistance: f64,
    /// Tree branch carrying the port; `None` means currents are ingested.
    pub branch_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitModel {
    pub tree_branch_count: usize,
    pub cap_matrix: DMatrix<f64>,
    pub ind_matrix_inv_mag: DMatrix<f64>,
    pub junctions: Vec<JosephsonDipole>,
    pub loss_elements: Vec<LossyElement>,
    pub ports: Vec<Port>,
}

impl CircuitModel {
    /// Validates every invariant and returns the model unchanged.
    pub fn new(
        cap_matrix: DMatrix<f64>,
        ind_matrix_inv_mag: DMatrix<f64>,
        junctions: Vec<JosephsonDipole>,
        loss_elements: Vec<LossyElement>,
        ports: Vec<Port>,
    ) -> Result<Self, NetlistError> {
        let model = CircuitModel {
            tree_branch_count: cap_matrix.nrows(),
            cap_matrix,
            ind_matrix_inv_mag,
            junctions,
            loss_elements,
            ports,
        };
        model.validate()?;
        Ok(model)
    }

    /// L⁻¹ with every junction folded in at energy `energies[j]`.
    pub fn total_inverse_inductance(&self, energies: &[f64]) -> DMatrix<f64> {
        let mut l_inv = self.ind_matrix_inv_mag.clone();
        for (jn, &e) in self.junctions.iter().zip(energies) {
            let k = jn.branch_index;
            l_inv[(k, k)] += e / (PHI0 * PHI0);
        }
        l_inv
    }

    pub fn validate(&self) -> Result<(), NetlistError> {
        let n = self.tree_branch_count;
        if n == 0 {
            return Err(NetlistError::Schema("circuit needs at least one branch".into()));
        }
        for (name, m) in [
            ("capacitance", &self.cap_matrix),
            ("inverse_inductance", &self.ind_matrix_inv_mag),
        ] {
            if m.nrows() != n || m.ncols() != n {
                return Err(NetlistError::Schema(format!(
                    "{name} must be {n}x{n}, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|x| !x.is_finite()) {
                return Err(NetlistError::Physics(format!("{name} has non-finite entries")));
            }
            let scale = m.amax();
            if (m - m.transpose()).amax() > 1e-12 * scale {
                return Err(NetlistError::Physics(format!("{name} matrix is not symmetric")));
            }
        }
        let mut seen = vec![false; n];
        for (j, jn) in self.junctions.iter().enumerate() {
            if jn.branch_index >= n {
                return Err(NetlistError::Physics(format!(
                    "junction {j} sits on branch {} but the circuit has {n}",
                    jn.branch_index
                )));
            }
            if std::mem::replace(&mut seen[jn.branch_index], true) {
                return Err(NetlistError::Physics(format!(
                    "two junctions share branch {}",
                    jn.branch_index
                )));
            }
            if !(jn.energy_scale_bare > 0.0 && jn.energy_scale_bare.is_finite()) {
                return Err(NetlistError::Physics(format!(
                    "junction {j} needs a positive energy"
                )));
            }
            if let Some(b) = &jn.bias {
                if let Some(l) = b.loop_inductance {
                    if !(l > 0.0) {
                        return Err(NetlistError::Physics(format!(
                            "junction {j} loop inductance must be positive"
                        )));
                    }
                }
                if b.loop_kind == LoopKind::Dc && b.loop_inductance.is_none() {
                    return Err(NetlistError::Physics(format!(
                        "junction {j} dc loop needs loop_inductance"
                    )));
                }
            }
        }
        if !is_positive_definite(&self.cap_matrix) {
            return Err(NetlistError::Physics(
                "capacitance matrix is not positive definite".into(),
            ));
        }
        let bare: Vec<f64> = self.junctions.iter().map(|j| j.energy_scale_bare).collect();
        if !is_positive_definite(&self.total_inverse_inductance(&bare)) {
            return Err(NetlistError::Physics(
                "total inverse-inductance matrix is not positive definite".into(),
            ));
        }
        for el in &self.loss_elements {
            if let Some(q) = el.intrinsic_quality {
                if !(q > 0.0) {
                    return Err(NetlistError::Physics(format!(
                        "loss element {:?} needs quality > 0",
                        el.label
                    )));
                }
            }
            match &el.source {
                ParticipationSource::Ingested { participations } => {
                    if el.intrinsic_quality.is_none() {
                        return Err(NetlistError::Schema(format!(
                            "loss element {:?} needs a quality",
                            el.label
                        )));
                    }
                    if let Some(ps) = participations {
                        check_unit_interval(ps, &el.label)?;
                    }
                }
                ParticipationSource::LumpedResistor { resistance, branch } => {
                    if !(*resistance > 0.0) || *branch >= n {
                        return Err(NetlistError::Physics(format!(
                            "loss element {:?} needs resistance > 0 on a valid branch",
                            el.label
                        )));
                    }
                }
            }
        }
        for p in &self.ports {
            if !(p.resistance > 0.0) {
                return Err(NetlistError::Physics(format!(
                    "port {:?} needs resistance > 0",
                    p.label
                )));
            }
            if p.branch_index.is_some_and(|b| b >= n) {
                return Err(NetlistError::Physics(format!(
                    "port {:?} branch out of range",
                    p.label
                )));
            }
        }
        Ok(())
    }
}

fn check_unit_interval(ps: &[f64], label: &str) -> Result<(), NetlistError> {
    if ps.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(NetlistError::Physics(format!(
            "participations of {label:?} must lie in [0, 1]"
        )));
    }
    Ok(())
}

/// Cholesky on a scaled copy, so tiny SI entries do not trip absolute checks.
pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    let scale = m.amax();
    if !(scale > 0.0) {
        return false;
    }
    Cholesky::new(m / scale).is_some()
}

// ---------------------------------------------------------------------------
// on-disk schema

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum Quantity {
    Number(f64),
    Text(String),
}

impl Quantity {
    fn si(&self, dim: Dimension, unit_scale: f64, at: &str) -> Result<f64, NetlistError> {
        match self {
            Quantity::Number(x) => Ok(x * unit_scale),
            Quantity::Text(t) => parse_quantity(t, dim).map_err(|source| NetlistError::Unit {
                location: at.to_string(),
                source,
            }),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetlist {
    format_version: u32,
    circuit: RawCircuit,
    #[serde(default, rename = "junction", skip_serializing_if = "Vec::is_empty")]
    junctions: Vec<RawJunction>,
    #[serde(default, rename = "loss", skip_serializing_if = "Vec::is_empty")]
    losses: Vec<RawLoss>,
    #[serde(default, rename = "port", skip_serializing_if = "Vec::is_empty")]
    ports: Vec<RawPort>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCircuit {
    branches: usize,
    capacitance: Vec<Vec<Quantity>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    capacitance_unit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    inverse_inductance: Option<Vec<Vec<Quantity>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    inverse_inductance_unit: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJunction {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    branch: usize,
    energy: Quantity,
    #[serde(default = "default_kind")]
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coefficients: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bias: Option<RawBias>,
}

fn default_kind() -> String {
    "tunnel".into()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBias {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    flux: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    loop_inductance: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    current: Option<Quantity>,
    #[serde(default, rename = "loop", skip_serializing_if = "Option::is_none")]
    loop_kind: Option<LoopKind>,
    #[serde(default)]
    internal_loops: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLoss {
    label: String,
    mechanism: LossMechanism,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    quality: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    participations: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    resistance: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    branch: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPort {
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    resistance: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    branch: Option<usize>,
}

fn unit_scale(unit: &Option<String>, dim: Dimension, at: &str) -> Result<f64, NetlistError> {
    match unit {
        None => Ok(1.0),
        Some(u) => parse_quantity(&format!("1 {u}"), dim).map_err(|source| NetlistError::Unit {
            location: at.to_string(),
            source,
        }),
    }
}

fn read_matrix(
    rows: &[Vec<Quantity>],
    n: usize,
    dim: Dimension,
    scale: f64,
    name: &str,
) -> Result<DMatrix<f64>, NetlistError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(NetlistError::Schema(format!(
            "circuit.{name} must be a {n}x{n} array of rows"
        )));
    }
    let mut m = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (k, q) in row.iter().enumerate() {
            m[(i, k)] = q.si(dim, scale, &format!("circuit.{name}[{i}][{k}]"))?;
        }
    }
    Ok(m)
}

fn check_version(v: u32) -> Result<(), NetlistError> {
    if v != FORMAT_VERSION {
        return Err(NetlistError::Schema(format!(
            "format_version {v} is not supported (expected {FORMAT_VERSION})"
        )));
    }
    Ok(())
}

/// Parses and validates a netlist document.
pub fn parse_netlist(text: &str) -> Result<CircuitModel, NetlistError> {
    let raw: RawNetlist = toml::from_str(text).map_err(|e| NetlistError::Schema(e.to_string()))?;
    check_version(raw.format_version)?;
    let n = raw.circuit.branches;
    let c_scale = unit_scale(&raw.circuit.capacitance_unit, Dimension::Capacitance, "circuit.capacitance_unit")?;
    let cap = read_matrix(&raw.circuit.capacitance, n, Dimension::Capacitance, c_scale, "capacitance")?;
    let l_scale = unit_scale(
        &raw.circuit.inverse_inductance_unit,
        Dimension::InverseInductance,
        "circuit.inverse_inductance_unit",
    )?;
    let l_inv = match &raw.circuit.inverse_inductance {
        Some(rows) => read_matrix(rows, n, Dimension::InverseInductance, l_scale, "inverse_inductance")?,
        None => DMatrix::zeros(n, n),
    };

    let mut junctions = Vec::with_capacity(raw.junctions.len());
    for (j, rj) in raw.junctions.into_iter().enumerate() {
        let at = |f: &str| format!("junction[{j}].{f}");
        let kind = match (rj.kind.as_str(), rj.coefficients) {
            ("tunnel", None) => DipoleKind::TunnelJunction,
            ("taylor", Some(coefficients)) => DipoleKind::ExplicitTaylor { coefficients },
            ("tunnel", Some(_)) => {
                return Err(NetlistError::Schema(format!(
                    "{}: tunnel junctions take no coefficients",
                    at("coefficients")
                )))
            }
            ("taylor", None) => {
                return Err(NetlistError::Schema(format!("{}: missing", at("coefficients"))))
            }
            (other, _) => {
                return Err(NetlistError::Schema(format!(
                    "{}: unknown kind {other:?} (tunnel or taylor)",
                    at("kind")
                )))
            }
        };
        let bias = match rj.bias {
            None => None,
            Some(b) => {
                let loop_inductance = b
                    .loop_inductance
                    .map(|q| q.si(Dimension::Inductance, 1.0, &at("bias.loop_inductance")))
                    .transpose()?;
                let loop_kind = b.loop_kind.unwrap_or(if loop_inductance.is_some() {
                    LoopKind::Dc
                } else {
                    LoopKind::Open
                });
                Some(FrustrationSpec {
                    flux_ext: b
                        .flux
                        .map(|q| q.si(Dimension::Flux, 1.0, &at("bias.flux")))
                        .transpose()?
                        .unwrap_or(0.0),
                    loop_inductance,
                    current: b
                        .current
                        .map(|q| q.si(Dimension::Current, 1.0, &at("bias.current")))
                        .transpose()?
                        .unwrap_or(0.0),
                    loop_kind,
                    internal_loops: b.internal_loops,
                })
            }
        };
        junctions.push(JosephsonDipole {
            label: rj.label.unwrap_or_else(|| format!("J{j}")),
            branch_index: rj.branch,
            energy_scale_bare: rj.energy.si(Dimension::Energy, 1.0, &at("energy"))?,
            kind,
            bias,
        });
    }

    let mut losses = Vec::with_capacity(raw.losses.len());
    for (l, rl) in raw.losses.into_iter().enumerate() {
        let source = match (rl.resistance, rl.branch) {
            (Some(r), Some(branch)) => ParticipationSource::LumpedResistor {
                resistance: r.si(Dimension::Resistance, 1.0, &format!("loss[{l}].resistance"))?,
                branch,
            },
            (None, None) => ParticipationSource::Ingested {
                participations: rl.participations.clone(),
            },
            _ => {
                return Err(NetlistError::Schema(format!(
                    "loss[{l}]: resistance and branch go together"
                )))
            }
        };
        if matches!(source, ParticipationSource::LumpedResistor { .. }) && rl.participations.is_some() {
            return Err(NetlistError::Schema(format!(
                "loss[{l}]: a resistor takes no participations"
            )));
        }
        losses.push(LossyElement {
            label: rl.label,
            mechanism: rl.mechanism,
            intrinsic_quality: rl.quality,
            source,
        });
    }

    let mut ports = Vec::with_capacity(raw.ports.len());
    for (p, rp) in raw.ports.into_iter().enumerate() {
        ports.push(Port {
            label: rp.label,
            resistance: rp
                .resistance
                .map(|q| q.si(Dimension::Resistance, 1.0, &format!("port[{p}].resistance")))
                .transpose()?
                .unwrap_or(50.0),
            branch_index: rp.branch,
        });
    }

    CircuitModel::new(cap, l_inv, junctions, losses, ports)
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<Quantity>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|k| Quantity::Number(m[(i, k)])).collect())
        .collect()
}

/// Writes a netlist in SI numbers; parsing it back gives an equal model.
pub fn serialize_netlist(model: &CircuitModel) -> String {
    let raw = RawNetlist {
        format_version: FORMAT_VERSION,
        circuit: RawCircuit {
            branches: model.tree_branch_count,
            capacitance: matrix_rows(&model.cap_matrix),
            capacitance_unit: None,
            inverse_inductance: Some(matrix_rows(&model.ind_matrix_inv_mag)),
            inverse_inductance_unit: None,
        },
        junctions: model
            .junctions
            .iter()
            .map(|j| {
                let (kind, coefficients) = match &j.kind {
                    DipoleKind::TunnelJunction => ("tunnel".to_string(), None),
                    DipoleKind::ExplicitTaylor { coefficients } => {
                        ("taylor".to_string(), Some(coefficients.clone()))
                    }
                };
                RawJunction {
                    label: Some(j.label.clone()),
                    branch: j.branch_index,
                    energy: Quantity::Number(j.energy_scale_bare),
                    kind,
                    coefficients,
                    bias: j.bias.as_ref().map(|b| RawBias {
                        flux: Some(Quantity::Number(b.flux_ext)),
                        loop_inductance: b.loop_inductance.map(Quantity::Number),
                        current: Some(Quantity::Number(b.current)),
                        loop_kind: Some(b.loop_kind),
                        internal_loops: b.internal_loops,
                    }),
                }
            })
            .collect(),
        losses: model
            .loss_elements
            .iter()
            .map(|l| {
                let (participations, resistance, branch) = match &l.source {
                    ParticipationSource::Ingested { participations } => {
                        (participations.clone(), None, None)
                    }
                    ParticipationSource::LumpedResistor { resistance, branch } => {
                        (None, Some(Quantity::Number(*resistance)), Some(*branch))
                    }
                };
                RawLoss {
                    label: l.label.clone(),
                    mechanism: l.mechanism,
                    quality: l.intrinsic_quality,
                    participations,
                    resistance,
                    branch,
                }
            })
            .collect(),
        ports: model
            .ports
            .iter()
            .map(|p| RawPort {
                label: p.label.clone(),
                resistance: Some(Quantity::Number(p.resistance)),
                branch: p.branch_index,
            })
            .collect(),
    };
    toml::to_string(&raw).expect("netlist serialization cannot fail")
}

// ---------------------------------------------------------------------------
// eigenmode data

/// One field-solver eigenmode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeRecord {
    /// ω_m (rad/s).
    pub frequency: f64,
    /// Total electric energy (J).
    pub energy_elec: f64,
    /// Total magnetic (geometric inductive) energy (J).
    pub energy_mag: f64,
    /// Peak current through each junction (A), netlist order.
    pub junction_currents: Option<Vec<f64>>,
    /// Orientation sign of each junction current.
    pub junction_signs: Vec<f64>,
    /// Energy fraction in each lossy element, `loss_labels` order.
    pub loss_participations: Vec<f64>,
    /// Peak current through each port (A), `port_labels` order.
    pub port_currents: Vec<f64>,
    pub port_signs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenmodeData {
    pub modes: Vec<ModeRecord>,
    pub loss_labels: Vec<String>,
    pub port_labels: Vec<String>,
    /// The file claims every relevant mode is present.
    pub modes_complete: bool,
}

/// Relative tolerance on E_mag ≤ E_elec.
pub const ENERGY_BALANCE_TOL: f64 = 1e-6;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEigenmodeData {
    format_version: u32,
    #[serde(default)]
    modes_complete: bool,
    #[serde(default)]
    loss_labels: Vec<String>,
    #[serde(default)]
    port_labels: Vec<String>,
    #[serde(rename = "mode")]
    modes: Vec<RawMode>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMode {
    frequency: Quantity,
    energy_elec: f64,
    energy_mag: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    junction_currents: Option<Vec<Quantity>>,
    #[serde(default)]
    junction_signs: Vec<i8>,
    #[serde(default)]
    loss_participations: Vec<f64>,
    #[serde(default)]
    port_currents: Vec<Quantity>,
    #[serde(default)]
    port_signs: Vec<i8>,
}

fn read_signs(s: &[i8], at: &str) -> Result<Vec<f64>, NetlistError> {
    s.iter()
        .map(|&v| match v {
            1 => Ok(1.0),
            -1 => Ok(-1.0),
            _ => Err(NetlistError::Schema(format!("{at}: signs must be +1 or -1"))),
        })
        .collect()
}

pub fn parse_eigenmode_data(text: &str) -> Result<EigenmodeData, NetlistError> {
    let raw: RawEigenmodeData =
        toml::from_str(text).map_err(|e| NetlistError::Schema(e.to_string()))?;
    check_version(raw.format_version)?;
    if raw.modes.is_empty() {
        return Err(NetlistError::Schema("eigenmode data needs at least one [[mode]]".into()));
    }
    let mut modes = Vec::with_capacity(raw.modes.len());
    for (m, rm) in raw.modes.into_iter().enumerate() {
        let at = |f: &str| format!("mode[{m}].{f}");
        let frequency = rm.frequency.si(Dimension::AngularFrequency, 1.0, &at("frequency"))?;
        if !(frequency > 0.0) {
            return Err(NetlistError::Physics(format!("{}: must be positive", at("frequency"))));
        }
        if !(rm.energy_elec > 0.0) || rm.energy_mag < 0.0 {
            return Err(NetlistError::Physics(format!(
                "{}: energies must satisfy E_elec > 0 and E_mag >= 0",
                at("energy_elec")
            )));
        }
        if rm.energy_mag > rm.energy_elec * (1.0 + ENERGY_BALANCE_TOL) {
            return Err(NetlistError::Physics(format!(
                "mode {m}: E_mag = {:e} J exceeds E_elec = {:e} J",
                rm.energy_mag, rm.energy_elec
            )));
        }
        let junction_currents = rm
            .junction_currents
            .map(|qs| {
                qs.iter()
                    .enumerate()
                    .map(|(j, q)| q.si(Dimension::Current, 1.0, &at(&format!("junction_currents[{j}]"))))
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()?;
        let junction_signs = read_signs(&rm.junction_signs, &at("junction_signs"))?;
        let port_currents = rm
            .port_currents
            .iter()
            .enumerate()
            .map(|(p, q)| q.si(Dimension::Current, 1.0, &at(&format!("port_currents[{p}]"))))
            .collect::<Result<Vec<_>, _>>()?;
        let port_signs = read_signs(&rm.port_signs, &at("port_signs"))?;
        if rm.loss_participations.len() != raw.loss_labels.len() {
            return Err(NetlistError::Schema(format!(
                "{}: expected {} entries",
                at("loss_participations"),
                raw.loss_labels.len()
            )));
        }
        check_unit_interval(&rm.loss_participations, &at("loss_participations"))?;
        if port_currents.len() != raw.port_labels.len() || port_signs.len() != port_currents.len() {
            return Err(NetlistError::Schema(format!(
                "{}: expected {} currents and signs",
                at("port_currents"),
                raw.port_labels.len()
            )));
        }
        modes.push(ModeRecord {
            frequency,
            energy_elec: rm.energy_elec,
            energy_mag: rm.energy_mag.min(rm.energy_elec),
            junction_currents,
            junction_signs,
            loss_participations: rm.loss_participations,
            port_currents,
            port_signs,
        });
    }
    Ok(EigenmodeData {
        modes,
        loss_labels: raw.loss_labels,
        port_labels: raw.port_labels,
        modes_complete: raw.modes_complete,
    })
}

/// Writes eigenmode data in SI numbers (frequencies in rad/s).
pub fn serialize_eigenmode_data(data: &EigenmodeData) -> String {
    let signs = |v: &[f64]| v.iter().map(|&x| if x < 0.0 { -1 } else { 1 }).collect();
    let raw = RawEigenmodeData {
        format_version: FORMAT_VERSION,
        modes_complete: data.modes_complete,
        loss_labels: data.loss_labels.clone(),
        port_labels: data.port_labels.clone(),
        modes: data
            .modes
            .iter()
            .map(|m| RawMode {
                frequency: Quantity::Number(m.frequency),
                energy_elec: m.energy_elec,
                energy_mag: m.energy_mag,
                junction_currents: m
                    .junction_currents
                    .as_ref()
                    .map(|v| v.iter().copied().map(Quantity::Number).collect()),
                junction_signs: signs(&m.junction_signs),
                loss_participations: m.loss_participations.clone(),
                port_currents: m.port_currents.iter().copied().map(Quantity::Number).collect(),
                port_signs: signs(&m.port_signs),
            })
            .collect(),
    };
    toml::to_string(&raw).expect("eigenmode serialization cannot fail")
}
