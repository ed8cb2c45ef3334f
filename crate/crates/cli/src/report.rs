//! Report documents and their text and JSON renderings.
//!
//! JSON carries SI values with frequencies in rad/s; the text tables show
//! frequencies in GHz and Kerr parameters in MHz. Field order is fixed by the
//! struct layouts, so equal inputs render byte-identically.

use std::fmt::Write as _;

use eprq_core::epr::{EprDiagnostics, Provenance};
use eprq_core::equilibrium::BiasClass;
use eprq_core::fock::FockSolution;
use eprq_core::hamiltonian::{OrderCorrection, ValidityRatio};
use eprq_core::loss::LossBudget;
use eprq_core::units::to_ghz;
use eprq_core::DispersiveReport;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::{OutputFormat, Pipeline};

pub const REPORT_VERSION: u32 = 1;

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn vec_of(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeEntry {
    pub index: usize,
    /// ω_m (rad/s).
    pub omega: f64,
    /// ω_m − Δ_m (rad/s); equal to ω_m without junctions.
    pub dressed_omega: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct JunctionEntry {
    pub label: String,
    pub branch: usize,
    /// E_j at the operating point (J).
    pub energy: f64,
    pub phi_eq: f64,
    pub bias_class: BiasClass,
}

#[derive(Debug, Clone, Serialize)]
pub struct EprSection {
    pub participation: Vec<Vec<f64>>,
    pub sign: Vec<Vec<f64>>,
    pub phi_zpf: Vec<Vec<f64>>,
    pub complete: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct KerrEntry {
    pub order: usize,
    /// α_m (rad/s).
    pub alpha: Vec<f64>,
    /// χ_mn (rad/s).
    pub chi: Vec<Vec<f64>>,
    /// Δ_m (rad/s).
    pub lamb: Vec<f64>,
}

impl KerrEntry {
    fn from_report(r: &DispersiveReport) -> Self {
        KerrEntry { order: r.order, alpha: vec_of(&r.alpha), chi: rows(&r.chi), lamb: vec_of(&r.lamb) }
    }

    fn from_correction(c: &OrderCorrection) -> Self {
        KerrEntry { order: c.order, alpha: vec_of(&c.alpha), chi: rows(&c.chi), lamb: vec_of(&c.lamb) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NonlinearSection {
    /// Summed through the requested order.
    pub total: KerrEntry,
    pub quartic: KerrEntry,
    /// Contribution of each order above four.
    pub corrections: Vec<KerrEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSection {
    pub cutoffs: Vec<usize>,
    pub converged: bool,
    pub max_relative_change: Option<f64>,
    /// Smallest squared overlap among assigned levels.
    pub min_overlap: f64,
    pub ambiguous: Vec<Vec<usize>>,
    pub dressed_omega: Vec<Option<f64>>,
    pub alpha: Vec<Option<f64>>,
    pub chi: Vec<Vec<Option<f64>>>,
    /// (analytic − oracle)/oracle with the quartic analytic values.
    pub alpha_deviation: Vec<Option<f64>>,
    pub chi_deviation: Vec<Vec<Option<f64>>>,
    /// The same against the analytic values summed to the requested order.
    pub alpha_deviation_to_order: Vec<Option<f64>>,
    pub chi_deviation_to_order: Vec<Vec<Option<f64>>>,
}

fn deviation(analytic: f64, oracle: Option<f64>) -> Option<f64> {
    let o = oracle?;
    (o != 0.0).then(|| (analytic - o) / o)
}

/// Relative deviations of α and off-diagonal χ from the oracle.
pub fn oracle_deviations(
    analytic: &DispersiveReport,
    sol: &FockSolution,
) -> (Vec<Option<f64>>, Vec<Vec<Option<f64>>>) {
    let m_count = sol.alpha.len();
    let alpha = (0..m_count).map(|m| deviation(analytic.alpha[m], sol.alpha[m])).collect();
    let chi = (0..m_count)
        .map(|m| {
            (0..m_count)
                .map(|n| if m == n { None } else { deviation(analytic.chi[(m, n)], sol.chi[m][n]) })
                .collect()
        })
        .collect();
    (alpha, chi)
}

impl OracleSection {
    fn build(sol: &FockSolution, quartic: &DispersiveReport, total: &DispersiveReport) -> Self {
        let (alpha_deviation, chi_deviation) = oracle_deviations(quartic, sol);
        let (alpha_deviation_to_order, chi_deviation_to_order) = oracle_deviations(total, sol);
        let min_overlap = sol
            .assignments
            .iter()
            .filter(|(label, _)| !sol.ambiguous.contains(label))
            .map(|(_, a)| a.overlap)
            .fold(1.0, f64::min);
        OracleSection {
            cutoffs: sol.cutoffs.clone(),
            converged: sol.convergence.as_ref().is_some_and(|c| c.converged),
            max_relative_change: sol.convergence.as_ref().map(|c| c.max_relative_change),
            min_overlap,
            ambiguous: sol.ambiguous.clone(),
            dressed_omega: sol.dressed.clone(),
            alpha: sol.alpha.clone(),
            chi: sol.chi.clone(),
            alpha_deviation,
            chi_deviation,
            alpha_deviation_to_order,
            chi_deviation_to_order,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub properties: EprDiagnostics,
    pub dispersive_validity: Vec<ValidityRatio>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub format_version: u32,
    pub mode_source: Provenance,
    pub modes: Vec<ModeEntry>,
    pub junctions: Vec<JunctionEntry>,
    pub epr: EprSection,
    pub nonlinear: Option<NonlinearSection>,
    pub oracle: Option<OracleSection>,
    pub loss: LossBudget,
    pub diagnostics: Diagnostics,
}

impl Report {
    pub(crate) fn assemble(
        pipeline: &Pipeline,
        nonlinear: Option<(DispersiveReport, DispersiveReport, Vec<OrderCorrection>)>,
        oracle: Option<FockSolution>,
        loss: LossBudget,
        properties: EprDiagnostics,
        dispersive_validity: Vec<ValidityRatio>,
        warnings: Vec<String>,
    ) -> Self {
        let modes = pipeline
            .omega
            .iter()
            .enumerate()
            .map(|(index, &omega)| ModeEntry {
                index,
                omega,
                dressed_omega: nonlinear.as_ref().map_or(omega, |n| n.1.dressed_freq[index]),
            })
            .collect();
        let junctions = pipeline
            .op
            .dipoles
            .iter()
            .map(|d| JunctionEntry {
                label: d.label.clone(),
                branch: d.branch_index,
                energy: d.energy,
                phi_eq: d.phi_eq,
                bias_class: d.bias_class,
            })
            .collect();
        let t = &pipeline.table;
        let oracle = match (&oracle, &nonlinear) {
            (Some(sol), Some((q, total, _))) => Some(OracleSection::build(sol, q, total)),
            _ => None,
        };
        Report {
            format_version: REPORT_VERSION,
            mode_source: t.provenance,
            modes,
            junctions,
            epr: EprSection { participation: rows(&t.p), sign: rows(&t.s), phi_zpf: rows(&t.phi_zpf), complete: t.complete },
            nonlinear: nonlinear.map(|(q, total, corrections)| NonlinearSection {
                total: KerrEntry::from_report(&total),
                quartic: KerrEntry::from_report(&q),
                corrections: corrections.iter().map(KerrEntry::from_correction).collect(),
            }),
            oracle,
            loss,
            diagnostics: Diagnostics { properties, dispersive_validity, warnings },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize") + "\n"
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let mhz = |w: f64| to_ghz(w) * 1e3;
        let opt = |v: Option<f64>, f: &dyn Fn(f64) -> String| v.map_or("-".to_string(), f);

        let _ = writeln!(s, "Modes ({:?} source)", self.mode_source);
        let _ = writeln!(s, "  {:>4}  {:>14}  {:>14}", "mode", "bare (GHz)", "dressed (GHz)");
        for m in &self.modes {
            let _ = writeln!(s, "  {:>4}  {:>14.6}  {:>14.6}", m.index, to_ghz(m.omega), to_ghz(m.dressed_omega));
        }

        if !self.junctions.is_empty() {
            let _ = writeln!(s, "\nJunctions");
            for j in &self.junctions {
                let _ = writeln!(
                    s,
                    "  {:<8} branch {}  E_j/h = {:.4} GHz  phi_eq = {:.6}",
                    j.label,
                    j.branch,
                    eprq_core::units::energy_to_ghz(j.energy),
                    j.phi_eq
                );
            }
            let _ = writeln!(s, "\nEnergy participation p_mj (sign)");
            for (m, row) in self.epr.participation.iter().enumerate() {
                let cells: Vec<String> = row
                    .iter()
                    .zip(&self.epr.sign[m])
                    .map(|(p, sg)| format!("{:>10.6} ({})", p, if *sg < 0.0 { '-' } else { '+' }))
                    .collect();
                let _ = writeln!(s, "  {:>4}  {}", m, cells.join("  "));
            }
        }

        match &self.nonlinear {
            None => {
                let _ = writeln!(s, "\nNo junctions: the circuit is linear.");
            }
            Some(n) => {
                let _ = writeln!(s, "\nKerr parameters through order {} (MHz)", n.total.order);
                let _ = writeln!(s, "  {:>4}  {:>12}  {:>12}  {:>12}", "mode", "alpha", "alpha(4)", "lamb");
                for m in 0..n.total.alpha.len() {
                    let _ = writeln!(
                        s,
                        "  {:>4}  {:>12.6}  {:>12.6}  {:>12.6}",
                        m,
                        mhz(n.total.alpha[m]),
                        mhz(n.quartic.alpha[m]),
                        mhz(n.total.lamb[m])
                    );
                }
                let _ = writeln!(s, "  chi (MHz)");
                for row in &n.total.chi {
                    let cells: Vec<String> = row.iter().map(|x| format!("{:>12.6}", mhz(*x))).collect();
                    let _ = writeln!(s, "    {}", cells.join(" "));
                }
                for c in &n.corrections {
                    let cells: Vec<String> = c.alpha.iter().map(|x| format!("{:.6}", mhz(*x))).collect();
                    let _ = writeln!(s, "  order {} correction to alpha: [{}]", c.order, cells.join(", "));
                }
            }
        }

        if let Some(o) = &self.oracle {
            let _ = writeln!(
                s,
                "\nFock oracle: cutoffs {:?}, {}, min overlap {:.4}",
                o.cutoffs,
                if o.converged { "converged" } else { "NOT converged" },
                o.min_overlap
            );
            let pct = |x: f64| format!("{:+.3}%", 100.0 * x);
            let _ = writeln!(s, "  {:>4}  {:>12}  {:>12}  {:>10}", "mode", "alpha (MHz)", "dressed", "dev(4)");
            for m in 0..o.alpha.len() {
                let _ = writeln!(
                    s,
                    "  {:>4}  {:>12}  {:>12}  {:>10}",
                    m,
                    opt(o.alpha[m], &|x| format!("{:.6}", mhz(x))),
                    opt(o.dressed_omega[m], &|x| format!("{:.6}", to_ghz(x))),
                    opt(o.alpha_deviation[m], &pct)
                );
            }
            for m in 0..o.chi.len() {
                for n in (m + 1)..o.chi.len() {
                    let _ = writeln!(
                        s,
                        "  chi[{m}][{n}] = {} MHz, deviation {}",
                        opt(o.chi[m][n], &|x| format!("{:.6}", mhz(x))),
                        opt(o.chi_deviation[m][n], &pct)
                    );
                }
            }
        }

        let _ = writeln!(s, "\nLoss budget");
        let _ = writeln!(s, "  {:>4}  {:>12}  {:>12}  {:>12}  {:>12}", "mode", "Q_total", "Q_cap", "Q_ind", "Q_rad");
        let q = |x: f64| if x.is_finite() { format!("{x:.4e}") } else { "inf".into() };
        for (m, b) in self.loss.modes.iter().enumerate() {
            let _ = writeln!(s, "  {:>4}  {:>12}  {:>12}  {:>12}  {:>12}", m, q(b.q_total), q(b.q_cap), q(b.q_ind), q(b.q_rad));
            for pair in &b.port_pairs {
                let _ = writeln!(
                    s,
                    "        ports {} and {}: {} sign",
                    pair.first,
                    pair.second,
                    if pair.same_sign { "same" } else { "opposite" }
                );
            }
        }

        let _ = writeln!(s, "\nDiagnostics");
        for c in &self.diagnostics.properties.checks {
            let _ = writeln!(s, "  {}", check_line(c.name, c.residual, c.threshold, c.passed(), c.note.as_deref()));
        }
        for v in &self.diagnostics.dispersive_validity {
            let _ = writeln!(s, "  dispersive validity {}-{}: {:.4}{}", v.m, v.n, v.ratio, if v.warn { " (warn)" } else { "" });
        }
        for w in &self.diagnostics.warnings {
            let _ = writeln!(s, "  warning: {w}");
        }
        s
    }
}

fn check_line(name: &str, residual: Option<f64>, threshold: f64, passed: bool, note: Option<&str>) -> String {
    match residual {
        None => format!("SKIP  {name}: {}", note.unwrap_or("")),
        Some(r) => format!("{}  {name}: residual {r:.3e} (threshold {threshold:.1e})", if passed { "PASS" } else { "FAIL" }),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub residual: Option<f64>,
    pub threshold: f64,
    pub passed: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifySummary {
    pub checks: Vec<CheckLine>,
    pub warnings: Vec<String>,
}

impl VerifySummary {
    pub(crate) fn build(
        properties: &EprDiagnostics,
        oracle: Option<(&DispersiveReport, &FockSolution)>,
        threshold: f64,
        warnings: Vec<String>,
    ) -> Self {
        let mut checks: Vec<CheckLine> = properties
            .checks
            .iter()
            .map(|c| CheckLine {
                name: c.name.to_string(),
                residual: c.residual,
                threshold: c.threshold,
                passed: c.passed(),
                note: c.note.clone(),
            })
            .collect();
        if let Some((analytic, sol)) = oracle {
            let (alpha, chi) = oracle_deviations(analytic, sol);
            // couplings far below every anharmonicity carry no information
            let scale = sol.alpha.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
            let mut push = |name: String, dev: Option<f64>, value: Option<f64>| {
                let negligible = value.is_some_and(|v| v.abs() < 1e-3 * scale);
                let (residual, note) = match (dev, negligible) {
                    (_, true) => (None, Some("negligible next to the anharmonicities".to_string())),
                    (None, _) => (None, Some("level assignment ambiguous".to_string())),
                    (Some(d), false) => (Some(d.abs()), None),
                };
                checks.push(CheckLine {
                    passed: residual.is_none_or(|r| r <= threshold),
                    name,
                    residual,
                    threshold,
                    note,
                });
            };
            for m in 0..alpha.len() {
                push(format!("oracle_alpha[{m}]"), alpha[m], sol.alpha[m]);
            }
            for m in 0..alpha.len() {
                for n in (m + 1)..alpha.len() {
                    push(format!("oracle_chi[{m}][{n}]"), chi[m][n], sol.chi[m][n]);
                }
            }
            if !sol.convergence.as_ref().is_some_and(|c| c.converged) {
                checks.push(CheckLine {
                    name: "oracle_converged".into(),
                    residual: sol.convergence.as_ref().map(|c| c.max_relative_change),
                    threshold: 0.0,
                    passed: false,
                    note: Some("the oracle did not reach its tolerance".into()),
                });
            }
        }
        VerifySummary { checks, warnings }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(s, "{}", check_line(&c.name, c.residual, c.threshold, c.passed, c.note.as_deref()));
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        let _ = writeln!(s, "{}", if self.passed() { "verify: PASS" } else { "verify: FAIL" });
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summaries always serialize") + "\n"
    }
}

/// Renders a report in the requested format.
pub fn render(report: &Report, format: OutputFormat) -> String {
    match format {
        OutputFormat::Table => report.to_table(),
        OutputFormat::Json => report.to_json(),
    }
}
