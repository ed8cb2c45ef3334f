//! Orchestration behind the `eprq` command line.
//!
//! `cmd_analyze` runs the whole pipeline and returns a [`Report`];
//! `cmd_verify` runs only the consistency checks. Errors carry the stage that
//! raised them and map onto the process exit codes.

use std::fmt;
use std::path::PathBuf;

use eprq_core::epr::EprDiagnostics;
use eprq_core::fock::{converge, FockError, FockInputs, FockSolution, Potential};
use eprq_core::hamiltonian::{dispersive_to_order, dispersive_validity, kerr_matrix_p4, DISPERSIVE_WARN};
use eprq_core::loss::{budget, ModeSource};
use eprq_core::{
    eigensolve, epr_from_eigenmode_data, epr_from_modes, operating_point, parse_eigenmode_data, parse_netlist,
    verify_universal_properties, CircuitModel, EigenmodeData, EprTable, ModeBasis, OperatingPoint,
};

pub mod report;

pub use report::{render, Report, VerifySummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum OutputFormat {
    #[default]
    Table,
    Json,
}

#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub netlist: PathBuf,
    /// Eigenmode-data file; replaces the algebraic mode solve.
    pub modes: Option<PathBuf>,
    /// Highest even order of the dispersive expansion.
    pub order: usize,
    pub oracle: bool,
    /// Relative convergence target of the Fock oracle.
    pub oracle_tol: f64,
    /// Largest accepted relative deviation between analytic and oracle values.
    pub oracle_threshold: f64,
    pub strict_modes: bool,
    pub format: OutputFormat,
    pub output: Option<PathBuf>,
    /// Fock-basis dimension cap.
    pub budget: usize,
}

impl AnalysisConfig {
    pub fn new(netlist: impl Into<PathBuf>) -> Self {
        AnalysisConfig {
            netlist: netlist.into(),
            modes: None,
            order: 8,
            oracle: false,
            oracle_tol: 1e-6,
            oracle_threshold: 0.05,
            strict_modes: false,
            format: OutputFormat::Table,
            output: None,
            budget: eprq_core::fock::DEFAULT_BUDGET,
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.order < 4 || self.order % 2 == 1 {
            return Err(CliError::input("config", format!("--order must be even and at least 4, got {}", self.order)));
        }
        if !(self.oracle_tol > 0.0) || !(self.oracle_threshold > 0.0) {
            return Err(CliError::input("config", "oracle tolerances must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Numerical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: ErrorKind,
    pub stage: &'static str,
    pub message: String,
}

impl CliError {
    pub fn input(stage: &'static str, message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Input, stage, message: message.into() }
    }

    pub fn numerical(stage: &'static str, message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Numerical, stage, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Input => 2,
            ErrorKind::Numerical => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.stage, self.message)
    }
}

impl std::error::Error for CliError {}

/// Everything upstream of the Hamiltonian.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub circuit: CircuitModel,
    pub data: Option<EigenmodeData>,
    pub op: OperatingPoint,
    pub basis: Option<ModeBasis>,
    /// ω_m (rad/s).
    pub omega: Vec<f64>,
    pub table: EprTable,
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::input("io", format!("{}: {e}", path.display())))
}

pub fn run_pipeline(config: &AnalysisConfig) -> Result<Pipeline, CliError> {
    use eprq_core::equilibrium::EquilibriumError as E;
    let circuit = parse_netlist(&read(&config.netlist)?).map_err(|e| CliError::input("netlist", e.to_string()))?;
    let op = operating_point(&circuit).map_err(|e| match e {
        E::UnsupportedBias { .. } | E::InvalidInput(_) => CliError::input("equilibrium", e.to_string()),
        _ => CliError::numerical("equilibrium", e.to_string()),
    })?;
    match &config.modes {
        Some(path) => {
            let data = parse_eigenmode_data(&read(path)?).map_err(|e| CliError::input("modes", e.to_string()))?;
            let table = epr_from_eigenmode_data(&data, &op.dipoles).map_err(|e| CliError::input("epr", e.to_string()))?;
            let omega = data.modes.iter().map(|m| m.frequency).collect();
            Ok(Pipeline { circuit, data: Some(data), op, basis: None, omega, table })
        }
        None => {
            let basis = eigensolve(&circuit, &op).map_err(|e| CliError::numerical("modes", e.to_string()))?;
            let table = epr_from_modes(&op.dipoles, &basis);
            let omega = basis.omega.iter().copied().collect();
            Ok(Pipeline { circuit, data: None, op, basis: Some(basis), omega, table })
        }
    }
}

/// Starting cutoff per mode, larger for strongly nonlinear modes.
pub fn initial_cutoffs(table: &EprTable) -> Vec<usize> {
    (0..table.mode_count())
        .map(|m| {
            let phi2 = table.phi_zpf.row(m).iter().map(|x| x * x).fold(0.0, f64::max);
            ((4.0 + 60.0 * phi2).ceil() as usize).clamp(4, 16)
        })
        .collect()
}

/// Runs the Fock oracle; a budget overrun yields the last solution and a
/// warning.
pub fn run_oracle(
    pipeline: &Pipeline,
    config: &AnalysisConfig,
    warnings: &mut Vec<String>,
) -> Result<FockSolution, CliError> {
    let inputs = FockInputs {
        omega: &pipeline.omega,
        phi_zpf: &pipeline.table.phi_zpf,
        dipoles: &pipeline.op.dipoles,
        potential: Potential::FullCosine,
    };
    match converge(&inputs, &initial_cutoffs(&pipeline.table), config.oracle_tol, config.budget) {
        Ok(s) => Ok(s),
        Err(FockError::BudgetExceeded { dimension, budget, partial: Some(p) }) => {
            warnings.push(format!(
                "oracle stopped before converging: dimension {dimension} exceeds the budget of {budget}"
            ));
            Ok(*p)
        }
        Err(e @ FockError::BudgetExceeded { .. }) | Err(e @ FockError::InvalidCutoffs) => {
            Err(CliError::input("fock", e.to_string()))
        }
        Err(e) => Err(CliError::numerical("fock", e.to_string())),
    }
}

fn hamiltonian_error(e: eprq_core::hamiltonian::HamiltonianError) -> CliError {
    CliError::input("hamiltonian", e.to_string())
}

/// Full analysis: frequencies, EPRs, Kerr parameters, optional oracle, loss
/// budget and diagnostics.
pub fn cmd_analyze(config: &AnalysisConfig) -> Result<Report, CliError> {
    config.validate()?;
    let pipeline = run_pipeline(config)?;
    let mut warnings = Vec::new();
    let dipoles = &pipeline.op.dipoles;
    let nonlinear = if dipoles.is_empty() {
        None
    } else {
        let quartic = kerr_matrix_p4(&pipeline.table, &pipeline.omega, dipoles).map_err(hamiltonian_error)?;
        let (full, corrections) =
            dispersive_to_order(&pipeline.table, &pipeline.omega, dipoles, config.order).map_err(hamiltonian_error)?;
        Some((quartic, full, corrections))
    };
    let validity = if dipoles.is_empty() {
        Vec::new()
    } else {
        dispersive_validity(&pipeline.table, &pipeline.omega, dipoles, config.order, DISPERSIVE_WARN)
    };
    for v in validity.iter().filter(|v| v.warn) {
        warnings.push(format!(
            "modes {} and {}: nonlinear scale is {:.3} of their detuning; the dispersive expansion may be strained",
            v.m, v.n, v.ratio
        ));
    }
    for &(m, j, raw) in &pipeline.table.clamped {
        warnings.push(format!("p[{m}][{j}] = {raw} clamped to 1"));
    }
    let oracle = if config.oracle && nonlinear.is_some() {
        Some(run_oracle(&pipeline, config, &mut warnings)?)
    } else {
        None
    };
    let source = match (&pipeline.basis, &pipeline.data) {
        (Some(basis), _) => ModeSource::Algebraic { basis, data: None },
        (None, Some(data)) => ModeSource::Ingested(data),
        (None, None) => unreachable!("the pipeline always has a mode source"),
    };
    let losses = budget(&pipeline.circuit, source).map_err(|e| CliError::input("loss", e.to_string()))?;
    let properties = verify_universal_properties(&pipeline.table, config.strict_modes);
    Ok(Report::assemble(&pipeline, nonlinear, oracle, losses, properties, validity, warnings))
}

/// Consistency checks only; `passed()` on the result decides the exit code.
pub fn cmd_verify(config: &AnalysisConfig) -> Result<VerifySummary, CliError> {
    config.validate()?;
    let pipeline = run_pipeline(config)?;
    let properties = verify_universal_properties(&pipeline.table, config.strict_modes);
    let mut warnings = Vec::new();
    let oracle = if config.oracle && !pipeline.op.dipoles.is_empty() {
        let quartic = kerr_matrix_p4(&pipeline.table, &pipeline.omega, &pipeline.op.dipoles).map_err(hamiltonian_error)?;
        Some((quartic, run_oracle(&pipeline, config, &mut warnings)?))
    } else {
        None
    };
    Ok(VerifySummary::build(&properties, oracle.as_ref().map(|(q, s)| (q, s)), config.oracle_threshold, warnings))
}

/// Checks of a hand-built table, as `cmd_verify` would run them.
pub fn verify_table(table: &EprTable, strict_modes: bool) -> VerifySummary {
    let properties: EprDiagnostics = verify_universal_properties(table, strict_modes);
    VerifySummary::build(&properties, None, 0.05, Vec::new())
}
