use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eprq_cli::{cmd_analyze, cmd_verify, render, run_pipeline, AnalysisConfig, CliError, OutputFormat};
use eprq_core::hamiltonian::{enumerate_terms, general_coefficient, pump_rate, PumpTone, DEFAULT_TERM_BUDGET};
use eprq_core::units::{ghz, to_ghz, HBAR};
use nalgebra::Complex;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "eprq", version, about = "Energy-participation quantization of Josephson circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Frequencies, EPRs, Kerr parameters, loss budget and diagnostics.
    Analyze(Common),
    /// Universal EPR properties and, with --oracle, oracle consistency.
    Verify(Common),
    /// Every normal-ordered interaction term up to --order.
    Terms {
        #[command(flatten)]
        common: Common,
        /// Refuse to enumerate more terms than this.
        #[arg(long, default_value_t = DEFAULT_TERM_BUDGET)]
        term_budget: u128,
    },
    /// Rate and detuning of one term under stiff pumps.
    Pump {
        #[command(flatten)]
        common: Common,
        /// Order p of the term.
        #[arg(long)]
        power: usize,
        /// Annihilation exponents, one per mode (e.g. 0,1).
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<u32>,
        /// Creation exponents, one per mode.
        #[arg(long, value_delimiter = ',')]
        beta: Vec<u32>,
        /// MODE:RE,IM@GHZ, repeatable.
        #[arg(long = "pump", value_parser = parse_pump)]
        pumps: Vec<PumpTone>,
        /// Modes kept as operators.
        #[arg(long, value_delimiter = ',')]
        signal: Vec<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// Netlist file.
    netlist: PathBuf,
    /// Eigenmode-data file replacing the algebraic mode solve.
    #[arg(long)]
    modes: Option<PathBuf>,
    /// Highest even order of the expansion.
    #[arg(long, default_value_t = 8)]
    order: usize,
    /// Check the analytic parameters against Fock-space diagonalization.
    #[arg(long)]
    oracle: bool,
    /// Relative convergence target of the oracle.
    #[arg(long, default_value_t = 1e-6)]
    oracle_tol: f64,
    /// Largest accepted relative analytic-oracle deviation in verify.
    #[arg(long, default_value_t = 0.05)]
    oracle_threshold: f64,
    /// Run the sum-rule and orthogonality checks (needs a complete mode set).
    #[arg(long)]
    strict_modes: bool,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
    /// Fock-basis dimension cap for the oracle.
    #[arg(long, default_value_t = eprq_core::fock::DEFAULT_BUDGET)]
    budget: usize,
    /// Write the report here instead of stdout.
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> AnalysisConfig {
        AnalysisConfig {
            netlist: self.netlist.clone(),
            modes: self.modes.clone(),
            order: self.order,
            oracle: self.oracle,
            oracle_tol: self.oracle_tol,
            oracle_threshold: self.oracle_threshold,
            strict_modes: self.strict_modes,
            format: self.format,
            output: self.output.clone(),
            budget: self.budget,
        }
    }
}

fn parse_pump(s: &str) -> Result<PumpTone, String> {
    let err = || format!("expected MODE:RE,IM@GHZ, got {s:?}");
    let (mode, rest) = s.split_once(':').ok_or_else(err)?;
    let (xi, freq) = rest.split_once('@').ok_or_else(err)?;
    let (re, im) = xi.split_once(',').ok_or_else(err)?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| err());
    Ok(PumpTone {
        mode: mode.trim().parse().map_err(|_| err())?,
        xi: Complex::new(num(re)?, num(im)?),
        freq: ghz(num(freq)?),
    })
}

fn emit(text: &str, output: &Option<PathBuf>) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::input("io", format!("{}: {e}", path.display()))),
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct TermLine {
    operator: String,
    order: usize,
    alpha: Vec<u32>,
    beta: Vec<u32>,
    /// C/h (GHz).
    amplitude_ghz: f64,
    /// C (J).
    amplitude: f64,
}

#[derive(Serialize)]
struct PumpLine {
    operator: String,
    /// g (rad/s).
    g_re: f64,
    g_im: f64,
    /// rad/s.
    detuning: f64,
}

fn hamiltonian_error(e: eprq_core::hamiltonian::HamiltonianError) -> CliError {
    use eprq_core::hamiltonian::HamiltonianError as H;
    match e {
        H::TermBudgetExceeded { .. } => CliError::numerical("hamiltonian", e.to_string()),
        _ => CliError::input("hamiltonian", e.to_string()),
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Analyze(c) => {
            let config = c.config();
            let report = cmd_analyze(&config)?;
            emit(&render(&report, config.format), &config.output)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(c) => {
            let config = c.config();
            let summary = cmd_verify(&config)?;
            let text = match config.format {
                OutputFormat::Table => summary.to_table(),
                OutputFormat::Json => summary.to_json(),
            };
            emit(&text, &config.output)?;
            Ok(if summary.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Terms { common, term_budget } => {
            let config = common.config();
            let p = run_pipeline(&config)?;
            let terms = enumerate_terms(&p.op.dipoles, &p.table.phi_zpf, config.order, term_budget)
                .map_err(hamiltonian_error)?;
            let lines: Vec<TermLine> = terms
                .iter()
                .map(|t| TermLine {
                    operator: t.operator_string(),
                    order: t.order,
                    alpha: t.alpha.clone(),
                    beta: t.beta.clone(),
                    amplitude_ghz: to_ghz(t.amplitude / HBAR),
                    amplitude: t.amplitude,
                })
                .collect();
            let text = match config.format {
                OutputFormat::Json => serde_json::to_string_pretty(&lines).expect("terms serialize") + "\n",
                OutputFormat::Table => lines
                    .iter()
                    .map(|l| format!("{:>2}  {:<28} {:+.6e} GHz\n", l.order, l.operator, l.amplitude_ghz))
                    .collect(),
            };
            emit(&text, &config.output)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Pump { common, power, alpha, beta, pumps, signal } => {
            let config = common.config();
            let p = run_pipeline(&config)?;
            let term = general_coefficient(&p.op.dipoles, &p.table.phi_zpf, power, &alpha, &beta)
                .map_err(hamiltonian_error)?;
            let rate = pump_rate(&term, &pumps, &signal, &p.omega).map_err(hamiltonian_error)?;
            let line = PumpLine { operator: term.operator_string(), g_re: rate.g.re, g_im: rate.g.im, detuning: rate.detuning };
            let text = match config.format {
                OutputFormat::Json => serde_json::to_string_pretty(&line).expect("pump serializes") + "\n",
                OutputFormat::Table => format!(
                    "{}: g/2pi = {:+.6e} {:+.6e}i MHz, detuning/2pi = {:+.6} MHz\n",
                    line.operator,
                    to_ghz(line.g_re) * 1e3,
                    to_ghz(line.g_im) * 1e3,
                    to_ghz(line.detuning) * 1e3
                ),
            };
            emit(&text, &config.output)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("EPRQ_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
