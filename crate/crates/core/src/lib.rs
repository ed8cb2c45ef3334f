//! Energy-participation-ratio quantization of lumped Josephson circuits.
//!
//! The pipeline runs netlist → equilibrium → modes → epr → hamiltonian, with
//! a brute-force Fock-space diagonalizer to check the analytic parameters and
//! a loss module for dissipation budgets. All quantities are SI internally;
//! frequencies are angular (rad/s).

pub mod epr;
pub mod equilibrium;
pub mod fock;
pub mod hamiltonian;
pub mod loss;
pub mod modes;
pub mod netlist;
pub mod units;

pub use epr::{epr_from_eigenmode_data, epr_from_modes, verify_universal_properties, EprTable, Provenance};
pub use equilibrium::{operating_point, EffectiveDipole, OperatingPoint};
pub use hamiltonian::{DispersiveReport, InteractionTerm};
pub use modes::{eigensolve, ModeBasis};
pub use netlist::{parse_eigenmode_data, parse_netlist, CircuitModel, EigenmodeData};
pub use fock::{FockSolution, Potential};
pub use loss::{LossBudget, ModeSource};
