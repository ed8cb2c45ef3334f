//! Shared inputs for the benchmarks.
//!
//! Circuits are built as netlist text so the parse path stays the same one
//! users hit.

use eprq_core::{eigensolve, epr_from_modes, operating_point, parse_netlist, CircuitModel, EffectiveDipole, EprTable};

/// A chain of `n` capacitively coupled resonators with junctions on the
/// first `junctions` branches.
pub fn chain_netlist(n: usize, junctions: usize) -> String {
    let row = |i: usize, f: &dyn Fn(usize, usize) -> f64| {
        let cells: Vec<String> = (0..n).map(|j| format!("{:.3}", f(i, j))).collect();
        format!("    [{}],\n", cells.join(", "))
    };
    let cap = |i: usize, j: usize| match i.abs_diff(j) {
        0 => 80.0 + 10.0 * i as f64,
        1 => -4.0,
        _ => 0.0,
    };
    let l_inv = |i: usize, j: usize| if i == j && i >= junctions { 0.5 + 0.05 * i as f64 } else { 0.0 };
    let mut s = format!("format_version = 1\n\n[circuit]\nbranches = {n}\ncapacitance_unit = \"fF\"\ncapacitance = [\n");
    s += &(0..n).map(|i| row(i, &cap)).collect::<String>();
    s += "]\ninverse_inductance_unit = \"1/nH\"\ninverse_inductance = [\n";
    s += &(0..n).map(|i| row(i, &l_inv)).collect::<String>();
    s += "]\n";
    for k in 0..junctions {
        s += &format!("\n[[junction]]\nlabel = \"J{k}\"\nbranch = {k}\nenergy = \"{} GHz\"\n", 20 + 3 * k);
    }
    s
}

pub fn chain(n: usize, junctions: usize) -> CircuitModel {
    parse_netlist(&chain_netlist(n, junctions)).expect("bench netlist parses")
}

/// Mode frequencies, effective dipoles and the EPR table of a circuit.
pub fn prepared(circuit: &CircuitModel) -> (Vec<f64>, Vec<EffectiveDipole>, EprTable) {
    let op = operating_point(circuit).expect("operating point");
    let basis = eigensolve(circuit, &op).expect("modes");
    let table = epr_from_modes(&op.dipoles, &basis);
    (basis.omega.iter().copied().collect(), op.dipoles, table)
}
