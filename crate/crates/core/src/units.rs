//! Physical constants and engineering-unit parsing.
//!
//! Everything inside the crate is SI. Energies quoted as frequencies
//! (`"25 GHz"` for a junction) are read as E/h and converted to joules.

use std::f64::consts::PI;

use thiserror::Error;

/// Elementary charge (C), exact in the 2019 SI.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant (J s), exact in the 2019 SI.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Reduced flux quantum ħ/2e (Wb).
pub const PHI0: f64 = HBAR / (2.0 * ELEMENTARY_CHARGE);
/// Superconducting flux quantum h/2e (Wb).
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE);

#[derive(Debug, Clone, PartialEq, Error)]
#[error("cannot read {text:?} as {kind}: {reason}")]
pub struct UnitError {
    pub text: String,
    pub kind: &'static str,
    pub reason: String,
}

/// What a quantity is measured in; selects the accepted suffixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Capacitance,
    Inductance,
    InverseInductance,
    Energy,
    AngularFrequency,
    Flux,
    Current,
    Resistance,
}

impl Dimension {
    fn name(self) -> &'static str {
        match self {
            Dimension::Capacitance => "capacitance",
            Dimension::Inductance => "inductance",
            Dimension::InverseInductance => "inverse inductance",
            Dimension::Energy => "energy",
            Dimension::AngularFrequency => "angular frequency",
            Dimension::Flux => "flux",
            Dimension::Current => "current",
            Dimension::Resistance => "resistance",
        }
    }
}

fn prefix(p: &str) -> Option<f64> {
    Some(match p {
        "" => 1.0,
        "T" => 1e12,
        "G" => 1e9,
        "M" => 1e6,
        "k" => 1e3,
        "m" => 1e-3,
        "u" | "µ" | "μ" => 1e-6,
        "n" => 1e-9,
        "p" => 1e-12,
        "f" => 1e-15,
        "a" => 1e-18,
        _ => return None,
    })
}

/// Splits `unit` into an SI prefix and one of the `bases`, returning the
/// prefix factor and the matched base.
fn split_prefixed<'a>(unit: &str, bases: &[&'a str]) -> Option<(f64, &'a str)> {
    // longest base first so "Hz" is not read as prefix "H" + "z"
    let mut sorted: Vec<&'a str> = bases.to_vec();
    sorted.sort_by_key(|b| std::cmp::Reverse(b.len()));
    for base in sorted {
        if let Some(p) = unit.strip_suffix(base) {
            if let Some(f) = prefix(p) {
                return Some((f, base));
            }
        }
    }
    None
}

fn scale_for(dim: Dimension, unit: &str) -> Option<f64> {
    let u = unit.trim();
    match dim {
        Dimension::Capacitance => split_prefixed(u, &["F"]).map(|(f, _)| f),
        Dimension::Inductance => split_prefixed(u, &["H"]).map(|(f, _)| f),
        Dimension::InverseInductance => {
            let rest = u.strip_prefix("1/")?;
            split_prefixed(rest.trim(), &["H"]).map(|(f, _)| 1.0 / f)
        }
        Dimension::Energy => match split_prefixed(u, &["J", "eV", "Hz"])? {
            (f, "J") => Some(f),
            (f, "eV") => Some(f * ELEMENTARY_CHARGE),
            // frequency-quoted energy: E = h f
            (f, _) => Some(f * PLANCK),
        },
        Dimension::AngularFrequency => {
            if let Some(rest) = u.strip_suffix("rad/s") {
                return prefix(rest.trim());
            }
            split_prefixed(u, &["Hz"]).map(|(f, _)| 2.0 * PI * f)
        }
        Dimension::Flux => match u {
            "phi0" => Some(PHI0),
            "Phi0" => Some(FLUX_QUANTUM),
            _ => split_prefixed(u, &["Wb"]).map(|(f, _)| f),
        },
        Dimension::Current => split_prefixed(u, &["A"]).map(|(f, _)| f),
        Dimension::Resistance => split_prefixed(u, &["ohm", "Ohm", "Ω"]).map(|(f, _)| f),
    }
}

/// Parses `"<number> <unit>"` (space optional) into SI.
///
/// Bare numbers are taken as already SI.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64, UnitError> {
    let err = |reason: &str| UnitError {
        text: text.to_string(),
        kind: dim.name(),
        reason: reason.to_string(),
    };
    let t = text.trim();
    let split = t
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit() || c == '.' || c == '+' || c == '-')
                && !((c == 'e' || c == 'E') && i > 0 && exponent_follows(&t[i + 1..]))
        })
        .map(|(i, _)| i)
        .unwrap_or(t.len());
    let (num, unit) = t.split_at(split);
    let value: f64 = num.trim().parse().map_err(|_| err("no leading number"))?;
    if !value.is_finite() {
        return Err(err("value is not finite"));
    }
    if unit.trim().is_empty() {
        return Ok(value);
    }
    let scale = scale_for(dim, unit).ok_or_else(|| err("unknown unit suffix"))?;
    Ok(value * scale)
}

fn exponent_follows(rest: &str) -> bool {
    let rest = rest.strip_prefix(['+', '-']).unwrap_or(rest);
    rest.starts_with(|c: char| c.is_ascii_digit())
}

/// Angular frequency (rad/s) to GHz.
pub fn to_ghz(omega: f64) -> f64 {
    omega / (2.0 * PI * 1e9)
}

/// Energy (J) to GHz, i.e. E/h.
pub fn energy_to_ghz(energy: f64) -> f64 {
    energy / PLANCK / 1e9
}

/// Frequency in GHz to angular frequency (rad/s).
pub fn ghz(f: f64) -> f64 {
    2.0 * PI * f * 1e9
}

/// Energy E = h f for f in GHz.
pub fn ghz_energy(f: f64) -> f64 {
    PLANCK * f * 1e9
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn engineering_suffixes() {
        let c = parse_quantity("100 fF", Dimension::Capacitance).unwrap();
        assert_relative_eq!(c, 100e-15, max_relative = 1e-15);
        let l = parse_quantity("10nH", Dimension::Inductance).unwrap();
        assert_relative_eq!(l, 10e-9, max_relative = 1e-15);
        let li = parse_quantity("0.5 1/nH", Dimension::InverseInductance).unwrap();
        assert_relative_eq!(li, 0.5e9, max_relative = 1e-15);
        let r = parse_quantity("50 ohm", Dimension::Resistance).unwrap();
        assert_eq!(r, 50.0);
        let i = parse_quantity("1.5e-3 uA", Dimension::Current).unwrap();
        assert_relative_eq!(i, 1.5e-9, max_relative = 1e-15);
    }

    #[test]
    fn frequency_quoted_energy_is_e_over_h() {
        let e = parse_quantity("20 GHz", Dimension::Energy).unwrap();
        assert_relative_eq!(e, PLANCK * 20e9, max_relative = 1e-15);
        let w = parse_quantity("5 GHz", Dimension::AngularFrequency).unwrap();
        assert_relative_eq!(w, 2.0 * PI * 5e9, max_relative = 1e-15);
        let w2 = parse_quantity("3e10 rad/s", Dimension::AngularFrequency).unwrap();
        assert_eq!(w2, 3e10);
    }

    #[test]
    fn flux_quanta() {
        assert_relative_eq!(
            parse_quantity("0.5 Phi0", Dimension::Flux).unwrap(),
            PI * PHI0,
            max_relative = 1e-15
        );
        assert_eq!(parse_quantity("1 phi0", Dimension::Flux).unwrap(), PHI0);
    }

    #[test]
    fn unknown_suffix_is_rejected() {
        let e = parse_quantity("3 furlongs", Dimension::Inductance).unwrap_err();
        assert_eq!(e.kind, "inductance");
        assert!(parse_quantity("fF", Dimension::Capacitance).is_err());
        assert!(parse_quantity("3 GHz", Dimension::Capacitance).is_err());
    }

    #[test]
    fn bare_numbers_and_exponents() {
        assert_eq!(parse_quantity("1e-13", Dimension::Capacitance).unwrap(), 1e-13);
        assert_eq!(parse_quantity("-2.5E+3", Dimension::Current).unwrap(), -2.5e3);
        assert_relative_eq!(
            parse_quantity("2e2 fF", Dimension::Capacitance).unwrap(),
            2e-13,
            max_relative = 1e-15
        );
    }

    #[test]
    fn reduced_flux_quantum_value() {
        // ħ/2e from the exact SI constants
        assert_relative_eq!(PHI0, 3.291_059_787e-16, max_relative = 1e-9);
    }
}
