//! DC operating point of biased junctions.
//!
//! A junction in a dc-conducting loop with inductance L obeys, in reduced
//! flux x = Φ/φ₀,
//!
//! ```text
//! x + βL sin x = x_eff,    βL = E_J L/φ₀²,    x_eff = Φ_ext/φ₀ + i_s L/φ₀
//! ```
//!
//! which is Kepler's equation. For βL < 1 the root is unique and bracketed by
//! `x_eff ± βL`; beyond that the stable branch is followed from zero bias.

use thiserror::Error;

use crate::netlist::{factorial, CircuitModel, DipoleKind, JosephsonDipole, LoopKind};
use crate::units::PHI0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error("equilibrium solver hit its iteration cap (residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("only unstable equilibria exist at this bias")]
    UnstableOnly,
    #[error("cos(phi_eq) = {cos:e}: the effective inductance diverges")]
    SingularBias { cos: f64 },
    #[error("junction {label:?}: {reason}")]
    UnsupportedBias { label: String, reason: String },
    #[error("invalid equilibrium input: {0}")]
    InvalidInput(String),
}

/// Which simplification of the dc problem applies to a junction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasClass {
    LinearLoopOnly,
    OpenLoopSimple,
    OpenLoopInternal,
    DcLoopSimple,
    DcLoopComposite,
}

pub fn classify_bias(circuit: &CircuitModel) -> Vec<BiasClass> {
    circuit.junctions.iter().map(classify_junction).collect()
}

fn classify_junction(j: &JosephsonDipole) -> BiasClass {
    let Some(b) = &j.bias else {
        return BiasClass::OpenLoopSimple;
    };
    match (b.loop_kind, b.internal_loops) {
        (LoopKind::Linear, _) => BiasClass::LinearLoopOnly,
        (LoopKind::Open, false) => BiasClass::OpenLoopSimple,
        (LoopKind::Open, true) => BiasClass::OpenLoopInternal,
        (LoopKind::Dc, false) => BiasClass::DcLoopSimple,
        (LoopKind::Dc, true) => BiasClass::DcLoopComposite,
    }
}

const MAX_ITER: usize = 200;

/// Safeguarded Newton on a bracket where `g` changes sign.
fn newton_bisect(g: impl Fn(f64) -> (f64, f64), mut lo: f64, mut hi: f64, tol: f64) -> Result<f64, f64> {
    let (glo, _) = g(lo);
    if glo > 0.0 {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut x = 0.5 * (lo + hi);
    let mut best = f64::INFINITY;
    for _ in 0..MAX_ITER {
        let (gx, dg) = g(x);
        best = best.min(gx.abs());
        if gx.abs() <= tol {
            return Ok(x);
        }
        if gx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let step = x - gx / dg;
        let inside = (step - lo) * (step - hi) < 0.0;
        x = if dg != 0.0 && inside { step } else { 0.5 * (lo + hi) };
        if (hi - lo).abs() <= f64::EPSILON * x.abs().max(1.0) {
            let (gx, _) = g(x);
            return if gx.abs() <= tol { Ok(x) } else { Err(gx.abs()) };
        }
    }
    Err(best)
}

fn kepler(beta: f64, x_eff: f64) -> impl Fn(f64) -> (f64, f64) {
    move |x| (x + beta * x.sin() - x_eff, 1.0 + beta * x.cos())
}

/// Every stable root of x + βL sin x = x_eff, ascending.
fn stable_roots_reduced(beta: f64, x_eff: f64, tol: f64) -> Result<Vec<f64>, EquilibriumError> {
    let g = kepler(beta, x_eff);
    let (a, b) = (x_eff - beta - 1e-9, x_eff + beta + 1e-9);
    // the period of sin bounds how many roots fit; sample well below it
    let samples = ((b - a) / 0.01).ceil().max(8.0) as usize;
    let mut roots = Vec::new();
    let mut prev = (a, g(a).0);
    for i in 1..=samples {
        let x = a + (b - a) * i as f64 / samples as f64;
        let gx = g(x).0;
        if prev.1 <= 0.0 && gx > 0.0 {
            let root = newton_bisect(&g, prev.0, x, residual_floor(tol, x_eff))
                .map_err(|residual| EquilibriumError::NoConvergence { residual })?;
            if g(root).1 > 0.0 {
                roots.push(root);
            }
        }
        prev = (x, gx);
    }
    Ok(roots)
}

fn residual_floor(tol: f64, x_eff: f64) -> f64 {
    tol.max(8.0 * f64::EPSILON * x_eff.abs().max(1.0))
}

fn reduced_inputs(e_j: f64, l_loop: f64, flux_ext: f64, i_s: f64) -> Result<(f64, f64), EquilibriumError> {
    if !(l_loop > 0.0) || e_j < 0.0 || !e_j.is_finite() {
        return Err(EquilibriumError::InvalidInput(
            "need E_J >= 0 and L_loop > 0".into(),
        ));
    }
    Ok((e_j * l_loop / (PHI0 * PHI0), flux_ext / PHI0 + i_s * l_loop / PHI0))
}

/// Equilibrium reduced flux Φ/φ₀ of a junction closed by `l_loop`.
///
/// `tol` bounds the absolute residual of the reduced equation, floored at
/// a few ulps of max(1, |x_eff|).
pub fn solve_kepler(e_j: f64, l_loop: f64, flux_ext: f64, i_s: f64, tol: f64) -> Result<f64, EquilibriumError> {
    let (beta, x_eff) = reduced_inputs(e_j, l_loop, flux_ext, i_s)?;
    let abs_tol = residual_floor(tol, x_eff);
    if beta < 1.0 {
        let g = kepler(beta, x_eff);
        if g(x_eff).0.abs() <= abs_tol {
            return Ok(x_eff);
        }
        return newton_bisect(g, x_eff - beta - 1e-12, x_eff + beta + 1e-12, abs_tol)
            .map_err(|residual| EquilibriumError::NoConvergence { residual });
    }
    // ramp the bias from zero and stay on the branch we started on
    let steps = ((x_eff.abs() / 0.02).ceil() as usize).max(1);
    let mut x = 0.0;
    for s in 1..=steps {
        let target = x_eff * s as f64 / steps as f64;
        let roots = stable_roots_reduced(beta, target, tol)?;
        x = *roots
            .iter()
            .min_by(|a, b| (*a - x).abs().total_cmp(&(*b - x).abs()))
            .ok_or(EquilibriumError::UnstableOnly)?;
    }
    Ok(x)
}

/// Diagnostic: every stable equilibrium (reduced flux) at this bias.
pub fn stable_equilibria(e_j: f64, l_loop: f64, flux_ext: f64, i_s: f64, tol: f64) -> Result<Vec<f64>, EquilibriumError> {
    let (beta, x_eff) = reduced_inputs(e_j, l_loop, flux_ext, i_s)?;
    stable_roots_reduced(beta, x_eff, tol)
}

/// Residual of the reduced Kepler equation at `x`.
pub fn kepler_residual(e_j: f64, l_loop: f64, flux_ext: f64, i_s: f64, x: f64) -> f64 {
    let beta = e_j * l_loop / (PHI0 * PHI0);
    let x_eff = flux_ext / PHI0 + i_s * l_loop / PHI0;
    x + beta * x.sin() - x_eff
}

/// A junction linearized about its operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveDipole {
    pub label: String,
    pub branch_index: usize,
    /// E_j(φ_eq) (J); sets L_j = φ₀²/E_j.
    pub energy: f64,
    pub phi_eq: f64,
    /// Bare E_J for the cosine kind, used by full-cosine evaluation.
    pub energy_bare: f64,
    pub stable: bool,
    pub bias_class: BiasClass,
    coefficients: Coefficients,
}

#[derive(Debug, Clone, PartialEq)]
enum Coefficients {
    Cosine,
    Explicit(Vec<f64>),
}

impl EffectiveDipole {
    /// An unbiased tunnel junction of energy `e_j` on `branch`.
    pub fn tunnel(e_j: f64, branch: usize) -> Self {
        EffectiveDipole {
            label: format!("J{branch}"),
            branch_index: branch,
            energy: e_j,
            phi_eq: 0.0,
            energy_bare: e_j,
            stable: true,
            bias_class: BiasClass::OpenLoopSimple,
            coefficients: Coefficients::Cosine,
        }
    }

    /// A tunnel junction of bare energy `e_bare` held at `phi_eq`.
    pub fn frustrated_tunnel(e_bare: f64, phi_eq: f64, branch: usize) -> Self {
        EffectiveDipole {
            energy: e_bare * phi_eq.cos(),
            phi_eq,
            energy_bare: e_bare,
            stable: phi_eq.cos() > 0.0,
            ..Self::tunnel(e_bare, branch)
        }
    }

    /// A dipole with explicit coefficients c_3, c_4, ...
    pub fn taylor(energy: f64, branch: usize, coefficients: Vec<f64>) -> Self {
        EffectiveDipole {
            coefficients: Coefficients::Explicit(coefficients),
            ..Self::tunnel(energy, branch)
        }
    }

    /// c_p about the operating point, normalized so c₂ = 1/2.
    pub fn coefficient(&self, p: usize) -> Option<f64> {
        match &self.coefficients {
            Coefficients::Cosine => Some(if self.phi_eq == 0.0 {
                crate::netlist::cosine_coefficient(p)
            } else {
                frustrated_coefficient(self.phi_eq, p)
            }),
            Coefficients::Explicit(c) => {
                if p == 2 {
                    Some(0.5)
                } else {
                    p.checked_sub(3).and_then(|i| c.get(i).copied())
                }
            }
        }
    }

    /// Whether the energy function is a cosine (so it can be evaluated exactly).
    pub fn is_cosine(&self) -> bool {
        matches!(self.coefficients, Coefficients::Cosine)
    }
}

/// −cos(φ_eq + pπ/2)/(p! cos φ_eq): the p-th derivative of −cos at φ_eq.
fn frustrated_coefficient(phi_eq: f64, p: usize) -> f64 {
    // exact phase quadrants avoid cos(π/2)-type rounding
    let d = match p % 4 {
        0 => -phi_eq.cos(),
        1 => phi_eq.sin(),
        2 => phi_eq.cos(),
        _ => -phi_eq.sin(),
    };
    d / (factorial(p) * phi_eq.cos())
}

/// E_j(φ_eq) and the linearized dipole for one junction.
pub fn effective_dipole(junction: &JosephsonDipole, phi_eq: f64) -> Result<EffectiveDipole, EquilibriumError> {
    let cos = phi_eq.cos();
    if cos.abs() < 1e-9 {
        return Err(EquilibriumError::SingularBias { cos });
    }
    let coefficients = match &junction.kind {
        DipoleKind::TunnelJunction => Coefficients::Cosine,
        DipoleKind::ExplicitTaylor { coefficients } => {
            if phi_eq != 0.0 {
                return Err(EquilibriumError::UnsupportedBias {
                    label: junction.label.clone(),
                    reason: "explicit Taylor dipoles cannot be re-expanded about a shifted point".into(),
                });
            }
            Coefficients::Explicit(coefficients.clone())
        }
    };
    let energy = match coefficients {
        Coefficients::Cosine => junction.energy_scale_bare * cos,
        Coefficients::Explicit(_) => junction.energy_scale_bare,
    };
    Ok(EffectiveDipole {
        label: junction.label.clone(),
        branch_index: junction.branch_index,
        energy,
        phi_eq,
        energy_bare: junction.energy_scale_bare,
        stable: energy > 0.0,
        bias_class: BiasClass::OpenLoopSimple,
        coefficients,
    })
}

/// Relative tolerance used by `operating_point`.
pub const KEPLER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub dipoles: Vec<EffectiveDipole>,
}

impl OperatingPoint {
    pub fn energies(&self) -> Vec<f64> {
        self.dipoles.iter().map(|d| d.energy).collect()
    }
}

/// Solves every junction's dc problem and linearizes it.
pub fn operating_point(circuit: &CircuitModel) -> Result<OperatingPoint, EquilibriumError> {
    let classes = classify_bias(circuit);
    let mut dipoles = Vec::with_capacity(circuit.junctions.len());
    for (jn, class) in circuit.junctions.iter().zip(classes) {
        let unfrustrated = jn.bias.as_ref().is_none_or(|b| b.flux_ext == 0.0 && b.current == 0.0);
        let phi_eq = match class {
            BiasClass::LinearLoopOnly | BiasClass::OpenLoopSimple => 0.0,
            BiasClass::OpenLoopInternal => {
                if matches!(jn.kind, DipoleKind::TunnelJunction) && !unfrustrated {
                    return Err(EquilibriumError::UnsupportedBias {
                        label: jn.label.clone(),
                        reason: "a single tunnel junction has no internal loop to frustrate".into(),
                    });
                }
                0.0
            }
            BiasClass::DcLoopSimple => {
                let b = jn.bias.as_ref().expect("dc class implies a bias");
                if unfrustrated {
                    0.0
                } else if !matches!(jn.kind, DipoleKind::TunnelJunction) {
                    return Err(EquilibriumError::UnsupportedBias {
                        label: jn.label.clone(),
                        reason: "dc loop equilibrium needs a tunnel junction".into(),
                    });
                } else {
                    let l = b.loop_inductance.expect("validated: dc loop has an inductance");
                    solve_kepler(jn.energy_scale_bare, l, b.flux_ext, b.current, KEPLER_TOL)?
                }
            }
            BiasClass::DcLoopComposite => {
                if !unfrustrated {
                    return Err(EquilibriumError::UnsupportedBias {
                        label: jn.label.clone(),
                        reason: "composite dipoles in a frustrated dc loop need a classical circuit solve".into(),
                    });
                }
                0.0
            }
        };
        let mut d = effective_dipole(jn, phi_eq)?;
        d.bias_class = class;
        if !d.stable {
            return Err(EquilibriumError::UnstableOnly);
        }
        dipoles.push(d);
    }
    Ok(OperatingPoint { dipoles })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{FrustrationSpec, JosephsonDipole};
    use crate::units::ghz_energy;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn l_for_beta(e_j: f64, beta: f64) -> f64 {
        beta * PHI0 * PHI0 / e_j
    }

    #[test]
    fn unfrustrated_is_zero() {
        let e = ghz_energy(20.0);
        assert_eq!(solve_kepler(e, 1e-9, 0.0, 0.0, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn linear_limit_returns_external_flux() {
        let x = solve_kepler(0.0, 1e-9, 0.37 * PHI0, 0.0, 1e-12).unwrap();
        assert!((x - 0.37).abs() < 1e-12);
    }

    #[test]
    fn weak_junction_matches_bisection() {
        let e = ghz_energy(1.0);
        let l = l_for_beta(e, 0.01);
        let x = solve_kepler(e, l, 0.3 * PHI0, 0.0, 1e-12).unwrap();
        // plain bisection on [-π, π] as the reference
        let g = |x: f64| x + 0.01 * x.sin() - 0.3;
        let (mut lo, mut hi) = (-std::f64::consts::PI, std::f64::consts::PI);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((x - lo).abs() < 1e-12);
        assert!((x - (0.3 - 0.01 * 0.3f64.sin())).abs() < 1e-3);
    }

    #[test]
    fn large_beta_follows_branch_from_zero() {
        let e = ghz_energy(10.0);
        let l = l_for_beta(e, 3.0);
        for &phi in &[0.5, 2.0, 3.0, 5.0] {
            let x = solve_kepler(e, l, phi * PHI0, 0.0, 1e-12).unwrap();
            assert!(kepler_residual(e, l, phi * PHI0, 0.0, x).abs() < 1e-11);
            assert!(1.0 + 3.0 * x.cos() > 0.0, "must be stable");
        }
        let roots = stable_equilibria(e, l, 3.0 * PHI0, 0.0, 1e-12).unwrap();
        assert!(roots.len() >= 2);
    }

    #[test]
    fn bare_coefficients_at_zero() {
        let j = JosephsonDipole {
            label: "J".into(),
            branch_index: 0,
            energy_scale_bare: 1.0,
            kind: DipoleKind::TunnelJunction,
            bias: None,
        };
        let d = effective_dipole(&j, 0.0).unwrap();
        assert_eq!(d.energy, 1.0);
        assert_eq!(d.coefficient(3), Some(0.0));
        assert_eq!(d.coefficient(4), Some(-1.0 / 24.0));
        assert_eq!(d.coefficient(6), Some(1.0 / 720.0));
    }

    #[test]
    fn frustrated_coefficients() {
        let j = JosephsonDipole {
            label: "J".into(),
            branch_index: 0,
            energy_scale_bare: 2.0,
            kind: DipoleKind::TunnelJunction,
            bias: None,
        };
        let d = effective_dipole(&j, 0.2).unwrap();
        assert_relative_eq!(d.energy, 2.0 * 0.2f64.cos());
        assert_relative_eq!(d.coefficient(3).unwrap(), -0.2f64.tan() / 6.0, max_relative = 1e-14);
        assert!((d.coefficient(3).unwrap() + 0.03380).abs() < 5e-5);
        assert_relative_eq!(d.coefficient(4).unwrap(), -1.0 / 24.0, max_relative = 1e-14);
        assert_relative_eq!(d.coefficient(2).unwrap(), 0.5, max_relative = 1e-14);
        assert!(matches!(
            effective_dipole(&j, FRAC_PI_2 - 1e-12),
            Err(EquilibriumError::SingularBias { .. })
        ));
    }

    fn biased(loop_kind: LoopKind, internal: bool) -> JosephsonDipole {
        JosephsonDipole {
            label: "J".into(),
            branch_index: 0,
            energy_scale_bare: 1e-23,
            kind: DipoleKind::TunnelJunction,
            bias: Some(FrustrationSpec {
                flux_ext: 0.1 * PHI0,
                loop_inductance: Some(1e-9),
                current: 0.0,
                loop_kind,
                internal_loops: internal,
            }),
        }
    }

    #[test]
    fn classification() {
        let plain = JosephsonDipole { bias: None, ..biased(LoopKind::Dc, false) };
        assert_eq!(classify_junction(&plain), BiasClass::OpenLoopSimple);
        assert_eq!(classify_junction(&biased(LoopKind::Dc, false)), BiasClass::DcLoopSimple);
        assert_eq!(classify_junction(&biased(LoopKind::Dc, true)), BiasClass::DcLoopComposite);
        assert_eq!(classify_junction(&biased(LoopKind::Linear, false)), BiasClass::LinearLoopOnly);
        assert_eq!(classify_junction(&biased(LoopKind::Open, true)), BiasClass::OpenLoopInternal);
    }
}
