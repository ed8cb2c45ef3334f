//! Brute-force check of the analytic parameters in a truncated Fock basis.
//!
//! The Hamiltonian Σ_m ω_m n̂_m + H_nl/ħ is kept as a sum of Kronecker
//! products of single-mode matrices, so it can be assembled densely for small
//! bases or applied matrix-free for large ones. Energies are in rad/s
//! (energy/ħ) throughout; multiply by ħ for joules.
//!
//! Single-mode matrices are computed in a padded basis and then cut down, so
//! they are the exact projections of the infinite-dimensional operators
//! (powers of X = â + â†) or agree with them to rounding (cos and sin of φX,
//! through the eigendecomposition of the padded X).

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use thiserror::Error;

use crate::equilibrium::EffectiveDipole;
use crate::netlist::factorial;
use crate::units::HBAR;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FockError {
    #[error("basis dimension {dimension} exceeds the budget of {budget}")]
    BudgetExceeded {
        dimension: usize,
        budget: usize,
        /// Last solution obtained before the budget was hit.
        partial: Option<Box<FockSolution>>,
    },
    #[error("cutoffs must be at least 3 per mode, one per mode")]
    InvalidCutoffs,
    #[error("junction {junction} has no Taylor coefficient at order {order}")]
    MissingCoefficient { junction: usize, order: usize },
    #[error("the ground state cannot be identified (overlap {overlap:.3})")]
    AmbiguousAssignment { overlap: f64 },
    #[error("eigensolver failed: {0}")]
    NumericalFailure(String),
}

/// How the junction nonlinearity enters the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Potential {
    /// Σ_p E_j c_jp φ̂_j^p for p = 3..=p_max.
    TaylorToOrder(usize),
    /// The exact cosine minus its quadratic part; non-cosine dipoles fall
    /// back to their Taylor series up to `FULL_COSINE_TAYLOR_FALLBACK`.
    FullCosine,
}

/// Order used for explicit-Taylor dipoles under `Potential::FullCosine`.
pub const FULL_COSINE_TAYLOR_FALLBACK: usize = 12;
/// Default cap on the product-basis dimension.
pub const DEFAULT_BUDGET: usize = 200_000;
/// Dense solves are used up to this dimension.
pub const DENSE_LIMIT: usize = 2000;

/// Everything that defines the Hamiltonian apart from the cutoffs.
#[derive(Debug, Clone)]
pub struct FockInputs<'a> {
    /// ω_m (rad/s).
    pub omega: &'a [f64],
    /// φ_mj, M×J.
    pub phi_zpf: &'a DMatrix<f64>,
    pub dipoles: &'a [EffectiveDipole],
    pub potential: Potential,
}

/// One Kronecker term: `coeff · ⊗_m factor_m`, `None` meaning identity.
#[derive(Debug, Clone)]
struct KronTerm {
    coeff: f64,
    factors: Vec<Option<Arc<DMatrix<f64>>>>,
}

/// H/ħ on the product basis, mode 0 most significant.
#[derive(Debug, Clone)]
pub struct FockOperator {
    dims: Vec<usize>,
    diagonal: Vec<f64>,
    terms: Vec<KronTerm>,
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn position_matrix(n: usize) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        let v = ((i + 1) as f64).sqrt();
        x[(i, i + 1)] = v;
        x[(i + 1, i)] = v;
    }
    x
}

/// Powers X^0..=X^kmax, exact on the first `n` levels.
fn position_powers(n: usize, kmax: usize) -> Vec<Arc<DMatrix<f64>>> {
    let pad = n + kmax / 2 + 2;
    let x = position_matrix(pad);
    let mut acc = DMatrix::identity(pad, pad);
    let mut out = Vec::with_capacity(kmax + 1);
    for k in 0..=kmax {
        if k > 0 {
            acc = &acc * &x;
        }
        out.push(Arc::new(symmetrize(acc.view((0, 0), (n, n)).into_owned())));
    }
    out
}

/// cos(φX) and sin(φX) on the first `n` levels.
fn trig_matrices(n: usize, phi: f64) -> (Arc<DMatrix<f64>>, Arc<DMatrix<f64>>) {
    let pad = 2 * n + 40;
    let eig = SymmetricEigen::new(position_matrix(pad));
    let v = &eig.eigenvectors;
    let make = |f: &dyn Fn(f64) -> f64| {
        let d = DVector::from_iterator(pad, eig.eigenvalues.iter().map(|&l| f(phi * l)));
        let top = v.rows(0, n);
        let scaled = DMatrix::from_fn(n, pad, |i, k| top[(i, k)] * d[k]);
        Arc::new(symmetrize(&scaled * top.transpose()))
    };
    (make(&f64::cos), make(&f64::sin))
}

impl FockOperator {
    pub fn dimension(&self) -> usize {
        self.diagonal.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims.len()];
        for m in (0..self.dims.len().saturating_sub(1)).rev() {
            s[m] = s[m + 1] * self.dims[m + 1];
        }
        s
    }

    /// Full diagonal, including nonlinear terms.
    pub fn full_diagonal(&self) -> Vec<f64> {
        let strides = self.strides();
        let mut d = self.diagonal.clone();
        for t in &self.terms {
            for (idx, slot) in d.iter_mut().enumerate() {
                let mut v = t.coeff;
                for (m, f) in t.factors.iter().enumerate() {
                    if let Some(f) = f {
                        let n = (idx / strides[m]) % self.dims[m];
                        v *= f[(n, n)];
                    }
                }
                *slot += v;
            }
        }
        d
    }

    /// Dense matrix (rad/s).
    pub fn to_dense(&self) -> DMatrix<f64> {
        let dim = self.dimension();
        let mut h = DMatrix::from_diagonal(&DVector::from_column_slice(&self.diagonal));
        for t in &self.terms {
            let mut k = DMatrix::from_element(1, 1, t.coeff);
            for (m, f) in t.factors.iter().enumerate() {
                k = match f {
                    Some(f) => k.kronecker(f.as_ref()),
                    None => k.kronecker(&DMatrix::<f64>::identity(self.dims[m], self.dims[m])),
                };
            }
            debug_assert_eq!(k.nrows(), dim);
            h += k;
        }
        h
    }

    /// y = H x without forming H.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let strides = self.strides();
        let mut y: Vec<f64> = x.iter().zip(&self.diagonal).map(|(a, d)| a * d).collect();
        let mut buf = vec![0.0; x.len()];
        for t in &self.terms {
            let mut cur = x.to_vec();
            for (m, f) in t.factors.iter().enumerate() {
                if let Some(f) = f {
                    apply_axis(f, &cur, &mut buf, self.dims[m], strides[m]);
                    std::mem::swap(&mut cur, &mut buf);
                }
            }
            for (yi, ci) in y.iter_mut().zip(&cur) {
                *yi += t.coeff * ci;
            }
        }
        y
    }
}

/// out[o, i, s] = Σ_k f[i, k] v[o, k, s] for the axis with size `n`.
fn apply_axis(f: &DMatrix<f64>, v: &[f64], out: &mut [f64], n: usize, stride: usize) {
    let block = n * stride;
    for (vb, ob) in v.chunks(block).zip(out.chunks_mut(block)) {
        ob.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..n {
            let orow = &mut ob[i * stride..(i + 1) * stride];
            for k in 0..n {
                let c = f[(i, k)];
                if c == 0.0 {
                    continue;
                }
                let vrow = &vb[k * stride..(k + 1) * stride];
                for (o, vv) in orow.iter_mut().zip(vrow) {
                    *o += c * vv;
                }
            }
        }
    }
}

/// Multinomial terms (Σ_m x_m)^p = Σ_k p!/k! Π x_m^{k_m}, accumulated into
/// `poly` with weight `w` and x_m = φ_m X_m.
fn add_power(poly: &mut BTreeMap<Vec<u32>, f64>, phi: &[f64], p: usize, w: f64) {
    for k in crate::hamiltonian::compositions(p as u32, phi.len()) {
        let mut c = w * factorial(p);
        for (m, &km) in k.iter().enumerate() {
            c *= phi[m].powi(km as i32) / factorial(km as usize);
        }
        if c != 0.0 {
            *poly.entry(k).or_insert(0.0) += c;
        }
    }
}

/// Builds H/ħ (rad/s) on the product basis with the given cutoffs.
pub fn build_hamiltonian_matrix(
    inputs: &FockInputs,
    cutoffs: &[usize],
    budget: usize,
) -> Result<FockOperator, FockError> {
    let m_count = inputs.omega.len();
    if cutoffs.len() != m_count || cutoffs.iter().any(|&c| c < 3) {
        return Err(FockError::InvalidCutoffs);
    }
    let dim = cutoffs.iter().try_fold(1usize, |a, &c| a.checked_mul(c)).unwrap_or(usize::MAX);
    if dim > budget {
        return Err(FockError::BudgetExceeded {
            dimension: dim,
            budget,
            partial: None,
        });
    }
    let dims = cutoffs.to_vec();
    let mut strides = vec![1; m_count];
    for m in (0..m_count.saturating_sub(1)).rev() {
        strides[m] = strides[m + 1] * dims[m + 1];
    }
    let diagonal: Vec<f64> = (0..dim)
        .map(|idx| (0..m_count).map(|m| inputs.omega[m] * ((idx / strides[m]) % dims[m]) as f64).sum())
        .collect();

    let mut poly: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    let mut trig_terms: Vec<KronTerm> = Vec::new();
    let mut constant = 0.0;
    let mut max_power = 2;
    for (j, d) in inputs.dipoles.iter().enumerate() {
        let phi: Vec<f64> = inputs.phi_zpf.column(j).iter().copied().collect();
        let e = d.energy / HBAR;
        let cosine = inputs.potential == Potential::FullCosine && d.is_cosine();
        if cosine {
            // E_J[−cos(φ_eq + φ̂) + cos φ_eq − sin φ_eq φ̂] − ½E_eff φ̂²
            let ej = d.energy_bare / HBAR;
            let (ce, se) = (d.phi_eq.cos(), d.phi_eq.sin());
            let trig: Vec<(Arc<DMatrix<f64>>, Arc<DMatrix<f64>>)> =
                (0..m_count).map(|m| trig_matrices(dims[m], phi[m])).collect();
            // cos φ̂ and sin φ̂ via angle addition over the commuting modes
            for subset in 0u64..(1u64 << m_count) {
                let odd = subset.count_ones() % 2 == 1;
                let w = if odd {
                    // sin part: (−1)^{(|T|−1)/2}
                    let sign = if (subset.count_ones() / 2) % 2 == 0 { 1.0 } else { -1.0 };
                    ej * se * sign
                } else {
                    let sign = if (subset.count_ones() / 2) % 2 == 0 { 1.0 } else { -1.0 };
                    -ej * ce * sign
                };
                if w == 0.0 {
                    continue;
                }
                let factors = (0..m_count)
                    .map(|m| {
                        let (c, s) = &trig[m];
                        Some(if subset >> m & 1 == 1 { s.clone() } else { c.clone() })
                    })
                    .collect();
                trig_terms.push(KronTerm { coeff: w, factors });
            }
            constant += ej * ce;
            add_power(&mut poly, &phi, 1, -ej * se);
            add_power(&mut poly, &phi, 2, -0.5 * e);
        } else {
            let p_max = match inputs.potential {
                Potential::TaylorToOrder(p) => p,
                Potential::FullCosine => FULL_COSINE_TAYLOR_FALLBACK,
            };
            max_power = max_power.max(p_max);
            for p in 3..=p_max {
                let c = d
                    .coefficient(p)
                    .ok_or(FockError::MissingCoefficient { junction: j, order: p })?;
                if c != 0.0 {
                    add_power(&mut poly, &phi, p, e * c);
                }
            }
        }
    }

    let powers: Vec<Vec<Arc<DMatrix<f64>>>> = dims.iter().map(|&n| position_powers(n, max_power)).collect();
    let mut terms: Vec<KronTerm> = poly
        .into_iter()
        .filter(|(_, c)| *c != 0.0)
        .map(|(k, coeff)| KronTerm {
            coeff,
            factors: k
                .iter()
                .enumerate()
                .map(|(m, &km)| if km == 0 { None } else { Some(powers[m][km as usize].clone()) })
                .collect(),
        })
        .collect();
    terms.extend(trig_terms);
    let mut diagonal = diagonal;
    if constant != 0.0 {
        diagonal.iter_mut().for_each(|d| *d += constant);
    }
    Ok(FockOperator { dims, diagonal, terms })
}

// ---------------------------------------------------------------------------
// eigensolvers

/// Lowest `nev` eigenpairs, ascending.
pub fn lowest_eigenpairs(op: &FockOperator, nev: usize) -> Result<(Vec<f64>, DMatrix<f64>), FockError> {
    let dim = op.dimension();
    let nev = nev.min(dim);
    if dim <= DENSE_LIMIT {
        let eig = SymmetricEigen::try_new(op.to_dense(), f64::EPSILON, 0)
            .ok_or_else(|| FockError::NumericalFailure("dense eigensolver did not converge".into()))?;
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let vals = order[..nev].iter().map(|&i| eig.eigenvalues[i]).collect();
        let vecs = DMatrix::from_fn(dim, nev, |r, c| eig.eigenvectors[(r, order[c])]);
        return Ok((vals, vecs));
    }
    davidson(op, nev)
}

fn orthonormalize_against(v: &mut DVector<f64>, basis: &[DVector<f64>]) -> f64 {
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(v);
            v.axpy(-c, b, 1.0);
        }
    }
    v.norm()
}

/// Block Davidson with a diagonal preconditioner.
fn davidson(op: &FockOperator, nev: usize) -> Result<(Vec<f64>, DMatrix<f64>), FockError> {
    let dim = op.dimension();
    let diag = op.full_diagonal();
    let scale = diag.iter().fold(0.0f64, |a, d| a.max(d.abs())).max(1.0);
    let tol = 1e-11 * scale;
    let block = nev + 4.min(dim - nev);
    let max_basis = (4 * block).max(block + 8).min(dim);

    let mut idx: Vec<usize> = (0..dim).collect();
    idx.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]));
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for &i in idx.iter().take(block) {
        let mut v = DVector::zeros(dim);
        v[i] = 1.0;
        basis.push(v);
    }
    let mut images: Vec<DVector<f64>> = Vec::new();

    for _iter in 0..500 {
        let fresh: Vec<DVector<f64>> = basis[images.len()..]
            .par_iter()
            .map(|v| DVector::from_vec(op.apply(v.as_slice())))
            .collect();
        images.extend(fresh);
        let k = basis.len();
        let t = DMatrix::from_fn(k, k, |a, b| 0.5 * (basis[a].dot(&images[b]) + basis[b].dot(&images[a])));
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let ritz = |c: usize| -> (f64, DVector<f64>, DVector<f64>) {
            let s = eig.eigenvectors.column(order[c]);
            let mut x = DVector::zeros(dim);
            let mut hx = DVector::zeros(dim);
            for (i, &si) in s.iter().enumerate() {
                x.axpy(si, &basis[i], 1.0);
                hx.axpy(si, &images[i], 1.0);
            }
            (eig.eigenvalues[order[c]], x, hx)
        };
        let pairs: Vec<(f64, DVector<f64>, DVector<f64>)> = (0..block.min(k)).map(ritz).collect();
        let residuals: Vec<DVector<f64>> = pairs.iter().map(|(th, x, hx)| hx - x * *th).collect();
        let converged = residuals.iter().take(nev).all(|r| r.norm() <= tol);
        if converged {
            let vals = pairs.iter().take(nev).map(|p| p.0).collect();
            let vecs = DMatrix::from_columns(&pairs.iter().take(nev).map(|p| p.1.clone()).collect::<Vec<_>>());
            return Ok((vals, vecs));
        }
        if k + block > max_basis {
            // restart from the current Ritz vectors
            basis = pairs.iter().map(|p| p.1.clone()).collect();
            images = pairs.iter().map(|p| p.2.clone()).collect();
            let mut ortho: Vec<DVector<f64>> = Vec::new();
            let mut ortho_img: Vec<DVector<f64>> = Vec::new();
            for (v, hv) in basis.into_iter().zip(images) {
                let mut v2 = v.clone();
                let n = orthonormalize_against(&mut v2, &ortho);
                if n > 1e-8 {
                    // Ritz vectors are already orthonormal; keep the images paired
                    ortho.push(v2 / n);
                    ortho_img.push(hv / n);
                }
            }
            basis = ortho;
            images = ortho_img;
            continue;
        }
        for ((th, _, _), r) in pairs.iter().zip(&residuals) {
            if r.norm() <= tol {
                continue;
            }
            let mut c = DVector::from_fn(dim, |i, _| {
                let den = th - diag[i];
                let eps = 1e-8 * scale;
                r[i] / if den.abs() < eps { eps.copysign(den) } else { den }
            });
            c.normalize_mut();
            let mut n = orthonormalize_against(&mut c, &basis);
            if n < 1e-3 {
                // the preconditioned vector collapsed onto the subspace
                c = r.normalize();
                n = orthonormalize_against(&mut c, &basis);
            }
            if n > 1e-8 {
                basis.push(c / n);
            }
        }
        if basis.len() == k {
            return Err(FockError::NumericalFailure("Davidson subspace stopped growing".into()));
        }
    }
    Err(FockError::NumericalFailure("Davidson did not converge".into()))
}

// ---------------------------------------------------------------------------
// level assignment and extraction

/// Minimum squared overlap for an unambiguous label.
pub const ASSIGNMENT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub index: usize,
    /// |⟨label|ψ⟩|².
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Convergence {
    pub previous_cutoffs: Vec<usize>,
    /// Largest relative change of any extracted parameter.
    pub max_relative_change: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockSolution {
    pub cutoffs: Vec<usize>,
    /// Lowest eigenvalues (rad/s), ascending, ground state subtracted.
    pub eigenvalues: Vec<f64>,
    pub assignments: BTreeMap<Vec<usize>, Assignment>,
    /// ω′_m = E(1_m) − E(0).
    pub dressed: Vec<Option<f64>>,
    /// α_m = 2E(1_m) − E(2_m).
    pub alpha: Vec<Option<f64>>,
    /// χ_mn = E(1_m) + E(1_n) − E(1_m 1_n) − E(0), off-diagonal only.
    pub chi: Vec<Vec<Option<f64>>>,
    /// Labels whose best overlap did not clear the threshold.
    pub ambiguous: Vec<Vec<usize>>,
    pub convergence: Option<Convergence>,
}

impl FockSolution {
    /// Every extracted parameter in a fixed order.
    fn parameters(&self) -> Vec<Option<f64>> {
        let mut v: Vec<Option<f64>> = self.dressed.clone();
        v.extend(self.alpha.iter().copied());
        for (m, row) in self.chi.iter().enumerate() {
            v.extend(row.iter().skip(m + 1).copied());
        }
        v
    }
}

fn unit_label(m_count: usize, entries: &[(usize, usize)]) -> Vec<usize> {
    let mut l = vec![0; m_count];
    for &(m, n) in entries {
        l[m] += n;
    }
    l
}

/// Labels needed for extraction: ground, single and double excitations,
/// and pairs.
fn extraction_labels(m_count: usize) -> Vec<Vec<usize>> {
    let mut labels = vec![vec![0; m_count]];
    for m in 0..m_count {
        labels.push(unit_label(m_count, &[(m, 1)]));
        labels.push(unit_label(m_count, &[(m, 2)]));
    }
    for m in 0..m_count {
        for n in (m + 1)..m_count {
            labels.push(unit_label(m_count, &[(m, 1), (n, 1)]));
        }
    }
    labels
}

/// Assigns bare labels to eigenvectors and reads off ω′, α and χ.
pub fn extract_parameters(
    omega: &[f64],
    cutoffs: &[usize],
    eigenvalues: &[f64],
    eigenvectors: &DMatrix<f64>,
) -> Result<FockSolution, FockError> {
    let m_count = omega.len();
    let mut strides = vec![1; m_count];
    for m in (0..m_count.saturating_sub(1)).rev() {
        strides[m] = strides[m + 1] * cutoffs[m + 1];
    }
    let mut assignments = BTreeMap::new();
    let mut ambiguous = Vec::new();
    for label in extraction_labels(m_count) {
        let row: usize = label.iter().zip(&strides).map(|(n, s)| n * s).sum();
        let mut best = Assignment { index: 0, overlap: -1.0 };
        for c in 0..eigenvectors.ncols() {
            let w = eigenvectors[(row, c)].powi(2);
            if w > best.overlap {
                best = Assignment { index: c, overlap: w };
            }
        }
        if best.overlap <= ASSIGNMENT_THRESHOLD {
            ambiguous.push(label.clone());
        }
        assignments.insert(label, best);
    }
    let ground_label = vec![0; m_count];
    let ground = &assignments[&ground_label];
    if ambiguous.contains(&ground_label) {
        return Err(FockError::AmbiguousAssignment { overlap: ground.overlap });
    }
    let e0 = eigenvalues[ground.index];
    let energy = |label: &Vec<usize>| -> Option<f64> {
        if ambiguous.contains(label) {
            None
        } else {
            Some(eigenvalues[assignments[label].index] - e0)
        }
    };
    let one = |m: usize| energy(&unit_label(m_count, &[(m, 1)]));
    let dressed: Vec<Option<f64>> = (0..m_count).map(one).collect();
    let alpha = (0..m_count)
        .map(|m| Some(2.0 * one(m)? - energy(&unit_label(m_count, &[(m, 2)]))?))
        .collect();
    let mut chi = vec![vec![None; m_count]; m_count];
    for m in 0..m_count {
        for n in (m + 1)..m_count {
            let v = (|| Some(one(m)? + one(n)? - energy(&unit_label(m_count, &[(m, 1), (n, 1)]))?))();
            chi[m][n] = v;
            chi[n][m] = v;
        }
    }
    Ok(FockSolution {
        cutoffs: cutoffs.to_vec(),
        eigenvalues: eigenvalues.iter().map(|e| e - e0).collect(),
        assignments,
        dressed,
        alpha,
        chi,
        ambiguous,
        convergence: None,
    })
}

/// How many levels to request so every extraction label is covered.
fn levels_needed(omega: &[f64], cutoffs: &[usize]) -> usize {
    let w_min = omega.iter().cloned().fold(f64::INFINITY, f64::min);
    let w_max = omega.iter().cloned().fold(0.0, f64::max);
    let ceiling = 2.0 * w_max + 0.5 * w_min;
    let mut count = 0usize;
    let mut label = vec![0usize; omega.len()];
    loop {
        let e: f64 = label.iter().zip(omega).map(|(&n, w)| n as f64 * w).sum();
        if e <= ceiling {
            count += 1;
        }
        // odometer over the product basis, pruning on energy per digit
        let mut m = omega.len();
        loop {
            if m == 0 {
                return count + 4;
            }
            m -= 1;
            label[m] += 1;
            let e: f64 = label.iter().zip(omega).map(|(&n, w)| n as f64 * w).sum();
            if label[m] < cutoffs[m] && e <= ceiling {
                break;
            }
            label[m] = 0;
        }
    }
}

/// Builds, diagonalizes and extracts at fixed cutoffs.
pub fn solve(inputs: &FockInputs, cutoffs: &[usize], budget: usize) -> Result<FockSolution, FockError> {
    let op = build_hamiltonian_matrix(inputs, cutoffs, budget)?;
    let nev = levels_needed(inputs.omega, cutoffs);
    let (vals, vecs) = lowest_eigenpairs(&op, nev)?;
    extract_parameters(inputs.omega, cutoffs, &vals, &vecs)
}

fn relative_change(new: &FockSolution, old: &FockSolution, floor: f64) -> f64 {
    new.parameters()
        .iter()
        .zip(old.parameters())
        .map(|(a, b)| match (a, b) {
            (Some(a), Some(b)) => (a - b).abs() / a.abs().max(floor),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

/// Doubles every cutoff until all extracted parameters move by less than
/// `target_rel_tol`, starting from `initial`.
pub fn converge(
    inputs: &FockInputs,
    initial: &[usize],
    target_rel_tol: f64,
    budget: usize,
) -> Result<FockSolution, FockError> {
    assert!(target_rel_tol > 0.0, "tolerance must be positive");
    // parameters far below the frequency scale are compared absolutely
    let floor = 1e-9 * inputs.omega.iter().cloned().fold(0.0, f64::max);
    let mut cutoffs = initial.to_vec();
    let mut prev = solve(inputs, &cutoffs, budget)?;
    loop {
        let next: Vec<usize> = cutoffs.iter().map(|c| c * 2).collect();
        let dim: usize = next.iter().product();
        if dim > budget {
            return Err(FockError::BudgetExceeded {
                dimension: dim,
                budget,
                partial: Some(Box::new(prev)),
            });
        }
        let mut sol = solve(inputs, &next, budget)?;
        let change = relative_change(&sol, &prev, floor);
        let converged = change < target_rel_tol;
        sol.convergence = Some(Convergence {
            previous_cutoffs: cutoffs.clone(),
            max_relative_change: change,
            converged,
        });
        if converged {
            return Ok(sol);
        }
        prev = sol;
        cutoffs = next;
    }
}
