//! Exact-diagonalization reference within one `(N_e, S_z)` sector.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ci::{annihilate, create, CIVector, Determinant};
use crate::operator::{Axis, DipoleOperator, Hamiltonian, QVector};
use crate::spectrum::{lorentzian, Pair, Spectrum, SpectrumKind};
use crate::{Error, Result};

/// Largest sector solved with the dense eigensolver.
pub const DENSE_MAX_DIM: usize = 4000;
/// Default cap on the sector dimension for ground-state solves.
pub const DEFAULT_SECTOR_CAP: usize = 1_000_000;
/// Relative energy window treated as degenerate with the ground state.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// `(N_α, N_β)` sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sector {
    pub n_alpha: usize,
    pub n_beta: usize,
}

impl Sector {
    pub fn new(n_alpha: usize, n_beta: usize) -> Self {
        Sector { n_alpha, n_beta }
    }

    /// Sector with `N_e` electrons and `2·S_z = ms2`.
    pub fn from_electrons(n_electrons: usize, ms2: i64) -> Result<Self> {
        let twice_alpha = n_electrons as i64 + ms2;
        if twice_alpha < 0 || twice_alpha % 2 != 0 || twice_alpha / 2 > n_electrons as i64 {
            return Err(Error::Invalid(format!("no sector with N_e = {n_electrons}, 2S_z = {ms2}")));
        }
        let na = (twice_alpha / 2) as usize;
        Ok(Sector::new(na, n_electrons - na))
    }

    pub fn n_electrons(&self) -> usize {
        self.n_alpha + self.n_beta
    }

    /// Number of determinants over `n` orbitals.
    pub fn dimension(&self, n: usize) -> u128 {
        binomial(n, self.n_alpha) * binomial(n, self.n_beta)
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn masks(n: usize, k: usize) -> Vec<u64> {
    (0u64..1 << n).filter(|m| m.count_ones() as usize == k).collect()
}

/// All determinants of the sector, sorted by computational-basis index.
pub fn sector_basis(n_orbitals: usize, sector: Sector) -> Vec<Determinant> {
    let alphas = masks(n_orbitals, sector.n_alpha);
    let betas = masks(n_orbitals, sector.n_beta);
    let mut basis: Vec<Determinant> = alphas
        .iter()
        .flat_map(|&a| betas.iter().map(move |&b| Determinant::new(a, b)))
        .collect();
    basis.sort();
    basis
}

/// Antisymmetrized spin-orbital integral `⟨ij||kl⟩ = ⟨ij|kl⟩ − ⟨ij|lk⟩` with `⟨ij|kl⟩ = (ik|jl)`.
#[inline]
fn antisym(h: &Hamiltonian, i: usize, j: usize, k: usize, l: usize) -> f64 {
    let direct = if i & 1 == k & 1 && j & 1 == l & 1 {
        h.eri(i >> 1, k >> 1, j >> 1, l >> 1)
    } else {
        0.0
    };
    let exchange = if i & 1 == l & 1 && j & 1 == k & 1 {
        h.eri(i >> 1, l >> 1, j >> 1, k >> 1)
    } else {
        0.0
    };
    direct - exchange
}

#[inline]
fn one_body(h: &Hamiltonian, i: usize, j: usize) -> f64 {
    if i & 1 == j & 1 {
        h.h(i >> 1, j >> 1)
    } else {
        0.0
    }
}

fn occupied(bits: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |&i| (bits >> i) & 1 == 1)
}

/// Zero-difference Slater–Condon rule.
pub fn determinant_energy(h: &Hamiltonian, d: &Determinant) -> f64 {
    let bits = d.qubit_bits();
    let occ: Vec<usize> = occupied(bits).collect();
    let mut e = h.offset();
    for (a, &i) in occ.iter().enumerate() {
        e += one_body(h, i, i);
        for &j in &occ[..a] {
            e += antisym(h, i, j, i, j);
        }
    }
    e
}

/// `⟨bra|H|ket⟩` by the Slater–Condon rules.
pub fn matrix_element(h: &Hamiltonian, bra: &Determinant, ket: &Determinant) -> f64 {
    let (b, k) = (bra.qubit_bits(), ket.qubit_bits());
    let diff = b ^ k;
    match diff.count_ones() {
        0 => determinant_energy(h, ket),
        2 => {
            let i = (k & diff).trailing_zeros() as usize;
            let a = (b & diff).trailing_zeros() as usize;
            let (s1, mid) = annihilate(k, i).expect("occupied");
            let (s2, _) = create(mid, a).expect("empty");
            let mut v = one_body(h, a, i);
            for j in occupied(mid) {
                v += antisym(h, a, j, i, j);
            }
            s1 * s2 * v
        }
        4 => {
            let holes = k & diff;
            let parts = b & diff;
            let i = holes.trailing_zeros() as usize;
            let j = (holes & (holes - 1)).trailing_zeros() as usize;
            let a = parts.trailing_zeros() as usize;
            let c = (parts & (parts - 1)).trailing_zeros() as usize;
            // |bra⟩ = s · a†_a a†_c a_j a_i |ket⟩
            let (s1, x) = annihilate(k, i).expect("occupied");
            let (s2, x) = annihilate(x, j).expect("occupied");
            let (s3, x) = create(x, c).expect("empty");
            let (s4, _) = create(x, a).expect("empty");
            s1 * s2 * s3 * s4 * antisym(h, a, c, i, j)
        }
        _ => 0.0,
    }
}

fn check_basis(n_orbitals: usize, basis: &[Determinant]) -> Result<()> {
    let Some(first) = basis.first() else {
        return Err(Error::Invalid("empty determinant basis".into()));
    };
    let limit = (1u64 << n_orbitals) - 1;
    for d in basis {
        if d.alpha.count_ones() != first.alpha.count_ones() || d.beta.count_ones() != first.beta.count_ones() {
            return Err(Error::Invalid("basis mixes (N_e, S_z) sectors".into()));
        }
        if (d.alpha | d.beta) & !limit != 0 {
            return Err(Error::Invalid(format!("determinant {d} exceeds {n_orbitals} orbitals")));
        }
    }
    Ok(())
}

/// Dense CI matrix over `basis`.
pub fn build_ci_matrix(h: &Hamiltonian, basis: &[Determinant]) -> Result<DMatrix<f64>> {
    check_basis(h.n_orbitals(), basis)?;
    let dim = basis.len();
    let rows: Vec<Vec<f64>> = basis
        .par_iter()
        .map(|bra| basis.iter().map(|ket| matrix_element(h, bra, ket)).collect())
        .collect();
    let mut m = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
    // Exact symmetry regardless of floating-point summation order.
    for i in 0..dim {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Sparse rows `(column, value)` built by enumerating single and double excitations.
fn build_sparse(h: &Hamiltonian, basis: &[Determinant]) -> Vec<Vec<(usize, f64)>> {
    let index: HashMap<u64, usize> = basis.iter().enumerate().map(|(i, d)| (d.qubit_bits(), i)).collect();
    let nq = 2 * h.n_orbitals();
    basis
        .par_iter()
        .map(|ket| {
            let k = ket.qubit_bits();
            let occ: Vec<usize> = occupied(k).collect();
            let virt: Vec<usize> = (0..nq).filter(|&i| (k >> i) & 1 == 0).collect();
            let mut row = vec![(index[&k], determinant_energy(h, ket))];
            let mut push = |bits: u64| {
                if let Some(&col) = index.get(&bits) {
                    let v = matrix_element(h, &Determinant::from_qubit_bits(bits), ket);
                    if v != 0.0 {
                        row.push((col, v));
                    }
                }
            };
            for &i in &occ {
                for &a in &virt {
                    if i & 1 == a & 1 {
                        push(k ^ (1 << i) ^ (1 << a));
                    }
                }
            }
            for (x, &i) in occ.iter().enumerate() {
                for &j in &occ[x + 1..] {
                    for (y, &a) in virt.iter().enumerate() {
                        for &c in &virt[y + 1..] {
                            if (i & 1) + (j & 1) == (a & 1) + (c & 1) {
                                push(k ^ (1 << i) ^ (1 << j) ^ (1 << a) ^ (1 << c));
                            }
                        }
                    }
                }
            }
            row
        })
        .collect()
}

/// Lowest eigenpair of a sparse symmetric matrix by Lanczos with full reorthogonalization.
fn lanczos_ground(rows: &[Vec<(usize, f64)>], max_iter: usize, tol: f64) -> (f64, DVector<f64>) {
    let dim = rows.len();
    let apply = |v: &DVector<f64>| {
        DVector::from_iterator(dim, rows.iter().map(|r| r.iter().map(|&(c, x)| x * v[c]).sum::<f64>()))
    };
    // Deterministic start vector with support on every determinant.
    let mut q = DVector::from_fn(dim, |i, _| 1.0 + ((i * 2_654_435_761) % 1000) as f64 * 1e-3);
    q /= q.norm();
    let mut basis: Vec<DVector<f64>> = vec![q];
    let (mut alphas, mut betas) = (Vec::new(), Vec::new());
    let mut best = (f64::INFINITY, DVector::zeros(dim));
    for it in 0..max_iter.min(dim) {
        let mut w = apply(&basis[it]);
        let a = basis[it].dot(&w);
        alphas.push(a);
        for _ in 0..2 {
            for v in &basis {
                let c = v.dot(&w);
                w.axpy(-c, v, 1.0);
            }
        }
        let b = w.norm();
        let m = alphas.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alphas[i]
            } else if i + 1 == j {
                betas[i]
            } else if j + 1 == i {
                betas[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let (kmin, &e) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .expect("nonempty");
        let s = eig.eigenvectors.column(kmin);
        let residual = (b * s[m - 1]).abs();
        if residual < tol || b < 1e-14 || it + 1 == max_iter.min(dim) {
            let mut v = DVector::zeros(dim);
            for (c, qv) in s.iter().zip(&basis) {
                v.axpy(*c, qv, 1.0);
            }
            let n = v.norm();
            best = (e, v / n);
            break;
        }
        betas.push(b);
        basis.push(w / b);
    }
    best
}

/// Sorted eigenpairs of the CI matrix of one sector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub n_orbitals: usize,
    pub energies: Vec<f64>,
    /// Column `k` is eigenvector `k` in the determinant basis.
    pub vectors: DMatrix<f64>,
    pub basis: Vec<Determinant>,
}

/// Flips the sign so the largest-magnitude entry is positive.
fn fix_phase(mut v: DVector<f64>) -> DVector<f64> {
    let mut best = 0usize;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() * (1.0 + 1e-12) {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
    v
}

impl EigenSystem {
    pub fn solve(h: &Hamiltonian, basis: Vec<Determinant>) -> Result<Self> {
        if basis.len() > DENSE_MAX_DIM {
            return Err(Error::SectorCap {
                dim: basis.len(),
                cap: DENSE_MAX_DIM,
            });
        }
        let m = build_ci_matrix(h, &basis)?;
        let eig = SymmetricEigen::new(m);
        let mut order: Vec<usize> = (0..basis.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let energies: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let cols: Vec<DVector<f64>> = order
            .iter()
            .map(|&k| fix_phase(eig.eigenvectors.column(k).into_owned()))
            .collect();
        Ok(EigenSystem {
            n_orbitals: h.n_orbitals(),
            energies,
            vectors: DMatrix::from_columns(&cols),
            basis,
        })
    }

    pub fn for_sector(h: &Hamiltonian, sector: Sector) -> Result<Self> {
        EigenSystem::solve(h, sector_basis(h.n_orbitals(), sector))
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn n_electrons(&self) -> usize {
        self.basis[0].n_electrons() as usize
    }

    pub fn eigenvector(&self, k: usize) -> CIVector {
        column_to_ci(self.n_orbitals, &self.basis, self.vectors.column(k).iter().copied())
    }

    /// Ground state; within a degenerate ground manifold, the normalized
    /// projection of the lowest-index determinant with nonzero overlap.
    pub fn ground_state(&self) -> (CIVector, f64) {
        let e0 = self.energies[0];
        let deg: Vec<usize> = (0..self.dim())
            .take_while(|&k| self.energies[k] - e0 <= DEGENERACY_TOL * e0.abs().max(1.0))
            .collect();
        if deg.len() == 1 {
            return (self.eigenvector(0), e0);
        }
        for j in 0..self.dim() {
            let mut v = DVector::zeros(self.dim());
            for &k in &deg {
                v.axpy(self.vectors[(j, k)], &self.vectors.column(k), 1.0);
            }
            let n = v.norm();
            if n > 1e-8 {
                let v = fix_phase(v / n);
                return (column_to_ci(self.n_orbitals, &self.basis, v.iter().copied()), e0);
            }
        }
        unreachable!("the degenerate manifold spans at least one basis direction")
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = EigenJson {
            n_orbitals: self.n_orbitals,
            energies: self.energies.clone(),
            basis: self
                .basis
                .iter()
                .map(|d| [d.alpha_string(self.n_orbitals), d.beta_string(self.n_orbitals)])
                .collect(),
            vectors: (0..self.dim()).map(|k| self.vectors.column(k).iter().copied().collect()).collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: EigenJson = serde_json::from_str(text)?;
        let basis = doc
            .basis
            .iter()
            .map(|[a, b]| Determinant::from_strings(a, b))
            .collect::<Result<Vec<_>>>()?;
        let dim = basis.len();
        if doc.energies.len() != doc.vectors.len() || doc.vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::Invalid("inconsistent eigensystem document".into()));
        }
        check_basis(doc.n_orbitals, &basis)?;
        let cols: Vec<DVector<f64>> = doc.vectors.into_iter().map(DVector::from_vec).collect();
        Ok(EigenSystem {
            n_orbitals: doc.n_orbitals,
            energies: doc.energies,
            vectors: DMatrix::from_columns(&cols),
            basis,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct EigenJson {
    n_orbitals: usize,
    energies: Vec<f64>,
    basis: Vec<[String; 2]>,
    vectors: Vec<Vec<f64>>,
}

fn column_to_ci(n_orbitals: usize, basis: &[Determinant], col: impl Iterator<Item = f64>) -> CIVector {
    let n_electrons = basis[0].n_electrons() as usize;
    CIVector::from_entries(
        n_orbitals,
        n_electrons,
        basis.iter().copied().zip(col.map(|x| Complex64::new(x, 0.0))),
    )
    .expect("basis determinants are valid")
}

/// Lowest eigenvector of the sector and its energy, phase-fixed.
pub fn ground_state(h: &Hamiltonian, sector: Sector, cap: usize) -> Result<(CIVector, f64)> {
    let dim = sector.dimension(h.n_orbitals());
    if dim > cap as u128 {
        return Err(Error::SectorCap {
            dim: dim.min(usize::MAX as u128) as usize,
            cap,
        });
    }
    let basis = sector_basis(h.n_orbitals(), sector);
    if basis.len() <= DENSE_MAX_DIM {
        return Ok(EigenSystem::solve(h, basis)?.ground_state());
    }
    let rows = build_sparse(h, &basis);
    let (e, v) = lanczos_ground(&rows, 400, 1e-10);
    let v = fix_phase(v);
    Ok((column_to_ci(h.n_orbitals(), &basis, v.iter().copied()), e))
}

/// Transition amplitudes `p_{α,k} = ⟨Ψ_k|μ_α|Ψ0⟩` and excitation energies `E_k − E_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    pub e0: f64,
    pub excitation: Vec<f64>,
    pub amplitudes: Vec<[Complex64; 3]>,
    /// `⟨Ψ0|μ_α μ_β|Ψ0⟩` of the (possibly projected) dipole states.
    pub moments: [[f64; 3]; 3],
}

impl TransitionTable {
    /// Uses the optionally CVS-projected dipole states `P μ_α |Ψ0⟩`. The
    /// reference energy is the Rayleigh quotient of `ground`.
    pub fn new(eig: &EigenSystem, h: &Hamiltonian, ground: &CIVector, dipole: &DipoleOperator, cvs: Option<&[usize]>) -> Result<Self> {
        let e0 = rayleigh_quotient(h, ground)?;
        let mut states = Vec::new();
        for axis in Axis::ALL {
            let mut v = ground.apply_one_body(dipole.component(axis))?;
            if let Some(core) = cvs {
                v = v.cvs_project(core).unwrap_or_else(|_| CIVector::empty(v.n_orbitals(), v.n_electrons()));
            }
            states.push(v);
        }
        let mut moments = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                moments[a][b] = states[a].inner(&states[b]).re;
            }
        }
        let index: HashMap<Determinant, usize> = eig.basis.iter().enumerate().map(|(i, d)| (*d, i)).collect();
        let dense: Vec<DVector<Complex64>> = states
            .iter()
            .map(|s| {
                let mut v = DVector::from_element(eig.dim(), Complex64::new(0.0, 0.0));
                for (d, a) in s.iter() {
                    match index.get(d) {
                        Some(&i) => v[i] = *a,
                        None => return Err(Error::Invalid(format!("dipole state leaves the sector at {d}"))),
                    }
                }
                Ok(v)
            })
            .collect::<Result<_>>()?;
        let amplitudes = (0..eig.dim())
            .map(|k| {
                let col = eig.vectors.column(k);
                let mut p = [Complex64::new(0.0, 0.0); 3];
                for (a, v) in dense.iter().enumerate() {
                    p[a] = col.iter().zip(v.iter()).map(|(c, x)| x * *c).sum();
                }
                p
            })
            .collect();
        Ok(TransitionTable {
            e0,
            excitation: eig.energies.iter().map(|e| e - e0).collect(),
            amplitudes,
            moments,
        })
    }

    /// `Σ_k |p_{α,k}|²`, equal to `⟨μ_α²⟩` for a complete eigenbasis.
    pub fn completeness(&self, axis: Axis) -> f64 {
        self.amplitudes.iter().map(|p| p[axis.index()].norm_sqr()).sum()
    }

    fn weight(&self, k: usize, pair: Pair) -> f64 {
        let p = &self.amplitudes[k];
        (p[pair.alpha().index()].conj() * p[pair.beta().index()]).re
    }
}

/// `⟨v|H|v⟩/⟨v|v⟩` using the exact Slater–Condon action.
pub fn rayleigh_quotient(h: &Hamiltonian, v: &CIVector) -> Result<f64> {
    let norm2 = v.norm().powi(2);
    if norm2 == 0.0 {
        return Err(Error::Invalid("zero vector".into()));
    }
    let entries: Vec<(&Determinant, &Complex64)> = v.iter().collect();
    let e: Complex64 = entries
        .par_iter()
        .map(|(bra, a)| {
            entries
                .iter()
                .map(|(ket, b)| a.conj() * **b * matrix_element(h, bra, ket))
                .sum::<Complex64>()
        })
        .sum();
    Ok(e.re / norm2)
}

/// Pair intensity `Σ_k Re(p*_{α,k} p_{β,k}) L_η(ω − ω_k)`.
pub fn exact_intensity(trans: &TransitionTable, pair: Pair, eta: f64, omega: &[f64]) -> Spectrum {
    let values = omega
        .iter()
        .map(|&w| {
            (0..trans.excitation.len())
                .map(|k| trans.weight(k, pair) * lorentzian(w - trans.excitation[k], eta))
                .sum()
        })
        .collect();
    Spectrum::new(omega.to_vec(), values, eta, SpectrumKind::Intensity(pair))
}

/// `S(q, ω) = Σ_k |Σ_α q_α p_{α,k}|² L_η(ω − ω_k)`.
pub fn exact_spectrum(trans: &TransitionTable, q: &QVector, eta: f64, omega: &[f64]) -> Spectrum {
    let weights: Vec<f64> = trans
        .amplitudes
        .iter()
        .map(|p| Axis::ALL.iter().map(|&a| p[a.index()] * q.component(a)).sum::<Complex64>().norm_sqr())
        .collect();
    let values = omega
        .iter()
        .map(|&w| {
            weights
                .iter()
                .zip(&trans.excitation)
                .map(|(c, e)| c * lorentzian(w - e, eta))
                .sum()
        })
        .collect();
    Spectrum::new(omega.to_vec(), values, eta, SpectrumKind::Dsf(*q))
}

/// `Σ_k p*_{α,k} p_{β,k} e^{−i(ω_k − offset) nτ}`.
pub fn exact_greens(trans: &TransitionTable, pair: Pair, tau: f64, n: f64, omega_offset: f64) -> Complex64 {
    trans
        .amplitudes
        .iter()
        .zip(&trans.excitation)
        .map(|(p, e)| {
            p[pair.alpha().index()].conj() * p[pair.beta().index()] * Complex64::from_polar(1.0, -(e - omega_offset) * n * tau)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::ModelSpec;
    use crate::operator::jordan_wigner;

    #[test]
    fn ci_matrix_matches_jordan_wigner_restriction() {
        for n in 2..=4 {
            for seed in 0..3 {
                let (h, _) = ModelSpec::random(n, 2, seed).generate();
                let dense = jordan_wigner(&h).dense_matrix();
                for sector in [Sector::new(1, 1), Sector::new(2, 0), Sector::new(2, 1)] {
                    let basis = sector_basis(n, sector);
                    let ci = build_ci_matrix(&h, &basis).unwrap();
                    for (i, a) in basis.iter().enumerate() {
                        for (j, b) in basis.iter().enumerate() {
                            let z = dense[(a.qubit_bits() as usize, b.qubit_bits() as usize)];
                            assert!((ci[(i, j)] - z.re).abs() < 1e-10 && z.im.abs() < 1e-10, "n={n} {a} {b}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn one_determinant_basis() {
        let (h, _) = ModelSpec::random(3, 2, 1).generate();
        let d = Determinant::new(0b001, 0b010);
        let m = build_ci_matrix(&h, &[d]).unwrap();
        assert_eq!(m.shape(), (1, 1));
        assert!((m[(0, 0)] - determinant_energy(&h, &d)).abs() < 1e-14);
    }

    #[test]
    fn diagonal_rule_by_independent_formula() {
        let (h, _) = ModelSpec::random(3, 3, 4).generate();
        let d = Determinant::new(0b011, 0b010);
        // Spatial form: Σ h + ½Σ_{ij} [(ii|jj) − δ_σ (ij|ji)].
        let occ = [(0, 0), (1, 0), (1, 1)];
        let mut e = h.offset();
        for &(p, s) in &occ {
            e += h.h(p, p);
            for &(q, t) in &occ {
                e += 0.5 * h.eri(p, p, q, q);
                if s == t {
                    e -= 0.5 * h.eri(p, q, q, p);
                }
            }
        }
        assert!((determinant_energy(&h, &d) - e).abs() < 1e-12);
    }

    #[test]
    fn rejects_mixed_sectors() {
        let h = Hamiltonian::constant(2, 0.0);
        let basis = [Determinant::new(1, 1), Determinant::new(3, 0)];
        assert!(build_ci_matrix(&h, &basis).is_err());
    }

    #[test]
    fn offset_only_tie_break() {
        let h = Hamiltonian::constant(3, -2.5);
        let (g, e) = ground_state(&h, Sector::new(1, 1), DEFAULT_SECTOR_CAP).unwrap();
        assert!((e + 2.5).abs() < 1e-12);
        assert_eq!(g.len(), 1);
        let first = sector_basis(3, Sector::new(1, 1))[0];
        assert!((g.amplitude(&first).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigen_residuals_and_orthonormality() {
        let (h, _) = ModelSpec::random(4, 4, 2).generate();
        let eig = EigenSystem::for_sector(&h, Sector::new(2, 2)).unwrap();
        let m = build_ci_matrix(&h, &eig.basis).unwrap();
        let norm = m.norm();
        for k in 0..eig.dim() {
            let v = eig.vectors.column(k);
            assert!((&m * v - v * eig.energies[k]).norm() <= 1e-9 * norm);
        }
        let gram = eig.vectors.transpose() * &eig.vectors;
        assert!((gram - DMatrix::identity(eig.dim(), eig.dim())).abs().max() < 1e-10);
        assert!(eig.energies.windows(2).all(|w| w[0] <= w[1]));
        let (g, e0) = eig.ground_state();
        assert!((rayleigh_quotient(&h, &g).unwrap() - e0).abs() < 1e-10);
    }

    #[test]
    fn ground_state_matches_dense_jordan_wigner() {
        let spec = ModelSpec::random(2, 2, 2024);
        let (h, _) = spec.generate();
        let (_, e0) = ground_state(&h, Sector::new(1, 1), DEFAULT_SECTOR_CAP).unwrap();
        let dense = jordan_wigner(&h).dense_matrix();
        let num = crate::operator::total_number_operator(2).dense_matrix();
        let eig = dense.symmetric_eigen();
        // Lowest two-electron eigenvalue; the S_z = 0 sector contains the singlet ground state.
        let mut best = f64::INFINITY;
        for k in 0..16 {
            let v = eig.eigenvectors.column(k);
            let n = (v.adjoint() * &num * v)[(0, 0)].re;
            if (n - 2.0).abs() < 1e-8 {
                best = best.min(eig.eigenvalues[k]);
            }
        }
        assert!((best - e0).abs() < 1e-10, "{best} vs {e0}");
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let (h, _) = ModelSpec::random(6, 4, 3).generate();
        let basis = sector_basis(6, Sector::new(2, 2));
        let dense = EigenSystem::solve(&h, basis.clone()).unwrap();
        let rows = build_sparse(&h, &basis);
        let (e, v) = lanczos_ground(&rows, 400, 1e-10);
        assert!((e - dense.energies[0]).abs() < 1e-9);
        let overlap = v.dot(&dense.vectors.column(0)).abs();
        assert!((overlap - 1.0).abs() < 1e-8);
    }

    #[test]
    fn transition_completeness_and_moments() {
        let spec = ModelSpec::random(3, 2, 8);
        let (h, mu) = spec.generate();
        let eig = EigenSystem::for_sector(&h, Sector::new(1, 1)).unwrap();
        let (g, _) = eig.ground_state();
        let t = TransitionTable::new(&eig, &h, &g, &mu, None).unwrap();
        for a in Axis::ALL {
            assert!((t.completeness(a) - t.moments[a.index()][a.index()]).abs() < 1e-10);
        }
        // Off-diagonal moments from the completeness relation.
        let m = crate::ci::moment(&g, mu.component(Axis::X), mu.component(Axis::Z)).unwrap();
        let sum: f64 = t.amplitudes.iter().map(|p| (p[0].conj() * p[2]).re).sum();
        assert!((m - sum).abs() < 1e-10);
        let g0 = exact_greens(&t, Pair::XZ, 0.5, 0.0, 0.0);
        assert!((g0.re - m).abs() < 1e-10 && g0.im.abs() < 1e-12);
        let plus = exact_greens(&t, Pair::XX, 0.5, 3.0, 0.0);
        let minus = exact_greens(&t, Pair::XX, 0.5, -3.0, 0.0);
        assert!((plus - minus.conj()).norm() < 1e-12);
    }

    #[test]
    fn single_transition_peak_and_zero_dipole() {
        let t = TransitionTable {
            e0: 0.0,
            excitation: vec![0.0, 1.5],
            amplitudes: vec![[Complex64::new(0.0, 0.0); 3], [Complex64::new(0.3, 0.0), Complex64::new(-0.2, 0.0), Complex64::new(0.1, 0.0)]],
            moments: [[0.0; 3]; 3],
        };
        let q = QVector::new(1.0, 2.0, -1.0).unwrap();
        let eta = 0.05;
        let s = exact_spectrum(&t, &q, eta, &[1.5]);
        let qp: f64 = 0.3 - 0.4 - 0.1;
        assert!((s.values[0] - qp * qp / (std::f64::consts::PI * eta)).abs() < 1e-12);
        let zero = TransitionTable { amplitudes: vec![[Complex64::new(0.0, 0.0); 3]; 2], ..t };
        assert!(exact_spectrum(&zero, &q, eta, &[0.0, 1.0, 1.5]).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn eigensystem_json_round_trip() {
        let (h, _) = ModelSpec::random(2, 2, 1).generate();
        let eig = EigenSystem::for_sector(&h, Sector::new(1, 1)).unwrap();
        let back = EigenSystem::from_json(&eig.to_json().unwrap()).unwrap();
        assert_eq!(back, eig);
    }
}
