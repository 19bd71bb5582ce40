//! Statevector emulation of the Hadamard-test circuit with second-order
//! Trotterized time evolution.
//!
//! The circuit prepares `(|0⟩|b⟩ + |1⟩|a⟩)/√2`, applies the propagator
//! controlled on the ancilla, an optional `S†` on the ancilla and a final
//! Hadamard. Its ancilla statistics are `P(0) = (1 + v)/2` with
//! `v = Re⟨b|U|a⟩` (no phase gate) or `v = Im⟨b|U|a⟩` (with `S†`), so the
//! emulator evolves only `|a⟩` and takes one inner product.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::distr::{Bernoulli, Distribution};
use serde::{Deserialize, Serialize};

use crate::operator::{PauliSum, PauliWord};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Tolerance on ‖ψ‖ − 1 for states entering a Hadamard test.
pub const NORM_TOL: f64 = 1e-10;
/// Programs up to this many qubits are compiled to a dense propagator.
pub const DENSE_PROPAGATOR_MAX_QUBITS: usize = 8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        StateVector { n_qubits, amps }
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1usize << n_qubits {
            return Err(Error::Dimension {
                expected: 1 << n_qubits,
                found: amps.len(),
            });
        }
        Ok(StateVector { n_qubits, amps })
    }

    pub(crate) fn from_amplitudes_unchecked(n_qubits: usize, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n_qubits);
        StateVector { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scale(&mut self, s: Complex64) {
        for a in &mut self.amps {
            *a *= s;
        }
    }

    /// `|ψ⟩ ← e^{−iθP}|ψ⟩`.
    pub fn apply_pauli_rotation(&mut self, word: PauliWord, theta: f64) {
        let (sin, cos) = theta.sin_cos();
        if word.x == 0 {
            let (plus, minus) = (Complex64::new(cos, -sin), Complex64::new(cos, sin));
            for (b, a) in self.amps.iter_mut().enumerate() {
                *a *= if (word.z & b as u64).count_ones() & 1 == 0 { plus } else { minus };
            }
            return;
        }
        let pivot = 1usize << (63 - word.x.leading_zeros());
        let x = word.x as usize;
        let iy = crate::operator::i_pow(word.n_y());
        let ms = Complex64::new(0.0, -sin);
        let sign = |b: usize| if (word.z & b as u64).count_ones() & 1 == 0 { 1.0 } else { -1.0 };
        for b in 0..self.amps.len() {
            if b & pivot != 0 {
                continue;
            }
            let b2 = b ^ x;
            let (u, v) = (self.amps[b], self.amps[b2]);
            // P|b2⟩ = iy·sign(b2)|b⟩ and P|b⟩ = iy·sign(b)|b2⟩.
            self.amps[b] = u * cos + ms * iy * sign(b2) * v;
            self.amps[b2] = v * cos + ms * iy * sign(b) * u;
        }
    }

    fn apply_diagonal(&mut self, phases: &[Complex64]) {
        for (a, p) in self.amps.iter_mut().zip(phases) {
            *a *= p;
        }
    }

    /// Length-prefixed little-endian dump: `u64` amplitude count, then `(re, im)` f64 pairs.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.amps.len() as u64).to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> Result<StateVector> {
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let len = u64::from_le_bytes(word) as usize;
        if !len.is_power_of_two() {
            return Err(Error::Invalid(format!("dump length {len} is not a power of two")));
        }
        let mut amps = Vec::with_capacity(len);
        for _ in 0..len {
            r.read_exact(&mut word)?;
            let re = f64::from_le_bytes(word);
            r.read_exact(&mut word)?;
            amps.push(Complex64::new(re, f64::from_le_bytes(word)));
        }
        Ok(StateVector {
            n_qubits: len.trailing_zeros() as usize,
            amps,
        })
    }
}

/// `U_2(dt)^k` with `dt = τ/k`, one application per outer time step τ.
///
/// Term order: all diagonal (I/Z) words first, combined into one phase table,
/// then the remaining words in lexicographic order. A step is the palindrome
/// `D(dt/2) O_1(dt/2) ⋯ O_m(dt/2) O_m(dt/2) ⋯ O_1(dt/2) D(dt/2)` times the
/// identity phase `e^{−i c_I dt}`.
#[derive(Debug, Clone)]
pub struct TrotterProgram {
    n_qubits: usize,
    tau: f64,
    k: usize,
    identity: f64,
    diagonal: Vec<(f64, PauliWord)>,
    off_diagonal: Vec<(f64, PauliWord)>,
    diag_energy: Vec<f64>,
}

pub fn build_trotter(paulis: &PauliSum, tau: f64, k: usize) -> Result<TrotterProgram> {
    if k == 0 {
        return Err(Error::Invalid("Trotter steps k must be at least 1".into()));
    }
    if !(tau.is_finite() && tau != 0.0) {
        return Err(Error::Invalid(format!("invalid time step τ = {tau}")));
    }
    let n = paulis.n_qubits();
    let mut identity = 0.0;
    let mut diagonal = Vec::new();
    let mut off_diagonal = Vec::new();
    for &(c, w) in paulis.terms() {
        if w.is_identity() {
            identity += c;
        } else if w.is_diagonal() {
            diagonal.push((c, w));
        } else {
            off_diagonal.push((c, w));
        }
    }
    let diag_energy = (0..1usize << n)
        .map(|b| {
            diagonal
                .iter()
                .map(|&(c, w)| if (w.z & b as u64).count_ones() & 1 == 0 { c } else { -c })
                .sum()
        })
        .collect();
    Ok(TrotterProgram {
        n_qubits: n,
        tau,
        k,
        identity,
        diagonal,
        off_diagonal,
        diag_energy,
    })
}

impl TrotterProgram {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dt(&self) -> f64 {
        self.tau / self.k as f64
    }

    pub fn identity_coefficient(&self) -> f64 {
        self.identity
    }

    /// Terms in application order of the first half-sweep.
    pub fn terms(&self) -> impl Iterator<Item = &(f64, PauliWord)> {
        self.diagonal.iter().chain(&self.off_diagonal)
    }

    /// Same product formula with `τ → −τ`; for a palindromic step this is the exact inverse.
    pub fn time_reversed(&self) -> TrotterProgram {
        TrotterProgram {
            tau: -self.tau,
            ..self.clone()
        }
    }

    fn diag_phases(&self, t: f64) -> Vec<Complex64> {
        self.diag_energy.iter().map(|&e| Complex64::from_polar(1.0, -e * t)).collect()
    }

    /// `state ← [U_2(τ/k)^k]^reps state`.
    pub fn apply(&self, state: &mut StateVector, reps: usize) -> Result<()> {
        if state.n_qubits != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                found: state.n_qubits,
            });
        }
        let steps = reps * self.k;
        if steps == 0 {
            return Ok(());
        }
        let dt = self.dt();
        let half = self.diag_phases(dt / 2.0);
        let full = self.diag_phases(dt);
        state.apply_diagonal(&half);
        for s in 0..steps {
            for &(c, w) in &self.off_diagonal {
                state.apply_pauli_rotation(w, c * dt / 2.0);
            }
            for &(c, w) in self.off_diagonal.iter().rev() {
                state.apply_pauli_rotation(w, c * dt / 2.0);
            }
            state.apply_diagonal(if s + 1 == steps { &half } else { &full });
        }
        state.scale(Complex64::from_polar(1.0, -self.identity * dt * steps as f64));
        Ok(())
    }

    /// Dense matrix of one outer step `U_2(τ/k)^k`.
    pub fn dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n_qubits;
        let single = TrotterProgram { k: 1, tau: self.dt(), ..self.clone() };
        let mut step = DMatrix::from_element(dim, dim, ZERO);
        for j in 0..dim {
            let mut s = StateVector::basis(self.n_qubits, j);
            single.apply(&mut s, 1).expect("dimensions match");
            step.set_column(j, &DVector::from_vec(s.amps));
        }
        matrix_power(&step, self.k)
    }
}

fn matrix_power(m: &DMatrix<Complex64>, mut e: usize) -> DMatrix<Complex64> {
    let mut result = DMatrix::identity(m.nrows(), m.ncols());
    let mut base = m.clone();
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Applies a program; small systems use a precomputed dense step matrix.
#[derive(Debug, Clone)]
pub enum Propagator {
    Program(TrotterProgram),
    Dense { n_qubits: usize, step: DMatrix<Complex64> },
}

impl Propagator {
    pub fn new(program: TrotterProgram) -> Self {
        if program.n_qubits <= DENSE_PROPAGATOR_MAX_QUBITS {
            Propagator::Dense {
                n_qubits: program.n_qubits,
                step: program.dense(),
            }
        } else {
            Propagator::Program(program)
        }
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            Propagator::Program(p) => p.n_qubits,
            Propagator::Dense { n_qubits, .. } => *n_qubits,
        }
    }

    pub fn apply(&self, state: &mut StateVector, reps: usize) -> Result<()> {
        match self {
            Propagator::Program(p) => p.apply(state, reps),
            Propagator::Dense { n_qubits, step } => {
                if state.n_qubits != *n_qubits {
                    return Err(Error::Dimension {
                        expected: *n_qubits,
                        found: state.n_qubits,
                    });
                }
                for _ in 0..reps {
                    let v = step * DVector::from_column_slice(&state.amps);
                    state.amps.copy_from_slice(v.as_slice());
                }
                Ok(())
            }
        }
    }
}

/// `state ← [U_2(τ/k)^k]^reps state`.
pub fn apply_trotter(state: &StateVector, prog: &TrotterProgram, reps: usize) -> Result<StateVector> {
    let mut out = state.clone();
    prog.apply(&mut out, reps)?;
    Ok(out)
}

/// Exact `e^{−iHt}` of a Pauli sum via dense Hermitian diagonalization.
pub fn exact_propagator(h: &PauliSum, t: f64) -> DMatrix<Complex64> {
    let m = h.dense_matrix();
    let eig = m.symmetric_eigen();
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| Complex64::from_polar(1.0, -e * t)));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// Spectral norm `‖A − B‖₂`.
pub fn operator_distance(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).singular_values().max()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Real,
    Imag,
}

impl Which {
    pub fn index(self) -> u64 {
        match self {
            Which::Real => 0,
            Which::Imag => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HadamardOutcome {
    /// Exact `P(0) − P(1)`.
    pub value: f64,
    pub shots: u64,
    /// Sampled estimate, or `value` when no shots were drawn.
    pub estimate: f64,
    pub which: Which,
}

impl HadamardOutcome {
    pub fn p0(&self) -> f64 {
        0.5 * (1.0 + self.value)
    }

    /// Draws `shots` ancilla measurements; zero shots leave the exact value.
    pub fn sampled(mut self, shots: u64, seed: u64) -> Result<HadamardOutcome> {
        self.shots = shots;
        self.estimate = sample_outcome(self.value, shots, seed)?;
        Ok(self)
    }
}

fn check_normalized(s: &StateVector) -> Result<()> {
    let n = s.norm();
    if (n - 1.0).abs() > NORM_TOL {
        return Err(Error::Unnormalized(n));
    }
    Ok(())
}

/// Exact ancilla bias of the Hadamard test for `⟨b|U^reps|a⟩`.
pub fn hadamard_test(
    a: &StateVector,
    b: &StateVector,
    prog: &Propagator,
    reps: usize,
    which: Which,
) -> Result<HadamardOutcome> {
    check_normalized(a)?;
    check_normalized(b)?;
    let mut evolved = a.clone();
    prog.apply(&mut evolved, reps)?;
    let g = b.inner(&evolved);
    Ok(outcome_from_overlap(g, which))
}

/// Outcome whose bias is the requested component of the overlap `g`.
pub fn outcome_from_overlap(g: Complex64, which: Which) -> HadamardOutcome {
    let raw = match which {
        Which::Real => g.re,
        Which::Imag => g.im,
    };
    let value = raw.clamp(-1.0, 1.0);
    HadamardOutcome {
        value,
        shots: 0,
        estimate: value,
        which,
    }
}

/// `2·(successes/shots) − 1` for `shots` Bernoulli((1+value)/2) draws.
pub fn sample_outcome(value: f64, shots: u64, seed: u64) -> Result<f64> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    if !(value.abs() <= 1.0) {
        return Err(Error::Invalid(format!("Hadamard bias {value} outside [-1, 1]")));
    }
    let p = (0.5 * (1.0 + value)).clamp(0.0, 1.0);
    let dist = Bernoulli::new(p).map_err(|e| Error::Invalid(e.to_string()))?;
    let mut rng = rng_from_seed(seed);
    let successes = (0..shots).filter(|_| dist.sample(&mut rng)).count() as u64;
    Ok(2.0 * successes as f64 / shots as f64 - 1.0)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::total_number_operator;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_paulis(n: usize, terms: usize, seed: u64) -> PauliSum {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mask = (1u64 << n) - 1;
        let list: Vec<(f64, PauliWord)> = (0..terms)
            .map(|_| {
                let w = PauliWord { x: rng.random::<u64>() & mask, z: rng.random::<u64>() & mask };
                (rng.random_range(-1.0..1.0), w)
            })
            .collect();
        PauliSum::from_terms(n, list).unwrap()
    }

    fn random_state(n: usize, seed: u64) -> StateVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amps: Vec<Complex64> = (0..1 << n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let mut s = StateVector::from_amplitudes(n, amps).unwrap();
        let norm = s.norm();
        s.scale(Complex64::new(1.0 / norm, 0.0));
        s
    }

    #[test]
    fn rotation_matches_dense_exponential() {
        let n = 3;
        for label in ["XIZ", "YYI", "ZIZ", "IXY", "ZZZ"] {
            let w = PauliWord::from_label(label).unwrap();
            let sum = PauliSum::from_terms(n, [(1.0, w)]).unwrap();
            let u = exact_propagator(&sum, 0.37);
            let s = random_state(n, 1);
            let mut t = s.clone();
            t.apply_pauli_rotation(w, 0.37);
            let expect = &u * DVector::from_column_slice(s.amplitudes());
            for (x, y) in t.amplitudes().iter().zip(expect.iter()) {
                assert!((x - y).norm() < 1e-13, "{label}");
            }
        }
    }

    #[test]
    fn single_term_is_exact_for_any_k() {
        let sum = PauliSum::from_terms(2, [(0.8, PauliWord::from_label("XY").unwrap()), (0.3, PauliWord::IDENTITY)]).unwrap();
        let exact = exact_propagator(&sum, 1.3);
        for k in [1, 2, 5] {
            let prog = build_trotter(&sum, 1.3, k).unwrap();
            assert!(operator_distance(&prog.dense(), &exact) < 1e-12);
        }
    }

    #[test]
    fn commuting_terms_are_k_independent() {
        let sum = PauliSum::from_terms(
            2,
            [(0.8, PauliWord::from_label("XX").unwrap()), (-0.4, PauliWord::from_label("ZZ").unwrap())],
        )
        .unwrap();
        let exact = exact_propagator(&sum, 0.9);
        for k in [1, 3, 8] {
            let prog = build_trotter(&sum, 0.9, k).unwrap();
            assert!(operator_distance(&prog.dense(), &exact) < 1e-12);
        }
    }

    #[test]
    fn second_order_error_scaling() {
        let sum = random_paulis(4, 12, 4);
        let exact = exact_propagator(&sum, 0.5);
        let ks = [1usize, 2, 4, 8];
        let errs: Vec<f64> = ks
            .iter()
            .map(|&k| operator_distance(&build_trotter(&sum, 0.5, k).unwrap().dense(), &exact))
            .collect();
        let xs: Vec<f64> = ks.iter().map(|&k| (k as f64).ln()).collect();
        let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let slope = least_squares_slope(&xs, &ys);
        assert!((slope + 2.0).abs() < 0.1, "slope {slope}, errors {errs:?}");
    }

    pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        sxy / sxx
    }

    #[test]
    fn zero_reps_and_norm_preservation() {
        let sum = random_paulis(5, 20, 7);
        let prog = build_trotter(&sum, 0.7, 3).unwrap();
        let s = random_state(5, 2);
        assert_eq!(apply_trotter(&s, &prog, 0).unwrap(), s);
        let t = apply_trotter(&s, &prog, 6).unwrap();
        assert!((t.norm() - 1.0).abs() < 1e-10);
        let wrong = random_state(4, 2);
        assert!(apply_trotter(&wrong, &prog, 1).is_err());
    }

    #[test]
    fn diagonal_eigenstate_phase() {
        let sum = PauliSum::from_terms(
            3,
            [(0.5, PauliWord::from_label("ZII").unwrap()), (-0.2, PauliWord::from_label("IZZ").unwrap()), (0.1, PauliWord::IDENTITY)],
        )
        .unwrap();
        let b = 0b101usize;
        let energy = -0.5 + 0.2 + 0.1;
        let prog = build_trotter(&sum, 0.4, 2).unwrap();
        let s = apply_trotter(&StateVector::basis(3, b), &prog, 5).unwrap();
        assert!((s.amplitudes()[b] - Complex64::from_polar(1.0, -energy * 0.4 * 5.0)).norm() < 1e-13);
    }

    #[test]
    fn dense_and_program_propagators_agree() {
        let sum = random_paulis(4, 10, 9);
        let prog = build_trotter(&sum, 0.6, 3).unwrap();
        let s = random_state(4, 3);
        let mut a = s.clone();
        let mut b = s;
        Propagator::Program(prog.clone()).apply(&mut a, 4).unwrap();
        Propagator::new(prog).apply(&mut b, 4).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn time_reversal_inverts() {
        let sum = random_paulis(3, 8, 5);
        let prog = build_trotter(&sum, 0.8, 2).unwrap();
        let s = random_state(3, 8);
        let t = apply_trotter(&apply_trotter(&s, &prog, 3).unwrap(), &prog.time_reversed(), 3).unwrap();
        for (x, y) in t.amplitudes().iter().zip(s.amplitudes()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn hadamard_trivial_cases() {
        let sum = total_number_operator(1);
        let prop = Propagator::new(build_trotter(&sum, 1.0, 1).unwrap());
        let a = StateVector::basis(2, 1);
        let b = StateVector::basis(2, 2);
        assert_eq!(hadamard_test(&a, &a, &prop, 0, Which::Real).unwrap().value, 1.0);
        assert_eq!(hadamard_test(&a, &a, &prop, 0, Which::Imag).unwrap().value, 0.0);
        assert_eq!(hadamard_test(&a, &b, &prop, 0, Which::Real).unwrap().value, 0.0);
        assert_eq!(hadamard_test(&a, &b, &prop, 0, Which::Imag).unwrap().value, 0.0);
        let mut bad = a.clone();
        bad.scale(Complex64::new(2.0, 0.0));
        assert!(matches!(hadamard_test(&bad, &a, &prop, 1, Which::Real), Err(Error::Unnormalized(_))));
    }

    #[test]
    fn eigenstate_hadamard_returns_cos_sin() {
        let sum = PauliSum::from_terms(2, [(0.7, PauliWord::from_label("ZZ").unwrap()), (0.3, PauliWord::from_label("ZI").unwrap())]).unwrap();
        let prop = Propagator::new(build_trotter(&sum, 0.5, 1).unwrap());
        let a = StateVector::basis(2, 0b01);
        let e: f64 = -0.7 - 0.3;
        for n in 0..5 {
            let re = hadamard_test(&a, &a, &prop, n, Which::Real).unwrap().value;
            let im = hadamard_test(&a, &a, &prop, n, Which::Imag).unwrap().value;
            let t = e * 0.5 * n as f64;
            assert!((re - t.cos()).abs() < 1e-13);
            assert!((im + t.sin()).abs() < 1e-13);
        }
    }

    #[test]
    fn ancilla_circuit_matches_two_branch_emulation() {
        for seed in 0..3 {
            let n = 3;
            let sum = random_paulis(n, 9, 20 + seed);
            let prog = build_trotter(&sum, 0.45, 2).unwrap();
            let prop = Propagator::Program(prog.clone());
            let a = random_state(n, 40 + seed);
            let b = random_state(n, 60 + seed);
            for which in [Which::Real, Which::Imag] {
                for reps in [0, 1, 3] {
                    let emulated = hadamard_test(&a, &b, &prop, reps, which).unwrap().p0();
                    let explicit = ancilla::p0(&a, &b, &prog, reps, which);
                    assert!((emulated - explicit).abs() < 1e-12, "{which:?} {reps}: {emulated} vs {explicit}");
                }
            }
        }
    }

    #[test]
    fn sampling_contract() {
        assert_eq!(sample_outcome(1.0, 1000, 3).unwrap(), 1.0);
        assert_eq!(sample_outcome(-1.0, 10, 3).unwrap(), -1.0);
        assert!(matches!(sample_outcome(0.2, 0, 3), Err(Error::ZeroShots)));
        let e = sample_outcome(0.0, 1_000_000, 11).unwrap();
        assert!(e.abs() < 4e-3);
        assert_eq!(sample_outcome(0.3, 777, 5).unwrap(), sample_outcome(0.3, 777, 5).unwrap());
    }

    #[test]
    fn dump_round_trip() {
        let s = random_state(3, 4);
        let mut buf = Vec::new();
        s.write_dump(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 16 * 8);
        assert_eq!(StateVector::read_dump(buf.as_slice()).unwrap(), s);
    }
}
