use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

/// Tensor product of single-qubit Paulis in symplectic form: qubit `q` carries
/// X if only bit `q` of `x` is set, Z if only `z`, and Y if both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PauliWord {
    pub x: u64,
    pub z: u64,
}

const I_POW: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];

/// `i^k`.
#[inline]
pub fn i_pow(k: u32) -> Complex64 {
    I_POW[(k & 3) as usize]
}

impl PauliWord {
    pub const IDENTITY: PauliWord = PauliWord { x: 0, z: 0 };

    pub fn single(qubit: usize, letter: char) -> PauliWord {
        let b = 1u64 << qubit;
        match letter {
            'I' => PauliWord::IDENTITY,
            'X' => PauliWord { x: b, z: 0 },
            'Y' => PauliWord { x: b, z: b },
            'Z' => PauliWord { x: 0, z: b },
            _ => panic!("not a Pauli letter: {letter}"),
        }
    }

    /// Parses a label such as `"XIZY"`; character `q` acts on qubit `q`.
    pub fn from_label(label: &str) -> Result<PauliWord> {
        if label.len() > 64 {
            return Err(Error::Invalid("Pauli labels are limited to 64 qubits".into()));
        }
        let mut w = PauliWord::IDENTITY;
        for (q, c) in label.chars().enumerate() {
            match c {
                'I' | 'X' | 'Y' | 'Z' => w = w.compose(PauliWord::single(q, c)).1,
                _ => return Err(Error::Invalid(format!("bad Pauli letter `{c}`"))),
            }
        }
        Ok(w)
    }

    pub fn letter(&self, qubit: usize) -> char {
        match ((self.x >> qubit) & 1, (self.z >> qubit) & 1) {
            (0, 0) => 'I',
            (1, 0) => 'X',
            (1, 1) => 'Y',
            _ => 'Z',
        }
    }

    pub fn label(&self, n_qubits: usize) -> String {
        (0..n_qubits).map(|q| self.letter(q)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// True when the word is a product of I and Z only.
    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn n_y(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Product `self · other = i^k · word`; returns `(k mod 4, word)`.
    pub fn compose(self, other: PauliWord) -> (u32, PauliWord) {
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        // σ(x,z) = i^{x·z} X^x Z^z; moving Z^{z1} past X^{x2} costs (-1)^{z1·x2}.
        let k = self.n_y() + other.n_y() + 2 * (self.z & other.x).count_ones()
            + 3 * (x & z).count_ones();
        (k & 3, PauliWord { x, z })
    }

    pub fn commutes_with(&self, other: &PauliWord) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// `P|b⟩ = phase · |b'⟩`.
    #[inline]
    pub fn apply_to_basis(&self, b: u64) -> (Complex64, u64) {
        let mut k = self.n_y();
        if (self.z & b).count_ones() & 1 == 1 {
            k += 2;
        }
        (i_pow(k), b ^ self.x)
    }

    fn letter_rank(&self, q: u32) -> u8 {
        match ((self.x >> q) & 1, (self.z >> q) & 1) {
            (0, 0) => 0,
            (1, 0) => 1,
            (1, 1) => 2,
            _ => 3,
        }
    }
}

/// Lexicographic order of the labels (qubit 0 first, I < X < Y < Z).
impl Ord for PauliWord {
    fn cmp(&self, other: &Self) -> Ordering {
        let diff = (self.x ^ other.x) | (self.z ^ other.z);
        if diff == 0 {
            return Ordering::Equal;
        }
        let q = diff.trailing_zeros();
        self.letter_rank(q).cmp(&other.letter_rank(q))
    }
}

impl PartialOrd for PauliWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Real linear combination of Pauli words over `n_qubits` qubits, sorted by word.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<(f64, PauliWord)>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        PauliSum {
            n_qubits,
            terms: Vec::new(),
        }
    }

    pub fn from_terms(n_qubits: usize, terms: impl IntoIterator<Item = (f64, PauliWord)>) -> Result<Self> {
        let mut map: HashMap<PauliWord, Complex64> = HashMap::new();
        for (c, w) in terms {
            *map.entry(w).or_default() += Complex64::new(c, 0.0);
        }
        PauliSum::from_complex_map(n_qubits, map, 0.0)
    }

    /// Merges complex coefficients, drops those with modulus ≤ `drop_tol`, and
    /// requires the survivors to be real (Hermitian operator).
    pub fn from_complex_map(
        n_qubits: usize,
        map: HashMap<PauliWord, Complex64>,
        drop_tol: f64,
    ) -> Result<Self> {
        let limit = if n_qubits >= 64 { u64::MAX } else { (1u64 << n_qubits) - 1 };
        let mut terms = Vec::with_capacity(map.len());
        for (w, c) in map {
            if w.support() & !limit != 0 {
                return Err(Error::Invalid(format!(
                    "Pauli word acts outside {n_qubits} qubits"
                )));
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::Invalid("non-finite Pauli coefficient".into()));
            }
            if c.norm() <= drop_tol || c.norm() == 0.0 {
                continue;
            }
            if c.im.abs() > 1e-10 * c.norm().max(1.0) {
                return Err(Error::Invalid(format!(
                    "operator is not Hermitian: coefficient {c} on {}",
                    w.label(n_qubits)
                )));
            }
            terms.push((c.re, w));
        }
        terms.sort_by(|a, b| a.1.cmp(&b.1));
        Ok(PauliSum { n_qubits, terms })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliWord)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, w: &PauliWord) -> f64 {
        self.terms
            .binary_search_by(|t| t.1.cmp(w))
            .map(|i| self.terms[i].0)
            .unwrap_or(0.0)
    }

    pub fn identity_coefficient(&self) -> f64 {
        self.coefficient(&PauliWord::IDENTITY)
    }

    /// Adds `shift · I`.
    pub fn with_identity_shift(&self, shift: f64) -> PauliSum {
        let terms = self.terms.iter().copied().chain([(shift, PauliWord::IDENTITY)]);
        PauliSum::from_terms(self.n_qubits, terms).expect("shift keeps the sum valid")
    }

    pub fn scaled(&self, a: f64) -> PauliSum {
        PauliSum::from_terms(self.n_qubits, self.terms.iter().map(|&(c, w)| (a * c, w)))
            .expect("scaling keeps the sum valid")
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        PauliSum::from_terms(self.n_qubits, self.terms.iter().chain(&other.terms).copied())
    }

    /// `H|ψ⟩` on a dense statevector.
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
        for &(c, w) in &self.terms {
            for (b, &a) in psi.iter().enumerate() {
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let (ph, b2) = w.apply_to_basis(b as u64);
                out[b2 as usize] += ph * a * c;
            }
        }
        out
    }

    /// Dense `2^n × 2^n` matrix; intended for small verification instances.
    pub fn dense_matrix(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for &(c, w) in &self.terms {
            for b in 0..dim {
                let (ph, b2) = w.apply_to_basis(b as u64);
                m[(b2 as usize, b)] += ph * c;
            }
        }
        m
    }

    /// Sum of |coefficients| excluding the identity; an upper bound on the spread of the spectrum.
    pub fn one_norm(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| !t.1.is_identity())
            .map(|t| t.0.abs())
            .sum()
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (c, w) in &self.terms {
            writeln!(f, "{c:+.12e} {}", w.label(self.n_qubits))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_qubit_matrix(letter: char) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match letter {
            'I' => [[l, o], [o, l]],
            'X' => [[o, l], [l, o]],
            'Y' => [[o, -i], [i, o]],
            'Z' => [[l, o], [o, -l]],
            _ => unreachable!(),
        }
    }

    #[test]
    fn single_qubit_products_match_matrices() {
        for a in ['I', 'X', 'Y', 'Z'] {
            for b in ['I', 'X', 'Y', 'Z'] {
                let (k, w) = PauliWord::single(0, a).compose(PauliWord::single(0, b));
                let ma = single_qubit_matrix(a);
                let mb = single_qubit_matrix(b);
                let mc = single_qubit_matrix(w.letter(0));
                for r in 0..2 {
                    for c in 0..2 {
                        let prod = ma[r][0] * mb[0][c] + ma[r][1] * mb[1][c];
                        assert!((prod - i_pow(k) * mc[r][c]).norm() < 1e-15, "{a}{b}");
                    }
                }
            }
        }
    }

    #[test]
    fn apply_to_basis_matches_letters() {
        // Y|0⟩ = i|1⟩, Y|1⟩ = -i|0⟩
        let y = PauliWord::single(0, 'Y');
        assert_eq!(y.apply_to_basis(0), (Complex64::new(0.0, 1.0), 1));
        assert_eq!(y.apply_to_basis(1), (Complex64::new(0.0, -1.0), 0));
        let w = PauliWord::from_label("ZX").unwrap();
        assert_eq!(w.apply_to_basis(0b01), (Complex64::new(-1.0, 0.0), 0b11));
    }

    #[test]
    fn lexicographic_order() {
        let mut words: Vec<PauliWord> = ["ZI", "IX", "XY", "XX", "YI", "II"]
            .iter()
            .map(|l| PauliWord::from_label(l).unwrap())
            .collect();
        words.sort();
        let labels: Vec<String> = words.iter().map(|w| w.label(2)).collect();
        assert_eq!(labels, ["II", "IX", "XX", "XY", "YI", "ZI"]);
    }

    #[test]
    fn rejects_complex_coefficients() {
        let mut map = HashMap::new();
        map.insert(PauliWord::single(0, 'X'), Complex64::new(0.0, 1.0));
        assert!(PauliSum::from_complex_map(1, map, 1e-14).is_err());
    }

    #[test]
    fn merges_duplicates_and_drops_zeros() {
        let x = PauliWord::single(0, 'X');
        let s = PauliSum::from_terms(1, [(0.5, x), (0.25, x), (1.0, PauliWord::IDENTITY), (-1.0, PauliWord::IDENTITY)]).unwrap();
        assert_eq!(s.terms(), &[(0.75, x)]);
    }
}
