//! Second-quantized operators and their qubit images.
//!
//! A [`Hamiltonian`] holds the active-space integrals
//!
//! ```text
//! H = H0 + Σ_{pqσ} h_pq a†_pσ a_qσ + ½ Σ_{pqrs,στ} (pq|rs) a†_pσ a†_rτ a_sτ a_qσ
//! ```
//!
//! with `h` the bare one-electron integrals as stored in FCIDUMP files. The
//! equivalent form with the non-normal-ordered two-body term uses
//! `κ_pq = h_pq − ½ Σ_r (pr|rq)`, available from [`Hamiltonian::kappa`].
//!
//! Spin orbital `(p, σ)` maps to qubit `2p + σ` with σ = 0 for α (↑).

mod fcidump;
mod jw;
mod pauli;

pub use fcidump::{parse_fcidump, read_fcidump, write_fcidump, Fcidump};
pub use jw::{jordan_wigner, one_body_to_pauli, total_number_operator};
pub use pauli::{i_pow, PauliSum, PauliWord};

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance for the symmetry invariants of integrals and dipole matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Qubit index of spin orbital `(p, σ)`.
#[inline]
pub fn qubit_index(orbital: usize, spin: usize) -> usize {
    2 * orbital + spin
}

/// Cartesian direction of a dipole component or momentum transfer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }

    pub fn from_letter(c: char) -> Option<Axis> {
        match c.to_ascii_lowercase() {
            'x' => Some(Axis::X),
            'y' => Some(Axis::Y),
            'z' => Some(Axis::Z),
            _ => None,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Real two-electron integrals (pq|rs) in chemist's notation, dense `n⁴` storage.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBodyTensor {
    n: usize,
    data: Vec<f64>,
}

impl TwoBodyTensor {
    pub fn zeros(n: usize) -> Self {
        TwoBodyTensor {
            n,
            data: vec![0.0; n * n * n * n],
        }
    }

    /// Wraps raw row-major data without symmetrizing; checked by [`Hamiltonian::new`].
    pub fn from_raw(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n * n * n {
            return Err(Error::Dimension {
                expected: n * n * n * n,
                found: data.len(),
            });
        }
        Ok(TwoBodyTensor { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, p: usize, q: usize, r: usize, s: usize) -> usize {
        ((p * self.n + q) * self.n + r) * self.n + s
    }

    #[inline]
    pub fn get(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.data[self.idx(p, q, r, s)]
    }

    /// Sets (pq|rs) and its seven symmetry partners.
    pub fn set_symmetric(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        for (a, b, c, d) in [
            (p, q, r, s),
            (q, p, r, s),
            (p, q, s, r),
            (q, p, s, r),
            (r, s, p, q),
            (s, r, p, q),
            (r, s, q, p),
            (s, r, q, p),
        ] {
            let i = self.idx(a, b, c, d);
            self.data[i] = v;
        }
    }

    pub fn raw(&self) -> &[f64] {
        &self.data
    }

    /// Largest deviation from the 8-fold permutational symmetry.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0_f64;
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = self.get(p, q, r, s);
                        for w in [
                            self.get(q, p, r, s),
                            self.get(p, q, s, r),
                            self.get(r, s, p, q),
                        ] {
                            worst = worst.max((v - w).abs());
                        }
                    }
                }
            }
        }
        worst
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }
}

/// Electronic Hamiltonian over `n_orbitals` spatial orbitals. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    n_orbitals: usize,
    offset: f64,
    one_body: DMatrix<f64>,
    two_body: TwoBodyTensor,
}

fn check_symmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Invalid(format!("{what} is not square")));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid(format!("{what} has non-finite entries")));
    }
    let defect = (m - m.transpose()).abs().max();
    if defect > SYMMETRY_TOL {
        return Err(Error::Invalid(format!(
            "{what} is not symmetric (max |m - mᵀ| = {defect:e})"
        )));
    }
    Ok(())
}

impl Hamiltonian {
    pub fn new(
        n_orbitals: usize,
        offset: f64,
        one_body: DMatrix<f64>,
        two_body: TwoBodyTensor,
    ) -> Result<Self> {
        if one_body.nrows() != n_orbitals {
            return Err(Error::Dimension {
                expected: n_orbitals,
                found: one_body.nrows(),
            });
        }
        if two_body.n() != n_orbitals {
            return Err(Error::Dimension {
                expected: n_orbitals,
                found: two_body.n(),
            });
        }
        if !offset.is_finite() {
            return Err(Error::Invalid("offset is not finite".into()));
        }
        check_symmetric(&one_body, "one-body matrix")?;
        if two_body.raw().iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("two-body tensor has non-finite entries".into()));
        }
        let defect = two_body.symmetry_defect();
        if defect > SYMMETRY_TOL {
            return Err(Error::Invalid(format!(
                "two-body tensor breaks 8-fold symmetry by {defect:e}"
            )));
        }
        Ok(Hamiltonian {
            n_orbitals,
            offset,
            one_body,
            two_body,
        })
    }

    /// Offset-only Hamiltonian.
    pub fn constant(n_orbitals: usize, offset: f64) -> Self {
        Hamiltonian {
            n_orbitals,
            offset,
            one_body: DMatrix::zeros(n_orbitals, n_orbitals),
            two_body: TwoBodyTensor::zeros(n_orbitals),
        }
    }

    pub fn n_orbitals(&self) -> usize {
        self.n_orbitals
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.n_orbitals
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn one_body(&self) -> &DMatrix<f64> {
        &self.one_body
    }

    pub fn two_body(&self) -> &TwoBodyTensor {
        &self.two_body
    }

    #[inline]
    pub fn h(&self, p: usize, q: usize) -> f64 {
        self.one_body[(p, q)]
    }

    #[inline]
    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.two_body.get(p, q, r, s)
    }

    /// One-body matrix of the form `Σ κ_pq E_pq + ½ Σ (pq|rs) E_pq E_rs`.
    pub fn kappa(&self) -> DMatrix<f64> {
        let n = self.n_orbitals;
        DMatrix::from_fn(n, n, |p, q| {
            self.h(p, q) - 0.5 * (0..n).map(|r| self.eri(p, r, r, q)).sum::<f64>()
        })
    }
}

/// Cartesian dipole matrices μ^x, μ^y, μ^z over the active orbitals (Bohr).
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleOperator {
    components: [DMatrix<f64>; 3],
}

#[derive(Serialize, Deserialize)]
struct DipoleJson {
    x: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
}

fn rows_to_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Invalid(format!("dipole component {what} is not square")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

impl DipoleOperator {
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>, z: DMatrix<f64>) -> Result<Self> {
        for (m, name) in [(&x, "μx"), (&y, "μy"), (&z, "μz")] {
            check_symmetric(m, name)?;
        }
        if y.nrows() != x.nrows() || z.nrows() != x.nrows() {
            return Err(Error::Invalid("dipole components differ in size".into()));
        }
        Ok(DipoleOperator {
            components: [x, y, z],
        })
    }

    pub fn zeros(n: usize) -> Self {
        DipoleOperator {
            components: [DMatrix::zeros(n, n), DMatrix::zeros(n, n), DMatrix::zeros(n, n)],
        }
    }

    pub fn n_orbitals(&self) -> usize {
        self.components[0].nrows()
    }

    pub fn component(&self, axis: Axis) -> &DMatrix<f64> {
        &self.components[axis.index()]
    }

    /// `q·μ` as a single one-body matrix.
    pub fn project(&self, q: &QVector) -> DMatrix<f64> {
        &self.components[0] * q.qx + &self.components[1] * q.qy + &self.components[2] * q.qz
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: DipoleJson = serde_json::from_str(text)?;
        DipoleOperator::new(
            rows_to_matrix(&doc.x, "x")?,
            rows_to_matrix(&doc.y, "y")?,
            rows_to_matrix(&doc.z, "z")?,
        )
    }

    pub fn to_json(&self) -> String {
        let doc = DipoleJson {
            x: matrix_to_rows(&self.components[0]),
            y: matrix_to_rows(&self.components[1]),
            z: matrix_to_rows(&self.components[2]),
        };
        serde_json::to_string_pretty(&doc).expect("dipole serialization")
    }

    pub fn read(path: &Path) -> Result<Self> {
        DipoleOperator::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Momentum transfer q = k_F − k_I in inverse Bohr.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QVector {
    pub qx: f64,
    pub qy: f64,
    pub qz: f64,
}

impl QVector {
    pub fn new(qx: f64, qy: f64, qz: f64) -> Result<Self> {
        if !(qx.is_finite() && qy.is_finite() && qz.is_finite()) {
            return Err(Error::Invalid("q has non-finite components".into()));
        }
        Ok(QVector { qx, qy, qz })
    }

    pub fn component(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.qx,
            Axis::Y => self.qy,
            Axis::Z => self.qz,
        }
    }

    pub fn norm(&self) -> f64 {
        (self.qx * self.qx + self.qy * self.qy + self.qz * self.qz).sqrt()
    }
}

impl std::str::FromStr for QVector {
    type Err = Error;

    /// Parses `"x,y,z"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Invalid(format!("q vector `{s}` needs three components")));
        }
        let mut v = [0.0; 3];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p
                .parse()
                .map_err(|_| Error::Invalid(format!("cannot parse q component `{p}`")))?;
        }
        QVector::new(v[0], v[1], v[2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_folds_exchange_term() {
        let mut g = TwoBodyTensor::zeros(2);
        g.set_symmetric(0, 1, 1, 0, 0.3);
        g.set_symmetric(0, 0, 0, 0, 0.8);
        let h = Hamiltonian::new(2, 0.0, DMatrix::identity(2, 2), g).unwrap();
        let k = h.kappa();
        // κ_00 = 1 - ½[(00|00) + (01|10)]
        assert!((k[(0, 0)] - (1.0 - 0.5 * (0.8 + 0.3))).abs() < 1e-15);
    }

    #[test]
    fn rejects_asymmetric_integrals() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = 1.0;
        assert!(Hamiltonian::new(2, 0.0, m, TwoBodyTensor::zeros(2)).is_err());

        let mut raw = vec![0.0; 16];
        raw[1] = 0.5; // (00|01) without partners
        let g = TwoBodyTensor::from_raw(2, raw).unwrap();
        assert!(Hamiltonian::new(2, 0.0, DMatrix::zeros(2, 2), g).is_err());
    }

    #[test]
    fn dipole_json_round_trip() {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.5, 1.5, 0.0]);
        let d = DipoleOperator::new(x, DMatrix::zeros(2, 2), DMatrix::identity(2, 2)).unwrap();
        let back = DipoleOperator::from_json(&d.to_json()).unwrap();
        assert_eq!(d, back);
    }

    #[test]
    fn q_vector_parsing() {
        let q: QVector = "1, 0.5,-2".parse().unwrap();
        assert_eq!(q.component(Axis::Y), 0.5);
        assert!("1,2".parse::<QVector>().is_err());
    }
}
