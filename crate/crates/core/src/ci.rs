//! Slater determinants and sparse CI vectors.
//!
//! A [`Determinant`] is stored as α and β occupation masks. Its qubit image
//! interleaves them (`bit 2p` = α of orbital `p`, `bit 2p+1` = β), and the
//! determinant is the state `a†_{i1} a†_{i2} ⋯ a†_{im} |vac⟩` with
//! `i1 < i2 < ⋯ < im` in qubit order. Under this convention the Jordan–Wigner
//! computational basis state and the determinant coincide with sign +1, and a
//! ladder operator on qubit `j` acquires the parity of the occupied qubits
//! below `j`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emulator::StateVector;
use crate::{Error, Result};

/// Amplitudes below this modulus are pruned after operator application.
pub const PRUNE_TOL: f64 = 1e-12;
/// Default amplitude threshold for truncating input expansions.
pub const DEFAULT_INPUT_THRESHOLD: f64 = 1e-3;
/// Default cap on the number of qubits for dense statevectors.
pub const DEFAULT_QUBIT_CAP: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Determinant {
    pub alpha: u64,
    pub beta: u64,
}

/// Spreads the low 32 bits of `v` onto the even bits.
#[inline]
fn spread(v: u64) -> u64 {
    let mut x = v & 0xFFFF_FFFF;
    x = (x | (x << 16)) & 0x0000_FFFF_0000_FFFF;
    x = (x | (x << 8)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333;
    (x | (x << 1)) & 0x5555_5555_5555_5555
}

#[inline]
fn compact(v: u64) -> u64 {
    let mut x = v & 0x5555_5555_5555_5555;
    x = (x | (x >> 1)) & 0x3333_3333_3333_3333;
    x = (x | (x >> 2)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x >> 4)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x >> 8)) & 0x0000_FFFF_0000_FFFF;
    (x | (x >> 16)) & 0x0000_0000_FFFF_FFFF
}

/// Sign and result of `a_j` on qubit occupation `bits`.
#[inline]
pub fn annihilate(bits: u64, j: usize) -> Option<(f64, u64)> {
    let b = 1u64 << j;
    if bits & b == 0 {
        return None;
    }
    Some((parity_sign(bits & (b - 1)), bits ^ b))
}

/// Sign and result of `a†_j` on qubit occupation `bits`.
#[inline]
pub fn create(bits: u64, j: usize) -> Option<(f64, u64)> {
    let b = 1u64 << j;
    if bits & b != 0 {
        return None;
    }
    Some((parity_sign(bits & (b - 1)), bits | b))
}

#[inline]
fn parity_sign(mask: u64) -> f64 {
    if mask.count_ones() & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

impl Determinant {
    pub fn new(alpha: u64, beta: u64) -> Self {
        Determinant { alpha, beta }
    }

    pub fn from_qubit_bits(bits: u64) -> Self {
        Determinant {
            alpha: compact(bits),
            beta: compact(bits >> 1),
        }
    }

    /// Computational-basis index of the qubit image (spin orbital `(p,σ)` ↦ bit `2p+σ`).
    #[inline]
    pub fn qubit_bits(&self) -> u64 {
        spread(self.alpha) | (spread(self.beta) << 1)
    }

    pub fn n_electrons(&self) -> u32 {
        self.alpha.count_ones() + self.beta.count_ones()
    }

    /// `2·S_z = N_α − N_β`.
    pub fn ms2(&self) -> i32 {
        self.alpha.count_ones() as i32 - self.beta.count_ones() as i32
    }

    pub fn occupied(&self, orbital: usize, spin: usize) -> bool {
        let m = if spin == 0 { self.alpha } else { self.beta };
        (m >> orbital) & 1 == 1
    }

    /// Sign and target of `a†_{pσ} a_{qσ}` acting on this determinant.
    pub fn excite(&self, p: usize, q: usize, spin: usize) -> Option<(f64, Determinant)> {
        let bits = self.qubit_bits();
        let (s1, b1) = annihilate(bits, 2 * q + spin)?;
        let (s2, b2) = create(b1, 2 * p + spin)?;
        Some((s1 * s2, Determinant::from_qubit_bits(b2)))
    }

    /// Occupation string with orbital 0 first.
    pub fn alpha_string(&self, n_orbitals: usize) -> String {
        bitstring(self.alpha, n_orbitals)
    }

    pub fn beta_string(&self, n_orbitals: usize) -> String {
        bitstring(self.beta, n_orbitals)
    }

    pub fn from_strings(alpha: &str, beta: &str) -> Result<Self> {
        Ok(Determinant {
            alpha: parse_bitstring(alpha)?,
            beta: parse_bitstring(beta)?,
        })
    }
}

/// Determinants are ordered by their computational-basis index.
impl Ord for Determinant {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.qubit_bits().cmp(&other.qubit_bits())
    }
}

impl PartialOrd for Determinant {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Determinant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = (64 - (self.alpha | self.beta).leading_zeros()).max(1) as usize;
        write!(f, "α{} β{}", self.alpha_string(n), self.beta_string(n))
    }
}

fn bitstring(mask: u64, n: usize) -> String {
    (0..n).map(|p| if (mask >> p) & 1 == 1 { '1' } else { '0' }).collect()
}

fn parse_bitstring(s: &str) -> Result<u64> {
    if s.len() > 32 {
        return Err(Error::Invalid("occupation strings are limited to 32 orbitals".into()));
    }
    let mut m = 0u64;
    for (p, c) in s.chars().enumerate() {
        match c {
            '1' => m |= 1 << p,
            '0' => {}
            _ => return Err(Error::Invalid(format!("bad occupation character `{c}`"))),
        }
    }
    Ok(m)
}

/// Sparse linear combination of determinants of one `(N_e, S_z)` sector.
#[derive(Debug, Clone, PartialEq)]
pub struct CIVector {
    n_orbitals: usize,
    n_electrons: usize,
    entries: BTreeMap<Determinant, Complex64>,
}

impl CIVector {
    pub fn empty(n_orbitals: usize, n_electrons: usize) -> Self {
        CIVector {
            n_orbitals,
            n_electrons,
            entries: BTreeMap::new(),
        }
    }

    pub fn single(n_orbitals: usize, det: Determinant) -> Result<Self> {
        CIVector::from_entries(n_orbitals, det.n_electrons() as usize, [(det, Complex64::new(1.0, 0.0))])
    }

    /// Builds a vector, summing duplicates and dropping exact zeros.
    pub fn from_entries(
        n_orbitals: usize,
        n_electrons: usize,
        entries: impl IntoIterator<Item = (Determinant, Complex64)>,
    ) -> Result<Self> {
        if n_orbitals == 0 || n_orbitals > 32 {
            return Err(Error::Invalid(format!("unsupported orbital count {n_orbitals}")));
        }
        let limit = (1u64 << n_orbitals) - 1;
        let mut map: BTreeMap<Determinant, Complex64> = BTreeMap::new();
        let mut ms2 = None;
        for (d, a) in entries {
            if (d.alpha | d.beta) & !limit != 0 {
                return Err(Error::Invalid(format!("determinant {d} exceeds {n_orbitals} orbitals")));
            }
            if d.n_electrons() as usize != n_electrons {
                return Err(Error::Invalid(format!(
                    "determinant {d} has {} electrons, expected {n_electrons}",
                    d.n_electrons()
                )));
            }
            match ms2 {
                None => ms2 = Some(d.ms2()),
                Some(m) if m != d.ms2() => {
                    return Err(Error::Invalid("determinants from different S_z sectors".into()))
                }
                _ => {}
            }
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::Invalid("non-finite amplitude".into()));
            }
            *map.entry(d).or_default() += a;
        }
        map.retain(|_, a| a.norm() > 0.0);
        Ok(CIVector {
            n_orbitals,
            n_electrons,
            entries: map,
        })
    }

    pub fn n_orbitals(&self) -> usize {
        self.n_orbitals
    }

    pub fn n_electrons(&self) -> usize {
        self.n_electrons
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Determinant, &Complex64)> {
        self.entries.iter()
    }

    pub fn amplitude(&self, d: &Determinant) -> Complex64 {
        self.entries.get(d).copied().unwrap_or_default()
    }

    /// `2·S_z` of the sector, if the vector is non-empty.
    pub fn ms2(&self) -> Option<i32> {
        self.entries.keys().next().map(|d| d.ms2())
    }

    pub fn norm(&self) -> f64 {
        self.entries.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: Complex64) -> CIVector {
        let mut out = self.clone();
        for a in out.entries.values_mut() {
            *a *= s;
        }
        out.entries.retain(|_, a| a.norm() > 0.0);
        out
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &CIVector) -> Complex64 {
        let (small, large, conj_small) = if self.len() <= other.len() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (d, a) in &small.entries {
            if let Some(b) = large.entries.get(d) {
                acc += if conj_small { a.conj() * b } else { b.conj() * a };
            }
        }
        acc
    }

    /// Drops amplitudes with modulus ≤ `tol`.
    pub fn pruned(&self, tol: f64) -> CIVector {
        let mut out = self.clone();
        out.entries.retain(|_, a| a.norm() > tol);
        out
    }

    /// Keeps amplitudes with modulus strictly above `threshold` (input truncation, not renormalized).
    pub fn truncated(&self, threshold: f64) -> CIVector {
        self.pruned(threshold)
    }

    /// Returns the unit vector and the original norm.
    pub fn normalize(&self) -> Result<(CIVector, f64)> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::DipoleAnnihilatesState);
        }
        Ok((self.scaled(Complex64::new(1.0 / n, 0.0)), n))
    }

    /// `Σ_{pqσ} m_pq a†_{pσ} a_{qσ} |self⟩`, pruned at [`PRUNE_TOL`].
    pub fn apply_one_body(&self, m: &DMatrix<f64>) -> Result<CIVector> {
        if m.nrows() != self.n_orbitals || m.ncols() != self.n_orbitals {
            return Err(Error::Dimension {
                expected: self.n_orbitals,
                found: m.nrows(),
            });
        }
        let n = self.n_orbitals;
        let sources: Vec<(&Determinant, &Complex64)> = self.entries.iter().collect();
        let contributions: Vec<Vec<(Determinant, Complex64)>> = sources
            .par_iter()
            .map(|&(d, &a)| {
                let mut out = Vec::new();
                for spin in 0..2 {
                    for q in 0..n {
                        if !d.occupied(q, spin) {
                            continue;
                        }
                        for p in 0..n {
                            let v = m[(p, q)];
                            if v == 0.0 {
                                continue;
                            }
                            if let Some((s, t)) = d.excite(p, q, spin) {
                                out.push((t, a * (s * v)));
                            }
                        }
                    }
                }
                out
            })
            .collect();
        let mut map: BTreeMap<Determinant, Complex64> = BTreeMap::new();
        for list in contributions {
            for (d, a) in list {
                *map.entry(d).or_default() += a;
            }
        }
        map.retain(|_, a| a.norm() > PRUNE_TOL);
        Ok(CIVector {
            n_orbitals: self.n_orbitals,
            n_electrons: self.n_electrons,
            entries: map,
        })
    }

    /// Keeps determinants with exactly one hole (over both spins) in `core`.
    pub fn cvs_project(&self, core: &[usize]) -> Result<CIVector> {
        let mut mask = 0u64;
        for &c in core {
            if c >= self.n_orbitals {
                return Err(Error::Invalid(format!(
                    "core orbital {c} outside [0, {})",
                    self.n_orbitals
                )));
            }
            mask |= 1 << c;
        }
        let full = 2 * mask.count_ones();
        let mut out = self.clone();
        out.entries.retain(|d, _| {
            let occ = (d.alpha & mask).count_ones() + (d.beta & mask).count_ones();
            occ + 1 == full
        });
        if out.is_empty() {
            return Err(Error::CvsAnnihilatedState);
        }
        Ok(out)
    }

    /// Dense statevector over `2·N_a` qubits.
    pub fn to_statevector(&self, qubit_cap: usize) -> Result<StateVector> {
        let nq = 2 * self.n_orbitals;
        if nq > qubit_cap {
            return Err(Error::QubitCap {
                requested: nq,
                cap: qubit_cap,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << nq];
        for (d, a) in &self.entries {
            amps[d.qubit_bits() as usize] = *a;
        }
        Ok(StateVector::from_amplitudes_unchecked(nq, amps))
    }

    /// Writes one JSON object per determinant.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for (d, a) in &self.entries {
            let line = CiLine {
                alpha: d.alpha_string(self.n_orbitals),
                beta: d.beta_string(self.n_orbitals),
                re: a.re,
                im: a.im,
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<CIVector> {
        let mut rows = Vec::new();
        let mut n_orbitals = None;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: CiLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            if row.alpha.len() != row.beta.len() || n_orbitals.is_some_and(|n| n != row.alpha.len()) {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "inconsistent occupation-string lengths".into(),
                });
            }
            n_orbitals = Some(row.alpha.len());
            let det = Determinant::from_strings(&row.alpha, &row.beta).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            rows.push((det, Complex64::new(row.re, row.im)));
        }
        let n_orbitals = n_orbitals.ok_or_else(|| Error::Invalid("empty CI vector file".into()))?;
        let n_electrons = rows[0].0.n_electrons() as usize;
        CIVector::from_entries(n_orbitals, n_electrons, rows)
    }

    pub fn read(path: &Path) -> Result<CIVector> {
        let f = std::fs::File::open(path)?;
        CIVector::read_jsonl(std::io::BufReader::new(f))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_jsonl(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct CiLine {
    alpha: String,
    beta: String,
    re: f64,
    im: f64,
}

/// `⟨Ψ0|m_A m_B|Ψ0⟩ = ⟨m_A Ψ0, m_B Ψ0⟩` for symmetric `m_A`; real part of the generally complex value.
pub fn moment(v0: &CIVector, ma: &DMatrix<f64>, mb: &DMatrix<f64>) -> Result<f64> {
    let a = v0.apply_one_body(ma)?;
    let b = v0.apply_one_body(mb)?;
    Ok(a.inner(&b).re)
}
