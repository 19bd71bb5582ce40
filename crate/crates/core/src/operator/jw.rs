use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::pauli::{i_pow, PauliSum, PauliWord};
use super::{check_symmetric, qubit_index, Hamiltonian};
use crate::Result;

/// Coefficients below this modulus are dropped after merging.
pub const DROP_TOL: f64 = 1e-14;

type TermMap = HashMap<PauliWord, Complex64>;

/// `a†_j` (dagger) or `a_j` as `½(X_j ∓ iY_j) Z_{<j}`.
fn ladder(j: usize, dagger: bool) -> [(Complex64, PauliWord); 2] {
    let below = (1u64 << j) - 1;
    let bit = 1u64 << j;
    let y = if dagger { -0.5 } else { 0.5 };
    [
        (Complex64::new(0.5, 0.0), PauliWord { x: bit, z: below }),
        (Complex64::new(0.0, y), PauliWord { x: bit, z: below | bit }),
    ]
}

/// Adds `coef · Π ops` (left to right) to `acc`.
fn accumulate_product(acc: &mut TermMap, coef: f64, ops: &[(usize, bool)]) {
    let mut current: Vec<(Complex64, PauliWord)> = vec![(Complex64::new(coef, 0.0), PauliWord::IDENTITY)];
    for &(j, dagger) in ops {
        let l = ladder(j, dagger);
        let mut next = Vec::with_capacity(current.len() * 2);
        for &(c, w) in &current {
            for &(lc, lw) in &l {
                let (k, prod) = w.compose(lw);
                next.push((c * lc * i_pow(k), prod));
            }
        }
        current = next;
    }
    for (c, w) in current {
        *acc.entry(w).or_default() += c;
    }
}

fn add_one_body(acc: &mut TermMap, m: &DMatrix<f64>) {
    let n = m.nrows();
    for p in 0..n {
        for q in 0..n {
            let v = m[(p, q)];
            if v == 0.0 {
                continue;
            }
            for s in 0..2 {
                accumulate_product(acc, v, &[(qubit_index(p, s), true), (qubit_index(q, s), false)]);
            }
        }
    }
}

/// Jordan–Wigner image of the electronic Hamiltonian on `2·N_a` qubits.
pub fn jordan_wigner(h: &Hamiltonian) -> PauliSum {
    let n = h.n_orbitals();
    let mut acc = TermMap::new();
    acc.insert(PauliWord::IDENTITY, Complex64::new(h.offset(), 0.0));
    add_one_body(&mut acc, h.one_body());
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let v = h.eri(p, q, r, s);
                    if v == 0.0 {
                        continue;
                    }
                    for sp in 0..2 {
                        for tau in 0..2 {
                            if sp == tau && (p == r || q == s) {
                                continue;
                            }
                            accumulate_product(
                                &mut acc,
                                0.5 * v,
                                &[
                                    (qubit_index(p, sp), true),
                                    (qubit_index(r, tau), true),
                                    (qubit_index(s, tau), false),
                                    (qubit_index(q, sp), false),
                                ],
                            );
                        }
                    }
                }
            }
        }
    }
    PauliSum::from_complex_map(h.n_qubits(), acc, DROP_TOL)
        .expect("a valid real Hamiltonian maps to a Hermitian Pauli sum")
}

/// Jordan–Wigner image of `Σ_{pqσ} m_pq a†_pσ a_qσ`.
pub fn one_body_to_pauli(m: &DMatrix<f64>) -> Result<PauliSum> {
    check_symmetric(m, "one-body operator")?;
    let mut acc = TermMap::new();
    add_one_body(&mut acc, m);
    PauliSum::from_complex_map(2 * m.nrows(), acc, DROP_TOL)
}

/// Total electron-number operator over `n_orbitals` spatial orbitals.
pub fn total_number_operator(n_orbitals: usize) -> PauliSum {
    one_body_to_pauli(&DMatrix::identity(n_orbitals, n_orbitals)).expect("identity is symmetric")
}
