//! Deterministic model systems for tests, demos and regression baselines.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::operator::{write_fcidump, DipoleOperator, Fcidump, Hamiltonian, TwoBodyTensor};
use crate::rng::derive_seed;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Dense random integrals of O(1) Ha magnitude.
    RandomTwoBody,
    /// One deep core orbital (index 0) dipole-coupled to the virtual orbitals.
    CoreValenceToy,
    /// Diagonal one-body Hamiltonian with no two-body part.
    DiagonalOnly,
}

impl ModelKind {
    fn tag(self) -> u64 {
        match self {
            ModelKind::RandomTwoBody => 1,
            ModelKind::CoreValenceToy => 2,
            ModelKind::DiagonalOnly => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub n_orbitals: usize,
    pub n_electrons: usize,
    pub seed: u64,
    pub kind: ModelKind,
    /// Depth of the core orbital below the valence manifold (CoreValenceToy only), Hartree.
    #[serde(default)]
    pub core_gap: f64,
}

impl ModelSpec {
    pub fn random(n_orbitals: usize, n_electrons: usize, seed: u64) -> Self {
        ModelSpec {
            n_orbitals,
            n_electrons,
            seed,
            kind: ModelKind::RandomTwoBody,
            core_gap: 0.0,
        }
    }

    pub fn diagonal(n_orbitals: usize, n_electrons: usize, seed: u64) -> Self {
        ModelSpec {
            kind: ModelKind::DiagonalOnly,
            ..ModelSpec::random(n_orbitals, n_electrons, seed)
        }
    }

    pub fn core_valence(n_orbitals: usize, n_electrons: usize, seed: u64, core_gap: f64) -> Self {
        ModelSpec {
            kind: ModelKind::CoreValenceToy,
            core_gap,
            ..ModelSpec::random(n_orbitals, n_electrons, seed)
        }
    }

    /// `(N_α, N_β)` of the closed- or nearly-closed-shell sector used for ground states.
    pub fn sector(&self) -> (usize, usize) {
        let na = self.n_electrons.div_ceil(2);
        (na, self.n_electrons - na)
    }

    /// Generated Hamiltonian with its electron count and `2·S_z`.
    pub fn fcidump(&self) -> Fcidump {
        let (na, nb) = self.sector();
        Fcidump {
            hamiltonian: self.generate().0,
            n_electrons: self.n_electrons,
            ms2: na as i64 - nb as i64,
        }
    }

    pub fn generate(&self) -> (Hamiltonian, DipoleOperator) {
        assert!(self.n_orbitals >= 1, "at least one orbital");
        assert!(self.n_electrons <= 2 * self.n_orbitals, "too many electrons");
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &[self.kind.tag(), self.n_orbitals as u64]));
        match self.kind {
            ModelKind::RandomTwoBody => random_two_body(self.n_orbitals, &mut rng),
            ModelKind::DiagonalOnly => diagonal_only(self.n_orbitals, &mut rng),
            ModelKind::CoreValenceToy => core_valence(self.n_orbitals, self.n_electrons, self.core_gap, &mut rng),
        }
    }
}

fn symmetric(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for p in 0..n {
        for q in 0..=p {
            let v = scale * rng.random_range(-1.0..1.0);
            m[(p, q)] = v;
            m[(q, p)] = v;
        }
    }
    m
}

/// `(pq|rs) = Σ_L B^L_pq B^L_rs` over `indices`, which is positive semidefinite and 8-fold symmetric.
fn low_rank_eri(t: &mut TwoBodyTensor, indices: &[usize], rank: usize, scale: f64, rng: &mut ChaCha8Rng) {
    let m = indices.len();
    let factors: Vec<DMatrix<f64>> = (0..rank)
        .map(|l| {
            let mut b = symmetric(m, scale, rng);
            // A dominant diagonal factor keeps Coulomb-like (pp|qq) terms positive.
            if l == 0 {
                for p in 0..m {
                    b[(p, p)] = scale * (1.5 + 0.5 * rng.random::<f64>());
                }
            }
            b
        })
        .collect();
    for (i, &p) in indices.iter().enumerate() {
        for (j, &q) in indices.iter().enumerate().take(i + 1) {
            for (k, &r) in indices.iter().enumerate() {
                for (l, &s) in indices.iter().enumerate().take(k + 1) {
                    if k * m + l > i * m + j {
                        continue;
                    }
                    let v: f64 = factors.iter().map(|b| b[(i, j)] * b[(k, l)]).sum();
                    let cur = t.get(p, q, r, s);
                    t.set_symmetric(p, q, r, s, cur + v);
                }
            }
        }
    }
}

fn random_dipole(n: usize, rng: &mut ChaCha8Rng) -> DipoleOperator {
    let x = symmetric(n, 0.6, rng);
    let y = symmetric(n, 0.6, rng);
    let z = symmetric(n, 0.6, rng);
    DipoleOperator::new(x, y, z).expect("symmetric by construction")
}

fn random_two_body(n: usize, rng: &mut ChaCha8Rng) -> (Hamiltonian, DipoleOperator) {
    let mut h = symmetric(n, 0.2, rng);
    for p in 0..n {
        h[(p, p)] = -1.0 + 0.6 * p as f64 + 0.1 * rng.random_range(-1.0..1.0);
    }
    let mut eri = TwoBodyTensor::zeros(n);
    let all: Vec<usize> = (0..n).collect();
    low_rank_eri(&mut eri, &all, 2, 0.35, rng);
    let offset = rng.random_range(-1.0..1.0);
    let ham = Hamiltonian::new(n, offset, h, eri).expect("valid by construction");
    (ham, random_dipole(n, rng))
}

fn diagonal_only(n: usize, rng: &mut ChaCha8Rng) -> (Hamiltonian, DipoleOperator) {
    let mut h = DMatrix::zeros(n, n);
    for p in 0..n {
        h[(p, p)] = -1.0 + 0.7 * p as f64 + 0.1 * rng.random::<f64>();
    }
    let ham = Hamiltonian::new(n, 0.0, h, TwoBodyTensor::zeros(n)).expect("valid by construction");
    (ham, random_dipole(n, rng))
}

/// Core orbital 0 at `−core_gap`, occupied valence orbitals below zero and
/// virtuals above. Two-body integrals are restricted to core-core and
/// valence-valence charge distributions, so the Hamiltonian conserves the core
/// occupation, and the dipole couples the core only to the virtual orbitals.
fn core_valence(n: usize, n_electrons: usize, core_gap: f64, rng: &mut ChaCha8Rng) -> (Hamiltonian, DipoleOperator) {
    assert!(n >= 3, "core–valence toy needs at least three orbitals");
    let n_occ = n_electrons.div_ceil(2).clamp(1, n - 1);
    let mut h = DMatrix::zeros(n, n);
    h[(0, 0)] = -core_gap;
    for p in 1..n {
        h[(p, p)] = if p < n_occ {
            -1.0 + 0.15 * (p - 1) as f64
        } else {
            0.3 + 1.0 * (p - n_occ) as f64
        } + 0.02 * rng.random_range(-1.0..1.0);
        for q in 1..p {
            let v = 0.05 * rng.random_range(-1.0..1.0);
            h[(p, q)] = v;
            h[(q, p)] = v;
        }
    }
    let mut eri = TwoBodyTensor::zeros(n);
    eri.set_symmetric(0, 0, 0, 0, 0.5);
    for v in 1..n {
        eri.set_symmetric(0, 0, v, v, 0.15 + 0.1 * rng.random::<f64>());
    }
    let valence: Vec<usize> = (1..n).collect();
    low_rank_eri(&mut eri, &valence, 2, 0.15, rng);
    let offset = rng.random_range(-1.0..1.0);
    let ham = Hamiltonian::new(n, offset, h, eri).expect("valid by construction");

    let mut mu = [DMatrix::zeros(n, n), DMatrix::zeros(n, n), DMatrix::zeros(n, n)];
    let mut set = |axis: usize, v: usize, val: f64| {
        mu[axis][(0, v)] = val;
        mu[axis][(v, 0)] = val;
    };
    for (j, v) in (n_occ..n).enumerate() {
        let jitter = |rng: &mut ChaCha8Rng| 0.05 * rng.random_range(-1.0..1.0);
        match j {
            // π*-like: in-plane coupling.
            0 => {
                set(0, v, 0.8 + jitter(rng));
                set(1, v, 0.5 + jitter(rng));
            }
            // σ*-like: mostly out of plane.
            1 => {
                set(2, v, 0.9 + jitter(rng));
                set(0, v, 0.2 + jitter(rng));
            }
            _ => {
                for axis in 0..3 {
                    set(axis, v, 0.3 * rng.random_range(-1.0..1.0));
                }
            }
        }
    }
    let [x, y, z] = mu;
    (ham, DipoleOperator::new(x, y, z).expect("symmetric by construction"))
}

/// Named fixtures shipped with the repository.
pub fn bundled() -> Vec<(&'static str, ModelSpec)> {
    vec![
        ("two_orbital", ModelSpec::random(2, 2, 2024)),
        ("random_three", ModelSpec::random(3, 3, 7)),
        ("diagonal_three", ModelSpec::diagonal(3, 2, 11)),
        ("core_valence", ModelSpec::core_valence(4, 4, 5, 20.0)),
    ]
}

/// Paths written for one fixture.
#[derive(Debug, Clone)]
pub struct FixtureFiles {
    pub name: String,
    pub fcidump: PathBuf,
    pub dipoles: PathBuf,
    pub spec: PathBuf,
}

/// Writes `<name>.fcidump`, `<name>.dipoles.json` and `<name>.spec.json`.
pub fn write_fixture(dir: &Path, name: &str, spec: &ModelSpec) -> Result<FixtureFiles> {
    std::fs::create_dir_all(dir)?;
    let (h, mu) = spec.generate();
    let fcidump = dir.join(format!("{name}.fcidump"));
    let dipoles = dir.join(format!("{name}.dipoles.json"));
    let spec_path = dir.join(format!("{name}.spec.json"));
    let (na, nb) = spec.sector();
    let fd = Fcidump { hamiltonian: h, n_electrons: spec.n_electrons, ms2: na as i64 - nb as i64 };
    std::fs::write(&fcidump, write_fcidump(&fd))?;
    std::fs::write(&dipoles, mu.to_json())?;
    std::fs::write(&spec_path, serde_json::to_string_pretty(spec)? + "\n")?;
    Ok(FixtureFiles {
        name: name.to_string(),
        fcidump,
        dipoles,
        spec: spec_path,
    })
}

pub fn write_bundle(dir: &Path) -> Result<Vec<FixtureFiles>> {
    bundled().iter().map(|(name, spec)| write_fixture(dir, name, spec)).collect()
}
