//! End-to-end runs: inputs → plan → Hadamard-test series → spectra.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::ci::{CIVector, DEFAULT_QUBIT_CAP};
use crate::emulator::{build_trotter, exact_propagator, operator_distance, Propagator, DENSE_PROPAGATOR_MAX_QUBITS};
use crate::operator::{jordan_wigner, DipoleOperator, Hamiltonian, PauliSum, QVector};
use crate::oracle::{rayleigh_quotient, TransitionTable};
use crate::spectrum::{
    assemble_dsf, contributions, default_grid, measure_all, plan_run, GreensSeries, Mode, PlanRequest, RunPlan, Spectrum,
};
use crate::{Error, Result};

/// Classical inputs of one run.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub hamiltonian: Hamiltonian,
    pub dipole: DipoleOperator,
    pub ground: CIVector,
    /// Reference energy `E0`.
    pub e0: f64,
}

impl Inputs {
    /// `E0` is the Rayleigh quotient of `ground`.
    pub fn new(hamiltonian: Hamiltonian, dipole: DipoleOperator, ground: CIVector) -> Result<Self> {
        if dipole.n_orbitals() != hamiltonian.n_orbitals() || ground.n_orbitals() != hamiltonian.n_orbitals() {
            return Err(Error::Dimension {
                expected: hamiltonian.n_orbitals(),
                found: if dipole.n_orbitals() != hamiltonian.n_orbitals() {
                    dipole.n_orbitals()
                } else {
                    ground.n_orbitals()
                },
            });
        }
        let e0 = rayleigh_quotient(&hamiltonian, &ground)?;
        Ok(Inputs {
            hamiltonian,
            dipole,
            ground,
            e0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub eta: f64,
    pub delta: f64,
    pub epsilon_trunc: f64,
    pub k: usize,
    pub shots: u64,
    pub mode: Mode,
    pub q: Vec<QVector>,
    pub cvs: Option<Vec<usize>>,
    pub omega_offset: f64,
    pub qubit_cap: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            eta: 0.06,
            delta: 3.28,
            epsilon_trunc: (-5f64).exp(),
            k: 4,
            shots: 10_000,
            mode: Mode::Exact,
            q: vec![QVector::new(1.0, 1.0, 1.0).expect("finite")],
            cvs: None,
            omega_offset: 0.0,
            qubit_cap: DEFAULT_QUBIT_CAP,
        }
    }
}

/// `H − E0 − ω_off` as a qubit operator.
pub fn shifted_qubit_hamiltonian(h: &Hamiltonian, e0: f64, omega_offset: f64) -> PauliSum {
    jordan_wigner(h).with_identity_shift(-(e0 + omega_offset))
}

pub fn propagator(h: &Hamiltonian, e0: f64, omega_offset: f64, tau: f64, k: usize) -> Result<Propagator> {
    Ok(Propagator::new(build_trotter(&shifted_qubit_hamiltonian(h, e0, omega_offset), tau, k)?))
}

/// `‖U_2(τ/k)^k − e^{−iHτ}‖₂`, for systems of at most [`DENSE_PROPAGATOR_MAX_QUBITS`] qubits.
pub fn trotter_operator_error(h: &PauliSum, tau: f64, k: usize) -> Result<f64> {
    if h.n_qubits() > DENSE_PROPAGATOR_MAX_QUBITS {
        return Err(Error::QubitCap {
            requested: h.n_qubits(),
            cap: DENSE_PROPAGATOR_MAX_QUBITS,
        });
    }
    Ok(operator_distance(&build_trotter(h, tau, k)?.dense(), &exact_propagator(h, tau)))
}

/// Smallest `k = 2^j ≤ k_max` with Trotter operator error at most `tol`.
pub fn choose_k(h: &PauliSum, tau: f64, tol: f64, k_max: usize) -> Result<(usize, f64)> {
    let mut k = 1;
    loop {
        let err = trotter_operator_error(h, tau, k)?;
        if err <= tol || 2 * k > k_max {
            return Ok((k, err));
        }
        k *= 2;
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub plan: RunPlan,
    pub series: Vec<GreensSeries>,
    pub omega: Vec<f64>,
    pub intensities: BTreeMap<crate::spectrum::Pair, Spectrum>,
    pub dsf: Vec<Spectrum>,
    pub moments: [[f64; 3]; 3],
}

/// Runs the full pipeline on the default grid of the plan window.
pub fn run(inputs: &Inputs, settings: &RunSettings) -> Result<RunOutput> {
    let states = crate::spectrum::DipoleStates::prepare(&inputs.ground, &inputs.dipole, settings.cvs.as_deref(), settings.qubit_cap)?;
    let plan = plan_run(&PlanRequest {
        eta: settings.eta,
        delta: settings.delta,
        epsilon_trunc: settings.epsilon_trunc,
        total_shots: settings.shots,
        k: settings.k,
        omega_offset: settings.omega_offset,
        moments: states.moments,
        q_set: settings.q.clone(),
    })?;
    let prop = propagator(&inputs.hamiltonian, inputs.e0, settings.omega_offset, plan.tau, plan.k)?;
    let series = measure_all(&plan, &states, &prop, settings.mode)?;
    let omega = default_grid(plan.tau, plan.eta, settings.omega_offset);
    let intensities = contributions(&series, &omega);
    let dsf = settings
        .q
        .iter()
        .map(|q| assemble_dsf(q, &intensities))
        .collect::<Result<_>>()?;
    Ok(RunOutput {
        plan,
        series,
        omega,
        intensities,
        dsf,
        moments: states.moments,
    })
}

/// Window `(ω_off, Δ)` covering every transition of weight above `rel_tol`
/// of the largest, padded by `pad` on each side.
pub fn suggest_window(trans: &TransitionTable, rel_tol: f64, pad: f64) -> Option<(f64, f64)> {
    let weight = |k: usize| trans.amplitudes[k].iter().map(|p| p.norm_sqr()).sum::<f64>();
    let top = (0..trans.excitation.len()).map(weight).fold(0.0, f64::max);
    if top == 0.0 {
        return None;
    }
    let bright: Vec<f64> = (0..trans.excitation.len())
        .filter(|&k| weight(k) > rel_tol * top)
        .map(|k| trans.excitation[k])
        .collect();
    let lo = bright.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = bright.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Some((lo - pad, (hi - lo + 2.0 * pad).max(PI * 1e-6)))
}
