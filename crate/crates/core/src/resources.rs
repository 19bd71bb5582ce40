//! Fault-tolerant logical resource estimates for the Hadamard-test circuits.
//!
//! Time evolution is costed parametrically: a second-order Trotter step of the
//! double-factorized Hamiltonian uses `rotations(N, L) = a·N²·L + b·N² + c·N`
//! single-qubit Z rotations, each synthesized with `rot_t_cost(ε_r)` T gates;
//! replacing controlled rotations by uncontrolled ones halves the evolution T
//! count. `(a, b, c)` are calibrated against the reference table below.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::operator::QVector;
use crate::spectrum::{plan_run, Pair, PlanRequest, RunPlan};
use crate::{Error, Result};

/// Primitive emitted for every time-evolution rotation.
pub const EVOLUTION_ROTATION: &str = "evolution_rotation";
/// Primitive emitted for every state-preparation block.
pub const STATE_PREP: &str = "state_prep";

/// T gates per synthesized Z rotation: `0.53·log2(1/ε_r) + 4.86`.
pub fn rot_t_cost(epsilon_r: f64) -> f64 {
    rot_t_cost_with(epsilon_r, 0.53, 4.86)
}

fn rot_t_cost_with(epsilon_r: f64, slope: f64, offset: f64) -> f64 {
    slope * (1.0 / epsilon_r).log2() + offset
}

/// One row of the reference resource table (Li₂MnO₃ cluster, q = (1,1,1)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub n_a: usize,
    pub logical_qubits: f64,
    pub algorithm_t: f64,
    pub algorithm_active_volume: f64,
    pub largest_t: f64,
    pub largest_active_volume: f64,
}

const fn row(n_a: usize, q: f64, at: f64, av: f64, lt: f64, lv: f64) -> TableRow {
    TableRow {
        n_a,
        logical_qubits: q,
        algorithm_t: at,
        algorithm_active_volume: av,
        largest_t: lt,
        largest_active_volume: lv,
    }
}

/// Published reference estimates, `N_a = 14..30`.
pub const REFERENCE_TABLE: [TableRow; 9] = [
    row(14, 92.0, 1.54e12, 4.13e13, 1.67e8, 4.46e9),
    row(16, 96.0, 2.29e12, 6.16e13, 2.47e8, 6.65e9),
    row(18, 100.0, 3.25e12, 8.77e13, 3.51e8, 9.48e9),
    row(20, 104.0, 4.45e12, 1.20e14, 4.80e8, 1.30e10),
    row(22, 108.0, 5.91e12, 1.60e14, 6.39e8, 1.73e10),
    row(24, 112.0, 7.67e12, 2.08e14, 8.29e8, 2.25e10),
    row(26, 116.0, 9.75e12, 2.65e14, 1.05e9, 2.86e10),
    row(28, 120.0, 1.22e13, 3.31e14, 1.32e9, 3.58e10),
    row(30, 124.0, 1.50e13, 4.08e14, 1.62e9, 4.40e10),
];

/// Reference-table schedule: η = 0.06 Ha, Δ = 3.28 Ha, ε_trunc = e⁻⁵, Trotter step τ/4, 10⁴ samples.
pub const TABLE_ETA: f64 = 0.06;
pub const TABLE_DELTA: f64 = 3.28;
pub const TABLE_K: usize = 4;
pub const TABLE_SHOTS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub epsilon_r: f64,
    /// `(slope, offset)` of the rotation T-cost law.
    pub rot_t_params: (f64, f64),
    /// CDF rank; `None` means `L = N_a`.
    pub rank: Option<usize>,
    /// `(a, b, c)` of the per-step rotation count.
    pub rotation_coeffs: [f64; 3],
    /// Active volume per T gate, keyed by primitive.
    pub av_weights: BTreeMap<String, f64>,
    /// T count of the state-preparation block of a diagonal-pair circuit.
    pub state_prep_t_diagonal: f64,
    /// T count of the state-preparation block of an off-diagonal-pair circuit.
    pub state_prep_t_off_diagonal: f64,
    /// Factor applied to evolution T gates (½: uncontrolled rotations).
    pub controlled_factor: f64,
    pub clock_hz: f64,
    /// Qubit budget `n_q` used for depth.
    pub n_logical_qubits: f64,
    /// Logical qubits `slope·N_a + intercept`.
    pub qubit_fit: (f64, f64),
}

/// Calibrated defaults (see [`calibrate`]).
pub const DEFAULT_ROTATION_COEFFS: [f64; 3] = [33.33976965412499, 0.0, 0.0];
pub const DEFAULT_AV_WEIGHT: f64 = 27.05067017774423;
pub const DEFAULT_QUBIT_FIT: (f64, f64) = (2.0, 64.0);

impl Default for CostModel {
    fn default() -> Self {
        let mut weights = BTreeMap::new();
        weights.insert(EVOLUTION_ROTATION.to_string(), DEFAULT_AV_WEIGHT);
        weights.insert(STATE_PREP.to_string(), DEFAULT_AV_WEIGHT);
        CostModel {
            epsilon_r: 1e-3,
            rot_t_params: (0.53, 4.86),
            rank: None,
            rotation_coeffs: DEFAULT_ROTATION_COEFFS,
            av_weights: weights,
            state_prep_t_diagonal: 1.1e6,
            state_prep_t_off_diagonal: 9.7e6,
            controlled_factor: 0.5,
            clock_hz: 1e6,
            n_logical_qubits: 350.0,
            qubit_fit: DEFAULT_QUBIT_FIT,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.epsilon_r,
            self.rot_t_params.0,
            self.state_prep_t_diagonal,
            self.state_prep_t_off_diagonal,
            self.controlled_factor,
            self.clock_hz,
            self.n_logical_qubits,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) || self.epsilon_r >= 1.0 {
            return Err(Error::Invalid("cost model parameters must be positive (and ε_r < 1)".into()));
        }
        if self.av_weights.values().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Invalid("active-volume weights must be finite and nonnegative".into()));
        }
        Ok(())
    }

    pub fn rot_t_cost(&self) -> f64 {
        rot_t_cost_with(self.epsilon_r, self.rot_t_params.0, self.rot_t_params.1)
    }

    pub fn rank_for(&self, n_a: usize) -> usize {
        self.rank.unwrap_or(n_a)
    }

    /// Rotations per Trotter step.
    pub fn step_rotations(&self, n_a: usize, rank: usize) -> f64 {
        let (n, l) = (n_a as f64, rank as f64);
        let [a, b, c] = self.rotation_coeffs;
        a * n * n * l + b * n * n + c * n
    }

    pub fn state_prep_t(&self, diagonal: bool) -> f64 {
        if diagonal {
            self.state_prep_t_diagonal
        } else {
            self.state_prep_t_off_diagonal
        }
    }

    pub fn weight(&self, primitive: &str) -> Result<f64> {
        self.av_weights
            .get(primitive)
            .copied()
            .ok_or_else(|| Error::UnknownPrimitive(primitive.to_string()))
    }

    pub fn logical_qubits(&self, n_a: usize) -> f64 {
        self.qubit_fit.0 * n_a as f64 + self.qubit_fit.1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitCost {
    pub rotations: f64,
    pub evolution_t: f64,
    pub state_prep_t: f64,
    pub t_gates: f64,
    pub active_volume: f64,
}

impl CircuitCost {
    pub const ZERO: CircuitCost = CircuitCost {
        rotations: 0.0,
        evolution_t: 0.0,
        state_prep_t: 0.0,
        t_gates: 0.0,
        active_volume: 0.0,
    };

    fn add_scaled(&mut self, other: &CircuitCost, s: f64) {
        self.rotations += s * other.rotations;
        self.evolution_t += s * other.evolution_t;
        self.state_prep_t += s * other.state_prep_t;
        self.t_gates += s * other.t_gates;
        self.active_volume += s * other.active_volume;
    }
}

/// Cost of one Hadamard-test circuit evolving for `n` time steps of `k`
/// Trotter steps each, with a diagonal- or off-diagonal-style preparation.
pub fn circuit_cost(n_a: usize, rank: usize, k: usize, n: usize, diagonal: bool, model: &CostModel) -> Result<CircuitCost> {
    if n_a == 0 || rank == 0 || k == 0 {
        return Err(Error::Invalid("N_a, L and k must be positive".into()));
    }
    let rotations = model.step_rotations(n_a, rank) * (k * n) as f64;
    let evolution_t = rotations * model.rot_t_cost() * model.controlled_factor;
    let state_prep_t = model.state_prep_t(diagonal);
    let active_volume = evolution_t * model.weight(EVOLUTION_ROTATION)? + state_prep_t * model.weight(STATE_PREP)?;
    Ok(CircuitCost {
        rotations,
        evolution_t,
        state_prep_t,
        t_gates: evolution_t + state_prep_t,
        active_volume,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub n_a: usize,
    pub rank: usize,
    pub k: usize,
    pub n_max: usize,
    pub total_shots: u64,
    /// Deepest circuit that receives at least one shot.
    pub per_circuit_t: f64,
    pub per_circuit_active_volume: f64,
    pub algorithm_t: f64,
    pub algorithm_active_volume: f64,
    pub logical_qubits: f64,
    pub n_q: f64,
    pub depth: f64,
    pub runtime_seconds: f64,
}

impl ResourceReport {
    pub fn runtime_days(&self) -> f64 {
        self.runtime_seconds / 86_400.0
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Depth `2V/n_q`.
pub fn depth(active_volume: f64, n_q: f64) -> f64 {
    2.0 * active_volume / n_q
}

/// Runtime in seconds: `2V/n_q / clock`.
pub fn runtime_seconds(active_volume: f64, n_q: f64, clock_hz: f64) -> f64 {
    depth(active_volume, n_q) / clock_hz
}

/// Sums circuit costs over every pair, time point, real/imaginary part and shot of `plan`.
pub fn algorithm_cost(n_a: usize, plan: &RunPlan, model: &CostModel) -> Result<ResourceReport> {
    model.validate()?;
    let rank = model.rank_for(n_a);
    let mut total = CircuitCost::ZERO;
    let mut largest = CircuitCost::ZERO;
    for pair in Pair::ALL {
        for (i, &shots) in plan.shots(pair).iter().enumerate() {
            if shots == 0 {
                continue;
            }
            let c = circuit_cost(n_a, rank, plan.k, i + 1, pair.is_diagonal(), model)?;
            total.add_scaled(&c, shots as f64);
            if c.t_gates > largest.t_gates {
                largest = c;
            }
        }
    }
    Ok(ResourceReport {
        n_a,
        rank,
        k: plan.k,
        n_max: plan.n_max,
        total_shots: plan.total_shots,
        per_circuit_t: largest.t_gates,
        per_circuit_active_volume: largest.active_volume,
        algorithm_t: total.t_gates,
        algorithm_active_volume: total.active_volume,
        logical_qubits: model.logical_qubits(n_a),
        n_q: model.n_logical_qubits,
        depth: depth(total.active_volume, model.n_logical_qubits),
        runtime_seconds: runtime_seconds(total.active_volume, model.n_logical_qubits, model.clock_hz),
    })
}

/// Plan of the reference table: q = (1,1,1), equal dipole moments, η = 0.06, Δ = 3.28, ε_trunc = e⁻⁵, k = 4.
pub fn table_plan(total_shots: u64) -> Result<RunPlan> {
    uniform_plan(TABLE_ETA, TABLE_DELTA, (-5f64).exp(), TABLE_K, total_shots)
}

/// Plan for unit moments and q = (1, 1, 1). Budgets below six shots are
/// split over the pairs by multiplicity alone.
pub fn uniform_plan(eta: f64, delta: f64, epsilon_trunc: f64, k: usize, total_shots: u64) -> Result<RunPlan> {
    let mut plan = plan_run(&PlanRequest {
        eta,
        delta,
        epsilon_trunc,
        total_shots: total_shots.max(6),
        k,
        omega_offset: 0.0,
        moments: [[1.0; 3]; 3],
        q_set: vec![QVector::new(1.0, 1.0, 1.0)?],
    })?;
    if total_shots < 6 {
        let counts = crate::spectrum::largest_remainder(total_shots, &Pair::ALL.map(Pair::multiplicity));
        plan.budgets = Pair::ALL.iter().copied().zip(counts).collect();
        plan.total_shots = total_shots;
    }
    Ok(plan)
}

/// Fit results with relative residuals `model/reference − 1` per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub model: CostModel,
    pub largest_t_residuals: Vec<(usize, f64)>,
    pub qubit_residuals: Vec<(usize, f64)>,
}

/// Fits the rotation coefficients (nonnegative weighted least squares on relative errors
/// of the largest-circuit T column), the active-volume weight (mean V/T of
/// that column) and the affine logical-qubit law.
pub fn calibrate(table: &[TableRow], base: &CostModel) -> Result<Calibration> {
    if table.len() < 3 {
        return Err(Error::Invalid("calibration needs at least three rows".into()));
    }
    let plan = table_plan(TABLE_SHOTS)?;
    // Largest circuit: off-diagonal pair at n = n_max.
    let per_rotation = (plan.k * plan.n_max) as f64 * base.rot_t_cost() * base.controlled_factor;
    let prep = base.state_prep_t_off_diagonal;
    let mut a = DMatrix::zeros(table.len(), 3);
    let mut y = DVector::zeros(table.len());
    for (i, r) in table.iter().enumerate() {
        let n = r.n_a as f64;
        let l = base.rank_for(r.n_a) as f64;
        let w = 1.0 / r.largest_t;
        a[(i, 0)] = w * per_rotation * n * n * l;
        a[(i, 1)] = w * per_rotation * n * n;
        a[(i, 2)] = w * per_rotation * n;
        y[i] = w * (r.largest_t - prep);
    }
    let coeffs = nonnegative_least_squares(&a, &y)?;

    let weight = table.iter().map(|r| r.largest_active_volume / r.largest_t).sum::<f64>() / table.len() as f64;

    let n_rows = table.len() as f64;
    let mean_n = table.iter().map(|r| r.n_a as f64).sum::<f64>() / n_rows;
    let mean_q = table.iter().map(|r| r.logical_qubits).sum::<f64>() / n_rows;
    let sxy: f64 = table.iter().map(|r| (r.n_a as f64 - mean_n) * (r.logical_qubits - mean_q)).sum();
    let sxx: f64 = table.iter().map(|r| (r.n_a as f64 - mean_n).powi(2)).sum();
    let slope = sxy / sxx;

    let mut model = base.clone();
    model.rotation_coeffs = [coeffs[0], coeffs[1], coeffs[2]];
    for w in model.av_weights.values_mut() {
        *w = weight;
    }
    model.qubit_fit = (slope, mean_q - slope * mean_n);

    let mut largest_t_residuals = Vec::new();
    let mut qubit_residuals = Vec::new();
    for r in table {
        let c = circuit_cost(r.n_a, model.rank_for(r.n_a), plan.k, plan.n_max, false, &model)?;
        largest_t_residuals.push((r.n_a, c.t_gates / r.largest_t - 1.0));
        qubit_residuals.push((r.n_a, model.logical_qubits(r.n_a) / r.logical_qubits - 1.0));
    }
    Ok(Calibration {
        model,
        largest_t_residuals,
        qubit_residuals,
    })
}

/// Minimizes `‖Ax − y‖` subject to `x ≥ 0` by enumerating active sets
/// (exact for the handful of columns used here).
fn nonnegative_least_squares(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<Vec<f64>> {
    let cols = a.ncols();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << cols) {
        let keep: Vec<usize> = (0..cols).filter(|c| mask >> c & 1 == 1).collect();
        let sub = DMatrix::from_fn(a.nrows(), keep.len(), |i, j| a[(i, keep[j])]);
        let Ok(x) = sub.clone().svd(true, true).solve(y, 1e-14) else {
            continue;
        };
        if x.iter().any(|&v| v < 0.0) {
            continue;
        }
        let resid = (&sub * &x - y).norm();
        if best.as_ref().is_none_or(|b| resid < b.0) {
            let mut full = vec![0.0; cols];
            for (j, &c) in keep.iter().enumerate() {
                full[c] = x[j];
            }
            best = Some((resid, full));
        }
    }
    best.map(|b| b.1).ok_or_else(|| Error::Invalid("calibration failed".into()))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Reports for each `N_a`, using the reference schedule.
pub fn table_reports(n_values: &[usize], total_shots: u64, model: &CostModel) -> Result<Vec<ResourceReport>> {
    let plan = table_plan(total_shots)?;
    n_values.iter().map(|&n| algorithm_cost(n, &plan, model)).collect()
}

/// CSV in the reference-table column layout.
pub fn table_csv(reports: &[ResourceReport]) -> String {
    let mut out = String::from("n_a,logical_qubits,algorithm_t,algorithm_active_volume,largest_t,largest_active_volume\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{:.3e},{:.3e},{:.3e},{:.3e}",
            r.n_a, r.logical_qubits, r.algorithm_t, r.algorithm_active_volume, r.per_circuit_t, r.per_circuit_active_volume
        );
    }
    out
}
