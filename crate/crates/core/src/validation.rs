//! Invariant suite run by `dsf-sim validate`: Jordan–Wigner consistency,
//! time-reversal and pair symmetries, sum rules, DSF assembly identities and
//! Trotter convergence on small fixtures.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::emulator::{build_trotter, Propagator};
use crate::fixtures::{bundled, ModelSpec};
use crate::operator::{jordan_wigner, total_number_operator, Axis, QVector};
use crate::oracle::{EigenSystem, Sector, TransitionTable};
use crate::pipeline::{shifted_qubit_hamiltonian, suggest_window, trotter_operator_error};
use crate::resources::loglog_slope;
use crate::spectrum::{
    assemble_dsf, contributions, default_grid, evolve_overlaps, isotropic_dsf, measure_all, plan_run, DipoleStates, Mode,
    Pair, PlanRequest,
};
use crate::Result;

/// Tolerance of the symmetry and sum-rule checks.
pub const SUITE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub fixture: String,
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(fixture: &str, name: &str, value: f64, tolerance: f64) -> Check {
        Check {
            fixture: fixture.to_string(),
            name: name.to_string(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }

    fn within(fixture: &str, name: &str, value: f64, target: f64, tolerance: f64) -> Check {
        Check {
            passed: (value - target).abs() <= tolerance,
            ..Check::at_most(fixture, name, value, tolerance)
        }
    }
}

/// Time points checked by the symmetry suite; kept small so it stays fast.
const SUITE_N_MAX: usize = 40;

/// Symmetry, sum-rule and assembly checks on one fixture, in exact mode.
pub fn symmetry_checks(name: &str, spec: &ModelSpec) -> Result<Vec<Check>> {
    let (h, dip) = spec.generate();
    let (na, nb) = spec.sector();
    let eig = EigenSystem::for_sector(&h, Sector::new(na, nb))?;
    let (ground, _) = eig.ground_state();
    let trans = TransitionTable::new(&eig, &h, &ground, &dip, None)?;
    let (lo, width) = suggest_window(&trans, 1e-10, 0.0).unwrap_or((0.0, 1.0));
    let delta = 1.2 * width.max(0.5);
    let offset = lo - 0.1 * width.max(0.5);
    let states = DipoleStates::prepare(&ground, &dip, None, 24)?;
    let e0 = trans.e0;
    let mut plan = plan_run(&PlanRequest {
        eta: delta / 40.0,
        delta,
        epsilon_trunc: 1e-8,
        total_shots: 10_000,
        k: 4,
        omega_offset: offset,
        moments: states.moments,
        q_set: vec![],
    })?;
    plan.n_max = plan.n_max.min(SUITE_N_MAX).max(1);
    let program = build_trotter(&shifted_qubit_hamiltonian(&h, e0, offset), plan.tau, plan.k)?;
    let forward = evolve_overlaps(&states, &Propagator::new(program.clone()), plan.n_max)?;
    let backward = evolve_overlaps(&states, &Propagator::new(program.time_reversed()), plan.n_max)?;

    let mut checks = Vec::new();

    // G(−n) = conj G(n): X even, Y odd under n → −n.
    let parity = Pair::ALL
        .iter()
        .flat_map(|p| forward[p].iter().zip(&backward[p]).map(|(f, b)| (b - f.conj()).norm()))
        .fold(0.0, f64::max);
    checks.push(Check::at_most(name, "xy_parity_under_time_reversal", parity, SUITE_TOL));

    // ⟨μ_α U^n μ_β⟩ = ⟨μ_β U^n μ_α⟩ for real Hamiltonians and dipoles.
    let mut swap: f64 = 0.0;
    if let (Some(_), Some(_)) = (&states.states[0], &states.states[1]) {
        swap = swap.max(swapped_difference(&states, &program, plan.n_max, Axis::X, Axis::Y)?);
    }
    for (a, b) in [(Axis::X, Axis::Z), (Axis::Y, Axis::Z)] {
        if states.states[a.index()].is_some() && states.states[b.index()].is_some() {
            swap = swap.max(swapped_difference(&states, &program, plan.n_max, a, b)?);
        }
    }
    checks.push(Check::at_most(name, "pair_swap_equality", swap, SUITE_TOL));

    let series = measure_all(&plan, &states, &Propagator::new(program), Mode::Exact)?;
    let sum_rule = series
        .iter()
        .map(|s| (s.period_integral(0) - s.moment0).abs() / s.norm_product.max(1.0))
        .fold(0.0, f64::max);
    checks.push(Check::at_most(name, "moment_sum_rule", sum_rule, SUITE_TOL));

    let completeness = Axis::ALL
        .iter()
        .map(|&a| (trans.completeness(a) - trans.moments[a.index()][a.index()]).abs())
        .fold(0.0, f64::max);
    checks.push(Check::at_most(name, "oracle_completeness", completeness, SUITE_TOL));

    let omega = default_grid(plan.tau, plan.eta, offset);
    let parts = contributions(&series, &omega);
    let zero = assemble_dsf(&QVector::new(0.0, 0.0, 0.0)?, &parts)?;
    checks.push(Check::at_most(name, "dsf_vanishes_at_q_zero", zero.max_abs(), SUITE_TOL));

    checks.push(Check::at_most(name, "isotropic_identity", isotropic_defect(&parts, 1.3)?, SUITE_TOL));

    // Qubit-operator consistency on the ground state.
    let psi = ground.to_statevector(24)?;
    let hq = jordan_wigner(&h);
    let e_jw: Complex64 = psi.amplitudes().iter().zip(hq.apply(psi.amplitudes())).map(|(a, b)| a.conj() * b).sum();
    checks.push(Check::at_most(name, "jordan_wigner_energy", (e_jw.re - e0).abs(), SUITE_TOL));
    let nq = total_number_operator(h.n_orbitals());
    let n_jw: Complex64 = psi.amplitudes().iter().zip(nq.apply(psi.amplitudes())).map(|(a, b)| a.conj() * b).sum();
    checks.push(Check::at_most(name, "electron_number", (n_jw.re - spec.n_electrons as f64).abs(), SUITE_TOL));
    Ok(checks)
}

fn swapped_difference(states: &DipoleStates, program: &crate::emulator::TrotterProgram, n_max: usize, a: Axis, b: Axis) -> Result<f64> {
    let sa = states.states[a.index()].as_ref().expect("checked");
    let sb = states.states[b.index()].as_ref().expect("checked");
    let (mut pa, mut pb) = (sa.clone(), sb.clone());
    let mut worst: f64 = 0.0;
    for _ in 0..n_max {
        program.apply(&mut pa, 1)?;
        program.apply(&mut pb, 1)?;
        worst = worst.max((sb.inner(&pa) - sa.inner(&pb)).norm());
    }
    Ok(worst)
}

/// `max |S_iso − mean over ±|q| along each axis of S(q)|` relative to `max |S_iso|`.
pub fn isotropic_defect(parts: &BTreeMap<Pair, crate::spectrum::Spectrum>, q_norm: f64) -> Result<f64> {
    let iso = isotropic_dsf(q_norm, parts)?;
    let mut avg = vec![0.0; iso.values.len()];
    for axis in Axis::ALL {
        for sign in [1.0, -1.0] {
            let mut c = [0.0; 3];
            c[axis.index()] = sign * q_norm;
            let s = assemble_dsf(&QVector::new(c[0], c[1], c[2])?, parts)?;
            for (a, v) in avg.iter_mut().zip(&s.values) {
                *a += v / 6.0;
            }
        }
    }
    let scale = iso.max_abs().max(1.0);
    Ok(avg.iter().zip(&iso.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale)
}

/// Slope of `log ‖U_2(τ/k)^k − e^{−iHτ}‖` against `log k` over `k ∈ {1, 2, 4, 8}`.
pub fn trotter_slope(name: &str, spec: &ModelSpec, tau: f64) -> Result<Check> {
    let (h, _) = spec.generate();
    let hq = jordan_wigner(&h);
    let pts = [1usize, 2, 4, 8]
        .iter()
        .map(|&k| Ok((k as f64, trotter_operator_error(&hq, tau, k)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Check::within(name, "trotter_operator_slope", loglog_slope(&pts), -2.0, 0.3))
}

/// Full suite over the bundled fixtures.
pub fn run_suite() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (name, spec) in bundled() {
        checks.extend(symmetry_checks(name, &spec)?);
        if spec.kind != crate::fixtures::ModelKind::DiagonalOnly {
            checks.push(trotter_slope(name, &spec, 0.1 * PI)?);
        }
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_on_two_orbital_fixture() {
        let checks = symmetry_checks("two_orbital", &ModelSpec::random(2, 2, 2024)).unwrap();
        for c in &checks {
            assert!(c.passed, "{c:?}");
        }
        assert!(trotter_slope("two_orbital", &ModelSpec::random(2, 2, 2024), 0.3).unwrap().passed);
    }
}
