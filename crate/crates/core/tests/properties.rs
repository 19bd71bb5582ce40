//! Property tests of the structural invariants.

use std::f64::consts::PI;

use dsf_core::ci::{CIVector, Determinant};
use dsf_core::emulator::{build_trotter, Propagator, StateVector};
use dsf_core::fixtures::{bundled, ModelSpec};
use dsf_core::operator::{
    jordan_wigner, one_body_to_pauli, total_number_operator, Axis, Hamiltonian, PauliSum, PauliWord, QVector,
    TwoBodyTensor,
};
use dsf_core::oracle::{exact_spectrum, sector_basis, EigenSystem, Sector, TransitionTable};
use dsf_core::pipeline::{propagator, suggest_window};
use dsf_core::resources::{algorithm_cost, circuit_cost, table_plan, CostModel, ResourceReport};
use dsf_core::spectrum::{
    allocate_shots, default_grid, evolve_overlaps, largest_remainder, plan_run, series_from_overlaps, shots_for_error,
    DipoleStates, Mode, Pair, PlanRequest, Spectrum, SpectrumKind,
};
use dsf_core::Complex64;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn random_vector(n: usize, ne: usize, seed: u64) -> CIVector {
    let (na, nb) = (ne.div_ceil(2), ne / 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = sector_basis(n, Sector::new(na, nb))
        .into_iter()
        .map(|d| (d, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
        .collect::<Vec<_>>();
    CIVector::from_entries(n, ne, entries).unwrap()
}

fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = DMatrix::zeros(n, n);
    for p in 0..n {
        for q in 0..=p {
            let v = rng.random_range(-1.0..1.0);
            m[(p, q)] = v;
            m[(q, p)] = v;
        }
    }
    m
}

fn fixture() -> impl Strategy<Value = ModelSpec> {
    (2usize..=3, any::<u64>()).prop_flat_map(|(n, seed)| (1..=2 * n - 1).prop_map(move |ne| ModelSpec::random(n, ne, seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn jordan_wigner_is_hermitian_and_conserves_number(spec in fixture()) {
        let (h, _) = spec.generate();
        let m = jordan_wigner(&h).dense_matrix();
        prop_assert!(max_abs(&(&m - m.adjoint())) <= 1e-12);
        let n = total_number_operator(h.n_orbitals()).dense_matrix();
        prop_assert!(max_abs(&(&m * &n - &n * &m)) <= 1e-10);
    }

    #[test]
    fn jordan_wigner_is_linear(seed in any::<u64>(), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let (h1, _) = ModelSpec::random(3, 2, seed).generate();
        let (h2, _) = ModelSpec::random(3, 2, seed ^ 0x5555).generate();
        let mut eri = TwoBodyTensor::zeros(3);
        for p in 0..3 { for q in 0..3 { for r in 0..3 { for s in 0..3 {
            eri.set_symmetric(p, q, r, s, a * h1.eri(p, q, r, s) + b * h2.eri(p, q, r, s));
        }}}}
        let combo = Hamiltonian::new(
            3,
            a * h1.offset() + b * h2.offset(),
            h1.one_body() * a + h2.one_body() * b,
            eri,
        ).unwrap();
        let lhs = jordan_wigner(&combo);
        let rhs = jordan_wigner(&h1).scaled(a).add(&jordan_wigner(&h2).scaled(b)).unwrap();
        let words: std::collections::BTreeSet<PauliWord> =
            lhs.terms().iter().chain(rhs.terms()).map(|t| t.1).collect();
        for w in words {
            prop_assert!((lhs.coefficient(&w) - rhs.coefficient(&w)).abs() <= 1e-12);
        }
    }

    #[test]
    fn one_body_action_is_linear_and_hermitian(seed in any::<u64>(), ne in 1usize..=5, a in -2.0..2.0f64) {
        let n = 3;
        let m1 = random_symmetric(n, seed);
        let m2 = random_symmetric(n, seed.wrapping_add(1));
        let u = random_vector(n, ne, seed.wrapping_add(2));
        let v = random_vector(n, ne, seed.wrapping_add(3));
        let sum = v.apply_one_body(&(&m1 * a + &m2)).unwrap();
        let parts = v.apply_one_body(&m1).unwrap().scaled(Complex64::new(a, 0.0));
        let other = v.apply_one_body(&m2).unwrap();
        for (d, c) in sum.iter() {
            prop_assert!((c - parts.amplitude(d) - other.amplitude(d)).norm() <= 1e-12);
        }
        let lhs = u.inner(&v.apply_one_body(&m1).unwrap());
        let rhs = u.apply_one_body(&m1).unwrap().inner(&v);
        prop_assert!((lhs - rhs).norm() <= 1e-12);
    }

    #[test]
    fn one_body_action_matches_qubit_operator(seed in any::<u64>(), n in 1usize..=3, ne_frac in 0.0..1.0f64) {
        let ne = ((2 * n) as f64 * ne_frac).round().max(1.0) as usize;
        let m = random_symmetric(n, seed);
        let v = random_vector(n, ne, seed.wrapping_add(7));
        let lhs = v.apply_one_body(&m).unwrap().to_statevector(24).unwrap();
        let rhs = one_body_to_pauli(&m).unwrap().apply(v.to_statevector(24).unwrap().amplitudes());
        for (a, b) in lhs.amplitudes().iter().zip(&rhs) {
            prop_assert!((a - b).norm() <= 1e-12);
        }
    }

    #[test]
    fn trotter_programs_preserve_norm(seed in any::<u64>(), tau in -3.0..3.0f64, k in 1usize..6) {
        prop_assume!(tau.abs() > 1e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 4;
        let letters = ['I', 'X', 'Y', 'Z'];
        let terms: Vec<(f64, PauliWord)> = (0..8)
            .map(|_| {
                let label: String = (0..n).map(|_| letters[rng.random_range(0..4)]).collect();
                (rng.random_range(-1.0..1.0), PauliWord::from_label(&label).unwrap())
            })
            .collect();
        let h = PauliSum::from_terms(n, terms).unwrap();
        let amps: Vec<Complex64> = (0..1 << n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let mut psi = StateVector::from_amplitudes(n, amps.iter().map(|a| a / norm).collect()).unwrap();
        build_trotter(&h, tau, k).unwrap().apply(&mut psi, 3).unwrap();
        prop_assert!((psi.norm() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn eigen_residuals_are_small(spec in fixture()) {
        let (h, _) = spec.generate();
        let (na, nb) = spec.sector();
        let basis = sector_basis(h.n_orbitals(), Sector::new(na, nb));
        let hm = dsf_core::oracle::build_ci_matrix(&h, &basis).unwrap();
        let eig = EigenSystem::solve(&h, basis).unwrap();
        let scale = hm.norm();
        for k in 0..eig.dim() {
            let v = eig.vectors.column(k);
            prop_assert!((&hm * v - v * eig.energies[k]).norm() <= 1e-9 * scale.max(1.0));
        }
    }

    #[test]
    fn oracle_spectrum_is_nonnegative(spec in fixture(), qx in -2.0..2.0f64, qy in -2.0..2.0f64, qz in -2.0..2.0f64) {
        let (h, dip) = spec.generate();
        let (na, nb) = spec.sector();
        let eig = EigenSystem::for_sector(&h, Sector::new(na, nb)).unwrap();
        let (g, _) = eig.ground_state();
        let trans = TransitionTable::new(&eig, &h, &g, &dip, None).unwrap();
        let omega: Vec<f64> = (0..200).map(|i| -5.0 + 0.05 * i as f64).collect();
        let s = exact_spectrum(&trans, &QVector::new(qx, qy, qz).unwrap(), 0.1, &omega);
        prop_assert!(s.values.iter().all(|&v| v >= 0.0));
        for a in Axis::ALL {
            prop_assert!((trans.completeness(a) - trans.moments[a.index()][a.index()]).abs() <= 1e-10);
        }
    }

    #[test]
    fn reconstruction_sum_rule_and_positivity(spec in fixture()) {
        let (h, dip) = spec.generate();
        let (na, nb) = spec.sector();
        let eig = EigenSystem::for_sector(&h, Sector::new(na, nb)).unwrap();
        let (g, _) = eig.ground_state();
        let trans = TransitionTable::new(&eig, &h, &g, &dip, None).unwrap();
        let Some((lo, width)) = suggest_window(&trans, 1e-10, 0.0) else { return Ok(()); };
        let delta = 1.2 * width.max(0.5);
        let offset = lo - 0.1 * width.max(0.5);
        let states = DipoleStates::prepare(&g, &dip, None, 24).unwrap();
        let plan = plan_run(&PlanRequest {
            eta: delta / 20.0, delta, epsilon_trunc: 1e-3, total_shots: 100, k: 4,
            omega_offset: offset, moments: states.moments, q_set: vec![],
        }).unwrap();
        let prop = propagator(&h, trans.e0, offset, plan.tau, plan.k).unwrap();
        let overlaps = evolve_overlaps(&states, &prop, plan.n_max).unwrap();
        let grid = default_grid(plan.tau, plan.eta, offset);
        for pair in Pair::ALL {
            let s = series_from_overlaps(pair, &plan, &states, &overlaps[&pair], Mode::Exact).unwrap();
            prop_assert!((s.period_integral(0) - s.moment0).abs() <= 1e-10 * s.norm_product.max(1.0));
            if pair.is_diagonal() {
                let bound = s.truncation_bound();
                prop_assert!(grid.iter().all(|&w| s.intensity_at(w) >= -bound), "{pair}");
            }
        }
    }

    #[test]
    fn allocation_sums_and_decreases(total in 0u64..100_000, eta in 0.001..0.5f64, tau in 0.05..3.0f64, n_max in 1usize..300) {
        let shots = allocate_shots(total, eta, tau, n_max);
        prop_assert_eq!(shots.len(), n_max);
        prop_assert_eq!(shots.iter().sum::<u64>(), total);
        prop_assert!(shots.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn largest_remainder_is_fair(total in 0u64..10_000, weights in proptest::collection::vec(0.0..10.0f64, 1..12)) {
        prop_assume!(weights.iter().sum::<f64>() > 0.0);
        let counts = largest_remainder(total, &weights);
        prop_assert_eq!(counts.iter().sum::<u64>(), total);
        let sum: f64 = weights.iter().sum();
        for (c, w) in counts.iter().zip(&weights) {
            prop_assert!((*c as f64 - total as f64 * w / sum).abs() < 1.0 + 1e-9);
        }
    }

    #[test]
    fn resource_totals_are_monotone_in_size_and_steps(n_a in 2usize..40, k in 1usize..8, shots in 6u64..20_000) {
        let model = CostModel::default();
        let base = table_plan(shots).unwrap();
        let r = algorithm_cost(n_a, &base, &model).unwrap();
        prop_assert!(algorithm_cost(n_a + 1, &base, &model).unwrap().algorithm_t >= r.algorithm_t);
        let mut more_k = base.clone();
        more_k.k = k + 1;
        let mut fewer_k = base.clone();
        fewer_k.k = k;
        prop_assert!(algorithm_cost(n_a, &more_k, &model).unwrap().algorithm_t >= algorithm_cost(n_a, &fewer_k, &model).unwrap().algorithm_t);
        prop_assert!(r.algorithm_t >= r.per_circuit_t);
        prop_assert!(r.algorithm_active_volume >= r.per_circuit_active_volume);
    }

    #[test]
    fn depth_and_report_serialization(n_a in 2usize..40, shots in 6u64..20_000) {
        let r = algorithm_cost(n_a, &table_plan(shots).unwrap(), &CostModel::default()).unwrap();
        prop_assert!((r.depth * r.n_q - 2.0 * r.algorithm_active_volume).abs() <= 4.0 * f64::EPSILON * r.algorithm_active_volume);
        let back = ResourceReport::from_json(&r.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, r);
    }

    #[test]
    fn circuit_cost_linear_in_time(n_a in 2usize..40, n in 1usize..200, diag in any::<bool>()) {
        let m = CostModel::default();
        let a = circuit_cost(n_a, n_a, 4, n, diag, &m).unwrap();
        let b = circuit_cost(n_a, n_a, 4, 2 * n, diag, &m).unwrap();
        prop_assert_eq!(b.evolution_t, 2.0 * a.evolution_t);
    }

    #[test]
    fn spectrum_csv_round_trips(values in proptest::collection::vec(-1e3..1e3f64, 1..50), start in -10.0..10.0f64, step in 1e-4..1.0f64) {
        let omega: Vec<f64> = (0..values.len()).map(|i| start + step * i as f64).collect();
        prop_assume!(omega.windows(2).all(|w| w[0] < w[1]));
        let s = Spectrum::new(omega, values, 0.1, SpectrumKind::Intensity(Pair::XY));
        prop_assert_eq!(Spectrum::from_csv(&s.to_csv(), s.eta, s.kind).unwrap(), s);
    }

    #[test]
    fn generated_fixtures_are_valid(n in 1usize..5, seed in any::<u64>(), kind in 0u8..3) {
        let ne = n.max(1);
        let spec = match kind {
            0 => ModelSpec::random(n, ne, seed),
            1 => ModelSpec::diagonal(n, ne, seed),
            _ => ModelSpec::core_valence(n.max(3), n.max(3), seed, 20.0),
        };
        let (h, dip) = spec.generate();
        let again = Hamiltonian::new(h.n_orbitals(), h.offset(), h.one_body().clone(), h.two_body().clone());
        prop_assert!(again.is_ok());
        for a in Axis::ALL {
            let m = dip.component(a);
            prop_assert!((m - m.transpose()).abs().max() <= 1e-12);
        }
    }
}

/// Totals must not decrease when one shot or one time point is added. Scans
/// every budget up to 20 000 and every n_max up to 200 on the reference schedule.
#[test]
fn resource_totals_are_monotone_in_shots_and_n_max() {
    let model = CostModel::default();
    let n_a = 18;
    let mut violations = Vec::new();
    let mut prev = 0.0;
    for shots in 6..=20_000u64 {
        let t = algorithm_cost(n_a, &table_plan(shots).unwrap(), &model).unwrap().algorithm_t;
        if t < prev {
            violations.push(format!("shots {}→{shots}: {:.3e}", shots - 1, (prev - t) / prev));
        }
        prev = t;
    }
    let base = table_plan(10_000).unwrap();
    let mut prev = 0.0;
    for n_max in 1..=200 {
        let mut plan = base.clone();
        plan.n_max = n_max;
        let t = algorithm_cost(n_a, &plan, &model).unwrap().algorithm_t;
        if t < prev {
            violations.push(format!("n_max {}→{n_max}: {:.3e}", n_max - 1, (prev - t) / prev));
        }
        prev = t;
    }
    println!(
        "monotonicity violations: {} in shots, {} in n_max",
        violations.iter().filter(|v| v.starts_with("shots")).count(),
        violations.iter().filter(|v| v.starts_with("n_max")).count()
    );
    assert!(violations.is_empty(), "{} violations, first: {:?}", violations.len(), &violations[..violations.len().min(5)]);
}

#[test]
fn core_valence_toy_has_a_dark_gap() {
    let spec = bundled().into_iter().find(|(n, _)| *n == "core_valence").unwrap().1;
    let (h, dip) = spec.generate();
    let (na, nb) = spec.sector();
    let eig = EigenSystem::for_sector(&h, Sector::new(na, nb)).unwrap();
    let (g, _) = eig.ground_state();
    let trans = TransitionTable::new(&eig, &h, &g, &dip, None).unwrap();
    let top = trans.amplitudes.iter().map(|p| p.iter().map(|c| c.norm_sqr()).sum::<f64>()).fold(0.0, f64::max);
    let gap = 0.5 * spec.core_gap;
    for (p, &e) in trans.amplitudes.iter().zip(&trans.excitation) {
        let w: f64 = p.iter().map(|c| c.norm_sqr()).sum();
        if e > 1e-9 && e < gap {
            assert!(w <= 1e-12 * top, "bright valence transition at {e} with weight {w}");
        }
    }
    let (lo, _) = suggest_window(&trans, 1e-10, 0.0).unwrap();
    assert!(lo > gap);
}

#[test]
fn time_reversed_program_inverts_the_step() {
    let (h, _) = ModelSpec::random(3, 3, 17).generate();
    let prog = build_trotter(&jordan_wigner(&h), 0.7, 3).unwrap();
    let forward = Propagator::new(prog.clone());
    let backward = Propagator::new(prog.time_reversed());
    let mut psi = random_vector(3, 3, 4).normalize().unwrap().0.to_statevector(24).unwrap();
    let orig = psi.clone();
    forward.apply(&mut psi, 5).unwrap();
    backward.apply(&mut psi, 5).unwrap();
    assert!((psi.inner(&orig).norm() - 1.0).abs() <= 1e-12);
}

/// Sampling contract: with `N_αβ` from the error budget for target error δ
/// and the per-time-point allocation, the maximum over ω of the pair-term
/// error should stay within δ in at least 90 of 100 seeded trials.
#[test]
fn statistical_contract() {
    let spec = bundled().into_iter().find(|(n, _)| *n == "core_valence").unwrap().1;
    let (h, dip) = spec.generate();
    let (na, nb) = spec.sector();
    let eig = EigenSystem::for_sector(&h, Sector::new(na, nb)).unwrap();
    let (g, e0) = eig.ground_state();
    let states = DipoleStates::prepare(&g, &dip, None, 24).unwrap();
    let (eta, delta, offset, target) = (0.06, 3.28, 19.0, 0.02);
    let mut plan = plan_run(&PlanRequest {
        eta,
        delta,
        epsilon_trunc: (-5f64).exp(),
        total_shots: 6,
        k: 4,
        omega_offset: offset,
        moments: states.moments,
        q_set: vec![],
    })
    .unwrap();
    let pair = Pair::XX;
    let budget = shots_for_error(pair, states.moment(pair), target, eta, PI / delta, plan.n_max).ceil() as u64;
    for p in Pair::ALL {
        plan.budgets.insert(p, if p == pair { budget } else { 0 });
    }
    let prop = propagator(&h, e0, offset, plan.tau, plan.k).unwrap();
    let overlaps = evolve_overlaps(&states, &prop, plan.n_max).unwrap();
    let exact = series_from_overlaps(pair, &plan, &states, &overlaps[&pair], Mode::Exact).unwrap();
    let grid = default_grid(plan.tau, plan.eta, offset);
    let mut within = 0;
    let mut errors = Vec::new();
    for seed in 0..100 {
        let s = series_from_overlaps(pair, &plan, &states, &overlaps[&pair], Mode::Sampled { seed }).unwrap();
        let err = grid
            .iter()
            .map(|&w| (pair.multiplicity() * (s.intensity_at(w) - exact.intensity_at(w))).abs())
            .fold(0.0, f64::max);
        errors.push(err / target);
        if err <= target {
            within += 1;
        }
    }
    errors.sort_by(f64::total_cmp);
    println!(
        "statistical contract: {within}/100 trials within δ = {target}; max-error/δ median {:.2}, 90th percentile {:.2}",
        errors[50], errors[90]
    );
    assert!(within >= 90, "{within}/100 trials within δ; median max-error/δ = {:.2}", errors[50]);
}

#[test]
fn number_operator_counts_determinants() {
    let d = Determinant::from_strings("110", "100").unwrap();
    let v = CIVector::single(3, d).unwrap().to_statevector(24).unwrap();
    let n = total_number_operator(3).apply(v.amplitudes());
    assert!((n[d.qubit_bits() as usize].re - 3.0).abs() < 1e-12);
}
