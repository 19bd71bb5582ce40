//! Shot allocation, Green's-function series and spectral reconstruction.
//!
//! For a pair `(α, β)` the series holds `G̃(nτ) = X_n + iY_n` with
//! `G̃(t) = ⟨Ψ0|μ_α e^{−i(H − E0 − ω_off)t} μ_β|Ψ0⟩`, and
//!
//! ```text
//! I(ω) = τ/2π · ( m0 + 2 Σ_{n=1}^{n_max} [X_n cos(nτω') − Y_n sin(nτω')] e^{−nητ} ),  ω' = ω − ω_off
//! ```
//!
//! is the Lorentzian-broadened spectral measure, periodically continued with
//! period `2π/τ`. The window offset `ω_off` lets a window of width `Δ = π/τ`
//! start at a core edge instead of at zero.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ci::CIVector;
use crate::emulator::{outcome_from_overlap, sample_outcome, Propagator, StateVector, Which};
use crate::operator::{Axis, DipoleOperator, QVector};
use crate::rng::derive_seed;
use crate::units::hartree_to_ev;
use crate::{Error, Result};

/// Unordered dipole pair with `α ≥ β` in the x < y < z order of the labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pair {
    XX,
    XY,
    XZ,
    YY,
    YZ,
    ZZ,
}

impl Pair {
    pub const ALL: [Pair; 6] = [Pair::XX, Pair::XY, Pair::XZ, Pair::YY, Pair::YZ, Pair::ZZ];
    pub const DIAGONAL: [Pair; 3] = [Pair::XX, Pair::YY, Pair::ZZ];

    pub fn new(a: Axis, b: Axis) -> Pair {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        match (a, b) {
            (Axis::X, Axis::X) => Pair::XX,
            (Axis::X, Axis::Y) => Pair::XY,
            (Axis::X, Axis::Z) => Pair::XZ,
            (Axis::Y, Axis::Y) => Pair::YY,
            (Axis::Y, Axis::Z) => Pair::YZ,
            _ => Pair::ZZ,
        }
    }

    /// Bra-side component `α`.
    pub fn alpha(self) -> Axis {
        match self {
            Pair::XX | Pair::XY | Pair::XZ => Axis::X,
            Pair::YY | Pair::YZ => Axis::Y,
            Pair::ZZ => Axis::Z,
        }
    }

    /// Ket-side component `β`.
    pub fn beta(self) -> Axis {
        match self {
            Pair::XX => Axis::X,
            Pair::XY | Pair::YY => Axis::Y,
            Pair::XZ | Pair::YZ | Pair::ZZ => Axis::Z,
        }
    }

    pub fn index(self) -> u64 {
        self as u64
    }

    pub fn is_diagonal(self) -> bool {
        self.alpha() == self.beta()
    }

    /// `2 − δ_αβ`.
    pub fn multiplicity(self) -> f64 {
        if self.is_diagonal() {
            1.0
        } else {
            2.0
        }
    }

    pub fn label(self) -> String {
        format!("{}{}", self.alpha(), self.beta())
    }

    pub fn from_label(s: &str) -> Result<Pair> {
        let mut c = s.chars();
        match (c.next().and_then(Axis::from_letter), c.next().and_then(Axis::from_letter), c.next()) {
            (Some(a), Some(b), None) => Ok(Pair::new(a, b)),
            _ => Err(Error::Invalid(format!("unknown dipole pair `{s}`"))),
        }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Normalized Lorentzian `(η/π)/(x² + η²)`.
#[inline]
pub fn lorentzian(x: f64, eta: f64) -> f64 {
    eta / PI / (x * x + eta * eta)
}

/// Truncation order `max(1, round(ln(1/ε)/(ητ)))`.
pub fn n_max_for(eta: f64, tau: f64, epsilon_trunc: f64) -> usize {
    ((1.0 / epsilon_trunc).ln() / (eta * tau)).round().max(1.0) as usize
}

/// Rounds `total · w_i/Σw` to integers summing to `total`; leftover units go
/// to the largest fractional parts, ties to the lower index.
pub fn largest_remainder(total: u64, weights: &[f64]) -> Vec<u64> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut counts: Vec<u64> = exact.iter().map(|e| e.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(total.saturating_sub(assigned) as usize) {
        counts[i] += 1;
    }
    counts
}

/// Shots per time point `n = 1..n_max` (index `n − 1`), `∝ e^{−nητ}`.
pub fn allocate_shots(n_pair: u64, eta: f64, tau: f64, n_max: usize) -> Vec<u64> {
    let weights: Vec<f64> = (1..=n_max).map(|n| (-(n as f64) * eta * tau).exp()).collect();
    largest_remainder(n_pair, &weights)
}

/// Real/imaginary split of one time point's shots; the odd shot goes to the real part.
pub fn split_re_im(shots: u64) -> (u64, u64) {
    (shots.div_ceil(2), shots / 2)
}

/// `Σ_{n=1}^{n_max} e^{−nητ}`.
pub fn damping_sum(eta: f64, tau: f64, n_max: usize) -> f64 {
    (1..=n_max).map(|n| (-(n as f64) * eta * tau).exp()).sum()
}

/// Shots needed to bound the error of one pair term by `delta`:
/// `τ²(2−δ_αβ)²⟨μ_αμ_β⟩²/(4π²δ²) · (Σ_n e^{−nητ})²`.
pub fn shots_for_error(pair: Pair, moment: f64, delta: f64, eta: f64, tau: f64, n_max: usize) -> f64 {
    let z = damping_sum(eta, tau, n_max);
    (tau * pair.multiplicity() * moment * z).powi(2) / (4.0 * PI * PI * delta * delta)
}

/// Inverse of [`shots_for_error`].
pub fn error_for_shots(pair: Pair, moment: f64, shots: f64, eta: f64, tau: f64, n_max: usize) -> f64 {
    let z = damping_sum(eta, tau, n_max);
    tau * pair.multiplicity() * moment.abs() * z / (2.0 * PI * shots.sqrt())
}

/// Inputs to [`plan_run`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub eta: f64,
    pub delta: f64,
    pub epsilon_trunc: f64,
    pub total_shots: u64,
    pub k: usize,
    pub omega_offset: f64,
    /// `⟨Ψ0|μ_α μ_β|Ψ0⟩`.
    pub moments: [[f64; 3]; 3],
    pub q_set: Vec<QVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    pub tau: f64,
    pub eta: f64,
    pub delta: f64,
    pub n_max: usize,
    pub k: usize,
    pub total_shots: u64,
    pub budgets: BTreeMap<Pair, u64>,
    pub epsilon_trunc: f64,
    #[serde(default)]
    pub omega_offset: f64,
}

impl RunPlan {
    pub fn budget(&self, pair: Pair) -> u64 {
        self.budgets.get(&pair).copied().unwrap_or(0)
    }

    /// Shots per `n` for one pair.
    pub fn shots(&self, pair: Pair) -> Vec<u64> {
        allocate_shots(self.budget(pair), self.eta, self.tau, self.n_max)
    }
}

/// Pair weights `max_q |q_α q_β| · (2 − δ_αβ) · |⟨μ_αμ_β⟩|`; the q factor is
/// dropped when every q in the set gives zero weight.
pub fn pair_weights(moments: &[[f64; 3]; 3], q_set: &[QVector]) -> Vec<f64> {
    let weight = |pair: Pair, with_q: bool| {
        let m = moments[pair.alpha().index()][pair.beta().index()].abs();
        let qf = if with_q {
            q_set
                .iter()
                .map(|q| (q.component(pair.alpha()) * q.component(pair.beta())).abs())
                .fold(0.0, f64::max)
        } else {
            1.0
        };
        qf * pair.multiplicity() * m
    };
    let with_q: Vec<f64> = Pair::ALL.iter().map(|&p| weight(p, !q_set.is_empty())).collect();
    if with_q.iter().any(|&w| w > 0.0) {
        with_q
    } else {
        Pair::ALL.iter().map(|&p| weight(p, false)).collect()
    }
}

pub fn plan_run(req: &PlanRequest) -> Result<RunPlan> {
    if !(req.delta > 0.0 && req.eta > 0.0) {
        return Err(Error::Invalid("Δ and η must be positive".into()));
    }
    if !(req.epsilon_trunc > 0.0 && req.epsilon_trunc < 1.0) {
        return Err(Error::Invalid("ε_trunc must lie in (0, 1)".into()));
    }
    if req.total_shots < 6 {
        return Err(Error::Invalid(format!("total shot budget {} is below 6", req.total_shots)));
    }
    if req.k == 0 {
        return Err(Error::Invalid("Trotter steps k must be at least 1".into()));
    }
    let tau = PI / req.delta;
    let n_max = n_max_for(req.eta, tau, req.epsilon_trunc);
    let weights = pair_weights(&req.moments, &req.q_set);
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::NoDipoleIntensity);
    }
    let counts = largest_remainder(req.total_shots, &weights);
    Ok(RunPlan {
        tau,
        eta: req.eta,
        delta: req.delta,
        n_max,
        k: req.k,
        total_shots: req.total_shots,
        budgets: Pair::ALL.iter().copied().zip(counts).collect(),
        epsilon_trunc: req.epsilon_trunc,
        omega_offset: req.omega_offset,
    })
}

/// Time series of one pair; `entries[n−1] = (n, X_n, Y_n, shots_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreensSeries {
    pub pair: Pair,
    pub tau: f64,
    pub eta: f64,
    pub n_max: usize,
    pub norm_product: f64,
    pub moment0: f64,
    #[serde(default)]
    pub omega_offset: f64,
    pub exact: bool,
    pub entries: Vec<(usize, f64, f64, u64)>,
}

impl GreensSeries {
    pub fn x(&self, n: usize) -> f64 {
        if n == 0 {
            self.moment0
        } else {
            self.entries[n - 1].1
        }
    }

    pub fn y(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.entries[n - 1].2
        }
    }

    /// Reconstructed contribution at energy `omega` (relative to E0).
    pub fn intensity_at(&self, omega: f64) -> f64 {
        let w = omega - self.omega_offset;
        let r = (-self.eta * self.tau).exp();
        let mut damp = 1.0;
        let mut acc = 0.0;
        for &(n, x, y, _) in &self.entries {
            damp *= r;
            let (s, c) = (n as f64 * self.tau * w).sin_cos();
            acc += (x * c - y * s) * damp;
        }
        self.tau / (2.0 * PI) * (self.moment0 + 2.0 * acc)
    }

    pub fn reconstruct(&self, omega: &[f64]) -> Spectrum {
        let values = omega.par_iter().map(|&w| self.intensity_at(w)).collect();
        Spectrum::new(omega.to_vec(), values, self.eta, SpectrumKind::Intensity(self.pair))
    }

    /// Bound on the neglected tail: `τ/π · ‖μ_α‖‖μ_β‖ · e^{−(n_max+1)ητ}/(1 − e^{−ητ})`.
    pub fn truncation_bound(&self) -> f64 {
        let r = (-self.eta * self.tau).exp();
        self.tau / PI * self.norm_product * r.powi(self.n_max as i32 + 1) / (1.0 - r)
    }

    /// `∫ I dω` over one period `2π/τ`, by the periodic rectangle rule (exact
    /// for trigonometric polynomials of degree below `points`).
    pub fn period_integral(&self, points: usize) -> f64 {
        let points = points.max(2 * self.n_max + 2);
        let h = 2.0 * PI / self.tau / points as f64;
        (0..points).map(|j| self.intensity_at(self.omega_offset + j as f64 * h)).sum::<f64>() * h
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: GreensSeries = serde_json::from_str(text)?;
        if s.entries.len() != s.n_max || s.entries.iter().enumerate().any(|(i, e)| e.0 != i + 1) {
            return Err(Error::Invalid("series entries must cover n = 1..n_max in order".into()));
        }
        Ok(s)
    }
}

/// `(reconstruct_intensity)` Evaluates a series on a grid.
pub fn reconstruct_intensity(series: &GreensSeries, omega: &[f64]) -> Spectrum {
    series.reconstruct(omega)
}

/// Normalized dipole-rotated states `μ_α|Ψ0⟩/‖μ_α|Ψ0⟩‖` and their moments.
#[derive(Debug, Clone)]
pub struct DipoleStates {
    /// `None` when the component annihilates the state (or its CVS projection is empty).
    pub states: [Option<StateVector>; 3],
    pub norms: [f64; 3],
    pub moments: [[f64; 3]; 3],
}

impl DipoleStates {
    pub fn prepare(ground: &CIVector, dipole: &DipoleOperator, cvs: Option<&[usize]>, qubit_cap: usize) -> Result<Self> {
        let mut vecs = Vec::with_capacity(3);
        for axis in Axis::ALL {
            let mut v = ground.apply_one_body(dipole.component(axis))?;
            if let Some(core) = cvs {
                v = match v.cvs_project(core) {
                    Ok(p) => p,
                    Err(Error::CvsAnnihilatedState) => CIVector::empty(v.n_orbitals(), v.n_electrons()),
                    Err(e) => return Err(e),
                };
            }
            vecs.push(v);
        }
        let mut moments = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                moments[a][b] = vecs[a].inner(&vecs[b]).re;
            }
        }
        let mut states: [Option<StateVector>; 3] = [None, None, None];
        let mut norms = [0.0; 3];
        for (a, v) in vecs.iter().enumerate() {
            match v.normalize() {
                Ok((u, n)) => {
                    states[a] = Some(u.to_statevector(qubit_cap)?);
                    norms[a] = n;
                }
                Err(Error::DipoleAnnihilatesState) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(DipoleStates { states, norms, moments })
    }

    pub fn moment(&self, pair: Pair) -> f64 {
        self.moments[pair.alpha().index()][pair.beta().index()]
    }

    pub fn norm_product(&self, pair: Pair) -> f64 {
        self.norms[pair.alpha().index()] * self.norms[pair.beta().index()]
    }
}

/// Normalized overlaps `⟨b_α|U^n|a_β⟩` for `n = 1..n_max` and every pair,
/// from one incremental evolution per ket component. `backward` uses `U^{−n}`
/// when the propagator was built from a time-reversed program.
pub fn evolve_overlaps(states: &DipoleStates, prop: &Propagator, n_max: usize) -> Result<BTreeMap<Pair, Vec<Complex64>>> {
    let kets: Vec<Axis> = Axis::ALL.into_iter().filter(|a| states.states[a.index()].is_some()).collect();
    let evolved: Vec<(Axis, Vec<[Complex64; 3]>)> = kets
        .par_iter()
        .map(|&b| {
            let mut psi = states.states[b.index()].clone().expect("filtered");
            let mut out = Vec::with_capacity(n_max);
            for _ in 0..n_max {
                prop.apply(&mut psi, 1)?;
                let mut row = [Complex64::new(0.0, 0.0); 3];
                for a in Axis::ALL {
                    if let Some(bra) = &states.states[a.index()] {
                        row[a.index()] = bra.inner(&psi);
                    }
                }
                out.push(row);
            }
            Ok((b, out))
        })
        .collect::<Result<_>>()?;
    let mut map = BTreeMap::new();
    for pair in Pair::ALL {
        let values = evolved
            .iter()
            .find(|(b, _)| *b == pair.beta())
            .map(|(_, rows)| rows.iter().map(|r| r[pair.alpha().index()]).collect())
            .unwrap_or_else(|| vec![Complex64::new(0.0, 0.0); n_max]);
        map.insert(pair, values);
    }
    Ok(map)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum Mode {
    /// Infinite shots: estimates equal the exact ancilla bias.
    Exact,
    /// Seeded shot sampling with the plan's allocation.
    Sampled { seed: u64 },
}

/// Builds one series from precomputed normalized overlaps.
pub fn series_from_overlaps(pair: Pair, plan: &RunPlan, states: &DipoleStates, overlaps: &[Complex64], mode: Mode) -> Result<GreensSeries> {
    let np = states.norm_product(pair);
    let shots = plan.shots(pair);
    let entries = (1..=plan.n_max)
        .into_par_iter()
        .map(|n| {
            let g = overlaps[n - 1];
            let (x, y, s) = match mode {
                Mode::Exact => (
                    np * outcome_from_overlap(g, Which::Real).value,
                    np * outcome_from_overlap(g, Which::Imag).value,
                    0,
                ),
                Mode::Sampled { seed } => {
                    let (re_shots, im_shots) = split_re_im(shots[n - 1]);
                    let est = |which: Which, count: u64| -> Result<f64> {
                        if count == 0 || np == 0.0 {
                            return Ok(0.0);
                        }
                        let v = outcome_from_overlap(g, which).value;
                        sample_outcome(v, count, derive_seed(seed, &[pair.index(), n as u64, which.index()]))
                    };
                    (np * est(Which::Real, re_shots)?, np * est(Which::Imag, im_shots)?, shots[n - 1])
                }
            };
            Ok((n, x, y, s))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GreensSeries {
        pair,
        tau: plan.tau,
        eta: plan.eta,
        n_max: plan.n_max,
        norm_product: np,
        moment0: states.moment(pair),
        omega_offset: plan.omega_offset,
        exact: mode == Mode::Exact,
        entries,
    })
}

/// Measures a single pair.
pub fn measure_series(pair: Pair, plan: &RunPlan, states: &DipoleStates, prop: &Propagator, mode: Mode) -> Result<GreensSeries> {
    let overlaps = match &states.states[pair.beta().index()] {
        None => vec![Complex64::new(0.0, 0.0); plan.n_max],
        Some(ket) => {
            let mut psi = ket.clone();
            let bra = states.states[pair.alpha().index()].as_ref();
            let mut out = Vec::with_capacity(plan.n_max);
            for _ in 0..plan.n_max {
                prop.apply(&mut psi, 1)?;
                out.push(bra.map_or(Complex64::new(0.0, 0.0), |b| b.inner(&psi)));
            }
            out
        }
    };
    series_from_overlaps(pair, plan, states, &overlaps, mode)
}

/// Measures all six pairs, in [`Pair::ALL`] order.
pub fn measure_all(plan: &RunPlan, states: &DipoleStates, prop: &Propagator, mode: Mode) -> Result<Vec<GreensSeries>> {
    let overlaps = evolve_overlaps(states, prop, plan.n_max)?;
    Pair::ALL
        .iter()
        .map(|&p| series_from_overlaps(p, plan, states, &overlaps[&p], mode))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SpectrumKind {
    Intensity(Pair),
    Dsf(QVector),
    Isotropic { q_norm: f64 },
    CrossSection { k_i: f64, k_f: f64, q_norm: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub omega: Vec<f64>,
    pub values: Vec<f64>,
    pub eta: f64,
    pub kind: SpectrumKind,
}

impl Spectrum {
    pub fn new(omega: Vec<f64>, values: Vec<f64>, eta: f64, kind: SpectrumKind) -> Self {
        debug_assert_eq!(omega.len(), values.len());
        Spectrum { omega, values, eta, kind }
    }

    pub fn validate(&self) -> Result<()> {
        if self.omega.len() != self.values.len() {
            return Err(Error::Dimension {
                expected: self.omega.len(),
                found: self.values.len(),
            });
        }
        if self.omega.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Invalid("ω grid is not strictly increasing".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("spectrum has non-finite values".into()));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `omega_hartree,omega_ev,value` with shortest round-trip float formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega_hartree,omega_ev,value\n");
        for (w, v) in self.omega.iter().zip(&self.values) {
            let _ = writeln!(out, "{w},{},{v}", hartree_to_ev(*w));
        }
        out
    }

    pub fn from_csv(text: &str, eta: f64, kind: SpectrumKind) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "omega_hartree,omega_ev,value" => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: "expected header omega_hartree,omega_ev,value".into(),
                })
            }
        }
        let (mut omega, mut values) = (Vec::new(), Vec::new());
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })
            };
            if cols.len() != 3 {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "expected three columns".into(),
                });
            }
            omega.push(parse(cols[0])?);
            values.push(parse(cols[2])?);
        }
        let s = Spectrum::new(omega, values, eta, kind);
        s.validate()?;
        Ok(s)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Indices of interior local maxima with value above `fraction · max`.
    pub fn local_maxima(&self, fraction: f64) -> Vec<usize> {
        let top = self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (1..self.values.len().saturating_sub(1))
            .filter(|&i| {
                let v = self.values[i];
                v > self.values[i - 1] && v >= self.values[i + 1] && v > fraction * top
            })
            .collect()
    }
}

/// Grid with step `η/5` over `[ω_off, ω_off + π/τ)`.
pub fn default_grid(tau: f64, eta: f64, omega_offset: f64) -> Vec<f64> {
    let step = eta / 5.0;
    let width = PI / tau;
    let count = (width / step).ceil() as usize;
    (0..count)
        .map(|i| omega_offset + i as f64 * step)
        .filter(|&w| w < omega_offset + width)
        .collect()
}

/// Per-pair reconstructed contributions keyed by pair.
pub fn contributions(series: &[GreensSeries], omega: &[f64]) -> BTreeMap<Pair, Spectrum> {
    series.iter().map(|s| (s.pair, s.reconstruct(omega))).collect()
}

fn same_grid(a: &Spectrum, b: &Spectrum) -> Result<()> {
    if a.omega != b.omega {
        return Err(Error::Invalid("contributions use different ω grids".into()));
    }
    Ok(())
}

/// `S(q, ω) = Σ_{α≥β} q_α q_β (2 − δ_αβ) · contribution_αβ(ω)`.
pub fn assemble_dsf(q: &QVector, parts: &BTreeMap<Pair, Spectrum>) -> Result<Spectrum> {
    let first = parts.get(&Pair::XX).ok_or_else(|| Error::MissingPair("xx".into()))?;
    let mut values = vec![0.0; first.omega.len()];
    for pair in Pair::ALL {
        let c = parts.get(&pair).ok_or_else(|| Error::MissingPair(pair.label()))?;
        same_grid(first, c)?;
        let w = q.component(pair.alpha()) * q.component(pair.beta()) * pair.multiplicity();
        for (v, x) in values.iter_mut().zip(&c.values) {
            *v += w * x;
        }
    }
    Ok(Spectrum::new(first.omega.clone(), values, first.eta, SpectrumKind::Dsf(*q)))
}

/// `S_iso = (|q|²/3) Σ_α I_αα(ω)` (proportionality constant 1).
pub fn isotropic_dsf(q_norm: f64, parts: &BTreeMap<Pair, Spectrum>) -> Result<Spectrum> {
    let first = parts.get(&Pair::XX).ok_or_else(|| Error::MissingPair("xx".into()))?;
    let mut values = vec![0.0; first.omega.len()];
    for pair in Pair::DIAGONAL {
        let c = parts.get(&pair).ok_or_else(|| Error::MissingPair(pair.label()))?;
        same_grid(first, c)?;
        for (v, x) in values.iter_mut().zip(&c.values) {
            *v += q_norm * q_norm / 3.0 * x;
        }
    }
    Ok(Spectrum::new(first.omega.clone(), values, first.eta, SpectrumKind::Isotropic { q_norm }))
}

/// `(4/|q|⁴)(|k_F|/|k_I|) S(q, ω)`.
pub fn cross_section(dsf: &Spectrum, k_i: f64, k_f: f64, q_norm: f64) -> Result<Spectrum> {
    if q_norm == 0.0 {
        return Err(Error::ZeroMomentum);
    }
    if !(k_i > 0.0 && k_f >= 0.0) {
        return Err(Error::Invalid("|k_I| must be positive and |k_F| nonnegative".into()));
    }
    let f = 4.0 / q_norm.powi(4) * (k_f / k_i);
    Ok(Spectrum::new(
        dsf.omega.clone(),
        dsf.values.iter().map(|v| f * v).collect(),
        dsf.eta,
        SpectrumKind::CrossSection { k_i, k_f, q_norm },
    ))
}

/// Maximizes `f` on `[lo, hi]` by golden-section search.
pub fn refine_peak(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_series(pair: Pair, m: f64, n_max: usize) -> GreensSeries {
        GreensSeries {
            pair,
            tau: 0.5,
            eta: 0.1,
            n_max,
            norm_product: m,
            moment0: m,
            omega_offset: 0.0,
            exact: true,
            entries: (1..=n_max).map(|n| (n, 0.0, 0.0, 0)).collect(),
        }
    }

    /// Exact series of a single transition at `e` with weight `w`.
    fn single_level(e: f64, w: f64, tau: f64, eta: f64, n_max: usize) -> GreensSeries {
        GreensSeries {
            pair: Pair::XX,
            tau,
            eta,
            n_max,
            norm_product: w,
            moment0: w,
            omega_offset: 0.0,
            exact: true,
            entries: (1..=n_max)
                .map(|n| {
                    let g = Complex64::from_polar(w, -e * n as f64 * tau);
                    (n, g.re, g.im, 0)
                })
                .collect(),
        }
    }

    #[test]
    fn pair_labels_round_trip() {
        for p in Pair::ALL {
            assert_eq!(Pair::from_label(&p.label()).unwrap(), p);
            assert_eq!(serde_json::to_string(&p).unwrap(), format!("\"{}\"", p.label()));
        }
        assert_eq!(Pair::from_label("yx").unwrap(), Pair::XY);
        assert!(Pair::from_label("xw").is_err());
    }

    #[test]
    fn paper_parameters() {
        let req = PlanRequest {
            eta: 0.06,
            delta: 3.28,
            epsilon_trunc: (-5f64).exp(),
            total_shots: 10_000,
            k: 4,
            omega_offset: 0.0,
            moments: [[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
            q_set: vec![],
        };
        let plan = plan_run(&req).unwrap();
        assert_eq!(plan.tau, PI / 3.28);
        assert!((plan.tau - 0.9578).abs() < 1e-4);
        assert_eq!(plan.n_max, 87);
        assert_eq!(plan.budget(Pair::XX), 10_000);
    }

    #[test]
    fn budgets_follow_weights() {
        let mut moments = [[0.0; 3]; 3];
        moments[0][0] = 3.0;
        moments[1][1] = 1.0;
        let req = PlanRequest {
            eta: 0.1,
            delta: 2.0,
            epsilon_trunc: 1e-3,
            total_shots: 100,
            k: 1,
            omega_offset: 0.0,
            moments,
            q_set: vec![QVector::new(1.0, 1.0, 1.0).unwrap()],
        };
        let plan = plan_run(&req).unwrap();
        assert_eq!(plan.budget(Pair::XX), 75);
        assert_eq!(plan.budget(Pair::YY), 25);
        assert_eq!(plan.budgets.values().sum::<u64>(), 100);
        let none = PlanRequest { moments: [[0.0; 3]; 3], ..req };
        assert!(matches!(plan_run(&none), Err(Error::NoDipoleIntensity)));
    }

    #[test]
    fn allocation_examples() {
        let flat = allocate_shots(100, 0.0, 1.0, 7);
        assert_eq!(flat.iter().sum::<u64>(), 100);
        assert!(flat.iter().max().unwrap() - flat.iter().min().unwrap() <= 1);
        let shots = allocate_shots(10_000, 0.0575, 1.0, 87);
        assert_eq!(shots.iter().sum::<u64>(), 10_000);
        let exact_ratio = (0.0575f64 * 86.0).exp();
        assert!((exact_ratio / 140.6 - 1.0).abs() < 2e-3);
        let ratio = shots[0] as f64 / shots[86] as f64;
        // Rounding perturbs the smallest bin (≈ 2 shots) by up to one shot.
        assert!(ratio > exact_ratio / 2.0 && ratio < exact_ratio * 2.0, "{ratio}");
        assert!(shots.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(split_re_im(7), (4, 3));
    }

    #[test]
    fn flat_and_lorentzian_reconstruction() {
        let s = flat_series(Pair::XX, 2.0, 10);
        assert!((s.intensity_at(0.37) - 0.5 * 2.0 / (2.0 * PI)).abs() < 1e-15);
        let (tau, eta, n_max, e) = (0.4, 0.05, 200, 1.7);
        let s = single_level(e, 0.8, tau, eta, n_max);
        let r: f64 = (-eta * tau).exp();
        let closed = tau * 0.8 * (1.0 + 2.0 * (1..=n_max).map(|n| r.powi(n as i32)).sum::<f64>()) / (2.0 * PI);
        let geometric = tau * 0.8 * (1.0 + 2.0 * r * (1.0 - r.powi(n_max as i32)) / (1.0 - r)) / (2.0 * PI);
        assert!((s.intensity_at(e) - closed).abs() < 1e-10);
        assert!((closed - geometric).abs() < 1e-10);
        // Half maximum near ±η (exact for the periodic Lorentzian as η·τ → 0).
        let half = s.intensity_at(e + eta) / s.intensity_at(e);
        assert!((half - 0.5).abs() < 0.01);
    }

    #[test]
    fn sum_rule_and_positivity() {
        let s = single_level(1.1, 0.6, 0.5, 0.08, 60);
        assert!((s.period_integral(0) - 0.6).abs() < 1e-12);
        let grid = default_grid(s.tau, s.eta, 0.0);
        let bound = s.truncation_bound();
        assert!(grid.iter().all(|&w| s.intensity_at(w) >= -bound));
    }

    #[test]
    fn default_grid_covers_window() {
        let g = default_grid(PI / 2.0, 0.1, 5.0);
        assert_eq!(g[0], 5.0);
        assert!((g[1] - g[0] - 0.02).abs() < 1e-15);
        assert!(*g.last().unwrap() < 7.0);
        assert_eq!(g.len(), 100);
    }

    fn parts(omega: &[f64]) -> BTreeMap<Pair, Spectrum> {
        Pair::ALL
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let vals = omega.iter().map(|w| (i as f64 + 1.0) * (w * (i as f64 + 1.0)).cos()).collect();
                (p, Spectrum::new(omega.to_vec(), vals, 0.1, SpectrumKind::Intensity(p)))
            })
            .collect()
    }

    #[test]
    fn dsf_assembly_identities() {
        let omega: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let p = parts(&omega);
        let zero = assemble_dsf(&QVector::new(0.0, 0.0, 0.0).unwrap(), &p).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
        let xx = assemble_dsf(&QVector::new(1.0, 0.0, 0.0).unwrap(), &p).unwrap();
        assert_eq!(xx.values, p[&Pair::XX].values);
        // Isotropic average equals the mean over ±|q| along each axis.
        let qn = 1.7;
        let iso = isotropic_dsf(qn, &p).unwrap();
        let mut avg = vec![0.0; omega.len()];
        for axis in Axis::ALL {
            for sign in [1.0, -1.0] {
                let mut c = [0.0; 3];
                c[axis.index()] = sign * qn;
                let s = assemble_dsf(&QVector::new(c[0], c[1], c[2]).unwrap(), &p).unwrap();
                for (a, v) in avg.iter_mut().zip(&s.values) {
                    *a += v / 6.0;
                }
            }
        }
        for (a, b) in avg.iter().zip(&iso.values) {
            assert!((a - b).abs() < 1e-12);
        }
        let iso2 = isotropic_dsf(2.0 * qn, &p).unwrap();
        for (a, b) in iso2.values.iter().zip(&iso.values) {
            assert!((a - 4.0 * b).abs() < 1e-12);
        }
        let mut missing = p.clone();
        missing.remove(&Pair::YZ);
        assert!(matches!(assemble_dsf(&QVector::new(1.0, 1.0, 1.0).unwrap(), &missing), Err(Error::MissingPair(_))));
    }

    #[test]
    fn cross_section_scaling() {
        let omega = vec![0.0, 1.0];
        let s = Spectrum::new(omega, vec![1.0, 2.0], 0.1, SpectrumKind::Isotropic { q_norm: 1.0 });
        let c = cross_section(&s, 3.0, 3.0, 2f64.sqrt()).unwrap();
        assert!((c.values[1] - 2.0).abs() < 1e-12);
        let half = cross_section(&s, 3.0, 3.0, 2.0 * 2f64.sqrt()).unwrap();
        assert!((half.values[1] - 2.0 / 16.0).abs() < 1e-12);
        assert!(matches!(cross_section(&s, 1.0, 1.0, 0.0), Err(Error::ZeroMomentum)));
    }

    #[test]
    fn csv_round_trip() {
        let s = single_level(0.7, 1.0, 0.5, 0.1, 30).reconstruct(&default_grid(0.5, 0.1, 0.0));
        let back = Spectrum::from_csv(&s.to_csv(), s.eta, s.kind).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn series_json_round_trip() {
        let s = single_level(0.7, 1.0, 0.5, 0.1, 5);
        let text = s.to_json().unwrap();
        assert!(text.contains("\"pair\": \"xx\""));
        assert_eq!(GreensSeries::from_json(&text).unwrap(), s);
    }

    #[test]
    fn golden_section_finds_maximum() {
        let x = refine_peak(|x| -(x - 0.3).powi(2), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
    }
}
