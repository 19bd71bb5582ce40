//! Subcommand implementations. Numerical work runs on the rayon pool inside
//! `dsf-core`; all file output happens here, sequentially.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use dsf_core::ci::CIVector;
use dsf_core::operator::{parse_fcidump, Axis, DipoleOperator, Fcidump, QVector};
use dsf_core::oracle::{exact_intensity, exact_spectrum, ground_state, EigenSystem, Sector, TransitionTable};
use dsf_core::pipeline::{self, Inputs, RunSettings};
use dsf_core::resources::{algorithm_cost, table_csv, uniform_plan, CostModel, TABLE_DELTA, TABLE_ETA, TABLE_K, TABLE_SHOTS};
use dsf_core::spectrum::{default_grid, isotropic_dsf, Mode, Pair, Spectrum};
use dsf_core::units::Energy;
use dsf_core::{fixtures, validation, Error};
use serde::Serialize;

use crate::config::{RunConfig, RunMode};
use crate::output::{sha256_hex, InputLedger, OutputDir};
use crate::{CliError, ResourceArgs};

/// Largest CI sector solved when the ground state is requested with `"solve"`.
pub const SOLVE_SECTOR_CAP: usize = 1_000_000;

struct Loaded {
    fcidump: Fcidump,
    dipole: DipoleOperator,
    ledger: InputLedger,
}

fn required<'a>(p: &'a Option<std::path::PathBuf>, key: &str) -> Result<&'a Path, CliError> {
    p.as_deref()
        .ok_or_else(|| CliError::config(format!("`{key}` is required")))
}

fn utf8(bytes: Vec<u8>, role: &str) -> Result<String, CliError> {
    String::from_utf8(bytes).map_err(|_| CliError::new("parse_error", format!("{role} file is not UTF-8")))
}

fn load(cfg: &RunConfig) -> Result<Loaded, CliError> {
    let mut ledger = InputLedger::default();
    let h_path = required(&cfg.paths.hamiltonian, "paths.hamiltonian")?;
    let mu_path = required(&cfg.paths.dipoles, "paths.dipoles")?;
    let h_text = utf8(ledger.read("hamiltonian", h_path)?, "hamiltonian")?;
    let mu_text = utf8(ledger.read("dipoles", mu_path)?, "dipoles")?;
    let fcidump = parse_fcidump(&h_text).map_err(|e| with_file(e, h_path))?;
    let dipole = DipoleOperator::from_json(&mu_text).map_err(|e| with_file(e, mu_path))?;
    Ok(Loaded { fcidump, dipole, ledger })
}

fn with_file(e: Error, path: &Path) -> CliError {
    CliError::new(e.kind(), format!("{}: {e}", path.display()))
}

fn sector_of(fd: &Fcidump) -> Result<Sector, CliError> {
    Ok(Sector::from_electrons(fd.n_electrons, fd.ms2)?)
}

/// Reference state from a file: an eigensystem JSON (its lowest state) or a
/// CI-vector JSONL file.
fn read_ground(ledger: &mut InputLedger, path: &Path) -> Result<CIVector, CliError> {
    let bytes = ledger.read("ground_state", path)?;
    let text = utf8(bytes, "ground_state")?;
    if let Ok(eig) = EigenSystem::from_json(&text) {
        return Ok(eig.ground_state().0);
    }
    CIVector::read_jsonl(std::io::Cursor::new(text)).map_err(|e| with_file(e, path))
}

/// Drops amplitudes below the input threshold and renormalizes.
fn prepare_ground(cfg: &RunConfig, fd: &Fcidump, ground: CIVector) -> Result<CIVector, CliError> {
    if ground.n_electrons() != fd.n_electrons {
        return Err(CliError::new(
            "invalid_input",
            format!(
                "ground state has {} electrons but the Hamiltonian declares {}",
                ground.n_electrons(),
                fd.n_electrons
            ),
        ));
    }
    if cfg.input_threshold == 0.0 {
        return Ok(ground);
    }
    Ok(ground.truncated(cfg.input_threshold).normalize()?.0)
}

fn seeds(cfg: &RunConfig) -> serde_json::Value {
    match cfg.mode {
        RunMode::Sampled => serde_json::json!({"master": cfg.seed}),
        _ => serde_json::Value::Null,
    }
}

#[derive(Serialize)]
struct Manifest<'a, Extra: Serialize> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    command: &'static str,
    config: &'a RunConfig,
    seeds: serde_json::Value,
    threads: usize,
    inputs: &'a InputLedger,
    e0: f64,
    #[serde(flatten)]
    extra: Extra,
}

fn manifest<'a, E: Serialize>(command: &'static str, cfg: &'a RunConfig, ledger: &'a InputLedger, e0: f64, extra: E) -> Manifest<'a, E> {
    Manifest {
        tool: "dsf-sim",
        version: env!("CARGO_PKG_VERSION"),
        core_version: dsf_core::VERSION,
        command,
        config: cfg,
        seeds: seeds(cfg),
        threads: rayon::current_num_threads(),
        inputs: ledger,
        e0,
        extra,
    }
}

fn write_dsf(
    out: &mut OutputDir,
    cfg: &RunConfig,
    dsf: &[Spectrum],
    parts: &BTreeMap<Pair, Spectrum>,
) -> Result<(), CliError> {
    let shift = cfg.calibration_shift.hartree();
    for (pair, s) in parts {
        out.write_spectrum(&format!("intensity_{}.csv", pair.label()), s, shift)?;
    }
    for (i, s) in dsf.iter().enumerate() {
        out.write_spectrum(&format!("dsf_q{i}.csv"), s, shift)?;
    }
    if let Some(q_norm) = cfg.isotropic_q {
        out.write_spectrum("dsf_isotropic.csv", &isotropic_dsf(q_norm, parts)?, shift)?;
    }
    Ok(())
}

pub fn spectrum(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.mode == RunMode::Oracle {
        return oracle(cfg);
    }
    let Loaded {
        fcidump,
        dipole,
        mut ledger,
    } = load(cfg)?;
    let ground = if cfg.paths.ground_state == "solve" {
        ground_state(&fcidump.hamiltonian, sector_of(&fcidump)?, SOLVE_SECTOR_CAP)?.0
    } else {
        read_ground(&mut ledger, Path::new(&cfg.paths.ground_state))?
    };
    let ground = prepare_ground(cfg, &fcidump, ground)?;
    let settings = RunSettings {
        eta: cfg.eta.hartree(),
        delta: cfg.delta_window.hartree(),
        epsilon_trunc: cfg.epsilon_trunc,
        k: cfg.trotter_k,
        shots: cfg.shots,
        mode: match cfg.mode {
            RunMode::Sampled => Mode::Sampled { seed: cfg.seed },
            _ => Mode::Exact,
        },
        q: cfg.q_vectors()?,
        cvs: cfg.cvs.clone(),
        omega_offset: cfg.omega_offset.hartree(),
        qubit_cap: cfg.qubit_cap,
    };
    let inputs = Inputs::new(fcidump.hamiltonian, dipole, ground)?;
    let run = pipeline::run(&inputs, &settings)?;

    let mut out = OutputDir::create(&cfg.out)?;
    for s in &run.series {
        out.write(&format!("greens_{}.json", s.pair.label()), (s.to_json()? + "\n").as_bytes())?;
    }
    write_dsf(&mut out, cfg, &run.dsf, &run.intensities)?;

    #[derive(Serialize)]
    struct Extra<'a> {
        settings: &'a RunSettings,
        plan: &'a dsf_core::spectrum::RunPlan,
        moments: [[f64; 3]; 3],
    }
    let extra = Extra {
        settings: &settings,
        plan: &run.plan,
        moments: run.moments,
    };
    let path = out.finish(&manifest("spectrum", cfg, &ledger, inputs.e0, extra))?;
    println!(
        "spectrum: mode {:?}, n_max {}, tau {:.6}, {} shots; {}",
        cfg.mode,
        run.plan.n_max,
        run.plan.tau,
        run.plan.total_shots,
        cfg.summary()
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn transitions_csv(trans: &TransitionTable) -> String {
    let mut s = String::from("excitation_hartree,weight_x,weight_y,weight_z\n");
    for (e, p) in trans.excitation.iter().zip(&trans.amplitudes) {
        let _ = writeln!(
            s,
            "{e:?},{:?},{:?},{:?}",
            p[Axis::X.index()].norm_sqr(),
            p[Axis::Y.index()].norm_sqr(),
            p[Axis::Z.index()].norm_sqr()
        );
    }
    s
}

pub fn oracle(cfg: &RunConfig) -> Result<(), CliError> {
    let Loaded {
        fcidump,
        dipole,
        mut ledger,
    } = load(cfg)?;
    let h = &fcidump.hamiltonian;
    let eig = EigenSystem::for_sector(h, sector_of(&fcidump)?)?;
    let ground = if cfg.paths.ground_state == "solve" {
        eig.ground_state().0
    } else {
        read_ground(&mut ledger, Path::new(&cfg.paths.ground_state))?
    };
    let ground = prepare_ground(cfg, &fcidump, ground)?;
    let trans = TransitionTable::new(&eig, h, &ground, &dipole, cfg.cvs.as_deref())?;

    let eta = cfg.eta.hartree();
    let delta = cfg.delta_window.hartree();
    if !(eta > 0.0 && delta > 0.0) {
        return Err(CliError::new("invalid_input", "eta and delta_window must be positive"));
    }
    let tau = PI / delta;
    let omega = default_grid(tau, eta, cfg.omega_offset.hartree());
    let parts: BTreeMap<Pair, Spectrum> = Pair::ALL
        .iter()
        .map(|&p| (p, exact_intensity(&trans, p, eta, &omega)))
        .collect();
    let qs: Vec<QVector> = cfg.q_vectors()?;
    let dsf: Vec<Spectrum> = qs.iter().map(|q| exact_spectrum(&trans, q, eta, &omega)).collect();

    let mut out = OutputDir::create(&cfg.out)?;
    write_dsf(&mut out, cfg, &dsf, &parts)?;
    out.write("eigensystem.json", (eig.to_json()? + "\n").as_bytes())?;
    out.write("transitions.csv", transitions_csv(&trans).as_bytes())?;

    #[derive(Serialize)]
    struct Extra {
        tau: f64,
        sector_dimension: usize,
        moments: [[f64; 3]; 3],
    }
    let extra = Extra {
        tau,
        sector_dimension: eig.dim(),
        moments: trans.moments,
    };
    let path = out.finish(&manifest("oracle", cfg, &ledger, trans.e0, extra))?;
    println!("oracle: {} states, E0 = {:.10} Ha; {}", eig.dim(), trans.e0, cfg.summary());
    println!("wrote {}", path.display());
    Ok(())
}

/// `"14..30"` (step 2) or `"14..30:1"`, inclusive.
pub fn parse_range(text: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::config(format!("cannot parse range `{text}`; expected LO..HI or LO..HI:STEP"));
    let (range, step) = match text.split_once(':') {
        Some((r, s)) => (r, s.trim().parse::<usize>().map_err(|_| bad())?),
        None => (text, 2),
    };
    let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    if step == 0 || lo == 0 || lo > hi {
        return Err(bad());
    }
    Ok((lo..=hi).step_by(step).collect())
}

fn energy_flag(v: &Option<String>, default: f64) -> Result<f64, CliError> {
    match v {
        None => Ok(default),
        Some(t) => t.parse::<Energy>().map(Energy::hartree).map_err(CliError::config),
    }
}

pub fn resources(args: &ResourceArgs) -> Result<(), CliError> {
    let model: CostModel = match &args.cost_model {
        Some(p) => serde_json::from_slice(&crate::output::read_input(p, "cost model")?)
            .map_err(|e| CliError::config(format!("{}: {e}", p.display())))?,
        None => CostModel::default(),
    };
    model.validate()?;
    let plan = uniform_plan(
        energy_flag(&args.eta, TABLE_ETA)?,
        energy_flag(&args.delta, TABLE_DELTA)?,
        args.epsilon_trunc.unwrap_or((-5f64).exp()),
        args.k.unwrap_or(TABLE_K),
        args.shots.unwrap_or(TABLE_SHOTS),
    )?;
    let n_values = match (&args.table, args.n_a) {
        (Some(t), None) => parse_range(t)?,
        (None, Some(n)) => vec![n],
        (None, None) => return Err(CliError::config("pass --table LO..HI or --n-a N")),
        (Some(_), Some(_)) => return Err(CliError::config("--table and --n-a are exclusive")),
    };
    let reports = n_values
        .iter()
        .map(|&n| algorithm_cost(n, &plan, &model))
        .collect::<dsf_core::Result<Vec<_>>>()?;
    let json = serde_json::to_string_pretty(&reports).map_err(|e| CliError::new("json_error", e.to_string()))? + "\n";
    let csv = table_csv(&reports);
    if args.table.is_some() {
        print!("{csv}");
    } else {
        print!("{json}");
    }
    if let Some(dir) = &args.out {
        let mut out = OutputDir::create(dir)?;
        out.write("resources.json", json.as_bytes())?;
        out.write("resources_table.csv", csv.as_bytes())?;
        out.finish(&serde_json::json!({
            "tool": "dsf-sim",
            "version": env!("CARGO_PKG_VERSION"),
            "core_version": dsf_core::VERSION,
            "command": "resources",
            "n_a": n_values,
            "plan": plan,
            "cost_model": model,
        }))?;
    }
    Ok(())
}

pub fn validate(out: Option<&Path>) -> Result<(), CliError> {
    let checks = validation::run_suite()?;
    for c in &checks {
        println!(
            "{} {:<16} {:<34} value {:.3e} (tolerance {:.1e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.fixture,
            c.name,
            c.value,
            c.tolerance
        );
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {} failed", checks.len(), failed);
    if let Some(dir) = out {
        let mut o = OutputDir::create(dir)?;
        let text = serde_json::to_string_pretty(&checks).map_err(|e| CliError::new("json_error", e.to_string()))? + "\n";
        o.write("validation.json", text.as_bytes())?;
    }
    if failed > 0 {
        return Err(CliError::new("validation_failed", format!("{failed} of {} checks failed", checks.len())));
    }
    Ok(())
}

pub fn gen_fixtures(dir: &Path) -> Result<(), CliError> {
    let files = fixtures::write_bundle(dir)?;
    let mut listing = Vec::new();
    for f in files {
        for p in [&f.fcidump, &f.dipoles, &f.spec] {
            let bytes = crate::output::read_input(p, "fixture")?;
            listing.push(serde_json::json!({"fixture": f.name, "path": p, "sha256": sha256_hex(&bytes)}));
        }
    }
    println!("{}", serde_json::to_string_pretty(&listing).expect("json value"));
    Ok(())
}
