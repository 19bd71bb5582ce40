//! Run configuration: one JSON document, every field overridable by a flag
//! of the same dotted name.

use std::path::PathBuf;

use dsf_core::operator::QVector;
use dsf_core::units::{hartree_to_ev, Energy};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub hamiltonian: Option<PathBuf>,
    pub dipoles: Option<PathBuf>,
    /// `"solve"`, a CI-vector JSONL file or an eigensystem JSON file.
    pub ground_state: String,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            hamiltonian: None,
            dipoles: None,
            ground_state: "solve".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Sampled,
    Exact,
    Oracle,
}

/// Energy accepted as a bare Hartree number or a unit-tagged string (`"1.6eV"`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyValue(pub Energy);

impl EnergyValue {
    pub fn ha(v: f64) -> Self {
        EnergyValue(Energy::Hartree(v))
    }

    pub fn hartree(self) -> f64 {
        self.0.hartree()
    }
}

impl Serialize for EnergyValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Energy::Hartree(v) => s.serialize_f64(v),
            // `{:?}` prints the shortest round-tripping decimal.
            Energy::Ev(v) => s.serialize_str(&format!("{v:?}eV")),
        }
    }
}

impl<'de> Deserialize<'de> for EnergyValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(EnergyValue::ha(v)),
            Raw::Text(t) => t.parse().map(EnergyValue).map_err(serde::de::Error::custom),
        }
    }
}

/// `"x,y,z"` or `[x, y, z]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QSpec {
    Components([f64; 3]),
    Text(String),
}

impl QSpec {
    pub fn vector(&self) -> dsf_core::Result<QVector> {
        match self {
            QSpec::Components([x, y, z]) => QVector::new(*x, *y, *z),
            QSpec::Text(t) => t.parse(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub mode: RunMode,
    pub eta: EnergyValue,
    /// Window width Δ; also fixes τ = π/Δ.
    pub delta_window: EnergyValue,
    /// Lower edge of the window, relative to E0.
    pub omega_offset: EnergyValue,
    pub epsilon_trunc: f64,
    pub trotter_k: usize,
    pub shots: u64,
    pub seed: u64,
    pub q: Vec<QSpec>,
    /// Core orbitals for the core-valence projection.
    pub cvs: Option<Vec<usize>>,
    /// Also write the orientation average at this |q|.
    pub isotropic_q: Option<f64>,
    /// Added to the ω columns of written spectra, e.g. to align with a measured edge.
    pub calibration_shift: EnergyValue,
    /// Reference-state amplitudes below this magnitude are dropped before use.
    pub input_threshold: f64,
    pub qubit_cap: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            paths: Paths::default(),
            mode: RunMode::Sampled,
            eta: EnergyValue::ha(0.06),
            delta_window: EnergyValue::ha(3.28),
            omega_offset: EnergyValue::ha(0.0),
            epsilon_trunc: (-5f64).exp(),
            trotter_k: 4,
            shots: 10_000,
            seed: 0,
            q: vec![QSpec::Text("1,1,1".into())],
            cvs: None,
            isotropic_q: None,
            calibration_shift: EnergyValue::ha(0.0),
            input_threshold: 1e-3,
            qubit_cap: dsf_core::ci::DEFAULT_QUBIT_CAP,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Merges `base` (a config document, or a run manifest carrying one under
    /// `"config"`) with dotted-name overrides applied in order.
    pub fn resolve(base: Option<Value>, overrides: &[(String, Value)]) -> Result<RunConfig, CliError> {
        let mut doc = match base {
            None => Value::Object(Map::new()),
            Some(Value::Object(mut m)) => match m.remove("config") {
                Some(inner @ Value::Object(_)) if m.get("tool").and_then(Value::as_str) == Some("dsf-sim") => inner,
                Some(other) => {
                    m.insert("config".into(), other);
                    Value::Object(m)
                }
                None => Value::Object(m),
            },
            Some(_) => return Err(CliError::config("config document must be a JSON object")),
        };
        for (key, value) in overrides {
            set_dotted(&mut doc, key, value.clone())?;
        }
        let cfg: RunConfig = serde_json::from_value(doc).map_err(|e| CliError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [
            ("eta", self.eta.hartree()),
            ("delta_window", self.delta_window.hartree()),
            ("omega_offset", self.omega_offset.hartree()),
            ("calibration_shift", self.calibration_shift.hartree()),
        ] {
            if !v.is_finite() {
                return Err(CliError::config(format!("{name} must be finite")));
            }
        }
        if self.q.is_empty() {
            return Err(CliError::config("at least one q vector is required"));
        }
        if !(self.input_threshold >= 0.0) {
            return Err(CliError::config("input_threshold must be nonnegative"));
        }
        Ok(())
    }

    pub fn q_vectors(&self) -> dsf_core::Result<Vec<QVector>> {
        self.q.iter().map(QSpec::vector).collect()
    }

    pub fn summary(&self) -> String {
        format!(
            "eta = {:.6} Ha ({:.4} eV), delta = {:.6} Ha, offset = {:.6} Ha",
            self.eta.hartree(),
            hartree_to_ev(self.eta.hartree()),
            self.delta_window.hartree(),
            self.omega_offset.hartree()
        )
    }
}

/// Sets `doc.a.b.c = value`, creating intermediate objects.
pub fn set_dotted(doc: &mut Value, key: &str, value: Value) -> Result<(), CliError> {
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::config(format!("bad config key `{key}`")));
    }
    for part in &parts[..parts.len() - 1] {
        let map = node
            .as_object_mut()
            .ok_or_else(|| CliError::config(format!("`{key}` does not name an object field")))?;
        node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    node.as_object_mut()
        .ok_or_else(|| CliError::config(format!("`{key}` does not name an object field")))?
        .insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Flag text as a JSON value: valid JSON is taken literally, anything else is a string.
pub fn flag_value(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_string()))
}

/// `"0,3"` → `[0, 3]`; `"none"` or `""` → `null`.
pub fn cvs_value(text: &str) -> Result<Value, CliError> {
    let t = text.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("none") {
        return Ok(Value::Null);
    }
    let items: Result<Vec<u64>, _> = t.split(',').map(|s| s.trim().parse::<u64>()).collect();
    let items = items.map_err(|_| CliError::config(format!("cannot parse core orbital list `{text}`")))?;
    Ok(Value::Array(items.into_iter().map(Value::from).collect()))
}
