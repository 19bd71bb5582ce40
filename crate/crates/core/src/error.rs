use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("dipole annihilates state")]
    DipoleAnnihilatesState,

    #[error("CVS projection annihilated state")]
    CvsAnnihilatedState,

    #[error("{requested} qubits requested but the cap is {cap}")]
    QubitCap { requested: usize, cap: usize },

    #[error("sector dimension {dim} exceeds the cap of {cap}")]
    SectorCap { dim: usize, cap: usize },

    #[error("state is not normalized (norm = {0})")]
    Unnormalized(f64),

    #[error("shot count must be at least 1")]
    ZeroShots,

    #[error("no dipole intensity: every pair moment is zero")]
    NoDipoleIntensity,

    #[error("missing contribution for pair {0}")]
    MissingPair(String),

    #[error("momentum transfer |q| = 0 (elastic divergence)")]
    ZeroMomentum,

    #[error("no active-volume weight for primitive `{0}`")]
    UnknownPrimitive(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable identifier, used by the CLI error document.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse_error",
            Error::Invalid(_) => "invalid_input",
            Error::Dimension { .. } => "dimension_mismatch",
            Error::DipoleAnnihilatesState => "dipole_annihilates_state",
            Error::CvsAnnihilatedState => "cvs_annihilated_state",
            Error::QubitCap { .. } => "qubit_cap_exceeded",
            Error::SectorCap { .. } => "sector_cap_exceeded",
            Error::Unnormalized(_) => "unnormalized_state",
            Error::ZeroShots => "zero_shots",
            Error::NoDipoleIntensity => "no_dipole_intensity",
            Error::MissingPair(_) => "missing_pair",
            Error::ZeroMomentum => "zero_momentum",
            Error::UnknownPrimitive(_) => "unknown_primitive",
            Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => "input_not_found",
            Error::Io(_) => "io_error",
            Error::Json(_) => "json_error",
        }
    }
}
