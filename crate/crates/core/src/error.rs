use thiserror::Error;

pub type Result<T> = std::result::Result<T, NqiError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NqiError {
    #[error("{kind} list must not be empty")]
    EmptyList { kind: &'static str },

    #[error("duplicate {kind} label `{label}`")]
    DuplicateLabel { kind: &'static str, label: String },

    #[error("unknown {kind} label `{label}`")]
    UnknownLabel { kind: &'static str, label: String },

    #[error("states belong to different basis layouts")]
    LayoutMismatch,

    #[error("vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state is not normalized (squared norm {norm_sq})")]
    NotNormalized { norm_sq: f64 },

    #[error("beam splitter coefficients t={t}, r={r} violate t^2 + r^2 = 1 or are negative")]
    InvalidSplitter { t: f64, r: f64 },

    #[error("mirror parameters r={r}, t={t}, r'={r_prime}, t'={t_prime} do not form a unitary scattering matrix")]
    NonUnitaryMirror {
        r: f64,
        t: f64,
        r_prime: f64,
        t_prime: f64,
    },

    #[error("polarization rotator is not unitary (defect {defect:e})")]
    NonUnitaryRotator { defect: f64 },

    #[error("beam splitter needs two distinct paths, got `{0}` twice")]
    SamePath(String),

    #[error("atom interaction needs at least three atom levels (plus-coupled, minus-coupled, ground); layout has {0}")]
    MissingAtomLevels(usize),

    #[error("scattered amplitude would land on already populated sink `{0}`; use a fresh sink pair")]
    SinkCollision(String),

    #[error("path relabeling is not a permutation: {0}")]
    InvalidRelabel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("probabilities sum to {total}, expected 1 within {tol:e}")]
    ConservationViolated { total: f64, tol: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),
}
