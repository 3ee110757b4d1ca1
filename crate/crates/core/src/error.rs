use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("operator is not Hermitian (max |M - M^H| = {deviation:e})")]
    NonHermitianInput { deviation: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid projector family: {0}")]
    InvalidProjector(String),

    #[error("micro-system coefficients are not normalized (sum |c_r|^2 = {norm})")]
    NotNormalized { norm: f64 },

    #[error("classification needs as many phase cells as eigenstates (n = {n}, cells = {cells})")]
    CellCountMismatch { n: usize, cells: usize },

    #[error("exhaustive assignment search supports at most 8 eigenstates, got {0}")]
    TooManyStates(usize),

    #[error("invalid chain parameters: {0}")]
    InvalidChain(String),

    #[error("dense chain simulation supports at most 13 sites, got {sites}")]
    ChainTooLong { sites: usize },

    #[error("at most {max} perturbed sites are supported, got {got}")]
    TooManyPerturbedSites { got: usize, max: usize },

    #[error("invalid perturbation: {0}")]
    InvalidPerturbation(String),

    #[error("rate constant is degenerate (1 - m^2 cos^2(2J) = {argument})")]
    DegenerateRate { argument: f64 },

    #[error("potential grid too coarse: {samples} intervals across the support, need at least 32")]
    GridTooCoarse { samples: usize },

    #[error("invalid orbital setup: {0}")]
    InvalidSetup(String),

    #[error("config error at {field}: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
