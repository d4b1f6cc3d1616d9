use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported q: {0}")]
    UnsupportedQ(String),

    #[error("degenerate span: {0}")]
    DegenerateSpan(String),

    #[error("degenerate or unsupported quadratic form: {0}")]
    DegenerateForm(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("domain not stabilised: {0}")]
    NotStabilised(String),

    #[error("group construction failed: {0}")]
    Group(String),

    #[error("orbit exceeds bound {bound}")]
    OrbitBound { bound: usize },

    #[error("condition failure: {0}")]
    Conditions(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("search budget exhausted after {nodes} nodes")]
    Budget { nodes: u64 },

    #[error("invalid format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
