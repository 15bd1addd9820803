use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("grid mismatch: {0} vs {1}")]
    GridMismatch(usize, usize),
    #[error("invalid parameter {name}: {reason}")]
    Param { name: String, reason: String },
    #[error("hypothesis {tag} violated: {detail}")]
    Hypothesis { tag: &'static str, detail: String },
    #[error("non-finite state at t = {t}: first bad mode ({k1}, {k2})")]
    Blowup { t: f64, k1: i64, k2: i64 },
    #[error("block index {j} outside [-1, {j_max}]")]
    BlockIndex { j: i32, j_max: i32 },
    #[error("window too short: {0}")]
    Window(String),
    #[error("bisection bracket [{lo}, {hi}] does not separate classes")]
    Bracket { lo: f64, hi: f64 },
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error("{0}")]
    Diverged(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &str, reason: impl Into<String>) -> Error {
    Error::Param { name: name.to_string(), reason: reason.into() }
}
