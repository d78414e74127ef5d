use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid size {n}: need a power of two >= 8")]
    InvalidGrid { n: usize },

    #[error("non-finite value {value} at node ({i1}, {i2})")]
    NonFinite { i1: usize, i2: usize, value: f64 },

    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: usize, right: usize },

    #[error("spectrum is not conjugate-symmetric: defect {defect:e}")]
    NotHermitian { defect: f64 },

    #[error("invalid multiplier: {0}")]
    InvalidMultiplier(String),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("block q = {q} is empty on this lattice")]
    EmptyBlock { q: i32 },

    #[error("space-time embedding violated: {0}")]
    EmbeddingViolated(String),

    #[error("trajectory error: {0}")]
    Trajectory(String),

    #[error("CFL violation: max|u| dt n / 2pi = {courant:.4} > {limit}")]
    Cfl { courant: f64, limit: f64 },

    #[error("velocity is not divergence-free: defect {defect:e} exceeds {bound:e}")]
    NotDivergenceFree { defect: f64, bound: f64 },

    #[error("overflow guard tripped at t = {t}: {quantity} = {value:e}")]
    BlowUp {
        t: f64,
        quantity: &'static str,
        value: f64,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("undefined: {0}")]
    Undefined(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }
}
