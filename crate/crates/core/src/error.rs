use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// Spending exceeded stored plus harvested energy. `block` is 1-based.
    #[error(
        "energy causality violated at block {block}: requested {requested}, available {available}"
    )]
    CausalityViolation {
        block: usize,
        requested: f64,
        available: f64,
    },

    #[error("policy {policy} returned invalid power {power} at block {block}")]
    InvalidPower {
        policy: String,
        block: usize,
        power: f64,
    },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("sweep value {value}, replication {replication}, policy {policy}: {source}")]
    Replication {
        value: f64,
        replication: usize,
        policy: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
