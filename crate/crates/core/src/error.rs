use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The argument of an anti-derivative is not a total x-derivative.
    #[error("not a total x-derivative: {0}")]
    NotExact(String),

    #[error("parity mismatch for {var}: expected {expected}, replacement is {found}")]
    ParityMismatch {
        var: String,
        expected: String,
        found: String,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("Hamiltonian form mismatch for {0}")]
    HamiltonFormMismatch(String),

    #[error("Grassmann algebras differ: {0} vs {1} generators")]
    AlgebraMismatch(usize, usize),

    #[error("generator {0} has no assigned value")]
    UnassignedGenerator(String),

    #[error("non-finite state at t = {0}")]
    NonFiniteState(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
