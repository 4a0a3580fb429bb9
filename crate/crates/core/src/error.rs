use crate::bids::{Product, ValidationReport};
use crate::lp::LpStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("network is disconnected: zone {0} cannot be reached from the slack zone")]
    Disconnected(String),

    #[error("reduced susceptance matrix is singular")]
    SingularLaplacian,

    #[error("zonal injections do not balance (net injection {0})")]
    Unbalanced(f64),

    #[error("invalid bid book: {0}")]
    InvalidBook(ValidationReport),

    #[error("activation vertex count {count} exceeds the cap of {cap}")]
    VertexCap { count: u128, cap: usize },

    #[error("oracle enumeration size {count} exceeds the cap of {cap}")]
    EnumerationCap { count: u128, cap: u64 },

    #[error("invalid grid specification: {0}")]
    InvalidGrid(String),

    #[error("invalid linear program: {0}")]
    InvalidProgram(String),

    #[error("unknown constraint tag `{0}`")]
    UnknownTag(String),

    #[error("linear program is not optimal ({0:?})")]
    NotOptimal(LpStatus),

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("missing settled price for {}", format_missing(.0))]
    MissingPrices(Vec<(String, Product)>),

    #[error("acceptance vector has {got} entries but the bid book has {expected}")]
    AcceptanceLength { expected: usize, got: usize },

    #[error("internal error: {0}")]
    Internal(String),
}

fn format_missing(missing: &[(String, Product)]) -> String {
    missing
        .iter()
        .map(|(zone, product)| format!("({zone}, {product})"))
        .collect::<Vec<_>>()
        .join(", ")
}
