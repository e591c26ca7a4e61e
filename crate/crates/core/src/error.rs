use thiserror::Error;

use crate::pauli::PauliLetter;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("element has phase i^{phase_exp} and is not Hermitian")]
    NonHermitian { phase_exp: u8 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("lattice extents must be positive")]
    ZeroExtent,

    #[error("site {site} out of range for {site_count} sites")]
    SiteOutOfRange { site: usize, site_count: usize },

    #[error("stabilizer group on {sites} sites exceeds the limit of {limit}")]
    GroupTooLarge { sites: usize, limit: usize },

    #[error("dense simulation of {sites} sites exceeds the limit of {limit}")]
    TooManySites { sites: usize, limit: usize },

    #[error("site subset must not be empty")]
    EmptySubset,

    #[error("{variables} hidden variables exceed the exhaustive-search ceiling of {limit}")]
    SearchSpaceTooLarge { variables: usize, limit: usize },

    #[error("assignment has no value for {letter} on site {site}")]
    MissingVariable { site: usize, letter: PauliLetter },

    #[error("window start {k} out of range 1..={max} for a chain of {n} sites")]
    WindowOutOfRange { n: usize, k: usize, max: usize },

    #[error("sites {0:?} do not form a neighbor-to-neighbor path")]
    NoPath([usize; 3]),

    #[error("not a GHZ argument: {0}")]
    NotAnArgument(String),

    #[error("site {site} carries all three Pauli letters; at most two settings per party are supported")]
    UnsupportedArity { site: usize },

    #[error("no setting bound for party {party}, label {label}")]
    UnboundLabel { party: usize, label: String },

    #[error("invalid measurement setting: {0}")]
    InvalidSetting(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),
}

impl Error {
    /// True for errors caused by a resource ceiling rather than bad input.
    pub fn is_resource_limit(&self) -> bool {
        matches!(
            self,
            Error::GroupTooLarge { .. } | Error::TooManySites { .. } | Error::SearchSpaceTooLarge { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
