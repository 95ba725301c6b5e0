use thiserror::Error;

/// Errors produced by the analysis library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("dimension mismatch at point {index}: expected {expected} coordinates, found {found}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("points {first} and {second} coincide")]
    DuplicatePoint { first: usize, second: usize },

    #[error("a point set needs at least two points, got {0}")]
    TooFewPoints(usize),

    #[error("ambiguous grouping near value {value}: gap {gap:e} is within 10x of the tolerance {tol:e}")]
    AmbiguousGrouping { value: f64, gap: f64, tol: f64 },

    #[error("point {index} has norm {norm}, not on the unit sphere")]
    NotOnSphere { index: usize, norm: f64 },

    #[error("point set is not antipodal")]
    NotAntipodal,

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("integer overflow: {0}")]
    Overflow(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("outside the domain: {0}")]
    Domain(String),

    #[error("sign pattern violated: {0}")]
    InvalidSign(String),

    #[error("singular closed form: {0}")]
    Singular(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("division by zero: {0}")]
    ZeroDivision(String),

    #[error("value {value} at index {index} is not an integer")]
    NonInteger { index: usize, value: f64 },

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("matrix shape violation: {0}")]
    Shape(String),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("unknown configuration name `{0}`")]
    UnknownName(String),

    #[error("search box holds {count} tuples, above the cap of {cap}")]
    CapExceeded { count: u128, cap: u128 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of the numerics on valid input, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Decomposition(_)
                | Error::Singular(_)
                | Error::NoSolution(_)
                | Error::Overflow(_)
                | Error::ZeroDivision(_)
                | Error::NonInteger { .. }
        )
    }
}
