use thiserror::Error;

/// Errors raised by the geometry routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("matrix dimension {0} is outside the supported range 1..=8")]
    UnsupportedDimension(usize),
    #[error("expected {expected} packed entries, got {got}")]
    BadPackedLength { expected: usize, got: usize },
    #[error("singular input: {0}")]
    SingularInput(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("the cone tip is a completion point and has no matrix representative")]
    TipHasNoMatrix,
    #[error("degenerate geodesic: endpoints at distance {0:e}")]
    DegenerateGeodesic(f64),
    #[error("domain geodesic oracle is inconsistent: error {0:e}")]
    BadGeodesicOracle(f64),
    #[error("embedding is not flat: distance error {0:e}")]
    NotFlat(f64),
    #[error("bad background metric at vertex {vertex}: {reason}")]
    BadBackground { vertex: usize, reason: String },
    #[error("fields live on different manifolds")]
    ManifoldMismatch,
    #[error("fields coincide (distance {0:e}); geodesic density undefined")]
    ZeroDistance(f64),
    #[error("vertex map is not a bijection: {0}")]
    NotBijective(String),
    #[error("measure has total mass {0}, expected 1")]
    NonUnitMass(f64),
    #[error("map is not compatible with the grid lattice: {0}")]
    NotLatticeCompatible(String),
    #[error("cannot parse input: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
