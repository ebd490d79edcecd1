use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed rectangle [{a},{b}]x[{c},{d}]")]
    MalformedRect { a: i32, b: i32, c: i32, d: i32 },
    #[error("region has {edges} edges, limit is {limit}")]
    RegionTooLarge { edges: usize, limit: usize },
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("unknown lattice '{0}'")]
    UnknownLattice(String),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("unsupported: {0}")]
    UnsupportedLattice(String),
    #[error("symmetry {0} is not declared for this lattice")]
    UndeclaredSymmetry(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("degenerate edge weight p = {0}; log-weights need 0 < p < 1")]
    DegenerateParams(f64),
    #[error("invalid boundary condition: {0}")]
    InvalidBoundary(String),
    #[error("mismatch: {0}")]
    Mismatch(String),
    #[error("region too large for enumeration: {edges} edges, limit {limit}")]
    TooLargeForEnumeration { edges: usize, limit: usize },
    #[error("event is not {0}")]
    WrongMonotonicity(&'static str),
    #[error("boundary condition does not dominate: {0}")]
    DominationViolated(String),
    #[error("event has probability zero")]
    ZeroProbability,
    #[error("event target {target} lies outside host rectangle {host}")]
    TargetOutsideHost { target: String, host: String },
    #[error("invalid event: {0}")]
    InvalidEvent(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("monotone coupling violated at sweep {sweep}, edge {edge}")]
    OrderingViolated { sweep: u64, edge: u32 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
