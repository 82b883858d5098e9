use alloc::string::String;

/// Errors raised across the crate.
///
/// Node indices in messages are 1-based, matching the spec file format.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("invalid routing probabilities at node {node}: {reason}")]
    InvalidProbability { node: usize, reason: String },
    #[error("invalid service family at node {node}: {reason}")]
    InvalidService { node: usize, reason: String },
    #[error("invalid parameter domain [{lo}, {hi}]")]
    InvalidDomain { lo: f64, hi: f64 },
    #[error("network has no customers")]
    EmptyPopulation,
    #[error("completions K = {completions} exceeds horizon L = {horizon}")]
    HorizonTooSmall { completions: usize, horizon: usize },
    #[error("routing support has {size} tables, cap is {cap}")]
    SupportTooLarge { size: u128, cap: u128 },

    #[error("length mismatch: {arrivals} arrivals but {services} services")]
    LengthMismatch { arrivals: usize, services: usize },
    #[error("order statistic k = {k} exceeds multiset size {len}")]
    KTooLarge { k: usize, len: usize },
    #[error("arrival {k} at node {node} has not happened")]
    MissingArrival { node: usize, k: usize },
    #[error("starvation: event queue empty after {completions} completions at tagged node {node}")]
    Starvation { node: usize, completions: usize },
    #[error("node {node} needs routing decision {k} beyond horizon L = {horizon}")]
    HorizonExceeded { node: usize, k: usize, horizon: usize },
    #[error("theta = {theta} outside [{lo}, {hi}]")]
    ThetaOutOfDomain { theta: f64, lo: f64, hi: f64 },
    #[error("node {target} is not a routing target")]
    TargetNotInSupport { target: usize },

    #[error("node {node} has {available} completions, criterion needs {needed}")]
    InsufficientCompletions { node: usize, needed: usize, available: usize },
    #[error("departure time D^K is zero at node {node}")]
    ZeroDeparture { node: usize },
    #[error("criterion {0} is not supported here")]
    UnsupportedCriterion(&'static str),

    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("invalid finite-difference step {h} at theta = {theta}")]
    InvalidStep { theta: f64, h: f64 },
    #[error("theta = {0} outside the open unit interval")]
    OutOfDomain(f64),
    #[error("trajectory uses {found} uniform coordinates, cap is {cap}")]
    TooManyCoordinates { found: usize, cap: usize },
    #[error("quadrature hit service label (node {node}, k {k}) missed by coordinate discovery")]
    CoordinateSetUnstable { node: usize, k: usize },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
