use thiserror::Error;

/// Failure modes shared by every geometric operation in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{manifold}: point {detail} is outside the domain of chart {chart}")]
    Domain {
        manifold: String,
        chart: usize,
        detail: String,
    },
    #[error("immersion failure: {0}")]
    Immersion(String),
    #[error("chart cover gap over parameter region {0}")]
    Coverage(String),
    #[error("boundary linkage: {0}")]
    Linkage(String),
    #[error("phase jump unresolved after {depth} refinements near t = {at:.6}")]
    Resolution { depth: u32, at: f64 },
    #[error("inconsistent phase trace: net change {net:.6} rad is {residual:.2e} turns off an integer")]
    InconsistentTrace { net: f64, residual: f64 },
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("invalid constructor `{0}`")]
    Constructor(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
