use thiserror::Error;

#[derive(Debug, Error)]
pub enum LdgError {
    #[error("mesh needs at least 2 cells, got {0}")]
    InvalidN(usize),
    #[error("domain length must be positive, got {0}")]
    InvalidLength(f64),
    #[error("perturbation amplitude must lie in [0, 0.4), got {0}")]
    InvalidAmplitude(f64),
    #[error("point {x} lies outside cell {cell}")]
    OutOfCell { cell: usize, x: f64 },
    #[error("interface {0} is a domain boundary in non-periodic mode")]
    BoundaryInterface(usize),
    #[error("fields live on different meshes or have different degrees")]
    MeshMismatch,
    #[error("circulant system is near singular (theta = {theta}, |1 - p^N| = {gap:e})")]
    NearSingular { theta: f64, gap: f64 },
    #[error("single-cell trace condition degenerates (multiplier {0:e})")]
    DegenerateCell(f64),
    #[error("no real roots of the Radau polynomial inside [-1, 1] (k = {k}, theta = {theta})")]
    NoRootsInCell { k: usize, theta: f64 },
    #[error("correction depth {depth} exceeds polynomial degree {k}")]
    DepthExceeded { depth: usize, k: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("state became non-finite at step {step} (t = {t})")]
    NonFiniteState { step: usize, t: f64 },
    #[error("convergence orders need strictly positive errors (entry {0})")]
    NonPositiveError(usize),
    #[error("a-posteriori check failed: {0}")]
    VerificationFailed(String),
    #[error("exact solution audit failed: {0}")]
    InconsistentSolution(String),
    #[error("unknown case `{0}`")]
    UnknownCase(String),
    #[error("run with N = {n} failed: {cause}")]
    Run {
        n: usize,
        cause: Box<LdgError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LdgError>;
