use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate edge id {0}")]
    DuplicateEdge(usize),

    #[error("duplicate face id {0}")]
    DuplicateFace(usize),

    #[error("{kind} ids must be contiguous from 0; id {missing} is missing")]
    MissingId { kind: &'static str, missing: usize },

    #[error("face {face} references unknown edge {edge}")]
    UnknownEdge { face: usize, edge: usize },

    #[error("edge {edge} references vertex {vertex} but the mesh has {vertex_count} vertices")]
    UnknownVertex {
        edge: usize,
        vertex: usize,
        vertex_count: usize,
    },

    #[error("non-manifold edge {edge}: used by {uses} face slots (expected 2)")]
    NonManifoldEdge { edge: usize, uses: usize },

    #[error("dangling edge {edge}: used by {uses} face slots (expected 2)")]
    DanglingEdge { edge: usize, uses: usize },

    #[error("face {face}: directed edges do not chain head-to-tail")]
    BrokenChain { face: usize },

    #[error("{what}: expected {expected} entries, got {got}")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("edge {edge}: length {value} is not strictly positive")]
    NonPositiveLength { edge: usize, value: f64 },

    #[error("face {face}: curvature {value} must be strictly negative")]
    NonNegativeCurvature { face: usize, value: f64 },

    #[error("face {face}: model lengths {lengths:?} violate the triangle inequality")]
    InfeasibleFace { face: usize, lengths: [f64; 3] },

    #[error("face {face}: cotangent singularity at corner {corner} (half-angle {value})")]
    CotSingularity {
        face: usize,
        corner: usize,
        value: f64,
    },

    #[error("invalid surface: {0}")]
    InvalidTopology(String),

    #[error("genus ≥ 2 required (mesh has genus {0})")]
    GenusTooSmall(i64),

    #[error("linear system is not positive definite")]
    NotPositiveDefinite,

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("graph has {vertices} vertices; exhaustive enumeration is limited to {limit}")]
    TooManyVertices { vertices: usize, limit: usize },

    #[error("graph is disconnected")]
    Disconnected,

    #[error("continuation left the feasible domain at t = {t}: {source}")]
    ContinuationInfeasible { t: f64, source: Box<Error> },

    #[error("invalid configuration: {0}")]
    Config(String),
}
