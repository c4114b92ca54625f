use crate::graph::Vertex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("asymmetric input: edge {x}-{y} given with weights {first} and {second}")]
    AsymmetricInput {
        x: Vertex,
        y: Vertex,
        first: f64,
        second: f64,
    },

    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("nonpositive weight {weight} on edge {x}-{y}")]
    NonpositiveWeight { x: Vertex, y: Vertex, weight: f64 },

    #[error("self-loop at {0}")]
    SelfLoop(Vertex),

    #[error("unknown vertex {0}")]
    UnknownVertex(Vertex),

    #[error("function is not strictly positive: value {value} at {vertex}")]
    NonpositiveFunction { vertex: Vertex, value: f64 },

    #[error("function has no finite support")]
    InfiniteSupport,

    #[error("ground state is not strictly positive: value {value} at {vertex}")]
    NonpositiveGroundState { vertex: Vertex, value: f64 },

    #[error("input is not strictly positive: value {value} at {vertex}")]
    NonpositiveInput { vertex: Vertex, value: f64 },

    #[error("supersolution is not strictly positive: value {value} at {vertex}")]
    NonpositiveSupersolution { vertex: Vertex, value: f64 },

    #[error("function is not superharmonic at {count} vertices (first: {first})")]
    NotSuperharmonic { count: usize, first: Vertex },

    #[error("order violation: v - u = {value} at {vertex}")]
    OrderViolation { vertex: Vertex, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("linear solver did not converge after {iterations} iterations (residual {residual:e})")]
    SolverDivergence { iterations: usize, residual: f64 },

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("function is constant on the region")]
    ConstantFunction,

    #[error("level set touches the truncation boundary at {0}")]
    LevelSetTouchesBoundary(Vertex),

    #[error("integrand is negative: f({t}) = {value}")]
    NegativeF { t: f64, value: f64 },

    #[error("weight vanishes identically on the region")]
    ZeroWeightRegion,

    #[error("eigensolver failed: {0}")]
    EigSolverFailure(String),

    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),

    #[error("malformed graph file: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
