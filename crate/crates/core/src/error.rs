use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate regime: K2 = H2 = H3 = 0 admits no static wall to continue from")]
    DegenerateRegime,

    #[error("invalid regime: {0}")]
    InvalidRegime(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("polar singularity: psi = {psi} at node {index} left the open interval (0, pi)")]
    PolarSingularity { index: usize, psi: f64 },

    #[error("non-unit vector: |m| = {norm} deviates from 1 by more than 1e-9")]
    NonUnitVector { norm: f64 },

    #[error("no equilibrium: {0}")]
    NoEquilibrium(String),

    #[error("wrong sign: equilibria violate tail-to-tail ordering (x.m+ = {plus_x}, x.m- = {minus_x})")]
    WrongSign { plus_x: f64, minus_x: f64 },

    #[error("invalid transverse field: H3 = {h3} must lie in (0, 1)")]
    InvalidField { h3: f64 },

    #[error("domain too short: static tail needs half-width >= {required}, grid has {half_width}")]
    DomainTooShort { required: f64, half_width: f64 },

    #[error("no convergence after {iterations} Newton iterations (residual {residual_norm:.3e}): {reason}")]
    NoConvergence {
        iterations: usize,
        residual_norm: f64,
        reason: String,
    },

    #[error("instability: {0}")]
    Instability(String),

    #[error("wall at x = {position:.3} came within 5 exchange lengths of the boundary at t = {time:.3}")]
    WallNearBoundary { position: f64, time: f64 },

    #[error("no wall: m1 has no sign change")]
    NoWall,

    #[error("multiple walls: m1 changes sign {count} times")]
    MultipleWalls { count: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
