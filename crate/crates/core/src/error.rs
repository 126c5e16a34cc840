use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parameters are not pre-critical: w = {w} <= w_cri = {w_cri}")]
    PostCritical { w: f64, w_cri: f64 },
    #[error("point lies on a branch cut: {0}")]
    Branch(String),
    #[error("pole: {0}")]
    Pole(String),
    #[error("spectral curve solver failed (possibly post-critical): {0}")]
    Solver(String),
    #[error("consistency check failed: {0}")]
    Consistency(String),
    #[error("trajectory error: {0}")]
    Trajectory(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("precision insufficient: {0}; increase --precision")]
    Precision(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("root finding failed: {0}")]
    Root(String),
    #[error("missing dependency: {0}")]
    Dependency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
