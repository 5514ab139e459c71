use thiserror::Error;

/// Errors produced by the numerical kernels and system builders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty matrix")]
    EmptyMatrix,

    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPositive { min_eig: f64 },

    #[error("incompatible shapes: {0}")]
    ShapeMismatch(String),

    #[error("scalar function undefined at spectral point {point}")]
    OutOfDomain { point: f64 },

    #[error("quadrature did not converge: successive values differ by {last_diff:.3e} (previous refinement {prev_diff:.3e})")]
    QuadratureDiverged { last_diff: f64, prev_diff: f64 },

    #[error("element outside the algebra span: residual {residual:.3e}, block {block:?}")]
    NotInAlgebra {
        residual: f64,
        block: Option<(usize, usize)>,
    },

    #[error("presentation is not rescaled: pair {pair:?} has delta-norm {delta_norm:.3e}")]
    NotRescaled { pair: (usize, usize), delta_norm: f64 },

    #[error("invalid instance or configuration: {0}")]
    InvalidSpec(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("grid too coarse: {interior} interior nodes (need at least 8)")]
    GridTooCoarse { interior: usize },

    #[error("invalid weight profile: vanishes at interior node {node}")]
    InvalidProfile { node: usize },

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
