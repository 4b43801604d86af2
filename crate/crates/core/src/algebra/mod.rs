//! Dense linear algebra, seeded randomness and group-element construction.
//!
//! Everything downstream works in 64-bit floats on top of nalgebra's dynamic
//! matrices; the aliases here are the only spelling the rest of the crate
//! uses.

mod group;
mod projector;
mod rng;

pub use group::{
    apply_group, haar_orthogonal, random_general_linear, skew_exp, GroupElement, GroupKind,
    ORTHOGONALITY_TOL,
};
pub use projector::{sym_projector, SymProjector};
pub use rng::RngStream;

pub type Matrix = nalgebra::DMatrix<f64>;
pub type Vector = nalgebra::DVector<f64>;

#[derive(Debug, thiserror::Error)]
pub enum AlgebraError {
    #[error("matrix dimensions are empty or non-square")]
    BadDimensions,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not orthogonal (max deviation {deviation:.3e})")]
    NotOrthogonal { deviation: f64 },
    #[error("matrix is not skew-symmetric (max deviation {deviation:.3e})")]
    NotSkewSymmetric { deviation: f64 },
    #[error("index map is not a bijection")]
    NotBijection,
    #[error("sign-flip entries must be ±1")]
    BadSigns,
    #[error("matrix is ill-conditioned (cond = {cond:.3e})")]
    IllConditioned { cond: f64 },
}

pub(crate) use group::max_abs;
