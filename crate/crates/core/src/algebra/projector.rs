//! Frobenius-orthogonal projector onto the complement of span{xᵢxᵢᵀ}
//! inside the space of symmetric matrices.
//!
//! The conditional variance of the Bayes quadratic regressor at a test point
//! `x` equals `‖Π_n(xxᵀ)‖_F²`, which is why this projector doubles as the
//! independent oracle for that learner.

use super::{Matrix, Vector};

/// Rank tolerance for span detection.
const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct SymProjector {
    d: usize,
    /// Orthonormal (Frobenius) basis of span{xᵢxᵢᵀ} within Sym(d).
    basis: Vec<Matrix>,
}

fn frob_inner(a: &Matrix, b: &Matrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

impl SymProjector {
    /// Build from generator points; linearly dependent generators are dropped
    /// by rank-revealing (re-orthogonalized) Gram-Schmidt.
    pub fn from_points(d: usize, points: &[Vector]) -> Self {
        let mut basis: Vec<Matrix> = Vec::new();
        for x in points {
            assert_eq!(x.len(), d, "generator dimension mismatch");
            let a = x * x.transpose();
            let scale = a.norm().max(1.0);
            let mut r = a;
            // Two orthogonalization passes keep the residual orthogonal to
            // the accepted basis to near machine precision.
            for _ in 0..2 {
                for b in &basis {
                    let c = frob_inner(&r, b);
                    r -= b * c;
                }
            }
            let n = r.norm();
            if n > RANK_TOL * scale {
                basis.push(r / n);
            }
        }
        SymProjector { d, basis }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Rank of the span of the generators.
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Dimension of the complement within Sym(d): d(d+1)/2 − rank.
    pub fn complement_rank(&self) -> usize {
        self.d * (self.d + 1) / 2 - self.basis.len()
    }

    /// `Π(A)`: the component of sym(A) Frobenius-orthogonal to the span.
    /// With no generators the projector is the identity on Sym(d) and
    /// accepts any dimension (an empty point list carries none).
    pub fn apply(&self, a: &Matrix) -> Matrix {
        assert_eq!(a.nrows(), a.ncols());
        assert!(
            self.basis.is_empty() || a.nrows() == self.d,
            "dimension mismatch: projector built at d = {}, got {}",
            self.d,
            a.nrows()
        );
        let mut r = (a + a.transpose()) / 2.0;
        for _ in 0..2 {
            for b in &self.basis {
                let c = frob_inner(&r, b);
                r -= b * c;
            }
        }
        r
    }

    /// `‖Π(xxᵀ)‖_F²`, the quantity the regression floor is stated in.
    pub fn residual_norm_sq(&self, x: &Vector) -> f64 {
        self.apply(&(x * x.transpose())).norm_squared()
    }
}

/// Free-function form mirroring the other algebra constructors.
pub fn sym_projector(points: &[Vector]) -> SymProjector {
    let d = points.first().map(|x| x.len()).unwrap_or(0);
    SymProjector::from_points(d, points)
}
