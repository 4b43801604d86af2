//! Kernel regression thresholded at zero, with pseudo-inverse machinery
//! shared with the Bayes regressor.

use std::sync::Arc;

use crate::algebra::{Matrix, Vector};
use crate::tasks::LabeledSet;

use super::{DecisionMode, Predictor, TrainError};

/// Pseudo-inverse cutoff, relative to the largest singular value.
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-10;

#[derive(Clone)]
pub enum Kernel {
    /// K(u, v) = uᵀv
    Linear,
    /// K(u, v) = (uᵀv)² — the covariance kernel of Gaussian quadratic forms
    QuadraticDot,
    /// Arbitrary kernel function; symmetry is checked on the training data.
    Custom(Arc<dyn Fn(&Vector, &Vector) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Kernel::Linear => "Linear",
            Kernel::QuadraticDot => "QuadraticDot",
            Kernel::Custom(_) => "Custom",
        })
    }
}

impl std::fmt::Display for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Kernel::Linear => "linear",
            Kernel::QuadraticDot => "quadratic-dot",
            Kernel::Custom(_) => "custom",
        };
        f.write_str(s)
    }
}

impl Kernel {
    pub fn eval(&self, u: &Vector, v: &Vector) -> f64 {
        match self {
            Kernel::Linear => u.dot(v),
            Kernel::QuadraticDot => {
                let d = u.dot(v);
                d * d
            }
            Kernel::Custom(f) => f(u, v),
        }
    }
}

/// Moore-Penrose pseudo-inverse with singular values below
/// `1e-10 · σ_max` dropped.
pub fn pseudo_inverse(g: &Matrix) -> Matrix {
    if g.is_empty() {
        return g.clone();
    }
    let svd = g.clone().svd(true, true);
    let smax = svd.singular_values.max();
    svd.pseudo_inverse(PINV_RELATIVE_CUTOFF * smax.max(f64::MIN_POSITIVE))
        .expect("pseudo_inverse with positive epsilon cannot fail")
}

pub(super) fn gram_matrix(kernel: &Kernel, points: &[Vector]) -> Result<Matrix, TrainError> {
    let n = points.len();
    let mut g = Matrix::zeros(n, n);
    let mut max_asym = 0.0f64;
    let mut scale = 1.0f64;
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = kernel.eval(&points[i], &points[j]);
            scale = scale.max(g[(i, j)].abs());
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            max_asym = max_asym.max((g[(i, j)] - g[(j, i)]).abs());
        }
    }
    if max_asym > 1e-10 * scale {
        return Err(TrainError::AsymmetricKernel {
            deviation: max_asym,
        });
    }
    // exact symmetry from here on
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (g[(i, j)] + g[(j, i)]) / 2.0;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    let min_eig = g
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &v| a.min(v));
    if min_eig < -1e-8 * scale.max(1.0) {
        return Err(TrainError::NotPsd { min_eig });
    }
    Ok(g)
}

/// Kernel regression with a sign threshold:
/// `x ↦ sign(K(x, X) · K(X, X)⁺ y)`.
pub fn kernel_regression_sign(
    kernel: Kernel,
    data: &LabeledSet,
) -> Result<Predictor, TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let g = gram_matrix(&kernel, &data.points)?;
    let alpha = pseudo_inverse(&g) * Vector::from_vec(data.labels.clone());
    Ok(Predictor::Kernel {
        kernel,
        train_points: data.points.clone(),
        alpha,
        mode: DecisionMode::SignThreshold,
    })
}
