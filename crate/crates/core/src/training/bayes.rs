//! Bayes posterior-mean regressor for noise-free quadratic labels.
//!
//! Under the entrywise standard Gaussian prior on M, the process
//! f(x) = ⟨M, xxᵀ⟩ is Gaussian with covariance
//! Cov(f(u), f(v)) = (uᵀv)² — the reduction the whole learner rests on, and
//! one that is cross-checked by brute-force Monte-Carlo over M in the tests
//! before anything trusts it. Posterior mean and conditional variance are
//! then plain Gaussian conditioning with that kernel.

use crate::algebra::{Matrix, Vector};
use crate::tasks::LabeledSet;

use super::kernel::{gram_matrix, pseudo_inverse, Kernel};
use super::{DecisionMode, Predictor, TrainError};

/// Posterior-mean predictor together with its conditional-variance function.
#[derive(Clone, Debug)]
pub struct BayesRegressor {
    pub predictor: Predictor,
    train_points: Vec<Vector>,
    gram_pinv: Matrix,
}

impl BayesRegressor {
    /// Var(f(x) | observations) = k(x,x) − kₓᵀ G⁺ kₓ, clamped at zero.
    pub fn conditional_variance(&self, x: &Vector) -> f64 {
        let kxx = Kernel::QuadraticDot.eval(x, x);
        if self.train_points.is_empty() {
            return kxx;
        }
        let kx = Vector::from_fn(self.train_points.len(), |i, _| {
            Kernel::QuadraticDot.eval(x, &self.train_points[i])
        });
        (kxx - (kx.transpose() * &self.gram_pinv * &kx)[(0, 0)]).max(0.0)
    }
}

/// Posterior mean under M ~ N(0, I_{d²}), conditioning on exact labels
/// yᵢ = xᵢᵀMxᵢ. An empty dataset yields the prior: predictor ≡ 0 with
/// variance ‖x‖⁴.
pub fn bayes_quadratic_regressor(data: &LabeledSet) -> Result<BayesRegressor, TrainError> {
    if data.is_empty() {
        return Ok(BayesRegressor {
            predictor: Predictor::Constant {
                value: 0.0,
                mode: DecisionMode::RawReal,
            },
            train_points: Vec::new(),
            gram_pinv: Matrix::zeros(0, 0),
        });
    }
    let g = gram_matrix(&Kernel::QuadraticDot, &data.points)?;
    let gram_pinv = pseudo_inverse(&g);
    let alpha = &gram_pinv * Vector::from_vec(data.labels.clone());
    Ok(BayesRegressor {
        predictor: Predictor::Kernel {
            kernel: Kernel::QuadraticDot,
            train_points: data.points.clone(),
            alpha,
            mode: DecisionMode::RawReal,
        },
        train_points: data.points.clone(),
        gram_pinv,
    })
}
