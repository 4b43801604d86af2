//! Feature-space ERM for the CNN hypothesis classes.
//!
//! Each feature map is the span of functions a small quadratic-pooling CNN
//! realizes: per-coordinate squares, block square sums, or the two k=2
//! statistics (Σxᵢ², Σxᵢxᵢ₋₁). Classification ERM is logistic regression
//! driven to a separating margin and then verified; regression ERM is a
//! minimum-norm least squares on (x₁², …, x_d², 1).

use crate::algebra::{Matrix, Vector};
use crate::tasks::LabeledSet;

use super::{DecisionMode, Predictor, TrainError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FeatureMap {
    /// (x₁², …, x_d²)
    PerCoordinateSquares,
    /// (Σ_{block 1} xᵢ², …, Σ_{block r} xᵢ²), equal contiguous blocks
    BlockSquareSums { blocks: usize },
    /// (Σᵢ xᵢ², Σᵢ xᵢxᵢ₋₁) with cyclic indexing — the k=2 quadratic CNN span
    Conv2SquareSums,
}

impl std::fmt::Display for FeatureMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FeatureMap::PerCoordinateSquares => write!(f, "per-coordinate-squares"),
            FeatureMap::BlockSquareSums { blocks } => write!(f, "block-square-sums-{blocks}"),
            FeatureMap::Conv2SquareSums => write!(f, "conv2-square-sums"),
        }
    }
}

impl FeatureMap {
    pub fn dim(&self, d: usize) -> usize {
        match self {
            FeatureMap::PerCoordinateSquares => d,
            FeatureMap::BlockSquareSums { blocks } => *blocks,
            FeatureMap::Conv2SquareSums => 2,
        }
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        let d = x.len();
        match self {
            FeatureMap::PerCoordinateSquares => Vector::from_fn(d, |i, _| x[i] * x[i]),
            FeatureMap::BlockSquareSums { blocks } => {
                let len = d / blocks;
                Vector::from_fn(*blocks, |b, _| {
                    (b * len..(b + 1) * len).map(|i| x[i] * x[i]).sum()
                })
            }
            FeatureMap::Conv2SquareSums => {
                let sq: f64 = x.iter().map(|v| v * v).sum();
                let lag: f64 = (0..d).map(|i| x[i] * x[(i + d - 1) % d]).sum();
                Vector::from_vec(vec![sq, lag])
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErmFlag {
    /// A zero-training-error separator was found and verified.
    Separated,
    /// Best-found predictor still misclassifies training points.
    NotSeparated,
    /// All training labels were identical; the constant predictor of that
    /// class is returned.
    Degenerate,
}

#[derive(Clone, Debug)]
pub struct ErmResult {
    pub predictor: Predictor,
    pub train_error: f64,
    pub flag: ErmFlag,
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Sign-task ERM over a feature class: logistic regression by damped Newton,
/// stopped once a verified zero-error separator with comfortable margins is
/// reached.
pub fn erm_cnn_sign(map: FeatureMap, data: &LabeledSet) -> Result<ErmResult, TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let n = data.len();
    let first = data.labels[0];
    if data.labels.iter().all(|&y| y == first) {
        return Ok(ErmResult {
            predictor: Predictor::Constant {
                value: first,
                mode: DecisionMode::SignThreshold,
            },
            train_error: 0.0,
            flag: ErmFlag::Degenerate,
        });
    }

    let f = map.dim(data.dim());
    // features extended with a constant-1 coordinate
    let phi: Vec<Vector> = data
        .points
        .iter()
        .map(|x| map.apply(x).insert_row(f, 1.0))
        .collect();
    let ys = &data.labels;

    let dim = f + 1;
    let mut beta = Vector::zeros(dim);
    let logistic_loss = |b: &Vector| -> f64 {
        phi.iter()
            .zip(ys)
            .map(|(p, &y)| {
                let z = y * p.dot(b);
                if z >= 0.0 {
                    (-z).exp().ln_1p()
                } else {
                    (1.0f64 + z.exp()).ln() - z
                }
            })
            .sum()
    };
    let zero_one = |b: &Vector| -> usize {
        phi.iter()
            .zip(ys)
            .filter(|(p, &y)| crate::sign_pm(p.dot(b)) != y)
            .count()
    };

    let mut best = (zero_one(&beta), logistic_loss(&beta), beta.clone());
    for _ in 0..100 {
        // damped Newton on the logistic objective
        let mut grad = Vector::zeros(dim);
        let mut hess = Matrix::zeros(dim, dim);
        for (p, &y) in phi.iter().zip(ys) {
            let m = y * p.dot(&beta);
            let s = sigmoid(-m);
            grad += p * (-s * y);
            let w = sigmoid(m) * s;
            hess += p * p.transpose() * w;
        }
        let ridge = 1e-9 * (hess.trace() / dim as f64).max(1e-12);
        for i in 0..dim {
            hess[(i, i)] += ridge;
        }
        let step = match hess.lu().solve(&grad) {
            Some(s) => s,
            None => break,
        };
        let cur = logistic_loss(&beta);
        let mut scale = 1.0;
        let mut candidate = &beta - &step * scale;
        for _ in 0..30 {
            if logistic_loss(&candidate) <= cur {
                break;
            }
            scale *= 0.5;
            candidate = &beta - &step * scale;
        }
        beta = candidate;
        let err = zero_one(&beta);
        let l = logistic_loss(&beta);
        if (err, l) < (best.0, best.1) {
            best = (err, l, beta.clone());
        }
        if err == 0 {
            let min_margin = phi
                .iter()
                .zip(ys)
                .map(|(p, &y)| y * p.dot(&beta))
                .fold(f64::INFINITY, f64::min);
            if min_margin >= 2.0 {
                break;
            }
        }
    }

    let beta = if zero_one(&beta) <= best.0 { beta } else { best.2 };
    let errors = zero_one(&beta);
    let predictor = Predictor::LinearFeatures {
        map,
        coef: beta,
        mode: DecisionMode::SignThreshold,
    };
    // final verification: re-evaluate the returned predictor on the raw data
    let verified_err = data
        .points
        .iter()
        .zip(ys)
        .filter(|(x, &y)| predictor.predict(x) != y)
        .count();
    debug_assert_eq!(errors, verified_err);
    Ok(ErmResult {
        predictor,
        train_error: verified_err as f64 / n as f64,
        flag: if verified_err == 0 {
            ErmFlag::Separated
        } else {
            ErmFlag::NotSeparated
        },
    })
}

/// Regression ERM on (x₁², …, x_d², 1): minimum-norm least squares via SVD
/// with relative cutoff.
pub fn erm_cnn_regression(data: &LabeledSet) -> Result<Predictor, TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let d = data.dim();
    let n = data.len();
    let map = FeatureMap::PerCoordinateSquares;
    let mut a = Matrix::zeros(n, d + 1);
    for (row, x) in data.points.iter().enumerate() {
        let f = map.apply(x);
        for j in 0..d {
            a[(row, j)] = f[j];
        }
        a[(row, d)] = 1.0;
    }
    let y = Vector::from_vec(data.labels.clone());
    let svd = a.svd(true, true);
    let eps = 1e-10 * svd.singular_values.max();
    let coef = svd
        .solve(&y, eps)
        .expect("SVD solve with cutoff cannot fail");
    Ok(Predictor::LinearFeatures {
        map,
        coef,
        mode: DecisionMode::RawReal,
    })
}

