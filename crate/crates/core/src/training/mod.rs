//! The iterative-learner harness and the closed-form learners it is compared
//! against.
//!
//! `run_iterative` executes exactly `T` steps of a chosen update rule on the
//! summed surrogate loss (logistic for sign tasks, squared for regression)
//! from a sampled initialization, and returns a predictor plus an optional
//! per-step trace. The closed-form learners (feature-space ERM, kernel
//! regression, the Bayes posterior-mean quadratic regressor) and the
//! symmetrization wrapper live in the submodules.

mod bayes;
mod erm;
mod kernel;
mod rules;

#[cfg(test)]
mod tests;

use std::sync::Arc;

use crate::algebra::{AlgebraError, GroupElement, RngStream, Vector};
use crate::models::{loss_and_grad_flat, Loss, ModelError, ModelGeometry, ParamWeights};
use crate::sign_pm;
use crate::tasks::LabeledSet;

pub use bayes::{bayes_quadratic_regressor, BayesRegressor};
pub use erm::{erm_cnn_regression, erm_cnn_sign, ErmFlag, ErmResult, FeatureMap};
pub use kernel::{kernel_regression_sign, pseudo_inverse, Kernel};
pub use rules::{apply_step, OptState, RuleKind, UpdateRule};

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("training diverged (non-finite loss) at step {step}")]
    Diverged { step: usize },
    #[error("Newton Hessian is singular beyond ridge rescue (condition number {cond:.3e})")]
    SingularHessian { cond: f64 },
    #[error("Newton requires a contiguous trainable parameter block")]
    NonContiguousNewtonSubset,
    #[error("kernel is asymmetric (max deviation {deviation:.3e})")]
    AsymmetricKernel { deviation: f64 },
    #[error("Gram matrix is not PSD within tolerance (min eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

// ---------------------------------------------------------------------------
// initialization
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub enum SymmetricDist {
    Rademacher,
    Uniform { half_width: f64 },
}

#[derive(Clone, Debug)]
pub enum InitKind {
    /// Every parameter i.i.d. N(0, σ²).
    GaussianIid { sigma: f64 },
    /// First layer (FC W₁ / CNN filter) all zero, the rest i.i.d. N(0, σ²).
    ZeroFirstLayerGaussianRest { sigma: f64 },
    /// Every parameter i.i.d. from a symmetric coordinatewise distribution.
    SymmetricCoordinatewise { dist: SymmetricDist },
    /// Gaussian with per-input-column scales on the first layer; deliberately
    /// not rotation invariant (used as an equivariance counterexample).
    AnisotropicGaussian { sigma: f64, col_scales: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct InitSpec {
    pub kind: InitKind,
    /// Optional per-layer scale multipliers (FC: one per weight matrix;
    /// CNN: filter, head, bias).
    pub layer_scales: Option<Vec<f64>>,
}

impl InitSpec {
    pub fn gaussian(sigma: f64) -> Self {
        assert!(sigma > 0.0);
        InitSpec {
            kind: InitKind::GaussianIid { sigma },
            layer_scales: None,
        }
    }

    pub fn zero_first_layer(sigma: f64) -> Self {
        assert!(sigma > 0.0);
        InitSpec {
            kind: InitKind::ZeroFirstLayerGaussianRest { sigma },
            layer_scales: None,
        }
    }

    pub fn symmetric(dist: SymmetricDist) -> Self {
        InitSpec {
            kind: InitKind::SymmetricCoordinatewise { dist },
            layer_scales: None,
        }
    }
}

/// Flat index ranges of the model's parameter groups (FC: one per layer;
/// CNN: filter, head, bias).
fn layer_ranges(geom: &ModelGeometry) -> Vec<std::ops::Range<usize>> {
    match geom {
        ModelGeometry::Fc { dims, .. } => {
            let mut out = Vec::new();
            let mut off = 0;
            for w in dims.windows(2) {
                let n = w[0] * w[1];
                out.push(off..off + n);
                off += n;
            }
            out
        }
        ModelGeometry::Cnn { r, k, .. } => {
            vec![0..*k, *k..*k + *r, *k + *r..*k + *r + 1]
        }
    }
}

/// Sample initial weights.
pub fn sample_init(geom: &ModelGeometry, spec: &InitSpec, rng: &mut RngStream) -> ParamWeights {
    let n = geom.num_params();
    let mut theta = vec![0.0; n];
    match &spec.kind {
        InitKind::GaussianIid { sigma } => {
            for t in theta.iter_mut() {
                *t = sigma * rng.gauss();
            }
        }
        InitKind::ZeroFirstLayerGaussianRest { sigma } => {
            let first = geom.first_layer_range();
            for (i, t) in theta.iter_mut().enumerate() {
                // the stream advances uniformly so the non-zero draws do not
                // depend on the first layer's size
                let v = sigma * rng.gauss();
                *t = if first.contains(&i) { 0.0 } else { v };
            }
        }
        InitKind::SymmetricCoordinatewise { dist } => {
            for t in theta.iter_mut() {
                *t = match dist {
                    SymmetricDist::Rademacher => rng.rademacher(),
                    SymmetricDist::Uniform { half_width } => {
                        (2.0 * rng.uniform() - 1.0) * half_width
                    }
                };
            }
        }
        InitKind::AnisotropicGaussian { sigma, col_scales } => {
            for t in theta.iter_mut() {
                *t = sigma * rng.gauss();
            }
            if let ModelGeometry::Fc { dims, .. } = geom {
                let (rows, cols) = (dims[1], dims[0]);
                for i in 0..rows {
                    for j in 0..cols {
                        theta[i * cols + j] *= col_scales[j % col_scales.len()];
                    }
                }
            }
        }
    }
    if let Some(scales) = &spec.layer_scales {
        for (range, s) in layer_ranges(geom).into_iter().zip(scales) {
            for t in &mut theta[range] {
                *t *= s;
            }
        }
    }
    ParamWeights::from_flat(geom, &theta).expect("geometry-consistent by construction")
}

// ---------------------------------------------------------------------------
// predictors
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecisionMode {
    /// label = sign(score), with sign(0) = +1
    SignThreshold,
    /// label = score
    RawReal,
}

/// A trained or closed-form hypothesis. Scoring panics on dimension mismatch
/// (a predictor is always evaluated on its own task's inputs).
#[derive(Clone, Debug)]
pub enum Predictor {
    Model {
        weights: ParamWeights,
        mode: DecisionMode,
    },
    LinearFeatures {
        map: FeatureMap,
        /// feature coefficients followed by the constant term
        coef: Vector,
        mode: DecisionMode,
    },
    Kernel {
        kernel: Kernel,
        train_points: Vec<Vector>,
        alpha: Vector,
        mode: DecisionMode,
    },
    Constant {
        value: f64,
        mode: DecisionMode,
    },
    /// Predicts via composition: h(g(x)). Produced by the symmetrization
    /// wrapper.
    Composed {
        inner: Box<Predictor>,
        g: GroupElement,
    },
}

impl Predictor {
    pub fn score(&self, x: &Vector) -> f64 {
        match self {
            Predictor::Model { weights, .. } => {
                crate::models::score(weights, x).expect("dimension mismatch in predictor")
            }
            Predictor::LinearFeatures { map, coef, .. } => {
                let f = map.apply(x);
                let mut s = coef[coef.len() - 1];
                for i in 0..f.len() {
                    s += coef[i] * f[i];
                }
                s
            }
            Predictor::Kernel {
                kernel,
                train_points,
                alpha,
                ..
            } => train_points
                .iter()
                .zip(alpha.iter())
                .map(|(p, a)| a * kernel.eval(x, p))
                .sum(),
            Predictor::Constant { value, .. } => *value,
            Predictor::Composed { inner, g } => {
                inner.score(&g.apply(x).expect("dimension mismatch in predictor"))
            }
        }
    }

    pub fn mode(&self) -> DecisionMode {
        match self {
            Predictor::Model { mode, .. }
            | Predictor::LinearFeatures { mode, .. }
            | Predictor::Kernel { mode, .. }
            | Predictor::Constant { mode, .. } => *mode,
            Predictor::Composed { inner, .. } => inner.mode(),
        }
    }

    /// The emitted label: ±1 under sign thresholding, the raw score otherwise.
    pub fn predict(&self, x: &Vector) -> f64 {
        let s = self.score(x);
        match self.mode() {
            DecisionMode::SignThreshold => sign_pm(s),
            DecisionMode::RawReal => s,
        }
    }
}

/// Fraction of sign disagreements (sign mode) or mean squared error (raw
/// mode) on a labeled set.
pub fn empirical_error(pred: &Predictor, data: &LabeledSet) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    match pred.mode() {
        DecisionMode::SignThreshold => {
            let wrong = data
                .points
                .iter()
                .zip(&data.labels)
                .filter(|(x, &y)| pred.predict(x) != y)
                .count();
            wrong as f64 / data.len() as f64
        }
        DecisionMode::RawReal => {
            data.points
                .iter()
                .zip(&data.labels)
                .map(|(x, &y)| (pred.predict(x) - y).powi(2))
                .sum::<f64>()
                / data.len() as f64
        }
    }
}

// ---------------------------------------------------------------------------
// the iterative harness
// ---------------------------------------------------------------------------

/// Which parameters the update rule may touch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Trainable {
    All,
    /// Freeze the CNN filter; train head and bias only (the "train the
    /// second layer" trick).
    CnnHeadOnly,
    Mask(Vec<bool>),
}

impl Trainable {
    pub fn mask(&self, geom: &ModelGeometry) -> Vec<bool> {
        let n = geom.num_params();
        match self {
            Trainable::All => vec![true; n],
            Trainable::CnnHeadOnly => {
                let mut m = vec![false; n];
                let head = geom
                    .cnn_head_range()
                    .expect("CnnHeadOnly requires a CNN geometry");
                for i in head {
                    m[i] = true;
                }
                m
            }
            Trainable::Mask(m) => {
                assert_eq!(m.len(), n);
                m.clone()
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub geometry: ModelGeometry,
    pub init: InitSpec,
    pub rule: UpdateRule,
    pub trainable: Trainable,
    pub loss: Loss,
    pub mode: DecisionMode,
}

impl TrainConfig {
    /// Sign-task configuration: logistic surrogate, sign-threshold output.
    pub fn sign_task(geometry: ModelGeometry, init: InitSpec, rule: UpdateRule) -> Self {
        TrainConfig {
            geometry,
            init,
            rule,
            trainable: Trainable::All,
            loss: Loss::Logistic,
            mode: DecisionMode::SignThreshold,
        }
    }

    /// Regression configuration: squared loss, raw output.
    pub fn regression(geometry: ModelGeometry, init: InitSpec, rule: UpdateRule) -> Self {
        TrainConfig {
            geometry,
            init,
            rule,
            trainable: Trainable::All,
            loss: Loss::Squared,
            mode: DecisionMode::RawReal,
        }
    }

    pub fn with_trainable(mut self, t: Trainable) -> Self {
        self.trainable = t;
        self
    }
}

#[derive(Clone, Debug, Default)]
pub struct TrainTrace {
    /// Training loss at every visited iterate, `T+1` values.
    pub losses: Vec<f64>,
    /// Flat weight snapshots at every iterate when tracing is on.
    pub snapshots: Option<Vec<Vec<f64>>>,
}

/// Iterative training from a sampled initialization.
pub fn run_iterative(
    cfg: &TrainConfig,
    data: &LabeledSet,
    rng: &mut RngStream,
    trace: bool,
) -> Result<(Predictor, TrainTrace), TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let w0 = sample_init(&cfg.geometry, &cfg.init, rng);
    run_iterative_from(cfg, w0, data, trace)
}

/// Same, from explicit initial weights (the coupled equivariance checks need
/// to transplant W⁰ across trajectories).
pub fn run_iterative_from(
    cfg: &TrainConfig,
    w0: ParamWeights,
    data: &LabeledSet,
    trace: bool,
) -> Result<(Predictor, TrainTrace), TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let geom = &cfg.geometry;
    let mask = cfg.trainable.mask(geom);
    let mut theta = w0.to_flat();
    let mut state = OptState::new(&cfg.rule.kind, theta.len());
    let mut tr = TrainTrace {
        losses: Vec::with_capacity(cfg.rule.steps + 1),
        snapshots: trace.then(|| Vec::with_capacity(cfg.rule.steps + 1)),
    };
    for step in 0..cfg.rule.steps {
        if let Some(s) = tr.snapshots.as_mut() {
            s.push(theta.clone());
        }
        let loss_here = rules::apply_step(
            &cfg.rule.kind,
            &mut state,
            geom,
            &mut theta,
            &data.points,
            &data.labels,
            cfg.loss,
            &mask,
        )?;
        if !loss_here.is_finite() {
            return Err(TrainError::Diverged { step });
        }
        tr.losses.push(loss_here);
    }
    let final_loss =
        loss_and_grad_flat::<f64>(geom, &theta, &data.points, &data.labels, cfg.loss).0;
    if !final_loss.is_finite() {
        return Err(TrainError::Diverged {
            step: cfg.rule.steps,
        });
    }
    tr.losses.push(final_loss);
    if let Some(s) = tr.snapshots.as_mut() {
        s.push(theta.clone());
    }
    let weights = ParamWeights::from_flat(geom, &theta)?;
    Ok((
        Predictor::Model {
            weights,
            mode: cfg.mode,
        },
        tr,
    ))
}

// ---------------------------------------------------------------------------
// learners and symmetrization
// ---------------------------------------------------------------------------

/// Anything that maps a training set (plus fresh randomness) to a predictor.
pub trait Learner: Send + Sync {
    fn name(&self) -> String;
    fn train(&self, data: &LabeledSet, rng: &mut RngStream) -> Result<Predictor, TrainError>;
}

pub struct IterativeLearner {
    pub label: String,
    pub config: TrainConfig,
}

impl Learner for IterativeLearner {
    fn name(&self) -> String {
        self.label.clone()
    }
    fn train(&self, data: &LabeledSet, rng: &mut RngStream) -> Result<Predictor, TrainError> {
        run_iterative(&self.config, data, rng, false).map(|(p, _)| p)
    }
}

pub struct ErmCnnSignLearner {
    pub features: FeatureMap,
}

impl Learner for ErmCnnSignLearner {
    fn name(&self) -> String {
        format!("erm-cnn-sign[{}]", self.features)
    }
    fn train(&self, data: &LabeledSet, _rng: &mut RngStream) -> Result<Predictor, TrainError> {
        erm_cnn_sign(self.features.clone(), data).map(|r| r.predictor)
    }
}

pub struct ErmCnnRegressionLearner;

impl Learner for ErmCnnRegressionLearner {
    fn name(&self) -> String {
        "erm-cnn-regression".into()
    }
    fn train(&self, data: &LabeledSet, _rng: &mut RngStream) -> Result<Predictor, TrainError> {
        erm_cnn_regression(data)
    }
}

pub struct KernelSignLearner {
    pub kernel: Kernel,
}

impl Learner for KernelSignLearner {
    fn name(&self) -> String {
        format!("kernel-sign[{}]", self.kernel)
    }
    fn train(&self, data: &LabeledSet, _rng: &mut RngStream) -> Result<Predictor, TrainError> {
        kernel_regression_sign(self.kernel.clone(), data)
    }
}

pub struct BayesQuadraticLearner;

impl Learner for BayesQuadraticLearner {
    fn name(&self) -> String {
        "bayes-quadratic".into()
    }
    fn train(&self, data: &LabeledSet, _rng: &mut RngStream) -> Result<Predictor, TrainError> {
        bayes_quadratic_regressor(data).map(|b| b.predictor)
    }
}

/// Samplers over compact group families (Haar / uniform).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupSampler {
    HaarOrthogonal,
    UniformPermutation,
    UniformSignFlip,
    Identity,
}

impl GroupSampler {
    pub fn sample(&self, d: usize, rng: &mut RngStream) -> GroupElement {
        match self {
            GroupSampler::HaarOrthogonal => crate::algebra::haar_orthogonal(d, rng),
            GroupSampler::UniformPermutation => {
                GroupElement::permutation(rng.permutation(d)).expect("valid permutation")
            }
            GroupSampler::UniformSignFlip => {
                GroupElement::sign_flip((0..d).map(|_| rng.rademacher()).collect())
                    .expect("valid signs")
            }
            GroupSampler::Identity => GroupElement::identity(d),
        }
    }
}

impl std::fmt::Display for GroupSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            GroupSampler::HaarOrthogonal => "haar-orthogonal",
            GroupSampler::UniformPermutation => "uniform-permutation",
            GroupSampler::UniformSignFlip => "uniform-sign-flip",
            GroupSampler::Identity => "identity",
        };
        f.write_str(s)
    }
}

/// The symmetrization wrapper: draw one group element per training
/// invocation, train on the transformed data, predict via composition.
/// This makes any learner equivariant in distribution.
pub struct SymmetrizedLearner {
    pub inner: Arc<dyn Learner>,
    pub sampler: GroupSampler,
}

pub fn symmetrized(inner: Arc<dyn Learner>, sampler: GroupSampler) -> SymmetrizedLearner {
    SymmetrizedLearner { inner, sampler }
}

impl Learner for SymmetrizedLearner {
    fn name(&self) -> String {
        format!("sym[{}, {}]", self.inner.name(), self.sampler)
    }
    fn train(&self, data: &LabeledSet, rng: &mut RngStream) -> Result<Predictor, TrainError> {
        let g = self.sampler.sample(data.dim(), rng);
        let transformed = data.transformed(&g)?;
        let inner = self.inner.train(&transformed, rng)?;
        Ok(Predictor::Composed {
            inner: Box::new(inner),
            g,
        })
    }
}
