//! Property-testing engine for algorithmic equivariance.
//!
//! Three check modes:
//! - **coupled**: transplant the sampled initialization across trajectories
//!   (W⁰ vs τ(g)(W⁰)), train on the original and the transformed data, and
//!   compare predictions at matched test points. This isolates the model and
//!   update-rule conditions from the initialization-distribution condition.
//! - **stepwise**: a single update from matched states, compared in weight
//!   space — the per-step invariance that the trajectory argument inducts on.
//! - **distributional**: for randomized learners, compare label frequencies
//!   at matched test points across independent training runs with a
//!   two-proportion z-test and Bonferroni correction.

pub mod grid;


use crate::algebra::{AlgebraError, GroupElement, RngStream, Vector};
use crate::models::{ModelError, ModelGeometry, ParamWeights};
use crate::stats::{normal_quantile, two_proportion_z};
use crate::tasks::LabeledSet;
use crate::training::{
    run_iterative_from, sample_init, Learner, OptState, RuleKind, TrainConfig, TrainError,
};

#[derive(Debug, thiserror::Error)]
pub enum EquivError {
    #[error("τ is undefined for this model/group combination")]
    TauUndefined,
    #[error("distributional check needs at least 50 trials, got {got}")]
    InsufficientTrials { got: usize },
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckMode {
    Coupled,
    Stepwise,
    Distributional,
}

impl std::fmt::Display for CheckMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CheckMode::Coupled => "coupled",
            CheckMode::Stepwise => "stepwise",
            CheckMode::Distributional => "distributional",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Between the pass threshold and the fail margin; rerun longer before
    /// claiming either.
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Pass/fail margins. A verdict is `Pass` only below `pass`, `Fail` only
/// above `fail`; the guard band in between maps to `Inconclusive`.
#[derive(Clone, Copy, Debug)]
pub struct Thresholds {
    pub pass: f64,
    pub fail: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        // relative 1e-6 at T ≤ 100, d ≤ 16; fail only above 1e-2
        Thresholds {
            pass: 1e-6,
            fail: 1e-2,
        }
    }
}

impl Thresholds {
    pub fn verdict(&self, discrepancy: f64) -> Verdict {
        if discrepancy <= self.pass {
            Verdict::Pass
        } else if discrepancy > self.fail {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        }
    }
}

#[derive(Clone, Debug)]
pub struct EquivarianceReport {
    pub learner_id: String,
    pub group: String,
    pub mode: CheckMode,
    /// Per-group-element discrepancy (coupled/stepwise) or per-test-point
    /// label-frequency gap (distributional).
    pub per_g: Vec<f64>,
    pub max_discrepancy: f64,
    pub verdict: Verdict,
    pub threshold: f64,
    pub fail_margin: f64,
    pub trials: usize,
    pub seed: u64,
}

fn tau_flat(
    g: &GroupElement,
    geom: &ModelGeometry,
    theta: &[f64],
) -> Result<Vec<f64>, EquivError> {
    let w = ParamWeights::from_flat(geom, theta)?;
    match crate::models::tau(g, &w) {
        Ok(tw) => Ok(tw.to_flat()),
        Err(ModelError::TauUndefined) => Err(EquivError::TauUndefined),
        Err(e) => Err(e.into()),
    }
}

/// Coupled check: for each g, sample W⁰ once, run trajectory A on the data
/// from W⁰ and trajectory B on g(data) from τ(g)(W⁰), and report
/// `max_x |score_A(x) − score_B(g(x))| / (1 + max_x |score_A(x)|)`.
pub fn check_coupled(
    cfg: &TrainConfig,
    data: &LabeledSet,
    gs: &[GroupElement],
    test_points: &[Vector],
    thresholds: Thresholds,
    rng: &mut RngStream,
) -> Result<EquivarianceReport, EquivError> {
    if !matches!(cfg.geometry, ModelGeometry::Fc { .. }) {
        return Err(EquivError::TauUndefined);
    }
    let seed = rng.seed();
    let mut per_g = Vec::with_capacity(gs.len());
    for (i, g) in gs.iter().enumerate() {
        let mut init_rng = rng.child(i as u64);
        let w0 = sample_init(&cfg.geometry, &cfg.init, &mut init_rng);
        per_g.push(coupled_discrepancy(cfg, data, g, test_points, w0)?);
    }
    let max = per_g.iter().fold(0.0f64, |a, &v| a.max(v));
    Ok(EquivarianceReport {
        learner_id: format!("{}-{}", cfg.rule.kind.name(), cfg.rule.steps),
        group: group_name(gs),
        mode: CheckMode::Coupled,
        per_g,
        max_discrepancy: max,
        verdict: thresholds.verdict(max),
        threshold: thresholds.pass,
        fail_margin: thresholds.fail,
        trials: gs.len(),
        seed,
    })
}

/// One coupled run from explicit initial weights; returns the relative
/// prediction discrepancy.
pub fn coupled_discrepancy(
    cfg: &TrainConfig,
    data: &LabeledSet,
    g: &GroupElement,
    test_points: &[Vector],
    w0: ParamWeights,
) -> Result<f64, EquivError> {
    let w0_flat = w0.to_flat();
    let w0_b = ParamWeights::from_flat(&cfg.geometry, &tau_flat(g, &cfg.geometry, &w0_flat)?)?;
    let (pred_a, _) = run_iterative_from(cfg, w0, data, false)?;
    let data_b = data.transformed(g)?;
    let (pred_b, _) = run_iterative_from(cfg, w0_b, &data_b, false)?;
    let mut num = 0.0f64;
    let mut scale = 0.0f64;
    for x in test_points {
        let sa = pred_a.score(x);
        let sb = pred_b.score(&g.apply(x)?);
        num = num.max((sa - sb).abs());
        scale = scale.max(sa.abs());
    }
    Ok(num / (1.0 + scale))
}

/// One-step weight-space comparison:
/// `‖τ(g)(F(W, data)) − F(τ(g)(W), g(data))‖_max`.
pub fn check_step_invariance(
    kind: &RuleKind,
    cfg: &TrainConfig,
    w: &ParamWeights,
    data: &LabeledSet,
    g: &GroupElement,
) -> Result<f64, EquivError> {
    let geom = &cfg.geometry;
    let mask = cfg.trainable.mask(geom);
    let theta = w.to_flat();

    let mut theta_a = theta.clone();
    let mut state_a = OptState::new(kind, theta_a.len());
    crate::training::apply_step(
        kind,
        &mut state_a,
        geom,
        &mut theta_a,
        &data.points,
        &data.labels,
        cfg.loss,
        &mask,
    )?;
    let lhs = tau_flat(g, geom, &theta_a)?;

    let mut theta_b = tau_flat(g, geom, &theta)?;
    let data_b = data.transformed(g)?;
    let mut state_b = OptState::new(kind, theta_b.len());
    crate::training::apply_step(
        kind,
        &mut state_b,
        geom,
        &mut theta_b,
        &data_b.points,
        &data_b.labels,
        cfg.loss,
        &mask,
    )?;

    Ok(lhs
        .iter()
        .zip(&theta_b)
        .fold(0.0f64, |a, (x, y)| a.max((x - y).abs())))
}

/// Distributional check for randomized learners: per-test-point label
/// frequencies across trials, two-proportion z-test, Bonferroni at `alpha`.
pub fn check_distributional(
    learner: &dyn Learner,
    data: &LabeledSet,
    g: &GroupElement,
    test_points: &[Vector],
    trials: usize,
    alpha: f64,
    rng: &mut RngStream,
) -> Result<EquivarianceReport, EquivError> {
    if trials < 50 {
        return Err(EquivError::InsufficientTrials { got: trials });
    }
    let seed = rng.seed();
    let data_b = data.transformed(g)?;
    let test_b: Vec<Vector> = test_points
        .iter()
        .map(|x| g.apply(x))
        .collect::<Result<_, _>>()?;
    let k = test_points.len();
    let mut pos_a = vec![0usize; k];
    let mut pos_b = vec![0usize; k];
    for t in 0..trials {
        let mut ra = rng.child(2 * t as u64);
        let mut rb = rng.child(2 * t as u64 + 1);
        let pa = learner.train(data, &mut ra)?;
        let pb = learner.train(&data_b, &mut rb)?;
        for (j, (xa, xb)) in test_points.iter().zip(&test_b).enumerate() {
            if pa.predict(xa) > 0.0 {
                pos_a[j] += 1;
            }
            if pb.predict(xb) > 0.0 {
                pos_b[j] += 1;
            }
        }
    }
    let z_crit = normal_quantile(1.0 - alpha / (2.0 * k as f64));
    let mut per_g = Vec::with_capacity(k);
    let mut rejected = false;
    let mut max_gap = 0.0f64;
    for j in 0..k {
        let z = two_proportion_z(pos_a[j], trials, pos_b[j], trials);
        let gap = (pos_a[j] as f64 - pos_b[j] as f64).abs() / trials as f64;
        per_g.push(gap);
        max_gap = max_gap.max(gap);
        if z.abs() > z_crit {
            rejected = true;
        }
    }
    Ok(EquivarianceReport {
        learner_id: learner.name(),
        group: g.kind().to_string(),
        mode: CheckMode::Distributional,
        per_g,
        max_discrepancy: max_gap,
        verdict: if rejected { Verdict::Fail } else { Verdict::Pass },
        threshold: alpha,
        fail_margin: alpha,
        trials,
        seed,
    })
}

fn group_name(gs: &[GroupElement]) -> String {
    match gs.first() {
        None => "none".into(),
        Some(g) => {
            let k = g.kind();
            if gs.iter().all(|h| h.kind() == k) {
                k.to_string()
            } else {
                "mixed".into()
            }
        }
    }
}
