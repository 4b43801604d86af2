//! The channel-norm learning-curve experiment: a quadratic-pooling CNN
//! against a two-layer quadratic FC net, trained with full-batch GD, test
//! accuracy as a function of the training-set size.
//!
//! The Gaussian source labels +1 iff the first of two 32-dim channels has
//! the larger ℓ2 norm (exactly the split-quadratic task); the CIFAR source
//! relabels real images by the R-vs-G plane norms.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::algebra::RngStream;
use crate::models::{Activation, ModelGeometry, PoolKind};
use crate::tasks::{cifar_channel_norm, quadratic_split_task, LabelKind, Task, TaskSpec};
use crate::training::{
    empirical_error, run_iterative, InitSpec, RuleKind, Trainable, TrainConfig, UpdateRule,
};

use super::sweep::{cell_seed, init_predictor, test_error, ExperimentRecord};
use super::svg::{line_chart, Series};
use super::ExpError;

#[derive(Clone, Debug)]
pub enum Figure1Source {
    Gaussian,
    CifarFile(PathBuf),
}

#[derive(Clone, Debug)]
pub struct Figure1Config {
    pub channels: usize,
    pub channel_dim: usize,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub test_size: usize,
    pub base_seed: u64,
    pub source: Figure1Source,
    pub cnn_eta: f64,
    pub cnn_steps: usize,
    pub fc_eta: f64,
    pub fc_steps: usize,
    pub fc_hidden: usize,
    pub sigma: f64,
    /// Freeze the CNN filter and train head+bias only: the training problem
    /// is then convex, which sidesteps the w → 0 saddle of the 4-parameter
    /// model (the convergence construction does the same).
    pub cnn_head_only: bool,
}

impl Default for Figure1Config {
    fn default() -> Self {
        Figure1Config {
            channels: 2,
            channel_dim: 32,
            n_grid: vec![0, 10, 20, 50, 100, 200],
            trials: 10,
            test_size: 10_000,
            base_seed: 42,
            source: Figure1Source::Gaussian,
            cnn_eta: 0.004,
            cnn_steps: 3000,
            fc_eta: 0.05,
            fc_steps: 600,
            fc_hidden: 24,
            sigma: 0.3,
            cnn_head_only: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Figure1Outcome {
    pub records: Vec<ExperimentRecord>,
    /// (n, mean test accuracy) per learner
    pub cnn_curve: Vec<(usize, f64)>,
    pub fc_curve: Vec<(usize, f64)>,
    pub svg: String,
}

impl Figure1Outcome {
    /// Smallest n in the grid at which the mean accuracy reaches `target`.
    pub fn first_n_reaching(curve: &[(usize, f64)], target: f64) -> Option<usize> {
        curve.iter().find(|(_, acc)| *acc >= target).map(|(n, _)| *n)
    }

    pub fn accuracy_at(curve: &[(usize, f64)], n: usize) -> Option<f64> {
        curve.iter().find(|(m, _)| *m == n).map(|(_, a)| *a)
    }

    /// The learning-curve separation: the CNN reaches 0.9 somewhere in the
    /// grid, the FC net stays ≤ 0.75 there, and the FC's own first 0.9 (if
    /// any) needs at least 3× the samples. Returns a description of the
    /// first violated clause.
    pub fn separation_failure(&self) -> Option<String> {
        let cnn_n = match Self::first_n_reaching(&self.cnn_curve, 0.9) {
            Some(n) => n,
            None => return Some("CNN never reached 0.9 test accuracy".into()),
        };
        let fc_acc_there = Self::accuracy_at(&self.fc_curve, cnn_n).unwrap_or(1.0);
        if fc_acc_there > 0.75 {
            return Some(format!(
                "FC is already at {fc_acc_there:.3} accuracy at the CNN's threshold n = {cnn_n}"
            ));
        }
        if let Some(fc_n) = Self::first_n_reaching(&self.fc_curve, 0.9) {
            if fc_n < 3 * cnn_n {
                return Some(format!(
                    "FC reached 0.9 at n = {fc_n}, less than 3× the CNN's n = {cnn_n}"
                ));
            }
        }
        None
    }
}

fn build_task(cfg: &Figure1Config) -> Result<Task, ExpError> {
    match &cfg.source {
        Figure1Source::Gaussian => {
            if cfg.channels != 2 {
                return Err(ExpError::Config(
                    "the gaussian channel-norm source compares exactly two channels".into(),
                ));
            }
            let mut task = quadratic_split_task(cfg.channels * cfg.channel_dim)?;
            task.name = format!("gaussian-channel-norm-d{}", task.d);
            Ok(task)
        }
        Figure1Source::CifarFile(path) => {
            let set =
                cifar_channel_norm(path).map_err(|e| ExpError::Config(format!("cifar: {e}")))?;
            Ok(Task {
                name: "cifar-channel-norm".into(),
                d: set.dim(),
                kind: LabelKind::Sign,
                spec: TaskSpec::Fixed {
                    points: set.points,
                    labels: set.labels,
                },
            })
        }
    }
}

pub fn run_figure1(cfg: &Figure1Config) -> Result<Figure1Outcome, ExpError> {
    if cfg.trials < 1 || cfg.n_grid.is_empty() {
        return Err(ExpError::Config("need trials ≥ 1 and a non-empty n grid".into()));
    }
    let task = Arc::new(build_task(cfg)?);
    let d = task.d;
    let cnn_geom = ModelGeometry::cnn(d, cfg.channels, 1, PoolKind::SumOfSquares)
        .map_err(|e| ExpError::Config(e.to_string()))?;
    let fc_geom = ModelGeometry::fc(vec![d, cfg.fc_hidden, 1], Activation::Quadratic)
        .map_err(|e| ExpError::Config(e.to_string()))?;
    // The CNN trains its head on the summed loss at a constant rate (the
    // head problem is convex; the filter keeps near-unit scale so pooled
    // features bite). The FC net divides its rate by n — mean-loss GD —
    // because the quadratic net diverges if the summed gradient grows with n.
    let cnn_init = InitSpec {
        kind: crate::training::InitKind::GaussianIid { sigma: cfg.sigma },
        layer_scales: Some(vec![1.0 / cfg.sigma, 1.0, 1.0]),
    };
    let mut jobs: Vec<(&'static str, TrainConfig, usize, usize)> = Vec::new();
    for &n in &cfg.n_grid {
        for trial in 0..cfg.trials {
            let mut cnn = TrainConfig::sign_task(
                cnn_geom.clone(),
                cnn_init.clone(),
                UpdateRule::new(RuleKind::Gd { eta: cfg.cnn_eta }, cfg.cnn_steps),
            );
            if cfg.cnn_head_only {
                cnn = cnn.with_trainable(Trainable::CnnHeadOnly);
            }
            let fc = TrainConfig::sign_task(
                fc_geom.clone(),
                InitSpec::gaussian(cfg.sigma),
                UpdateRule::new(
                    RuleKind::Gd {
                        eta: cfg.fc_eta / n.max(1) as f64,
                    },
                    cfg.fc_steps,
                ),
            );
            jobs.push(("cnn-gd", cnn, n, trial));
            jobs.push(("fc-gd", fc, n, trial));
        }
    }

    let mut records: Vec<ExperimentRecord> = jobs
        .into_par_iter()
        .map(|(name, train_cfg, n, trial)| {
            let task = Arc::clone(&task);
            let seed = cell_seed(cfg.base_seed, &task.name, name, n, trial);
            let started = Instant::now();
            let rng = RngStream::new(seed);
            let mut rec = ExperimentRecord {
                task: task.name.clone(),
                learner: name.to_string(),
                d,
                n,
                trial,
                seed,
                train_error: 0.0,
                test_error: None,
                test_loss: None,
                wall_ms: 0.0,
                note: String::new(),
            };
            let outcome = if n == 0 {
                // n = 0: the untrained init predictor is the baseline
                Ok(init_predictor(&train_cfg, &mut rng.child(1)))
            } else {
                let data = task.sample_set(n, &mut rng.child(0));
                run_iterative(&train_cfg, &data, &mut rng.child(1), false).map(|(p, _)| {
                    rec.train_error = empirical_error(&p, &data);
                    p
                })
            };
            match outcome {
                Ok(pred) => {
                    rec.test_error =
                        Some(test_error(&task, &pred, cfg.test_size, &mut rng.child(2)));
                }
                Err(e) => {
                    rec.train_error = 1.0;
                    rec.test_error = Some(1.0);
                    rec.note = format!("failed: {e}");
                }
            }
            rec.wall_ms = started.elapsed().as_secs_f64() * 1e3;
            rec
        })
        .collect();
    records.sort_by(|a, b| (&a.learner, a.n, a.trial).cmp(&(&b.learner, b.n, b.trial)));

    let curve = |learner: &str| -> Vec<(usize, f64)> {
        super::sweep::mean_curve(&records, learner)
            .into_iter()
            .map(|(n, err)| (n, 1.0 - err))
            .collect()
    };
    let cnn_curve = curve("cnn-gd");
    let fc_curve = curve("fc-gd");
    let svg = line_chart(
        &format!("channel-norm task, d = {d}"),
        "training samples n",
        "test accuracy",
        &[
            Series {
                label: "CNN + GD".into(),
                points: cnn_curve.iter().map(|&(n, a)| (n as f64, a)).collect(),
            },
            Series {
                label: "FC + GD".into(),
                points: fc_curve.iter().map(|&(n, a)| (n as f64, a)).collect(),
            },
        ],
        Some((0.4, 1.0)),
    );
    Ok(Figure1Outcome {
        records,
        cnn_curve,
        fc_curve,
        svg,
    })
}

