//! Sample-complexity sweeps: (learner × n × trial) cells on a worker pool,
//! deterministic trial seeds, CSV output.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::algebra::{RngStream, Vector};
use crate::models::{Activation, ModelGeometry, PoolKind};
use crate::tasks::{
    alpha_quadratic_task, cifar_channel_norm, onehot_task, quadratic_regression_task,
    quadratic_split_task, texture_task, LabelKind, Task, TaskSpec,
};
use crate::training::{
    empirical_error, sample_init, symmetrized, DecisionMode, ErmCnnRegressionLearner,
    ErmCnnSignLearner, FeatureMap, GroupSampler, InitSpec, IterativeLearner, Kernel,
    KernelSignLearner, Learner, Predictor, RuleKind, TrainConfig, Trainable, UpdateRule,
};

use super::{fnv1a64, Config, ExpError};

// ---------------------------------------------------------------------------
// task construction from config
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub enum TaskConfig {
    OneHot { d: usize },
    QuadraticSplit { d: usize },
    AlphaQuadratic { alpha: Vec<f64> },
    Texture { d: usize },
    QuadraticRegressionDiag { alpha: Vec<f64> },
    CifarFile { path: PathBuf },
}

impl TaskConfig {
    pub fn from_config(cfg: &Config) -> Result<TaskConfig, ExpError> {
        let s = cfg.require("task")?;
        let kind = s.require("kind")?;
        Ok(match kind {
            "onehot" => TaskConfig::OneHot {
                d: s.parse("d")?.ok_or_else(|| missing("task", "d"))?,
            },
            "quadratic-split" => TaskConfig::QuadraticSplit {
                d: s.parse("d")?.ok_or_else(|| missing("task", "d"))?,
            },
            "alpha-quadratic" => TaskConfig::AlphaQuadratic {
                alpha: s
                    .parse_list("alpha")?
                    .ok_or_else(|| missing("task", "alpha"))?,
            },
            "texture" => TaskConfig::Texture {
                d: s.parse("d")?.ok_or_else(|| missing("task", "d"))?,
            },
            "quadratic-regression" => TaskConfig::QuadraticRegressionDiag {
                alpha: s
                    .parse_list("alpha")?
                    .ok_or_else(|| missing("task", "alpha"))?,
            },
            "cifar-file" => TaskConfig::CifarFile {
                path: PathBuf::from(s.require("file")?),
            },
            other => {
                return Err(ExpError::Config(format!("unknown task kind {other:?}")))
            }
        })
    }

    pub fn build(&self) -> Result<Task, ExpError> {
        Ok(match self {
            TaskConfig::OneHot { d } => onehot_task(*d)?,
            TaskConfig::QuadraticSplit { d } => quadratic_split_task(*d)?,
            TaskConfig::AlphaQuadratic { alpha } => {
                alpha_quadratic_task(Vector::from_vec(alpha.clone()))?
            }
            TaskConfig::Texture { d } => texture_task(*d)?,
            TaskConfig::QuadraticRegressionDiag { alpha } => {
                let m = crate::algebra::Matrix::from_diagonal(&Vector::from_vec(alpha.clone()));
                quadratic_regression_task(m)?
            }
            TaskConfig::CifarFile { path } => {
                let set = cifar_channel_norm(path)
                    .map_err(|e| ExpError::Config(format!("cifar: {e}")))?;
                Task {
                    name: "cifar-channel-norm".into(),
                    d: set.dim(),
                    kind: LabelKind::Sign,
                    spec: TaskSpec::Fixed {
                        points: set.points,
                        labels: set.labels,
                    },
                }
            }
        })
    }
}

fn missing(section: &str, key: &str) -> ExpError {
    ExpError::Config(format!("missing key {key} in [{section}]"))
}

// ---------------------------------------------------------------------------
// learner construction from config
// ---------------------------------------------------------------------------

/// A buildable learner description (everything the sweep needs to
/// instantiate the learner for a given task).
#[derive(Clone, Debug)]
pub struct LearnerSpec {
    pub kind: String,
    pub hidden: usize,
    pub eta: f64,
    pub steps: usize,
    pub sigma: f64,
    pub gamma: f64,
    pub head_only: bool,
    pub cnn_r: usize,
    pub cnn_k: usize,
    pub features: Option<String>,
    pub kernel: Option<String>,
    pub symmetrize: Option<String>,
}

impl LearnerSpec {
    pub fn named(kind: &str) -> LearnerSpec {
        LearnerSpec {
            kind: kind.to_string(),
            hidden: 16,
            eta: 0.02,
            steps: 300,
            sigma: 0.3,
            gamma: 0.9,
            head_only: false,
            cnn_r: 1,
            cnn_k: 2,
            features: None,
            kernel: None,
            symmetrize: None,
        }
    }

    pub fn from_section(s: &super::config::Section) -> Result<LearnerSpec, ExpError> {
        let mut spec = LearnerSpec::named(s.require("kind").map_err(ExpError::ConfigFile)?);
        spec.hidden = s.parse_or("hidden", spec.hidden)?;
        spec.eta = s.parse_or("eta", spec.eta)?;
        spec.steps = s.parse_or("steps", spec.steps)?;
        spec.sigma = s.parse_or("sigma", spec.sigma)?;
        spec.gamma = s.parse_or("gamma", spec.gamma)?;
        spec.head_only = s.parse_or("head_only", spec.head_only)?;
        spec.cnn_r = s.parse_or("r", spec.cnn_r)?;
        spec.cnn_k = s.parse_or("k", spec.cnn_k)?;
        spec.features = s.get("features").map(str::to_string);
        spec.kernel = s.get("kernel").map(str::to_string);
        spec.symmetrize = s.get("symmetrize").map(str::to_string);
        Ok(spec)
    }

    fn feature_map(&self) -> Result<FeatureMap, ExpError> {
        Ok(match self.features.as_deref() {
            None | Some("per-coordinate-squares") => FeatureMap::PerCoordinateSquares,
            Some("conv2-square-sums") => FeatureMap::Conv2SquareSums,
            Some(other) => match other.strip_prefix("block-square-sums:") {
                Some(b) => FeatureMap::BlockSquareSums {
                    blocks: b
                        .parse()
                        .map_err(|_| ExpError::Config(format!("bad block count {b:?}")))?,
                },
                None => {
                    return Err(ExpError::Config(format!("unknown feature map {other:?}")))
                }
            },
        })
    }

    /// Instantiate for a task of dimension `d` and the given label kind.
    pub fn build(&self, d: usize, label: LabelKind) -> Result<Arc<dyn Learner>, ExpError> {
        let rule = |kind: RuleKind, steps: usize| UpdateRule::new(kind, steps);
        let base: Arc<dyn Learner> = match self.kind.as_str() {
            "fc-gd" | "fc-momentum" | "fc-adam" | "fc-adagrad" | "fc-newton" => {
                let kind = match self.kind.as_str() {
                    "fc-gd" => RuleKind::Gd { eta: self.eta },
                    "fc-momentum" => RuleKind::GdMomentum {
                        eta: self.eta,
                        gamma: self.gamma,
                    },
                    "fc-adam" => RuleKind::adam(self.eta),
                    "fc-adagrad" => RuleKind::adagrad(self.eta),
                    _ => RuleKind::Newton {
                        eta: self.eta,
                        ridge: 0.0,
                    },
                };
                let geometry = ModelGeometry::fc(vec![d, self.hidden, 1], Activation::Quadratic)
                    .map_err(|e| ExpError::Config(e.to_string()))?;
                let cfg = match label {
                    LabelKind::Sign => TrainConfig::sign_task(
                        geometry,
                        InitSpec::gaussian(self.sigma),
                        rule(kind, self.steps),
                    ),
                    LabelKind::Real => TrainConfig::regression(
                        geometry,
                        InitSpec::gaussian(self.sigma),
                        rule(kind, self.steps),
                    ),
                };
                Arc::new(IterativeLearner {
                    label: self.kind.clone(),
                    config: cfg,
                })
            }
            "cnn-gd" => {
                let geometry = ModelGeometry::cnn(d, self.cnn_r, self.cnn_k, PoolKind::SumOfSquares)
                    .map_err(|e| ExpError::Config(e.to_string()))?;
                let mut cfg = match label {
                    LabelKind::Sign => TrainConfig::sign_task(
                        geometry,
                        InitSpec::gaussian(self.sigma),
                        rule(RuleKind::Gd { eta: self.eta }, self.steps),
                    ),
                    LabelKind::Real => TrainConfig::regression(
                        geometry,
                        InitSpec::gaussian(self.sigma),
                        rule(RuleKind::Gd { eta: self.eta }, self.steps),
                    ),
                };
                if self.head_only {
                    cfg = cfg.with_trainable(Trainable::CnnHeadOnly);
                }
                Arc::new(IterativeLearner {
                    label: self.kind.clone(),
                    config: cfg,
                })
            }
            "erm-cnn-sign" => Arc::new(ErmCnnSignLearner {
                features: self.feature_map()?,
            }),
            "erm-cnn-regression" => Arc::new(ErmCnnRegressionLearner),
            "kernel-sign" => {
                let kernel = match self.kernel.as_deref() {
                    None | Some("quadratic-dot") => Kernel::QuadraticDot,
                    Some("linear") => Kernel::Linear,
                    Some(other) => {
                        return Err(ExpError::Config(format!("unknown kernel {other:?}")))
                    }
                };
                Arc::new(KernelSignLearner { kernel })
            }
            "bayes-quadratic" => Arc::new(crate::training::BayesQuadraticLearner),
            other => return Err(ExpError::Config(format!("unknown learner kind {other:?}"))),
        };
        Ok(match self.symmetrize.as_deref() {
            None => base,
            Some(g) => {
                let sampler = match g {
                    "haar-orthogonal" => GroupSampler::HaarOrthogonal,
                    "uniform-permutation" => GroupSampler::UniformPermutation,
                    "uniform-sign-flip" => GroupSampler::UniformSignFlip,
                    "identity" => GroupSampler::Identity,
                    other => {
                        return Err(ExpError::Config(format!(
                            "unknown symmetrization group {other:?}"
                        )))
                    }
                };
                Arc::new(symmetrized(base, sampler))
            }
        })
    }
}

// ---------------------------------------------------------------------------
// the sweep itself
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub task: TaskConfig,
    pub learners: Vec<LearnerSpec>,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub test_size: usize,
    pub base_seed: u64,
    pub output: Option<PathBuf>,
}

impl SweepConfig {
    pub fn from_config(cfg: &Config) -> Result<SweepConfig, ExpError> {
        let task = TaskConfig::from_config(cfg)?;
        let learners = cfg
            .all("learner")
            .map(LearnerSpec::from_section)
            .collect::<Result<Vec<_>, _>>()?;
        if learners.is_empty() {
            return Err(ExpError::Config("need at least one [learner]".into()));
        }
        let s = cfg.require("sweep")?;
        let out = SweepConfig {
            task,
            learners,
            n_grid: s
                .parse_list("n_grid")?
                .ok_or_else(|| missing("sweep", "n_grid"))?,
            trials: s.parse_or("trials", 50)?,
            test_size: s.parse_or("test_size", 10_000)?,
            base_seed: s.parse_or("base_seed", 42u64)?,
            output: s.get("output").map(PathBuf::from),
        };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), ExpError> {
        if !self.n_grid.windows(2).all(|w| w[0] < w[1]) || self.n_grid.is_empty() {
            return Err(ExpError::Config(
                "n_grid must be non-empty and strictly increasing".into(),
            ));
        }
        if self.trials < 1 {
            return Err(ExpError::Config("trials must be ≥ 1".into()));
        }
        if self.test_size < 100 {
            return Err(ExpError::Config("test_size must be ≥ 100".into()));
        }
        Ok(())
    }
}

/// One (task, learner, d, n, trial) measurement row.
#[derive(Clone, Debug)]
pub struct ExperimentRecord {
    pub task: String,
    pub learner: String,
    pub d: usize,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub train_error: f64,
    /// classification error rate in [0, 1] (sign tasks)
    pub test_error: Option<f64>,
    /// mean squared test loss (regression tasks)
    pub test_loss: Option<f64>,
    pub wall_ms: f64,
    pub note: String,
}

/// Test error by exact enumeration of a finite support, or on a fresh
/// i.i.d. test set otherwise.
pub fn test_error(task: &Task, pred: &Predictor, test_size: usize, rng: &mut RngStream) -> f64 {
    let data = match task.support() {
        Some(support) => crate::tasks::LabeledSet::new(
            support.iter().map(|(x, _)| x.clone()).collect(),
            support.iter().map(|(_, y)| *y).collect(),
            rng.seed(),
        ),
        None => task.sample_set(test_size, rng),
    };
    empirical_error(pred, &data)
}

/// Seed for one sweep cell: base ⊕ FNV-1a(task|learner|n|trial).
pub fn cell_seed(base: u64, task: &str, learner: &str, n: usize, trial: usize) -> u64 {
    base ^ fnv1a64(format!("{task}|{learner}|{n}|{trial}").as_bytes())
}

/// Run every (learner, n, trial) cell on the rayon pool. Rows come back
/// sorted by (learner, n, trial); failures become rows with error 1.0 and a
/// note, never a panic.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<ExperimentRecord>, ExpError> {
    cfg.validate()?;
    let task = cfg.task.build()?;
    let mut jobs = Vec::new();
    for spec in &cfg.learners {
        let learner = spec.build(task.d, task.kind)?;
        let name = learner.name();
        for &n in &cfg.n_grid {
            for trial in 0..cfg.trials {
                jobs.push((Arc::clone(&learner), name.clone(), n, trial));
            }
        }
    }
    let task = Arc::new(task);
    let mut records: Vec<ExperimentRecord> = jobs
        .into_par_iter()
        .map(|(learner, name, n, trial)| {
            let task = Arc::clone(&task);
            let seed = cell_seed(cfg.base_seed, &task.name, &name, n, trial);
            let started = Instant::now();
            let rng = RngStream::new(seed);
            let data = task.sample_set(n, &mut rng.child(0));
            let outcome = learner.train(&data, &mut rng.child(1));
            let wall_ms = started.elapsed().as_secs_f64() * 1e3;
            let mut rec = ExperimentRecord {
                task: task.name.clone(),
                learner: name,
                d: task.d,
                n,
                trial,
                seed,
                train_error: 1.0,
                test_error: None,
                test_loss: None,
                wall_ms,
                note: String::new(),
            };
            match outcome {
                Ok(pred) => {
                    rec.train_error = empirical_error(&pred, &data);
                    let err = test_error(&task, &pred, cfg.test_size, &mut rng.child(2));
                    match task.kind {
                        LabelKind::Sign => rec.test_error = Some(err),
                        LabelKind::Real => rec.test_loss = Some(err),
                    }
                    rec.wall_ms = started.elapsed().as_secs_f64() * 1e3;
                }
                Err(e) => {
                    rec.note = format!("failed: {e}");
                    match task.kind {
                        LabelKind::Sign => rec.test_error = Some(1.0),
                        LabelKind::Real => rec.test_loss = Some(f64::INFINITY),
                    }
                }
            }
            rec
        })
        .collect();
    records.sort_by(|a, b| {
        (&a.learner, a.n, a.trial).cmp(&(&b.learner, b.n, b.trial))
    });
    Ok(records)
}

/// Schema-stable CSV: stamp lines, fixed column order, RFC quoting.
pub fn write_records_csv<W: std::io::Write>(
    mut out: W,
    records: &[ExperimentRecord],
    config_hash: u64,
    base_seed: u64,
) -> Result<(), ExpError> {
    out.write_all(super::stamp_lines(config_hash, base_seed).as_bytes())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "task",
        "learner",
        "d",
        "n",
        "trial",
        "seed",
        "train_error",
        "test_error",
        "test_loss",
        "wall_ms",
        "note",
    ])?;
    for r in records {
        w.write_record([
            r.task.as_str(),
            r.learner.as_str(),
            &r.d.to_string(),
            &r.n.to_string(),
            &r.trial.to_string(),
            &r.seed.to_string(),
            &format!("{}", r.train_error),
            &r.test_error.map(|v| v.to_string()).unwrap_or_default(),
            &r.test_loss.map(|v| v.to_string()).unwrap_or_default(),
            &format!("{:.3}", r.wall_ms),
            r.note.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a records CSV back (skipping stamp lines); used by `plot`.
pub fn read_records_csv<R: std::io::BufRead>(input: R) -> Result<Vec<ExperimentRecord>, ExpError> {
    let mut body = String::new();
    for line in input.lines() {
        let line = line?;
        if line.starts_with('#') {
            continue;
        }
        body.push_str(&line);
        body.push('\n');
    }
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse_f = |s: &str| -> Option<f64> {
            if s.is_empty() {
                None
            } else {
                s.parse().ok()
            }
        };
        out.push(ExperimentRecord {
            task: rec[0].to_string(),
            learner: rec[1].to_string(),
            d: rec[2].parse().unwrap_or(0),
            n: rec[3].parse().unwrap_or(0),
            trial: rec[4].parse().unwrap_or(0),
            seed: rec[5].parse().unwrap_or(0),
            train_error: rec[6].parse().unwrap_or(f64::NAN),
            test_error: parse_f(&rec[7]),
            test_loss: parse_f(&rec[8]),
            wall_ms: rec[9].parse().unwrap_or(0.0),
            note: rec[10].to_string(),
        });
    }
    Ok(out)
}

/// Mean test error per (learner, n); NaN-free. Used by plots and trend
/// checks.
pub fn mean_curve(records: &[ExperimentRecord], learner: &str) -> Vec<(usize, f64)> {
    let mut by_n: std::collections::BTreeMap<usize, (f64, usize)> = Default::default();
    for r in records.iter().filter(|r| r.learner == learner) {
        if let Some(e) = r.test_error.or(r.test_loss) {
            if e.is_finite() {
                let entry = by_n.entry(r.n).or_insert((0.0, 0));
                entry.0 += e;
                entry.1 += 1;
            }
        }
    }
    by_n
        .into_iter()
        .map(|(n, (sum, count))| (n, sum / count.max(1) as f64))
        .collect()
}

/// Flags (does not fail) n-grid points where the mean error increased by
/// more than two standard errors relative to the previous point.
pub fn monotone_trend_violations(records: &[ExperimentRecord], learner: &str) -> Vec<usize> {
    let mut by_n: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
    for r in records.iter().filter(|r| r.learner == learner) {
        if let Some(e) = r.test_error.or(r.test_loss) {
            if e.is_finite() {
                by_n.entry(r.n).or_default().push(e);
            }
        }
    }
    let stats: Vec<(usize, f64, f64)> = by_n
        .into_iter()
        .map(|(n, v)| {
            let count = v.len() as f64;
            let mean = v.iter().sum::<f64>() / count;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / count.max(2.0);
            (n, mean, (var / count).sqrt())
        })
        .collect();
    let mut flagged = Vec::new();
    for w in stats.windows(2) {
        let (_, m0, s0) = w[0];
        let (n1, m1, s1) = w[1];
        if m1 > m0 + 2.0 * (s0 + s1) {
            flagged.push(n1);
        }
    }
    flagged
}

/// Plumbing used by figure1 for the n = 0 baseline: the untrained init
/// predictor of an iterative learner.
pub fn init_predictor(cfg: &TrainConfig, rng: &mut RngStream) -> Predictor {
    let w = sample_init(&cfg.geometry, &cfg.init, rng);
    Predictor::Model {
        weights: w,
        mode: match cfg.mode {
            DecisionMode::SignThreshold => DecisionMode::SignThreshold,
            DecisionMode::RawReal => DecisionMode::RawReal,
        },
    }
}
