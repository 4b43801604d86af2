//! The iterative update rules: GD, heavy-ball momentum, lp-regularized GD,
//! Newton with a trace-scaled ridge, Adam and AdaGrad.
//!
//! Momentum uses the two-point form `W^{t+1} = (1+γ)W^t − γW^{t−1} − η∇L`,
//! realized with a velocity buffer and `W^{-1} = W^0`. The lp penalty is
//! `λ‖θ‖_p^p` with subgradient 0 at 0. Frozen parameters have their gradient
//! masked to zero before any state update, so adaptive accumulators never
//! move them.

use crate::algebra::{Matrix, Vector};
use crate::models::{hessian, loss_and_grad_flat, Loss, ModelGeometry};

use super::TrainError;

#[derive(Clone, Debug, PartialEq)]
pub enum RuleKind {
    Gd {
        eta: f64,
    },
    GdMomentum {
        eta: f64,
        gamma: f64,
    },
    GdLpReg {
        eta: f64,
        p: f64,
        lambda: f64,
    },
    Newton {
        eta: f64,
        ridge: f64,
    },
    Adam {
        eta: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
    Adagrad {
        eta: f64,
        epsilon: f64,
    },
}

impl RuleKind {
    /// Adam with the usual defaults β₁ = 0.9, β₂ = 0.999, ε = 1e-8.
    pub fn adam(eta: f64) -> RuleKind {
        RuleKind::Adam {
            eta,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn adagrad(eta: f64) -> RuleKind {
        RuleKind::Adagrad {
            eta,
            epsilon: 1e-8,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RuleKind::Gd { .. } => "gd",
            RuleKind::GdMomentum { .. } => "gd-momentum",
            RuleKind::GdLpReg { .. } => "gd-lp-reg",
            RuleKind::Newton { .. } => "newton",
            RuleKind::Adam { .. } => "adam",
            RuleKind::Adagrad { .. } => "adagrad",
        }
    }
}

#[derive(Clone, Debug)]
pub struct UpdateRule {
    pub kind: RuleKind,
    pub steps: usize,
}

impl UpdateRule {
    pub fn new(kind: RuleKind, steps: usize) -> Self {
        let eta = match &kind {
            RuleKind::Gd { eta }
            | RuleKind::GdMomentum { eta, .. }
            | RuleKind::GdLpReg { eta, .. }
            | RuleKind::Newton { eta, .. }
            | RuleKind::Adam { eta, .. }
            | RuleKind::Adagrad { eta, .. } => *eta,
        };
        assert!(eta > 0.0, "learning rate must be positive");
        assert!(steps >= 1, "need at least one step");
        if let RuleKind::GdMomentum { gamma, .. } = &kind {
            assert!((0.0..1.0).contains(gamma), "momentum must be in [0,1)");
        }
        if let RuleKind::Newton { ridge, .. } = &kind {
            assert!(*ridge >= 0.0, "ridge must be non-negative");
        }
        UpdateRule { kind, steps }
    }
}

/// Optimizer state carried across steps.
#[derive(Clone, Debug)]
pub enum OptState {
    Stateless,
    Momentum { vel: Vec<f64> },
    Adam { m: Vec<f64>, v: Vec<f64>, t: u64 },
    Adagrad { acc: Vec<f64> },
}

impl OptState {
    pub fn new(kind: &RuleKind, n: usize) -> OptState {
        match kind {
            RuleKind::GdMomentum { .. } => OptState::Momentum { vel: vec![0.0; n] },
            RuleKind::Adam { .. } => OptState::Adam {
                m: vec![0.0; n],
                v: vec![0.0; n],
                t: 0,
            },
            RuleKind::Adagrad { .. } => OptState::Adagrad { acc: vec![0.0; n] },
            _ => OptState::Stateless,
        }
    }
}

/// One full-batch update in place. Returns the training loss at the point the
/// step was taken from (reg penalty included for GdLpReg).
#[allow(clippy::too_many_arguments)]
pub fn apply_step(
    kind: &RuleKind,
    state: &mut OptState,
    geom: &ModelGeometry,
    theta: &mut [f64],
    xs: &[Vector],
    ys: &[f64],
    loss: Loss,
    mask: &[bool],
) -> Result<f64, TrainError> {
    let (mut loss_val, mut g) = loss_and_grad_flat::<f64>(geom, theta, xs, ys, loss);
    if let RuleKind::GdLpReg { p, lambda, .. } = kind {
        for (i, t) in theta.iter().enumerate() {
            loss_val += lambda * t.abs().powf(*p);
            if *t != 0.0 {
                g[i] += lambda * p * t.abs().powf(p - 1.0) * t.signum();
            }
        }
    }
    for (gi, &m) in g.iter_mut().zip(mask) {
        if !m {
            *gi = 0.0;
        }
    }
    match (kind, state) {
        (RuleKind::Gd { eta } | RuleKind::GdLpReg { eta, .. }, _) => {
            for (t, gi) in theta.iter_mut().zip(&g) {
                *t -= eta * gi;
            }
        }
        (RuleKind::GdMomentum { eta, gamma }, OptState::Momentum { vel }) => {
            for ((t, v), gi) in theta.iter_mut().zip(vel.iter_mut()).zip(&g) {
                *v = gamma * *v - eta * gi;
                *t += *v;
            }
        }
        (
            RuleKind::Adam {
                eta,
                beta1,
                beta2,
                epsilon,
            },
            OptState::Adam { m, v, t },
        ) => {
            *t += 1;
            let bc1 = 1.0 - beta1.powi(*t as i32);
            let bc2 = 1.0 - beta2.powi(*t as i32);
            for i in 0..theta.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                theta[i] -= eta * mhat / (vhat.sqrt() + epsilon);
            }
        }
        (RuleKind::Adagrad { eta, epsilon }, OptState::Adagrad { acc }) => {
            for i in 0..theta.len() {
                acc[i] += g[i] * g[i];
                theta[i] -= eta * g[i] / (acc[i].sqrt() + epsilon);
            }
        }
        (RuleKind::Newton { eta, ridge }, _) => {
            newton_step(geom, theta, xs, ys, loss, mask, *eta, *ridge, &g)?;
        }
        _ => unreachable!("state constructed from the same rule kind"),
    }
    Ok(loss_val)
}

#[allow(clippy::too_many_arguments)]
fn newton_step(
    geom: &ModelGeometry,
    theta: &mut [f64],
    xs: &[Vector],
    ys: &[f64],
    loss: Loss,
    mask: &[bool],
    eta: f64,
    ridge: f64,
    g: &[f64],
) -> Result<(), TrainError> {
    // the trainable set must be one contiguous block for a dense solve
    let lo = mask.iter().position(|&m| m);
    let hi = mask.iter().rposition(|&m| m);
    let (lo, hi) = match (lo, hi) {
        (Some(lo), Some(hi)) => (lo, hi + 1),
        _ => return Ok(()), // nothing trainable
    };
    if mask[lo..hi].iter().any(|&m| !m) {
        return Err(TrainError::NonContiguousNewtonSubset);
    }
    let range = lo..hi;
    let n = range.len();
    let mut h = hessian(geom, theta, xs, ys, loss, Some(range.clone()))?;
    h = (&h + h.transpose()) / 2.0; // drop rounding asymmetry
    if ridge > 0.0 {
        for i in 0..n {
            h[(i, i)] += ridge;
        }
    }
    let rhs = Vector::from_fn(n, |i, _| g[lo + i]);
    // plain solve first; the trace-scaled ridge is a rescue for
    // near-singular Hessians, not a perturbation of the healthy path
    let solved = match try_solve(&h, &rhs) {
        Some(x) => x,
        None => {
            let lam = 1e-8 * h.trace() / n as f64;
            let mut hr = h.clone();
            for i in 0..n {
                hr[(i, i)] += lam;
            }
            match try_solve(&hr, &rhs) {
                Some(x) => x,
                None => {
                    let svd = h.svd(false, false);
                    let smax = svd.singular_values.max();
                    let smin = svd.singular_values.min();
                    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
                    return Err(TrainError::SingularHessian { cond });
                }
            }
        }
    };
    for i in 0..n {
        theta[lo + i] -= eta * solved[i];
    }
    Ok(())
}

/// LU solve accepted only when the relative residual is small.
fn try_solve(h: &Matrix, rhs: &Vector) -> Option<Vector> {
    let x = h.clone().lu().solve(rhs)?;
    if !x.iter().all(|v| v.is_finite()) {
        return None;
    }
    let resid = (h * &x - rhs).norm();
    (resid <= 1e-6 * (1.0 + rhs.norm())).then_some(x)
}
