//! A desk-scale laboratory for equivariant training algorithms.
//!
//! The crate trains tiny fully-connected and convolutional models with a
//! family of iterative update rules, property-tests their behaviour under
//! orthogonal / permutation / sign-flip / general-linear transformations of
//! the input space, and checks the closed-form quantities that govern the
//! sample-complexity separations between those model families (disagreement
//! metric, Gaussian quadratic variance, Bayes regression floor, packing and
//! shattering constructions, projection concentration).
//!
//! Layout:
//!
//! - [`algebra`] — dense linear algebra helpers, seeded splittable RNG
//!   streams, group elements and the symmetric-space projector.
//! - [`models`] — FC and one-channel CNN forward passes, exact reverse-mode
//!   gradients, Hessians, the weight-space group action, serialization.
//! - [`training`] — the iterative-learner harness (GD, momentum, lp-reg GD,
//!   Newton, Adam, AdaGrad) plus closed-form learners (feature-space ERM,
//!   kernel regression, Bayes posterior-mean quadratic regressor) and the
//!   symmetrization wrapper.
//! - [`tasks`] — generators for every distribution/hypothesis pair used in
//!   the experiments, rotated variants, and a CIFAR-10 channel-norm loader.
//! - [`equivariance`] — coupled, stepwise and distributional equivariance
//!   checks and the full rule-by-group verdict grid.
//! - [`oracles`] — Monte-Carlo and closed-form implementations of the
//!   quantitative lemmas with cross-checks.
//! - [`exp`] — CLI front end: config files, sweeps, learning curves, CSV
//!   and SVG output.

pub mod algebra;
pub mod equivariance;
pub mod exp;
pub mod models;
pub mod oracles;
pub mod stats;
pub mod tasks;
pub mod training;

/// Sign convention used everywhere: `sign(0) = +1`.
#[inline]
pub fn sign_pm(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}
