use std::sync::Arc;

use super::*;
use crate::algebra::{haar_orthogonal, sym_projector, Matrix, RngStream};
use crate::models::{Activation, ModelGeometry, PoolKind};
use crate::tasks::{alpha_quadratic_task, onehot_task, quadratic_regression_task, texture_task};

fn linear_geom(d: usize) -> ModelGeometry {
    ModelGeometry::fc(vec![d, 1], Activation::Identity).unwrap()
}

#[test]
fn gd_one_step_matches_normal_equation_form() {
    // w1 = w0 − 2η X(Xᵀw0 − y); the 2 comes from the ½-free squared loss
    let mut rng = RngStream::new(1);
    let (d, n, eta) = (4, 6, 0.01);
    let xs: Vec<Vector> = (0..n).map(|_| rng.gauss_vector(d)).collect();
    let ys: Vec<f64> = (0..n).map(|_| rng.gauss()).collect();
    let data = LabeledSet::new(xs.clone(), ys.clone(), 0);
    let w0 = rng.gauss_vector(d);
    let cfg = TrainConfig::regression(
        linear_geom(d),
        InitSpec::gaussian(1.0),
        UpdateRule::new(RuleKind::Gd { eta }, 1),
    );
    let w0_weights = ParamWeights::from_flat(&cfg.geometry, w0.as_slice()).unwrap();
    let (pred, _) = run_iterative_from(&cfg, w0_weights, &data, false).unwrap();
    let got = match pred {
        Predictor::Model { weights, .. } => Vector::from_vec(weights.to_flat()),
        _ => unreachable!(),
    };
    let mut expect = w0.clone();
    for (x, &y) in xs.iter().zip(&ys) {
        expect -= x * (2.0 * eta * (w0.dot(x) - y));
    }
    assert!((got - expect).amax() < 1e-12);
}

#[test]
fn newton_solves_linear_least_squares_in_one_step() {
    let mut rng = RngStream::new(2);
    let (d, n) = (5, 12);
    let xs: Vec<Vector> = (0..n).map(|_| rng.gauss_vector(d)).collect();
    let w_true = rng.gauss_vector(d);
    let ys: Vec<f64> = xs.iter().map(|x| w_true.dot(x)).collect();
    let data = LabeledSet::new(xs, ys, 0);
    let cfg = TrainConfig::regression(
        linear_geom(d),
        InitSpec::gaussian(1.0),
        UpdateRule::new(RuleKind::Newton { eta: 1.0, ridge: 0.0 }, 1),
    );
    let (_, trace) = run_iterative(&cfg, &data, &mut rng, false).unwrap();
    assert!(
        *trace.losses.last().unwrap() <= 1e-18,
        "final loss {}",
        trace.losses.last().unwrap()
    );
}

#[test]
fn newton_reports_singular_hessian() {
    // duplicate direction: rank-1 data in d=3 leaves the Hessian singular and
    // no ridge rescue at zero ridge... the automatic 1e-8 trace ridge makes
    // the solve succeed, so force the failure with a hard-zero Hessian block:
    // purely frozen-but-contiguous subsets are skipped, so use a dataset with
    // zero inputs instead (H = 0 exactly).
    let d = 3;
    let xs = vec![Vector::zeros(d), Vector::zeros(d)];
    let ys = vec![1.0, -1.0];
    let data = LabeledSet::new(xs, ys, 0);
    let cfg = TrainConfig::regression(
        linear_geom(d),
        InitSpec::gaussian(1.0),
        UpdateRule::new(RuleKind::Newton { eta: 1.0, ridge: 0.0 }, 1),
    );
    let mut rng = RngStream::new(3);
    match run_iterative(&cfg, &data, &mut rng, false) {
        Err(TrainError::SingularHessian { .. }) => {}
        other => panic!("expected singular Hessian, got {other:?}"),
    }
}

#[test]
fn texture_cnn_head_only_training_reaches_zero_error() {
    // all 2d points, k=2 sum-of-squares CNN, second layer only
    let d = 10;
    let task = texture_task(d).unwrap();
    let support = task.support().unwrap();
    let data = LabeledSet::new(
        support.iter().map(|(x, _)| x.clone()).collect(),
        support.iter().map(|(_, y)| *y).collect(),
        0,
    );
    let geom = ModelGeometry::cnn(d, 1, 2, PoolKind::SumOfSquares).unwrap();
    let cfg = TrainConfig::sign_task(
        geom,
        InitSpec::gaussian(1.0),
        UpdateRule::new(RuleKind::Gd { eta: 0.1 }, 500),
    )
    .with_trainable(Trainable::CnnHeadOnly);
    let mut rng = RngStream::new(4);
    let (pred, trace) = run_iterative(&cfg, &data, &mut rng, false).unwrap();
    assert_eq!(empirical_error(&pred, &data), 0.0);
    // convex in (a, b): loss decreased
    assert!(trace.losses.last().unwrap() < trace.losses.first().unwrap());
}

#[test]
fn training_is_bit_reproducible() {
    let task = alpha_quadratic_task(Vector::from_vec(vec![1.0, -1.0, 2.0])).unwrap();
    let mut rng = RngStream::new(5);
    let data = task.sample_set(8, &mut rng);
    let geom = ModelGeometry::fc(vec![3, 4, 1], Activation::Quadratic).unwrap();
    let cfg = TrainConfig::sign_task(
        geom,
        InitSpec::gaussian(0.5),
        UpdateRule::new(RuleKind::adam(0.05), 40),
    );
    let run = |seed: u64| {
        let mut rng = RngStream::with_stream(seed, 9);
        let (_, t) = run_iterative(&cfg, &data, &mut rng, true).unwrap();
        t
    };
    let (a, b) = (run(77), run(77));
    assert_eq!(a.losses.len(), 41);
    let (sa, sb) = (a.snapshots.unwrap(), b.snapshots.unwrap());
    assert_eq!(sa.len(), 41);
    for (x, y) in sa.iter().zip(&sb) {
        assert_eq!(x, y, "snapshots must match bit-for-bit");
    }
    assert_eq!(a.losses, b.losses);
}

#[test]
fn gd_with_small_eta_is_monotone_on_convex_head_training() {
    // halve η until the loss trace is non-increasing; must terminate
    let d = 8;
    let task = texture_task(d).unwrap();
    let mut rng = RngStream::new(6);
    let data = task.sample_set(12, &mut rng);
    let geom = ModelGeometry::cnn(d, 1, 2, PoolKind::SumOfSquares).unwrap();
    let mut eta = 0.8;
    for _ in 0..20 {
        let cfg = TrainConfig::sign_task(
            geom.clone(),
            InitSpec::gaussian(1.0),
            UpdateRule::new(RuleKind::Gd { eta }, 100),
        )
        .with_trainable(Trainable::CnnHeadOnly);
        let mut init_rng = RngStream::with_stream(6, 1);
        let (_, trace) = run_iterative(&cfg, &data, &mut init_rng, false).unwrap();
        let monotone = trace.losses.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        if monotone {
            return;
        }
        eta /= 2.0;
    }
    panic!("halving schedule failed to reach a monotone run");
}

#[test]
fn adam_and_adagrad_leave_frozen_parameters_untouched() {
    let d = 6;
    let task = texture_task(d).unwrap();
    let mut rng = RngStream::new(7);
    let data = task.sample_set(6, &mut rng);
    let geom = ModelGeometry::cnn(d, 1, 2, PoolKind::SumOfSquares).unwrap();
    for kind in [RuleKind::adam(0.05), RuleKind::adagrad(0.1)] {
        let cfg = TrainConfig::sign_task(
            geom.clone(),
            InitSpec::gaussian(1.0),
            UpdateRule::new(kind, 25),
        )
        .with_trainable(Trainable::CnnHeadOnly);
        let mut r = RngStream::with_stream(7, 2);
        let (pred, trace) = run_iterative(&cfg, &data, &mut r, true).unwrap();
        let snaps = trace.snapshots.unwrap();
        let first = &snaps[0];
        let weights = match pred {
            Predictor::Model { weights, .. } => weights.to_flat(),
            _ => unreachable!(),
        };
        // filter = first k params frozen
        for i in 0..2 {
            assert_eq!(weights[i], first[i]);
        }
        assert!(weights[2..] != first[2..]);
    }
}

// ---------------------------------------------------------------------------
// feature-space ERM
// ---------------------------------------------------------------------------

#[test]
fn erm_sign_separates_realizable_diagonal_quadratic() {
    let task = alpha_quadratic_task(Vector::from_vec(vec![1.0, -1.0])).unwrap();
    let mut rng = RngStream::new(8);
    let data = task.sample_set(50, &mut rng);
    let res = erm_cnn_sign(FeatureMap::PerCoordinateSquares, &data).unwrap();
    assert_eq!(res.flag, ErmFlag::Separated);
    assert_eq!(res.train_error, 0.0);
}

#[test]
fn erm_sign_on_texture_generalizes_from_both_classes() {
    let d = 12;
    let task = texture_task(d).unwrap();
    let mut rng = RngStream::new(9);
    // draw until the 12-point sample has both classes (almost always)
    let data = loop {
        let s = task.sample_set(12, &mut rng);
        let pos = s.labels.iter().filter(|&&y| y > 0.0).count();
        if pos > 0 && pos < 12 {
            break s;
        }
    };
    let res = erm_cnn_sign(FeatureMap::Conv2SquareSums, &data).unwrap();
    assert_eq!(res.flag, ErmFlag::Separated);
    let support = task.support().unwrap();
    let full = LabeledSet::new(
        support.iter().map(|(x, _)| x.clone()).collect(),
        support.iter().map(|(_, y)| *y).collect(),
        0,
    );
    assert_eq!(empirical_error(&res.predictor, &full), 0.0);
}

#[test]
fn erm_sign_flags_degenerate_single_class_data() {
    let d = 8;
    let task = texture_task(d).unwrap();
    let support = task.support().unwrap();
    let pos: Vec<_> = support.iter().filter(|(_, y)| *y > 0.0).collect();
    let data = LabeledSet::new(
        pos.iter().map(|(x, _)| x.clone()).collect(),
        pos.iter().map(|(_, y)| *y).collect(),
        0,
    );
    let res = erm_cnn_sign(FeatureMap::Conv2SquareSums, &data).unwrap();
    assert_eq!(res.flag, ErmFlag::Degenerate);
    assert_eq!(res.train_error, 0.0);
    let mut rng = RngStream::new(10);
    assert_eq!(res.predictor.predict(&rng.gauss_vector(d)), 1.0);
}

#[test]
fn erm_sign_flags_non_separable_data() {
    // same point with both labels cannot be separated
    let x = Vector::from_vec(vec![1.0, 2.0]);
    let data = LabeledSet::new(vec![x.clone(), x], vec![1.0, -1.0], 0);
    let res = erm_cnn_sign(FeatureMap::PerCoordinateSquares, &data).unwrap();
    assert_eq!(res.flag, ErmFlag::NotSeparated);
    assert!(res.train_error > 0.0);
}

#[test]
fn erm_regression_recovers_diagonal_quadratic_exactly() {
    let d = 6;
    let alpha = Vector::from_vec(vec![1.5, -0.5, 2.0, 0.0, -3.0, 0.25]);
    let m = Matrix::from_diagonal(&alpha);
    let task = quadratic_regression_task(m).unwrap();
    let mut rng = RngStream::new(11);
    let data = task.sample_set(d + 1, &mut rng);
    let pred = erm_cnn_regression(&data).unwrap();
    match &pred {
        Predictor::LinearFeatures { coef, .. } => {
            for i in 0..d {
                assert!(
                    (coef[i] - alpha[i]).abs() < 1e-8,
                    "coef {i}: {} vs {}",
                    coef[i],
                    alpha[i]
                );
            }
            assert!(coef[d].abs() < 1e-8);
        }
        _ => unreachable!(),
    }
    let test = task.sample_set(500, &mut rng);
    assert!(empirical_error(&pred, &test) <= 1e-10);
}

#[test]
fn erm_regression_fits_single_point() {
    let data = LabeledSet::new(vec![Vector::from_vec(vec![1.0, 2.0])], vec![7.0], 0);
    let pred = erm_cnn_regression(&data).unwrap();
    assert!((pred.predict(&Vector::from_vec(vec![1.0, 2.0])) - 7.0).abs() < 1e-10);
    assert!(erm_cnn_regression(&LabeledSet::new(vec![], vec![], 0)).is_err());
}

#[test]
fn erm_regression_residual_matches_offdiagonal_energy() {
    // y = xᵀMx with off-diagonal part O: the diagonal-quadratic class can
    // only absorb diag(M), leaving E[(xᵀOx)²] = 2‖O‖_F² residual.
    let d = 4;
    let mut rng = RngStream::new(12);
    let m = rng.gauss_matrix(d, d);
    let task = quadratic_regression_task(m.clone()).unwrap();
    let data = task.sample_set(4000, &mut rng);
    let pred = erm_cnn_regression(&data).unwrap();
    let test = task.sample_set(20_000, &mut rng);
    let loss = empirical_error(&pred, &test);
    let sym = (&m + m.transpose()) / 2.0;
    let mut off_energy = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                off_energy += sym[(i, j)] * sym[(i, j)];
            }
        }
    }
    let expect = 2.0 * off_energy / 2.0; // 2‖O‖_F² with O the full off-diag sym part
    let expect = expect * 2.0; // ‖O‖_F² counts both triangles
    // generous tolerance: two nested Monte-Carlo approximations
    assert!(
        (loss - expect).abs() <= 0.15 * expect,
        "loss {loss}, expect {expect}"
    );
}

// ---------------------------------------------------------------------------
// kernel regression
// ---------------------------------------------------------------------------

#[test]
fn kernel_single_positive_point_predicts_its_class() {
    let x1 = Vector::from_vec(vec![1.0, 1.0]);
    let data = LabeledSet::new(vec![x1], vec![1.0], 0);
    let pred = kernel_regression_sign(Kernel::Linear, &data).unwrap();
    // +1 wherever K(x, x1) > 0
    assert_eq!(pred.predict(&Vector::from_vec(vec![2.0, 0.5])), 1.0);
    assert_eq!(pred.predict(&Vector::from_vec(vec![-2.0, -0.5])), -1.0);
}

#[test]
fn kernel_linear_separates_two_points() {
    let data = LabeledSet::new(
        vec![
            Vector::from_vec(vec![1.0, 0.0]),
            Vector::from_vec(vec![-1.0, 0.2]),
        ],
        vec![1.0, -1.0],
        0,
    );
    let pred = kernel_regression_sign(Kernel::Linear, &data).unwrap();
    assert_eq!(pred.predict(&data.points[0]), 1.0);
    assert_eq!(pred.predict(&data.points[1]), -1.0);
}

#[test]
fn quadratic_dot_kernel_predictions_are_rotation_equivariant() {
    let mut rng = RngStream::new(13);
    let d = 5;
    let xs: Vec<Vector> = (0..8).map(|_| rng.gauss_vector(d)).collect();
    let ys: Vec<f64> = (0..8).map(|_| rng.rademacher()).collect();
    let data = LabeledSet::new(xs, ys, 0);
    let g = haar_orthogonal(d, &mut rng);
    let rotated = data.transformed(&g).unwrap();
    let p1 = kernel_regression_sign(Kernel::QuadraticDot, &data).unwrap();
    let p2 = kernel_regression_sign(Kernel::QuadraticDot, &rotated).unwrap();
    for _ in 0..50 {
        let x = rng.gauss_vector(d);
        let s1 = p1.score(&x);
        let s2 = p2.score(&g.apply(&x).unwrap());
        assert!((s1 - s2).abs() <= 1e-9 * (1.0 + s1.abs()));
    }
}

#[test]
fn asymmetric_kernel_is_rejected() {
    let bad = Kernel::Custom(Arc::new(|u: &Vector, v: &Vector| u[0] * v.sum()));
    let data = LabeledSet::new(
        vec![
            Vector::from_vec(vec![1.0, 2.0]),
            Vector::from_vec(vec![3.0, -1.0]),
        ],
        vec![1.0, -1.0],
        0,
    );
    assert!(matches!(
        kernel_regression_sign(bad, &data),
        Err(TrainError::AsymmetricKernel { .. })
    ));
}

#[test]
fn indefinite_gram_is_rejected() {
    // K(u,v) = −uᵀv is symmetric but negative definite on generic data
    let bad = Kernel::Custom(Arc::new(|u: &Vector, v: &Vector| -u.dot(v)));
    let data = LabeledSet::new(
        vec![
            Vector::from_vec(vec![1.0, 0.0]),
            Vector::from_vec(vec![0.0, 1.0]),
        ],
        vec![1.0, -1.0],
        0,
    );
    assert!(matches!(
        kernel_regression_sign(bad, &data),
        Err(TrainError::NotPsd { .. })
    ));
}

#[test]
fn linear_kernel_reproduces_min_norm_interpolation_signs() {
    let mut rng = RngStream::new(14);
    let (d, n) = (6, 4);
    let xs: Vec<Vector> = (0..n).map(|_| rng.gauss_vector(d)).collect();
    let ys: Vec<f64> = (0..n).map(|_| rng.gauss()).collect();
    let data = LabeledSet::new(xs.clone(), ys.clone(), 0);
    let pred = kernel_regression_sign(Kernel::Linear, &data).unwrap();
    // direct min-norm least squares on the design matrix
    let mut design = Matrix::zeros(n, d);
    for (i, x) in xs.iter().enumerate() {
        design.row_mut(i).copy_from(&x.transpose());
    }
    let svd = design.svd(true, true);
    let eps = 1e-10 * svd.singular_values.max();
    let w = svd.solve(&Vector::from_vec(ys), eps).unwrap();
    for _ in 0..100 {
        let x = rng.gauss_vector(d);
        assert_eq!(pred.predict(&x), crate::sign_pm(w.dot(&x)));
    }
}

// ---------------------------------------------------------------------------
// Bayes quadratic regressor
// ---------------------------------------------------------------------------

#[test]
fn covariance_of_gaussian_quadratic_forms_is_squared_dot() {
    // The reduction the Bayes learner rests on, checked by brute force over
    // M at small d before anything else trusts it:
    // Cov(⟨M,uuᵀ⟩, ⟨M,vvᵀ⟩) = (uᵀv)².
    let mut rng = RngStream::new(15);
    for d in 2..=4usize {
        let u = rng.gauss_vector(d);
        let v = rng.gauss_vector(d);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let m = rng.gauss_matrix(d, d);
            let fu = (u.transpose() * &m * &u)[(0, 0)];
            let fv = (v.transpose() * &m * &v)[(0, 0)];
            let p = fu * fv; // both have mean zero exactly
            sum += p;
            sum_sq += p * p;
        }
        let est = crate::stats::McEstimate::from_sums(sum, sum_sq, n, 15);
        let expect = u.dot(&v).powi(2);
        assert!(
            (est.mean - expect).abs() <= 4.0 * est.std_error,
            "d={d}: mc {} vs closed form {expect} (se {})",
            est.mean,
            est.std_error
        );
    }
}

#[test]
fn bayes_prior_variance_is_norm_fourth() {
    let reg = bayes_quadratic_regressor(&LabeledSet::new(vec![], vec![], 0)).unwrap();
    let mut rng = RngStream::new(16);
    for _ in 0..10 {
        let x = rng.gauss_vector(5);
        assert_eq!(reg.predictor.predict(&x), 0.0);
        let expect = x.norm_squared().powi(2);
        assert!((reg.conditional_variance(&x) - expect).abs() <= 1e-9 * expect);
    }
}

#[test]
fn bayes_conditional_variance_equals_projector_residual() {
    let (d, n) = (5, 6);
    let mut rng = RngStream::new(17);
    for trial in 0..5 {
        let m = rng.gauss_matrix(d, d);
        let task = quadratic_regression_task(m).unwrap();
        let data = task.sample_set(n, &mut rng);
        let reg = bayes_quadratic_regressor(&data).unwrap();
        let proj = sym_projector(&data.points);
        for _ in 0..20 {
            let x = rng.gauss_vector(d);
            let lhs = reg.conditional_variance(&x);
            let rhs = proj.residual_norm_sq(&x);
            assert!(
                (lhs - rhs).abs() <= 1e-6 * (1.0 + rhs),
                "trial {trial}: {lhs} vs {rhs}"
            );
        }
    }
}

#[test]
fn bayes_conditional_variance_is_monotone_in_n() {
    let d = 4;
    let mut rng = RngStream::new(18);
    let m = rng.gauss_matrix(d, d);
    let task = quadratic_regression_task(m).unwrap();
    let full = task.sample_set(8, &mut rng);
    let tests: Vec<Vector> = (0..10).map(|_| rng.gauss_vector(d)).collect();
    let mut prev = vec![f64::INFINITY; tests.len()];
    for n in 0..=8 {
        let data = LabeledSet::new(
            full.points[..n].to_vec(),
            full.labels[..n].to_vec(),
            0,
        );
        let reg = bayes_quadratic_regressor(&data).unwrap();
        for (i, x) in tests.iter().enumerate() {
            let v = reg.conditional_variance(x);
            assert!(v <= prev[i] + 1e-8, "n={n}, point {i}: {v} > {}", prev[i]);
            prev[i] = v;
        }
    }
}

#[test]
fn bayes_interpolates_training_labels() {
    let d = 4;
    let mut rng = RngStream::new(19);
    let m = rng.gauss_matrix(d, d);
    let task = quadratic_regression_task(m).unwrap();
    let data = task.sample_set(5, &mut rng);
    let reg = bayes_quadratic_regressor(&data).unwrap();
    for (x, &y) in data.points.iter().zip(&data.labels) {
        assert!((reg.predictor.predict(x) - y).abs() <= 1e-8 * (1.0 + y.abs()));
    }
}

// ---------------------------------------------------------------------------
// symmetrization
// ---------------------------------------------------------------------------

#[test]
fn identity_symmetrization_is_a_noop() {
    let task = alpha_quadratic_task(Vector::from_vec(vec![1.0, -2.0, 0.5])).unwrap();
    let mut rng = RngStream::new(20);
    let data = task.sample_set(30, &mut rng);
    let raw = ErmCnnSignLearner {
        features: FeatureMap::PerCoordinateSquares,
    };
    let wrapped = symmetrized(
        Arc::new(ErmCnnSignLearner {
            features: FeatureMap::PerCoordinateSquares,
        }),
        GroupSampler::Identity,
    );
    let p1 = raw.train(&data, &mut rng.child(0)).unwrap();
    let p2 = wrapped.train(&data, &mut rng.child(0)).unwrap();
    for _ in 0..50 {
        let x = rng.gauss_vector(3);
        assert_eq!(p1.predict(&x), p2.predict(&x));
    }
}

#[test]
fn permutation_symmetrized_erm_fails_on_texture() {
    // n = d/10 samples: the wrapper inherits the permutation lower bound even
    // though raw CNN ERM succeeds from the same data
    let d = 30;
    let n = 3;
    let task = texture_task(d).unwrap();
    let support = task.support().unwrap();
    let full = LabeledSet::new(
        support.iter().map(|(x, _)| x.clone()).collect(),
        support.iter().map(|(_, y)| *y).collect(),
        0,
    );
    let learner = symmetrized(
        Arc::new(ErmCnnSignLearner {
            features: FeatureMap::Conv2SquareSums,
        }),
        GroupSampler::UniformPermutation,
    );
    let rng = RngStream::new(21);
    let trials = 50;
    let mut total = 0.0;
    for t in 0..trials {
        let mut tr = rng.child(t);
        let data = task.sample_set(n, &mut tr);
        let pred = learner.train(&data, &mut tr).unwrap();
        total += empirical_error(&pred, &full);
    }
    let mean = total / trials as f64;
    assert!(mean >= 0.2, "mean test error {mean}");
}

#[test]
fn empty_dataset_is_rejected() {
    let cfg = TrainConfig::sign_task(
        linear_geom(3),
        InitSpec::gaussian(1.0),
        UpdateRule::new(RuleKind::Gd { eta: 0.1 }, 5),
    );
    let mut rng = RngStream::new(22);
    assert!(matches!(
        run_iterative(&cfg, &LabeledSet::new(vec![], vec![], 0), &mut rng, false),
        Err(TrainError::EmptyDataset)
    ));
}

#[test]
fn divergent_training_is_reported_with_step() {
    let mut rng = RngStream::new(23);
    let task = quadratic_regression_task(Matrix::identity(3, 3)).unwrap();
    let data = task.sample_set(10, &mut rng);
    let geom = ModelGeometry::fc(vec![3, 4, 1], Activation::Quadratic).unwrap();
    let cfg = TrainConfig::regression(
        geom,
        InitSpec::gaussian(2.0),
        UpdateRule::new(RuleKind::Gd { eta: 10.0 }, 200),
    );
    match run_iterative(&cfg, &data, &mut rng, false) {
        Err(TrainError::Diverged { .. }) => {}
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn onehot_symmetrized_learner_is_confused_below_half_d() {
    // quick version of the warmup bound at d=10, n=4
    let d = 10;
    let task = onehot_task(d).unwrap();
    let support = task.support().unwrap();
    let full = LabeledSet::new(
        support.iter().map(|(x, _)| x.clone()).collect(),
        support.iter().map(|(_, y)| *y).collect(),
        0,
    );
    let learner = symmetrized(
        Arc::new(ErmCnnSignLearner {
            features: FeatureMap::PerCoordinateSquares,
        }),
        GroupSampler::HaarOrthogonal,
    );
    let rng = RngStream::new(24);
    let trials = 40;
    let mut total = 0.0;
    for t in 0..trials {
        let mut tr = rng.child(t);
        let data = task.sample_set(4, &mut tr);
        let pred = learner.train(&data, &mut tr).unwrap();
        total += empirical_error(&pred, &full);
    }
    let mean = total / trials as f64;
    assert!(mean >= 0.2, "mean test error {mean}");
}
