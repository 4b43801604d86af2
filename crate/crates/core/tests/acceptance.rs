//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line (visible with `--nocapture`) and asserting the stated
//! tolerances. Run with:
//!
//! ```text
//! cargo test -p equilab --test acceptance -- --nocapture
//! ```

use std::sync::Arc;
use std::time::Instant;

use equilab::algebra::{
    haar_orthogonal, random_general_linear, sym_projector, Matrix, RngStream, Vector,
};
use equilab::equivariance::{
    check_coupled, check_step_invariance, Thresholds, Verdict,
};
use equilab::exp::{run_figure1, Figure1Config, Figure1Outcome};
use equilab::models::{Activation, ModelGeometry};
use equilab::oracles::{
    self, matrix_var_closed, matrix_var_mc, packing_construct, packing_verify,
    projection_lemma_check, regression_floor, rho_arccos, rho_empirical, scalar_lemma_checks,
    shatter_exhaustive, PackingParams,
};
use equilab::tasks::{
    onehot_task, quadratic_regression_task, quadratic_split_task, texture_task, LabeledSet,
};
use equilab::training::{
    bayes_quadratic_regressor, empirical_error, erm_cnn_regression, erm_cnn_sign, symmetrized,
    ErmCnnSignLearner, ErmFlag, FeatureMap, GroupSampler, InitSpec, IterativeLearner, Learner,
    RuleKind, TrainConfig, UpdateRule,
};

fn report(criterion: usize, name: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion:>2} [{name}]: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} ({name}) failed: {detail}");
}

fn support_set(task: &equilab::tasks::Task) -> LabeledSet {
    let support = task.support().expect("finite-support task");
    LabeledSet::new(
        support.iter().map(|(x, _)| x.clone()).collect(),
        support.iter().map(|(_, y)| *y).collect(),
        0,
    )
}

// ---------------------------------------------------------------------------
// 1. equivariance positives
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_equivariance_positives() {
    let started = Instant::now();
    let d = 8;
    let task = quadratic_split_task(d).unwrap();
    let rng = RngStream::new(101);
    let data = task.sample_set(20, &mut rng.child(0));
    let mut tp_rng = rng.child(1);
    let test_points: Vec<Vector> = (0..10).map(|_| tp_rng.gauss_vector(d)).collect();
    let mut g_rng = rng.child(2);
    let gs: Vec<_> = (0..20).map(|_| haar_orthogonal(d, &mut g_rng)).collect();

    let mut worst: f64 = 0.0;
    for dims in [vec![d, 6, 1], vec![d, 6, 4, 1]] {
        for act in [Activation::Quadratic, Activation::Relu] {
            for kind in [
                RuleKind::Gd { eta: 0.002 },
                RuleKind::GdMomentum {
                    eta: 4e-4,
                    gamma: 0.9,
                },
                RuleKind::GdLpReg {
                    eta: 0.002,
                    p: 2.0,
                    lambda: 0.1,
                },
            ] {
                let cfg = TrainConfig::sign_task(
                    ModelGeometry::fc(dims.clone(), act).unwrap(),
                    InitSpec::gaussian(0.25),
                    UpdateRule::new(kind.clone(), 50),
                );
                let rep = check_coupled(
                    &cfg,
                    &data,
                    &gs,
                    &test_points,
                    Thresholds::default(),
                    &mut rng.child(3),
                )
                .unwrap();
                worst = worst.max(rep.max_discrepancy);
                assert_eq!(
                    rep.verdict,
                    Verdict::Pass,
                    "{} depth {} {act:?}: max {:.3e}",
                    kind.name(),
                    dims.len() - 1,
                    rep.max_discrepancy
                );
            }
        }
    }

    // Newton from zero first layer under general-linear maps (cond ≤ 10)
    let mut gl_rng = rng.child(4);
    let gls: Vec<_> = (0..20)
        .map(|_| random_general_linear(d, 10.0, &mut gl_rng))
        .collect();
    let newton_cfg = TrainConfig::sign_task(
        ModelGeometry::fc(vec![d, 1], Activation::Identity).unwrap(),
        InitSpec::zero_first_layer(0.5),
        UpdateRule::new(RuleKind::Newton { eta: 1.0, ridge: 0.0 }, 5),
    );
    let newton_rep = check_coupled(
        &newton_cfg,
        &data,
        &gls,
        &test_points,
        Thresholds {
            pass: 1e-5,
            fail: 1e-2,
        },
        &mut rng.child(5),
    )
    .unwrap();
    assert_eq!(
        newton_rep.verdict,
        Verdict::Pass,
        "newton GL: max {:.3e}",
        newton_rep.max_discrepancy
    );

    let secs = started.elapsed().as_secs_f64();
    report(
        1,
        "equivariance positives",
        secs < 120.0,
        &format!(
            "12 FC configs × 20 rotations at 1e-6 (worst {:.2e}), Newton GL at 1e-5 (worst {:.2e}), {:.1}s",
            worst, newton_rep.max_discrepancy, secs
        ),
    );
}

// ---------------------------------------------------------------------------
// 2. equivariance negatives
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_equivariance_negatives() {
    let d = 8;
    let task = quadratic_split_task(d).unwrap();
    let rng = RngStream::new(202);
    let data = task.sample_set(20, &mut rng.child(0));
    let mut tp_rng = rng.child(1);
    let test_points: Vec<Vector> = (0..10).map(|_| tp_rng.gauss_vector(d)).collect();
    let mut g_rng = rng.child(2);
    let orth: Vec<_> = (0..20).map(|_| haar_orthogonal(d, &mut g_rng)).collect();

    let fc = |kind: RuleKind| {
        TrainConfig::sign_task(
            ModelGeometry::fc(vec![d, 6, 1], Activation::Quadratic).unwrap(),
            InitSpec::gaussian(0.3),
            UpdateRule::new(kind, 50),
        )
    };

    let mut detail = String::new();
    for kind in [RuleKind::adam(0.05), RuleKind::adagrad(0.1)] {
        let name = kind.name();
        // fails under rotations with a margin in at least 15/20 draws
        let rep = check_coupled(
            &fc(kind.clone()),
            &data,
            &orth,
            &test_points,
            Thresholds::default(),
            &mut rng.child(3),
        )
        .unwrap();
        let failing = rep.per_g.iter().filter(|&&v| v > 1e-2).count();
        assert!(
            failing >= 15,
            "{name} under rotation: only {failing}/20 draws exceed 1e-2"
        );
        detail.push_str(&format!("{name}: {failing}/20 rotations fail; "));
        // passes permutations and sign flips at 1e-6
        for sampler in [GroupSampler::UniformPermutation, GroupSampler::UniformSignFlip] {
            let mut s_rng = rng.child(4);
            let gs: Vec<_> = (0..20).map(|_| sampler.sample(d, &mut s_rng)).collect();
            let rep = check_coupled(
                &fc(kind.clone()),
                &data,
                &gs,
                &test_points,
                Thresholds::default(),
                &mut rng.child(5),
            )
            .unwrap();
            assert_eq!(
                rep.verdict,
                Verdict::Pass,
                "{name} under {sampler}: max {:.3e}",
                rep.max_discrepancy
            );
        }
    }

    // ℓ1-regularized GD: fails the orthogonal stepwise check, passes permutation
    let l1 = RuleKind::GdLpReg {
        eta: 0.1,
        p: 1.0,
        lambda: 0.5,
    };
    let cfg = fc(l1.clone());
    let w = equilab::training::sample_init(&cfg.geometry, &cfg.init, &mut rng.child(6));
    let g_orth = haar_orthogonal(d, &mut rng.child(7));
    let g_perm = GroupSampler::UniformPermutation.sample(d, &mut rng.child(8));
    let d_orth = check_step_invariance(&l1, &cfg, &w, &data, &g_orth).unwrap();
    let d_perm = check_step_invariance(&l1, &cfg, &w, &data, &g_perm).unwrap();
    assert!(d_orth > 1e-2, "l1 orthogonal stepwise: {d_orth:.3e}");
    assert!(d_perm <= 1e-10, "l1 permutation stepwise: {d_perm:.3e}");
    detail.push_str(&format!(
        "l1 stepwise: orth {d_orth:.2e} vs perm {d_perm:.2e}"
    ));

    report(2, "equivariance negatives", true, &detail);
}

// ---------------------------------------------------------------------------
// 3. quadratic-form variance
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_matrix_variance() {
    let started = Instant::now();
    let d = 8;
    assert_eq!(matrix_var_closed(&Matrix::identity(d, d)), 80.0);
    let mut rng = RngStream::new(303);
    let mut worst_sigmas: f64 = 0.0;
    for t in 0..20 {
        let m = rng.gauss_matrix(d, d);
        let closed = matrix_var_closed(&m);
        let mc = matrix_var_mc(&m, 1_000_000, &mut rng.child(t));
        let sigmas = (mc.mean - closed).abs() / mc.std_error;
        worst_sigmas = worst_sigmas.max(sigmas);
        assert!(
            sigmas <= 4.0,
            "matrix {t}: {:.4} vs {closed:.4} is {sigmas:.2} se away",
            mc.mean
        );
    }
    let secs = started.elapsed().as_secs_f64();
    report(
        3,
        "quadratic-form variance",
        secs < 30.0,
        &format!("I_8 closed form 80 exact; 20 random M within 4 se (worst {worst_sigmas:.2} se), {secs:.1}s"),
    );
}

// ---------------------------------------------------------------------------
// 4. Bayes regression floor
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_bayes_regression_floor() {
    let started = Instant::now();
    let d = 6;
    let trials = 200;
    let test_points = 2000;
    let base = RngStream::new(409);
    let mut detail = String::new();
    for n in (0..=21).step_by(3) {
        let mut losses = Vec::with_capacity(trials);
        let mut residual_sum = 0.0;
        for trial in 0..trials {
            let mut rng = base.child((n * 1000 + trial) as u64);
            let m = rng.gauss_matrix(d, d);
            let task = quadratic_regression_task(m).unwrap();
            let data = task.sample_set(n, &mut rng.child(0));
            let reg = bayes_quadratic_regressor(&data).unwrap();
            let proj = sym_projector(&data.points);
            let mut test_rng = rng.child(1);
            let mut loss = 0.0;
            for _ in 0..test_points {
                let (x, y) = task.sample(&mut test_rng);
                loss += (reg.predictor.predict(&x) - y).powi(2);
                residual_sum += proj.residual_norm_sq(&x);
            }
            losses.push(loss / test_points as f64);
        }
        let mean = losses.iter().sum::<f64>() / trials as f64;
        let var = losses.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let se = (var / trials as f64).sqrt();
        let resid_mean = residual_sum / (trials * test_points) as f64;
        let floor = regression_floor(d, n);
        assert!(
            mean >= floor - 3.0 * se,
            "n={n}: mean loss {mean:.3} below floor {floor} − 3·{se:.3}"
        );
        assert!(
            (mean - resid_mean).abs() <= 0.05 * resid_mean + 1e-6,
            "n={n}: loss {mean:.4} vs projector {resid_mean:.4} beyond 5%"
        );
        detail.push_str(&format!("n{n}:{mean:.1}≥{floor} "));
    }

    // the matched CNN least-squares point: n = 7 on diagonal-quadratic labels
    let mut rng = base.child(999_999);
    let alpha = rng.gauss_vector(d);
    let task = quadratic_regression_task(Matrix::from_diagonal(&alpha)).unwrap();
    let data = task.sample_set(7, &mut rng.child(0));
    let pred = erm_cnn_regression(&data).unwrap();
    let test = task.sample_set(2000, &mut rng.child(1));
    let ls_loss = empirical_error(&pred, &test);
    assert!(ls_loss <= 1e-10, "CNN least-squares loss {ls_loss:.3e}");

    let secs = started.elapsed().as_secs_f64();
    report(
        4,
        "Bayes regression floor",
        secs < 300.0,
        &format!("{detail}; CNN LS at n=7: {ls_loss:.1e}; {secs:.1}s"),
    );
}

// ---------------------------------------------------------------------------
// 5. texture separation
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_texture_separation() {
    let started = Instant::now();
    let d = 50;
    let task = texture_task(d).unwrap();
    let full = support_set(&task);
    let base = RngStream::new(505);

    let mut detail = String::new();
    // permutation-equivariant FC learners at n = 5 = d/10
    for (label, kind, steps) in [
        ("fc-gd", RuleKind::Gd { eta: 0.01 }, 150),
        ("fc-adam", RuleKind::adam(0.05), 100),
    ] {
        let learner = IterativeLearner {
            label: label.into(),
            config: TrainConfig::sign_task(
                ModelGeometry::fc(vec![d, 16, 1], Activation::Quadratic).unwrap(),
                InitSpec::gaussian(0.2),
                UpdateRule::new(kind, steps),
            ),
        };
        let mut total = 0.0;
        let mut failures = 0;
        for trial in 0..50 {
            let rng = base.child(fnv_mix(label, trial));
            let data = task.sample_set(5, &mut rng.child(0));
            match learner.train(&data, &mut rng.child(1)) {
                Ok(pred) => total += empirical_error(&pred, &full),
                Err(_) => failures += 1,
            }
        }
        assert_eq!(failures, 0, "{label}: {failures} training failures");
        let mean = total / 50.0;
        assert!(mean >= 0.2, "{label} at n=5: mean test error {mean:.3}");
        detail.push_str(&format!("{label} n=5: {mean:.3}; "));
    }

    // CNN ERM at n = 12: exactly zero test error in all 50 trials
    let mut zero_trials = 0;
    for trial in 0..50 {
        let rng = base.child(fnv_mix("erm", trial));
        let data = task.sample_set(12, &mut rng.child(0));
        let res = erm_cnn_sign(FeatureMap::Conv2SquareSums, &data).unwrap();
        assert_eq!(
            res.flag,
            ErmFlag::Separated,
            "trial {trial}: sample had one class or did not separate"
        );
        if empirical_error(&res.predictor, &full) == 0.0 {
            zero_trials += 1;
        }
    }
    assert_eq!(zero_trials, 50, "CNN ERM zero-error trials: {zero_trials}/50");
    detail.push_str("erm n=12: 0 error in 50/50");

    let secs = started.elapsed().as_secs_f64();
    report(
        5,
        "texture separation",
        secs < 300.0,
        &format!("{detail}; {secs:.1}s"),
    );
}

fn fnv_mix(label: &str, trial: usize) -> u64 {
    equilab::exp::fnv1a64(format!("{label}|{trial}").as_bytes())
}

// ---------------------------------------------------------------------------
// 6. one-hot warmup
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_onehot_warmup() {
    let d = 20;
    let task = onehot_task(d).unwrap();
    let full = support_set(&task);
    let learner = symmetrized(
        Arc::new(ErmCnnSignLearner {
            features: FeatureMap::PerCoordinateSquares,
        }),
        GroupSampler::HaarOrthogonal,
    );
    let base = RngStream::new(606);
    let mut total = 0.0;
    for trial in 0..50 {
        let rng = base.child(trial);
        let data = task.sample_set(10, &mut rng.child(0));
        let pred = learner.train(&data, &mut rng.child(1)).unwrap();
        total += empirical_error(&pred, &full);
    }
    let mean = total / 50.0;
    report(
        6,
        "one-hot warmup",
        mean >= 0.2,
        &format!("symmetrized learner at n=10, d=20: mean test error {mean:.3} ≥ 0.2"),
    );
}

// ---------------------------------------------------------------------------
// 7. disagreement-metric consistency
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_rho_consistency() {
    let d = 6;
    let mut rng = RngStream::new(707);
    let mut worst = 0.0f64;
    for pair in 0..10 {
        let u = haar_orthogonal(d, &mut rng).matrix();
        let v = haar_orthogonal(d, &mut rng).matrix();
        let emp = rho_empirical(&u, &v, 1_000_000, &mut rng.child(2 * pair));
        let arc = rho_arccos(&u, &v, 1_000_000, &mut rng.child(2 * pair + 1));
        let gap = (emp.mean - arc.mean).abs();
        let budget = 3.0 * (emp.std_error + arc.std_error);
        assert!(gap <= budget, "pair {pair}: gap {gap:.5} > {budget:.5}");
        worst = worst.max(gap / budget);
        // self-distance is exactly zero
        let self_emp = rho_empirical(&u, &u, 10_000, &mut rng.child(100 + pair));
        assert_eq!(self_emp.mean, 0.0);
    }
    report(
        7,
        "rho-metric consistency",
        true,
        &format!("10 Haar pairs at 1e6 samples within 3 combined se (worst ratio {worst:.2}); rho(U,U)=0"),
    );
}

// ---------------------------------------------------------------------------
// 8. shattering
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_shattering() {
    let started = Instant::now();
    let witnessed = shatter_exhaustive(5, 1e-3).unwrap();
    let secs = started.elapsed().as_secs_f64();
    report(
        8,
        "shattering witnesses",
        witnessed == 1024 && secs < 10.0,
        &format!("{witnessed}/1024 sign patterns witnessed at λ=1e-3 (orthogonality enforced at 1e-10), {secs:.1}s"),
    );
}

// ---------------------------------------------------------------------------
// 9. packing validity and monotonicity
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_packing() {
    let run = |eps: f64| {
        let mut rng = RngStream::with_stream(909, 0);
        let mut params = PackingParams::new(eps, 400);
        params.per_pair_samples = 1000;
        packing_construct(3, &params, &mut rng).unwrap()
    };
    let tight = run(0.05);
    let loose = run(0.10);
    let mut rng = RngStream::with_stream(909, 1);
    let verification = packing_verify(&tight, 4000, &mut rng);
    let pass = verification.all_certified && tight.elements.len() > loose.elements.len();
    report(
        9,
        "packing validity and monotonicity",
        pass,
        &format!(
            "|set(0.05)| = {} > |set(0.10)| = {}; verification re-certified all {} pairs at 95% LCB",
            tight.elements.len(),
            loose.elements.len(),
            verification.pairs.len()
        ),
    );
}

// ---------------------------------------------------------------------------
// 10. projection concentration (see the oracle module: the complement bound
//     is numerically out of reach at d = 40, so this criterion runs red)
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_projection_lemma() {
    let started = Instant::now();
    let mut rng = RngStream::new(1010);
    let rep = projection_lemma_check(40, 10, 100, &mut rng).unwrap();
    let secs = started.elapsed().as_secs_f64();
    let pass = rep.both_bounds_ok >= 95 && rep.pythagoras_ok == 100 && secs < 120.0;
    report(
        10,
        "projection concentration",
        pass,
        &format!(
            "both bounds in {}/100 trials (need ≥ 95); Pythagoras exact in {}/100; {secs:.1}s",
            rep.both_bounds_ok, rep.pythagoras_ok
        ),
    );
}

// ---------------------------------------------------------------------------
// 11. channel-norm learning-curve separation
// ---------------------------------------------------------------------------

#[test]
fn criterion_11_figure_trend() {
    let started = Instant::now();
    let cfg = Figure1Config {
        n_grid: vec![0, 10, 20, 50, 100, 200],
        trials: 10,
        test_size: 10_000,
        base_seed: 42,
        ..Figure1Config::default()
    };
    let out = run_figure1(&cfg).unwrap();
    let failure = out.separation_failure();
    let cnn_n = Figure1Outcome::first_n_reaching(&out.cnn_curve, 0.9);
    let secs = started.elapsed().as_secs_f64();
    report(
        11,
        "channel-norm learning curves",
        failure.is_none() && secs < 600.0,
        &format!(
            "CNN ≥ 0.9 at n = {:?}, FC stays ≤ 0.75 there and needs ≥ 3× samples for 0.9 ({}); {secs:.1}s",
            cnn_n,
            failure.unwrap_or_else(|| "ok".into())
        ),
    );
}

// ---------------------------------------------------------------------------
// 12. scalar lemmas
// ---------------------------------------------------------------------------

#[test]
fn criterion_12_scalar_lemmas() {
    let mut rng = RngStream::new(1212);
    let rep = scalar_lemma_checks(&mut rng);
    report(
        12,
        "scalar lemmas",
        rep.all_ok(),
        &format!(
            "arccos grid min {:.6} ≥ √2 − 1e-4; sphere upper bound ok on {} matrices (empirical C = {:.3}); anti-concentration ok on {} grid points",
            rep.arccos_min_ratio,
            rep.sphere.len(),
            rep.empirical_c,
            rep.anti.len()
        ),
    );
}

// keep the unattainable-criterion analysis visible next to the red test
#[allow(dead_code)]
fn criterion_10_note() {
    // Measured over 30 independent 100-trial runs, the complement bound
    // holds in 82–93 trials (mean 87.6), never 95: ‖x‖⁴ fluctuates at scale
    // Θ(d^{3/2}) ≈ 715 at d = 40 while the criterion grants only 5d = 200 of
    // slack. The same check at d = 200 clears 95 comfortably (see the
    // oracles::projection tests). The assertion above is kept faithful to
    // the stated instance.
    let _ = oracles::projection_regime_max_n(40);
}
