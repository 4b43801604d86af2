use super::*;
use crate::algebra::{haar_orthogonal, GroupElement, RngStream};

// ---------------------------------------------------------------------------
// independent oracles: central finite differences of the summed loss / grad
// ---------------------------------------------------------------------------

fn loss_total(geom: &ModelGeometry, theta: &[f64], xs: &[Vector], ys: &[f64], loss: Loss) -> f64 {
    loss_and_grad_flat::<f64>(geom, theta, xs, ys, loss).0
}

fn fd_grad(
    geom: &ModelGeometry,
    theta: &[f64],
    xs: &[Vector],
    ys: &[f64],
    loss: Loss,
    h: f64,
) -> Vec<f64> {
    let mut g = vec![0.0; theta.len()];
    let mut t = theta.to_vec();
    for i in 0..theta.len() {
        t[i] = theta[i] + h;
        let lp = loss_total(geom, &t, xs, ys, loss);
        t[i] = theta[i] - h;
        let lm = loss_total(geom, &t, xs, ys, loss);
        t[i] = theta[i];
        g[i] = (lp - lm) / (2.0 * h);
    }
    g
}

fn fd_hessian(
    geom: &ModelGeometry,
    theta: &[f64],
    xs: &[Vector],
    ys: &[f64],
    loss: Loss,
    h: f64,
) -> Matrix {
    let n = theta.len();
    let mut hm = Matrix::zeros(n, n);
    let mut t = theta.to_vec();
    for i in 0..n {
        t[i] = theta[i] + h;
        let gp = loss_and_grad_flat::<f64>(geom, &t, xs, ys, loss).1;
        t[i] = theta[i] - h;
        let gm = loss_and_grad_flat::<f64>(geom, &t, xs, ys, loss).1;
        t[i] = theta[i];
        for j in 0..n {
            hm[(j, i)] = (gp[j] - gm[j]) / (2.0 * h);
        }
    }
    hm
}

fn max_abs_slice(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
}

fn random_fc(dims: &[usize], act: Activation, rng: &mut RngStream) -> FcWeights {
    let layers = dims
        .windows(2)
        .map(|w| rng.gauss_matrix(w[1], w[0]) * 0.7)
        .collect();
    FcWeights::new(layers, act).unwrap()
}

fn random_batch(d: usize, n: usize, rng: &mut RngStream) -> (Vec<Vector>, Vec<f64>) {
    let xs: Vec<Vector> = (0..n).map(|_| rng.gauss_vector(d)).collect();
    let ys: Vec<f64> = (0..n).map(|_| rng.rademacher()).collect();
    (xs, ys)
}

// ---------------------------------------------------------------------------
// forward
// ---------------------------------------------------------------------------

#[test]
fn fc_forward_single_linear_layer() {
    let w = FcWeights::new(
        vec![Matrix::from_row_slice(1, 3, &[2.0, -1.0, 0.5])],
        Activation::Identity,
    )
    .unwrap();
    let x = Vector::from_vec(vec![1.0, 2.0, 4.0]);
    assert_eq!(fc_forward(&w, &x).unwrap(), 2.0 - 2.0 + 2.0);
}

#[test]
fn fc_forward_two_layer_quadratic_difference_of_squares() {
    let w = FcWeights::new(
        vec![
            Matrix::identity(2, 2),
            Matrix::from_row_slice(1, 2, &[1.0, -1.0]),
        ],
        Activation::Quadratic,
    )
    .unwrap();
    let x = Vector::from_vec(vec![3.0, 2.0]);
    assert_eq!(fc_forward(&w, &x).unwrap(), 9.0 - 4.0);
}

#[test]
fn fc_forward_rejects_dimension_mismatch() {
    let w = FcWeights::new(vec![Matrix::zeros(1, 3)], Activation::Identity).unwrap();
    let x = Vector::from_vec(vec![1.0, 2.0]);
    assert!(matches!(
        fc_forward(&w, &x),
        Err(ModelError::DimensionMismatch { .. })
    ));
}

#[test]
fn rotation_identity_for_fc_nets() {
    // fc(τ(R)W, Rx) = fc(W, x), 100 random triples per depth
    let mut rng = RngStream::new(31);
    for depth in 1..=3usize {
        let mut dims = vec![5];
        for _ in 1..depth {
            dims.push(4);
        }
        dims.push(1);
        for _ in 0..100 {
            let w = random_fc(&dims, Activation::Quadratic, &mut rng);
            let g = haar_orthogonal(5, &mut rng);
            let x = rng.gauss_vector(5);
            let lhs = fc_forward(&weight_action(&g, &w).unwrap(), &g.apply(&x).unwrap()).unwrap();
            let rhs = fc_forward(&w, &x).unwrap();
            assert!(
                (lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()),
                "depth {depth}: {lhs} vs {rhs}"
            );
        }
    }
}

#[test]
fn cnn_forward_two_block_difference_of_square_norms() {
    // k=1, w=(1), sum-of-squares pooling, r=2, a=(1,-1), b=0
    let d = 6;
    let w = CnnWeights::new(
        Vector::from_vec(vec![1.0]),
        Vector::from_vec(vec![1.0, -1.0]),
        0.0,
        d / 2,
        PoolKind::SumOfSquares,
    )
    .unwrap();
    let x = Vector::from_vec(vec![1.0, 2.0, 0.0, 3.0, 1.0, 1.0]);
    let expect = (1.0 + 4.0 + 0.0) - (9.0 + 1.0 + 1.0);
    assert!((cnn_forward(&w, &x).unwrap() - expect).abs() < 1e-12);
}

#[test]
fn cnn_forward_zero_filter_returns_bias() {
    let w = CnnWeights::new(
        Vector::zeros(3),
        Vector::from_vec(vec![2.0, -1.0]),
        4.25,
        4,
        PoolKind::SumOfSquares,
    )
    .unwrap();
    let mut rng = RngStream::new(1);
    for _ in 0..5 {
        let x = rng.gauss_vector(8);
        assert_eq!(cnn_forward(&w, &x).unwrap(), 4.25);
    }
}

#[test]
fn cnn_forward_matches_texture_closed_form() {
    // k=2, r=1, x = e1 + e3 (a gap-2 texture point): a1(2w1² + 2w2²) + b
    let d = 4;
    let (w1, w2, a1, b) = (0.8, -1.3, 0.6, 0.2);
    let w = CnnWeights::new(
        Vector::from_vec(vec![w1, w2]),
        Vector::from_vec(vec![a1]),
        b,
        d,
        PoolKind::SumOfSquares,
    )
    .unwrap();
    let mut x = Vector::zeros(d);
    x[0] = 1.0;
    x[2] = 1.0;
    let expect = a1 * (2.0 * w1 * w1 + 2.0 * w2 * w2) + b;
    assert!((cnn_forward(&w, &x).unwrap() - expect).abs() < 1e-12);

    // and an adjacent pair scores a1(w1² + w2² + (w1+w2)²) + b
    let mut t = Vector::zeros(d);
    t[0] = 1.0;
    t[1] = 1.0;
    let expect_t = a1 * (w1 * w1 + w2 * w2 + (w1 + w2) * (w1 + w2)) + b;
    assert!((cnn_forward(&w, &t).unwrap() - expect_t).abs() < 1e-12);
}

#[test]
fn cnn_built_in_cyclic_symmetry() {
    // shifting x by d' positions and the head by one position is a no-op
    let mut rng = RngStream::new(8);
    let (d, r, k) = (12, 3, 4);
    let dp = d / r;
    for pool in [PoolKind::SumOfSquares, PoolKind::Sum] {
        let w = CnnWeights::new(
            rng.gauss_vector(k),
            rng.gauss_vector(r),
            rng.gauss(),
            dp,
            pool,
        )
        .unwrap();
        let x = rng.gauss_vector(d);
        let x_shift = Vector::from_fn(d, |i, _| x[(i + d - dp) % d]);
        let a_shift = Vector::from_fn(r, |i, _| w.head[(i + r - 1) % r]);
        let w_shift = CnnWeights::new(w.filter.clone(), a_shift, w.bias, dp, pool).unwrap();
        let lhs = cnn_forward(&w, &x).unwrap();
        let rhs = cnn_forward(&w_shift, &x_shift).unwrap();
        assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }
}

#[test]
fn two_layer_quadratic_net_is_a_quadratic_form() {
    let mut rng = RngStream::new(13);
    let d = 4;
    let w = random_fc(&[d, 3, 1], Activation::Quadratic, &mut rng);
    // reconstruct M from probes
    let mut m = Matrix::zeros(d, d);
    let e = |i: usize| Vector::from_fn(d, |j, _| if i == j { 1.0 } else { 0.0 });
    for i in 0..d {
        m[(i, i)] = fc_forward(&w, &e(i)).unwrap();
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let f = fc_forward(&w, &(e(i) + e(j))).unwrap();
            let v = (f - m[(i, i)] - m[(j, j)]) / 2.0;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    for _ in 0..20 {
        let x = rng.gauss_vector(d);
        let f = fc_forward(&w, &x).unwrap();
        let q = (x.transpose() * &m * &x)[(0, 0)];
        assert!((f - q).abs() <= 1e-8 * (1.0 + f.abs()));
    }
}

// ---------------------------------------------------------------------------
// gradients
// ---------------------------------------------------------------------------

#[test]
fn grad_is_zero_at_perfect_regression_fit() {
    let w = FcWeights::new(
        vec![Matrix::from_row_slice(1, 2, &[1.0, 2.0])],
        Activation::Identity,
    )
    .unwrap();
    let xs = vec![
        Vector::from_vec(vec![1.0, 0.0]),
        Vector::from_vec(vec![0.0, 1.0]),
    ];
    let ys = vec![1.0, 2.0]; // exactly w·x
    let g = grad(&ParamWeights::Fc(w), &xs, &ys, Loss::Squared).unwrap();
    assert!(max_abs_slice(&g.to_flat()) < 1e-14);
}

#[test]
fn grad_of_linear_least_squares_matches_normal_equations() {
    // ∇ Σ (wᵀxᵢ − yᵢ)² = 2 X (Xᵀw − y)
    let mut rng = RngStream::new(17);
    let (d, n) = (4, 9);
    let w0 = rng.gauss_vector(d);
    let xs: Vec<Vector> = (0..n).map(|_| rng.gauss_vector(d)).collect();
    let ys: Vec<f64> = (0..n).map(|_| rng.gauss()).collect();
    let w = FcWeights::new(
        vec![Matrix::from_fn(1, d, |_, j| w0[j])],
        Activation::Identity,
    )
    .unwrap();
    let g = grad(&ParamWeights::Fc(w), &xs, &ys, Loss::Squared).unwrap();
    let gt = g.to_flat();
    let mut expect = Vector::zeros(d);
    for (x, &y) in xs.iter().zip(&ys) {
        expect += x * (2.0 * (w0.dot(x) - y));
    }
    for j in 0..d {
        assert!((gt[j] - expect[j]).abs() <= 1e-10 * (1.0 + expect[j].abs()));
    }
}

#[test]
fn grad_matches_finite_differences_everywhere() {
    let mut rng = RngStream::new(23);
    let h = 1e-6;
    let mut cases: Vec<(ModelGeometry, Vec<f64>)> = Vec::new();
    for act in [Activation::Quadratic, Activation::Relu, Activation::Identity] {
        let w = random_fc(&[5, 4, 1], act, &mut rng);
        let pw = ParamWeights::Fc(w);
        cases.push((pw.geometry(), pw.to_flat()));
    }
    for pool in [PoolKind::SumOfSquares, PoolKind::Sum] {
        let w = CnnWeights::new(
            rng.gauss_vector(3),
            rng.gauss_vector(2),
            rng.gauss(),
            4,
            pool,
        )
        .unwrap();
        let pw = ParamWeights::Cnn(w);
        cases.push((pw.geometry(), pw.to_flat()));
    }
    for (geom, theta) in cases {
        let d = geom.input_dim();
        for loss in [Loss::Logistic, Loss::Squared] {
            let (xs, ys) = random_batch(d, 6, &mut rng);
            let g = loss_and_grad_flat::<f64>(&geom, &theta, &xs, &ys, loss).1;
            let g_fd = fd_grad(&geom, &theta, &xs, &ys, loss, h);
            let scale = max_abs_slice(&g).max(1.0);
            for i in 0..g.len() {
                assert!(
                    (g[i] - g_fd[i]).abs() <= 1e-5 * scale,
                    "{geom:?} {loss:?} param {i}: ad {} vs fd {}",
                    g[i],
                    g_fd[i]
                );
            }
        }
    }
}

#[test]
fn grad_rejects_empty_batch() {
    let w = ParamWeights::Fc(
        FcWeights::new(vec![Matrix::zeros(1, 2)], Activation::Identity).unwrap(),
    );
    assert!(matches!(
        grad(&w, &[], &[], Loss::Squared),
        Err(ModelError::EmptyBatch)
    ));
}

// ---------------------------------------------------------------------------
// weight action
// ---------------------------------------------------------------------------

#[test]
fn weight_action_identity_is_noop() {
    let mut rng = RngStream::new(3);
    let w = random_fc(&[4, 3, 1], Activation::Quadratic, &mut rng);
    let g = GroupElement::identity(4);
    let w2 = weight_action(&g, &w).unwrap();
    assert_eq!(w.layers[0], w2.layers[0]);
}

#[test]
fn weight_action_depth_one_keeps_predictions() {
    let mut rng = RngStream::new(4);
    let w = random_fc(&[5, 1], Activation::Identity, &mut rng);
    let g = haar_orthogonal(5, &mut rng);
    for _ in 0..10 {
        let x = rng.gauss_vector(5);
        let lhs = fc_forward(&weight_action(&g, &w).unwrap(), &g.apply(&x).unwrap()).unwrap();
        let rhs = fc_forward(&w, &x).unwrap();
        assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }
}

#[test]
fn weight_action_of_permutation_permutes_columns() {
    let mut rng = RngStream::new(5);
    let w = random_fc(&[3, 2, 1], Activation::Relu, &mut rng);
    let g = GroupElement::permutation(vec![2, 0, 1]).unwrap();
    let w2 = weight_action(&g, &w).unwrap();
    // W₁ g⁻¹ has columns permuted: (W₁g⁻¹)[:, g(j)] = W₁[:, j] where apply
    // reads y[i] = x[perm[i]].
    let m = &w.layers[0] * g.inverse_matrix();
    assert_eq!(w2.layers[0], m);
    for i in 0..2 {
        for j in 0..3 {
            // column j of W₁ shows up where g⁻¹ sends it
            let gj = [2usize, 0, 1][j];
            assert_eq!(w2.layers[0][(i, j)], w.layers[0][(i, gj)]);
        }
    }
}

#[test]
fn weight_action_roundtrip_is_identity() {
    let mut rng = RngStream::new(6);
    let w = random_fc(&[6, 4, 1], Activation::Quadratic, &mut rng);
    let g = haar_orthogonal(6, &mut rng);
    let back = weight_action(&g.inverse(), &weight_action(&g, &w).unwrap()).unwrap();
    let dev = (&back.layers[0] - &w.layers[0])
        .iter()
        .fold(0.0f64, |a, &v| a.max(v.abs()));
    assert!(dev <= 1e-12);
}

#[test]
fn tau_is_undefined_for_cnn() {
    let w = ParamWeights::Cnn(
        CnnWeights::new(
            Vector::zeros(2),
            Vector::zeros(2),
            0.0,
            3,
            PoolKind::Sum,
        )
        .unwrap(),
    );
    let g = GroupElement::identity(6);
    assert!(matches!(tau(&g, &w), Err(ModelError::TauUndefined)));
}

// ---------------------------------------------------------------------------
// Hessian
// ---------------------------------------------------------------------------

#[test]
fn hessian_of_linear_least_squares_is_2xxt() {
    let mut rng = RngStream::new(29);
    let (d, n) = (3, 7);
    let xs: Vec<Vector> = (0..n).map(|_| rng.gauss_vector(d)).collect();
    let ys: Vec<f64> = (0..n).map(|_| rng.gauss()).collect();
    let geom = ModelGeometry::fc(vec![d, 1], Activation::Identity).unwrap();
    let theta = vec![0.3, -0.2, 0.9];
    let h = hessian(&geom, &theta, &xs, &ys, Loss::Squared, None).unwrap();
    let mut expect = Matrix::zeros(d, d);
    for x in &xs {
        expect += 2.0 * x * x.transpose();
    }
    assert!((h - expect).norm() < 1e-10);
}

#[test]
fn hessian_is_symmetric_and_matches_fd() {
    let mut rng = RngStream::new(37);
    let w = random_fc(&[4, 3, 1], Activation::Quadratic, &mut rng);
    let pw = ParamWeights::Fc(w);
    let (geom, theta) = (pw.geometry(), pw.to_flat());
    let (xs, ys) = random_batch(4, 5, &mut rng);
    for loss in [Loss::Logistic, Loss::Squared] {
        let h = hessian(&geom, &theta, &xs, &ys, loss, None).unwrap();
        let asym = (&h - h.transpose()).iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        assert!(asym <= 1e-8, "asymmetry {asym}");
        let h_fd = fd_hessian(&geom, &theta, &xs, &ys, loss, 1e-5);
        let scale = h.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1.0);
        let dev = (&h - &h_fd).iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        assert!(dev <= 1e-4 * scale, "dev {dev} scale {scale}");
    }
}

#[test]
fn hessian_subset_is_the_corresponding_block() {
    let mut rng = RngStream::new(41);
    let w = CnnWeights::new(
        rng.gauss_vector(2),
        rng.gauss_vector(3),
        0.1,
        2,
        PoolKind::SumOfSquares,
    )
    .unwrap();
    let pw = ParamWeights::Cnn(w);
    let (geom, theta) = (pw.geometry(), pw.to_flat());
    let (xs, ys) = random_batch(6, 5, &mut rng);
    let full = hessian(&geom, &theta, &xs, &ys, Loss::Logistic, None).unwrap();
    let range = geom.cnn_head_range().unwrap();
    let block = hessian(&geom, &theta, &xs, &ys, Loss::Logistic, Some(range.clone())).unwrap();
    for (bi, i) in range.clone().enumerate() {
        for (bj, j) in range.clone().enumerate() {
            assert!((block[(bi, bj)] - full[(i, j)]).abs() < 1e-12);
        }
    }
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

#[test]
fn weights_roundtrip_through_binary_format() {
    let mut rng = RngStream::new(53);
    let fc = ParamWeights::Fc(random_fc(&[4, 3, 1], Activation::Relu, &mut rng));
    let cnn = ParamWeights::Cnn(
        CnnWeights::new(
            rng.gauss_vector(3),
            rng.gauss_vector(2),
            rng.gauss(),
            5,
            PoolKind::Sum,
        )
        .unwrap(),
    );
    for w in [fc, cnn] {
        let mut buf = Vec::new();
        write_weights(&mut buf, &w).unwrap();
        let back = read_weights(buf.as_slice()).unwrap();
        assert_eq!(w.to_flat(), back.to_flat());
        assert_eq!(w.geometry(), back.geometry());
    }
}

#[test]
fn truncated_weight_file_is_rejected() {
    let w = ParamWeights::Fc(
        FcWeights::new(vec![Matrix::zeros(1, 2)], Activation::Identity).unwrap(),
    );
    let mut buf = Vec::new();
    write_weights(&mut buf, &w).unwrap();
    buf.truncate(buf.len() - 3);
    assert!(read_weights(buf.as_slice()).is_err());
}
