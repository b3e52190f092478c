use super::*;
use crate::numerics::{elu_scalar, finite_difference_check, Matrix, Rng, DEFAULT_STEP};

fn random(rng: &mut Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.uniform(-1.0, 1.0))
}

fn naive_matmul(a: &Matrix, b: &Matrix) -> Matrix {
    Matrix::from_fn(a.rows(), b.cols(), |i, j| {
        (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum()
    })
}

fn naive_elu(m: &Matrix) -> Matrix {
    Matrix::from_fn(m.rows(), m.cols(), |i, j| {
        let x = m[(i, j)];
        if x > 0.0 {
            x
        } else {
            x.exp() - 1.0
        }
    })
}

fn max_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.sub(b).unwrap().max_abs()
}

#[test]
fn zero_input_embeds_to_zero() {
    let params = ModelParams::init(4, 1, 16, &mut Rng::new(0));
    let s = embed_nodes(&Matrix::zeros(5, 4), &params).unwrap();
    assert!(s.as_slice().iter().all(|&x| x == 0.0));
}

#[test]
fn identical_windows_identical_embeddings() {
    let mut rng = Rng::new(1);
    let params = ModelParams::init(3, 1, 16, &mut rng);
    let row: Vec<f64> = (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let chi = Matrix::from_rows(&[row.clone(), vec![0.1, 0.2, 0.3], row]).unwrap();
    let s = embed_nodes(&chi, &params).unwrap();
    assert_eq!(s.row(0), s.row(2));
}

#[test]
fn embedding_matches_hand_composition() {
    let mut rng = Rng::new(2);
    let params = ModelParams::init(3, 1, 10, &mut rng);
    let chi = random(&mut rng, 4, 3);
    let oracle = naive_elu(&naive_matmul(
        &naive_elu(&naive_matmul(&chi, &params.w_mlp1)),
        &params.w_mlp2,
    ));
    let s = embed_nodes(&chi, &params).unwrap();
    assert!(max_diff(&s, &oracle) < 1e-12);
}

#[test]
fn embedding_rejects_wrong_width() {
    let params = ModelParams::init(3, 1, 8, &mut Rng::new(0));
    let chi = Matrix::zeros(4, 5);
    assert!(forward(&chi, &params, &NeighborhoodMask::complete(4)).is_err());
}

#[test]
fn self_loop_identical_and_antipodal_significance() {
    let mut rng = Rng::new(3);
    let params = ModelParams::init(3, 1, 12, &mut rng);
    let s0: Vec<f64> = (0..12).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let neg: Vec<f64> = s0.iter().map(|x| -x).collect();
    let other: Vec<f64> = (0..12).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let s = Matrix::from_rows(&[s0.clone(), s0, neg, other]).unwrap();
    let t = edge_significance(&s, &params, &NeighborhoodMask::complete(4)).unwrap();
    for v in 0..4 {
        assert!((t.get(v, v) - 1.0).abs() < 1e-9);
    }
    assert!((t.get(0, 1) - 1.0).abs() < 1e-9);
    assert!((t.get(0, 2) + 1.0).abs() < 1e-9);
    assert!(t.get(0, 3).abs() <= 1.0 + 1e-9);
}

#[test]
fn masked_entries_are_zero() {
    let mut rng = Rng::new(4);
    let params = ModelParams::init(3, 1, 8, &mut rng);
    let s = random(&mut rng, 5, 8);
    let mask = NeighborhoodMask::diagonal(5);
    let t = edge_significance(&s, &params, &mask).unwrap();
    assert!(max_diff(&t.t, &Matrix::identity(5)) < 1e-9);
}

#[test]
fn degenerate_projection_gives_zero_row() {
    // With S = 0 every projected row is constant, hitting the epsilon floor.
    let params = ModelParams::init(3, 1, 8, &mut Rng::new(5));
    let t = edge_significance(&Matrix::zeros(3, 8), &params, &NeighborhoodMask::complete(3))
        .unwrap();
    assert!(t.t.as_slice().iter().all(|&x| x == 0.0));
}

/// Aggregation written as an explicit per-node loop.
fn loop_aggregate(h: &Matrix, t: &Matrix, w: &Matrix, mask: &NeighborhoodMask) -> Matrix {
    let n = h.rows();
    let d = h.cols();
    let mut out = Matrix::zeros(n, w.cols());
    for v in 0..n {
        let mut acc = vec![0.0; d];
        for u in 0..n {
            if mask.allows(v, u) {
                for k in 0..d {
                    acc[k] += t[(v, u)] * h[(u, k)];
                }
            }
        }
        for j in 0..w.cols() {
            let x: f64 = (0..d).map(|k| acc[k] * w[(k, j)]).sum();
            out[(v, j)] = elu_scalar(x);
        }
    }
    out
}

#[test]
fn single_node_layer_is_plain_transform() {
    let mut rng = Rng::new(6);
    let h = random(&mut rng, 1, 5);
    let w = random(&mut rng, 5, 5);
    let t = SignificanceMatrix {
        t: Matrix::identity(1),
    };
    let out = gnn_layer(&h, &t, &w, &NeighborhoodMask::complete(1)).unwrap();
    let expect = naive_elu(&naive_matmul(&h, &w));
    assert!(max_diff(&out, &expect) < 1e-12);
}

#[test]
fn diagonal_mask_transforms_nodes_independently() {
    let mut rng = Rng::new(7);
    let h = random(&mut rng, 4, 5);
    let w = random(&mut rng, 5, 5);
    let t = SignificanceMatrix {
        t: random(&mut rng, 4, 4),
    };
    let mask = NeighborhoodMask::diagonal(4);
    let out = gnn_layer(&h, &t, &w, &mask).unwrap();
    for v in 0..4 {
        let alone = Matrix::from_rows(&[h.row(v).iter().map(|x| x * t.get(v, v)).collect()])
            .unwrap();
        let expect = naive_elu(&naive_matmul(&alone, &w));
        assert!(max_diff(&Matrix::from_rows(&[out.row(v).to_vec()]).unwrap(), &expect) < 1e-12);
    }
}

#[test]
fn matrix_form_equals_loop_form() {
    let mut rng = Rng::new(8);
    for n in 1..=20 {
        let h = random(&mut rng, n, 6);
        let w = random(&mut rng, 6, 6);
        let t = SignificanceMatrix {
            t: random(&mut rng, n, n),
        };
        let mask = NeighborhoodMask::from_fn(n, |_, _| rng.uniform(0.0, 1.0) < 0.6);
        let fast = gnn_layer(&h, &t, &w, &mask).unwrap();
        let slow = loop_aggregate(&h, &t.t, &w, &mask);
        assert!(max_diff(&fast, &slow) < 1e-12, "n = {n}");
    }
}

#[test]
fn sum_aggregation_separates_equal_means() {
    // Neighborhood A = {a, b}; B = {a, b, a, b}. Same mean, different size.
    let mut rng = Rng::new(9);
    let a: Vec<f64> = (0..4).map(|_| rng.uniform(0.1, 1.0)).collect();
    let b: Vec<f64> = (0..4).map(|_| rng.uniform(0.1, 1.0)).collect();
    let w = random(&mut rng, 4, 4);
    let ones = |n| SignificanceMatrix {
        t: Matrix::from_fn(n, n, |_, _| 1.0),
    };
    let ha = Matrix::from_rows(&[a.clone(), b.clone()]).unwrap();
    let hb = Matrix::from_rows(&[a.clone(), b.clone(), a, b]).unwrap();
    let out_a = gnn_layer(&ha, &ones(2), &w, &NeighborhoodMask::complete(2)).unwrap();
    let out_b = gnn_layer(&hb, &ones(4), &w, &NeighborhoodMask::complete(4)).unwrap();
    let gap = out_a
        .row(0)
        .iter()
        .zip(out_b.row(0))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(gap > 1e-6, "sum outputs coincide: {gap}");

    let mean = |h: &Matrix| -> Vec<f64> {
        (0..h.cols())
            .map(|k| (0..h.rows()).map(|u| h[(u, k)]).sum::<f64>() / h.rows() as f64)
            .collect()
    };
    let (ma, mb) = (mean(&ha), mean(&hb));
    assert!(ma.iter().zip(&mb).all(|(x, y)| (x - y).abs() < 1e-15));
}

#[test]
fn zero_input_forward_is_zero() {
    let params = ModelParams::init(4, 2, 16, &mut Rng::new(10));
    let act = forward(&Matrix::zeros(6, 4), &params, &NeighborhoodMask::complete(6)).unwrap();
    assert!(act.y_hat.as_slice().iter().all(|&x| x == 0.0));
    assert_eq!(act.y_hat.shape(), (6, 2));
}

#[test]
fn single_node_forward_matches_stagewise_oracle() {
    let mut rng = Rng::new(11);
    let params = ModelParams::init(3, 2, 8, &mut rng);
    let chi = random(&mut rng, 1, 3);
    let s = naive_elu(&naive_matmul(
        &naive_elu(&naive_matmul(&chi, &params.w_mlp1)),
        &params.w_mlp2,
    ));
    let h1 = naive_elu(&naive_matmul(&s, &params.w_gnn1));
    let h2 = naive_elu(&naive_matmul(&h1, &params.w_gnn2));
    let sum = s.add(&h1).unwrap().add(&h2).unwrap();
    let y = naive_matmul(&sum, &params.w_regr);
    let act = forward(&chi, &params, &NeighborhoodMask::complete(1)).unwrap();
    assert!((act.t.get(0, 0) - 1.0).abs() < 1e-12);
    assert!(max_diff(&act.y_hat, &y) < 1e-12);
}

#[test]
fn forward_is_permutation_equivariant() {
    let mut rng = Rng::new(12);
    let params = ModelParams::init(4, 2, 16, &mut rng);
    let n = 9;
    let chi = random(&mut rng, n, 4);
    let mut perm: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut perm);
    let mask = NeighborhoodMask::complete(n);
    let base = forward(&chi, &params, &mask).unwrap();
    let permuted = forward(&chi.select_rows(&perm), &params, &mask).unwrap();
    let expect = base.y_hat.select_rows(&perm);
    let scale = expect.max_abs().max(1.0);
    assert!(max_diff(&permuted.y_hat, &expect) / scale < 1e-10);
}

#[test]
fn loss_examples() {
    let y = Matrix::from_fn(5, 1, |i, _| i as f64);
    let t = SignificanceMatrix {
        t: Matrix::identity(5),
    };
    let all: Vec<usize> = (0..5).collect();
    assert_eq!(loss(&y, &y, &t, 0.0, &all, LossMode::Averaged).unwrap(), 0.0);
    let l = loss(&y, &y, &t, 0.01, &all, LossMode::Averaged).unwrap();
    assert!((l - 0.05).abs() < 1e-15);

    let one = Matrix::from_vec(1, 1, vec![1.0]).unwrap();
    let zero = Matrix::zeros(1, 1);
    let t1 = SignificanceMatrix {
        t: Matrix::from_vec(1, 1, vec![0.37]).unwrap(),
    };
    assert_eq!(loss(&one, &zero, &t1, 0.0, &[0], LossMode::Averaged).unwrap(), 1.0);
    assert!(matches!(
        loss(&one, &zero, &t1, 0.0, &[], LossMode::Averaged),
        Err(crate::Error::Argument(_))
    ));
}

#[test]
fn summed_mode_scales_data_term() {
    let y = Matrix::from_fn(4, 2, |i, j| (i + j) as f64);
    let yh = Matrix::zeros(4, 2);
    let t = SignificanceMatrix {
        t: Matrix::zeros(4, 4),
    };
    let b = [0, 2];
    let avg = loss(&y, &yh, &t, 0.0, &b, LossMode::Averaged).unwrap();
    let sum = loss(&y, &yh, &t, 0.0, &b, LossMode::Summed).unwrap();
    assert!((sum - avg * 4.0).abs() < 1e-12);
}

struct Toy {
    chi: Matrix,
    y: Matrix,
    params: ModelParams,
    mask: NeighborhoodMask,
}

fn toy(seed: u64) -> Toy {
    let mut rng = Rng::new(seed);
    let (n, p, q, hidden) = (6, 3, 2, 8);
    Toy {
        chi: random(&mut rng, n, p),
        y: random(&mut rng, n, q),
        params: ModelParams::init(p, q, hidden, &mut rng),
        mask: NeighborhoodMask::complete(n),
    }
}

fn fd_max_error(t: &Toy, lambda: f64, batch: &[usize], mode: LossMode) -> f64 {
    let (_, _, g) = gradients(&t.chi, &t.y, &t.params, &t.mask, lambda, batch, mode).unwrap();
    let mut scratch = t.params.clone();
    let f = |theta: &[f64]| {
        scratch.set_flat(theta);
        let act = forward(&t.chi, &scratch, &t.mask).unwrap();
        loss(&t.y, &act.y_hat, &act.t, lambda, batch, mode).unwrap()
    };
    finite_difference_check(f, &g.flatten(), &t.params.flatten(), DEFAULT_STEP)
        .unwrap()
        .max_rel_error
}

#[test]
fn gradients_match_finite_differences() {
    let batch: Vec<usize> = (0..6).collect();
    for lambda in [0.0, 0.01, 1.0] {
        let err = fd_max_error(&toy(13), lambda, &batch, LossMode::Averaged);
        assert!(err < 1e-4, "lambda {lambda}: {err}");
    }
}

#[test]
fn gradients_match_on_partial_batch_and_summed_mode() {
    let t = toy(14);
    assert!(fd_max_error(&t, 0.1, &[1, 4], LossMode::Averaged) < 1e-4);
    assert!(fd_max_error(&t, 0.1, &[0, 2, 5], LossMode::Summed) < 1e-4);
}

#[test]
fn gradients_match_under_restricted_mask() {
    let mut t = toy(15);
    t.mask = NeighborhoodMask::from_fn(6, |v, u| u < v && v - u <= 2);
    assert!(fd_max_error(&t, 0.05, &[0, 1, 2, 3, 4, 5], LossMode::Averaged) < 1e-4);
}

#[test]
fn zero_residual_zero_gradient() {
    let t = toy(16);
    let y = forward(&t.chi, &t.params, &t.mask).unwrap().y_hat;
    let (l, _, g) = gradients(&t.chi, &y, &t.params, &t.mask, 0.0, &[0, 3], LossMode::Averaged)
        .unwrap();
    assert_eq!(l.total, 0.0);
    for m in g.matrices() {
        assert!(m.as_slice().iter().all(|&x| x == 0.0));
    }
}

#[test]
fn penalty_gradient_is_linear_in_lambda() {
    let t = toy(17);
    let b = [0, 1, 2];
    let grad = |lambda| {
        gradients(&t.chi, &t.y, &t.params, &t.mask, lambda, &b, LossMode::Averaged)
            .unwrap()
            .2
            .flatten()
    };
    let (g0, g1, g2) = (grad(0.0), grad(0.3), grad(0.6));
    let scale = g1.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for i in 0..g0.len() {
        let d1 = g1[i] - g0[i];
        let d2 = g2[i] - g1[i];
        assert!((d1 - d2).abs() < 1e-12 * scale.max(1.0), "coord {i}");
    }
}

#[test]
fn significance_invariants_random_trials() {
    let mut rng = Rng::new(18);
    for _ in 0..100 {
        let n = rng.below(50) + 1;
        let p = rng.below(12) + 1;
        let params = ModelParams::init(p, 1, 32, &mut rng);
        let chi = Matrix::from_fn(n, p, |_, _| 2.0 * rng.normal());
        let act = forward(&chi, &params, &NeighborhoodMask::complete(n)).unwrap();
        for v in 0..n {
            for u in 0..n {
                let t = act.t.get(v, u);
                assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&t));
                assert!((t - act.t.get(u, v)).abs() < 1e-10);
            }
            if act.proj.norms[v] > crate::numerics::NORM_EPS {
                assert!((act.t.get(v, v) - 1.0).abs() < 1e-9);
            }
        }
    }
}
