mod common;

use common::{max_fd_relative_error, nll, random_attention_net, random_batch};
use ifolab::nn::{
    adam_step, cross_entropy_grad, softmax, AdamConfig, AdamState, Activation, Layer, Matrix, ParamSet,
};
use ifolab::rng::rng_from_seed;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn gradients_match_central_differences() {
    let mut rng = rng_from_seed(2024);
    for trial in 0..6 {
        let act = if trial % 2 == 0 { Activation::Tanh } else { Activation::Relu };
        let net = random_attention_net(&mut rng, 5, 16, 4, 3, act);
        let (x, t) = random_batch(&mut rng, 8, 5, 3);
        let err = max_fd_relative_error(&net, &x, &t, 1e-5);
        assert!(err < 1e-3, "trial {trial}: relative error {err}");
    }
}

#[test]
fn token_shared_dense_gradients() {
    let mut rng = rng_from_seed(77);
    let mut attn = Layer::attention(9 * 4, 9, &mut rng).unwrap();
    if let Layer::Attention(b) = &mut attn {
        b.gamma = 0.8;
    }
    let net = ParamSet::new(vec![
        Layer::token_dense(3, 4, 9, Activation::Tanh, &mut rng),
        attn,
        Layer::dense(36, 12, Activation::Tanh, &mut rng),
        Layer::dense(12, 4, Activation::Identity, &mut rng),
    ])
    .unwrap();
    let (x, t) = random_batch(&mut rng, 6, 27, 4);
    let err = max_fd_relative_error(&net, &x, &t, 1e-5);
    assert!(err < 1e-3, "relative error {err}");
}

#[test]
fn convolution_gradients() {
    let mut rng = rng_from_seed(91);
    let mut attn = Layer::attention(12 * 3, 12, &mut rng).unwrap();
    if let Layer::Attention(b) = &mut attn {
        b.gamma = 0.6;
    }
    // 3x4 grid so row/column boundary handling is not symmetric
    let net = ParamSet::new(vec![
        Layer::conv(2, 5, 3, 4, Activation::Tanh, &mut rng),
        Layer::conv(5, 3, 3, 4, Activation::Tanh, &mut rng),
        attn,
        Layer::dense(36, 4, Activation::Identity, &mut rng),
    ])
    .unwrap();
    let (x, t) = random_batch(&mut rng, 5, 24, 4);
    let err = max_fd_relative_error(&net, &x, &t, 1e-5);
    assert!(err < 1e-3, "relative error {err}");
}

#[test]
fn perfect_fit_has_near_zero_loss_and_gradient() {
    let net = ParamSet::new(vec![Layer::Dense {
        weight: Matrix::from_rows(&[vec![40.0, 0.0], vec![-40.0, 0.0]]),
        bias: vec![0.0, 0.0],
        activation: Activation::Identity,
        tokens: 1,
    }])
    .unwrap();
    let x = Matrix::from_rows(&[vec![1.0, 0.3]]);
    let (loss, grads) = cross_entropy_grad(&net, &x, &[0]).unwrap();
    assert!(loss < 1e-30);
    assert!(grads.trainable().iter().flat_map(|s| s.iter()).all(|g| g.abs() < 1e-30));
}

#[test]
fn uniform_prediction_costs_ln_action_count() {
    let net = ParamSet::new(vec![Layer::Dense {
        weight: Matrix::zeros(4, 3),
        bias: vec![0.0; 4],
        activation: Activation::Identity,
        tokens: 1,
    }])
    .unwrap();
    let x = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![-1.0, 0.0, 0.5]]);
    let (loss, _) = cross_entropy_grad(&net, &x, &[0, 3]).unwrap();
    assert!((loss - 4f64.ln()).abs() < 1e-12);
}

#[test]
fn invalid_target_is_input_error() {
    let mut rng = rng_from_seed(0);
    let net = ParamSet::new(vec![Layer::dense(2, 3, Activation::Identity, &mut rng)]).unwrap();
    let err = cross_entropy_grad(&net, &Matrix::zeros(1, 2), &[3]).unwrap_err();
    assert!(matches!(err, ifolab::Error::Input(_)));
}

#[test]
fn closed_gate_attention_net_equals_plain_net() {
    let mut rng = rng_from_seed(31);
    let mut net = random_attention_net(&mut rng, 6, 16, 4, 3, Activation::Relu);
    if let Layer::Attention(b) = &mut net.layers[1] {
        b.gamma = 0.0;
    }
    let plain = net.without_attention();
    let (x, _) = random_batch(&mut rng, 200, 6, 3);
    assert_eq!(net.forward(&x).unwrap(), plain.forward(&x).unwrap());
}

#[test]
fn adam_halves_loss_on_synthetic_classification() {
    let mut rng = rng_from_seed(5);
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for _ in 0..64 {
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t = usize::from(x[0] + 0.5 * x[1] > 0.0) + usize::from(x[2] > 0.3);
        rows.push(x);
        targets.push(t);
    }
    let x = Matrix::from_rows(&rows);
    let mut net = ParamSet::new(vec![
        Layer::dense(4, 32, Activation::Relu, &mut rng),
        Layer::attention(32, 4, &mut rng).unwrap(),
        Layer::dense(32, 3, Activation::Identity, &mut rng),
    ])
    .unwrap();
    let start = nll(&net, &x, &targets);
    let mut state = AdamState::new(&net);
    let cfg = AdamConfig::default();
    for _ in 0..200 {
        let (_, g) = cross_entropy_grad(&net, &x, &targets).unwrap();
        adam_step(&mut net, &g, &mut state, &cfg);
    }
    let end = nll(&net, &x, &targets);
    assert!(end <= 0.5 * start, "loss {start} -> {end}");
}

proptest! {
    #[test]
    fn softmax_sums_to_one_and_is_shift_invariant(
        logits in prop::collection::vec(-50.0f64..50.0, 1..12),
        shift in -100.0f64..100.0,
    ) {
        let p = softmax(&logits);
        let sum: f64 = p.probs().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
        let shifted: Vec<f64> = logits.iter().map(|v| v + shift).collect();
        let q = softmax(&shifted);
        for (a, b) in p.probs().iter().zip(q.probs()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_check_on_random_small_nets(seed in 0u64..1000) {
        let mut rng = rng_from_seed(seed);
        let width = 4 * rng.gen_range(1..=8);
        let inputs = rng.gen_range(1..6);
        let net = random_attention_net(&mut rng, inputs, width, 4, 2 + (seed as usize % 3), Activation::Tanh);
        let (x, t) = random_batch(&mut rng, 4, inputs, net.output_dim());
        let err = max_fd_relative_error(&net, &x, &t, 1e-5);
        prop_assert!(err < 1e-3, "relative error {}", err);
    }
}
