#![allow(dead_code)]

use ifolab::nn::{Activation, Layer, Matrix, ParamSet};
use rand::Rng;

/// Mean NLL computed from `forward` alone, independent of the backward pass.
pub fn nll(params: &ParamSet, x: &Matrix, targets: &[usize]) -> f64 {
    let logits = params.forward(x).unwrap();
    let mut total = 0.0;
    for (r, &t) in targets.iter().enumerate() {
        let row = logits.row(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        total += lse - row[t];
    }
    total / targets.len() as f64
}

/// Largest relative error between the analytic gradient and central
/// differences with step `h`, over every trainable entry.
pub fn max_fd_relative_error(params: &ParamSet, x: &Matrix, targets: &[usize], h: f64) -> f64 {
    let (_, grads) = ifolab::nn::cross_entropy_grad(params, x, targets).unwrap();
    let analytic: Vec<f64> = grads.trainable().iter().flat_map(|s| s.iter().copied()).collect();
    let mut probe = params.clone();
    let mut worst = 0.0f64;
    let mut k = 0;
    let buffers = probe.trainable().iter().map(|s| s.len()).collect::<Vec<_>>();
    for (b, len) in buffers.into_iter().enumerate() {
        for i in 0..len {
            let orig = probe.trainable()[b][i];
            probe.trainable_mut()[b][i] = orig + h;
            let up = nll(&probe, x, targets);
            probe.trainable_mut()[b][i] = orig - h;
            let down = nll(&probe, x, targets);
            probe.trainable_mut()[b][i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic[k];
            let denom = a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max((a - numeric).abs() / denom);
            k += 1;
        }
    }
    worst
}

/// Random network: dense -> attention (nonzero gate) -> dense -> logits.
pub fn random_attention_net(rng: &mut impl Rng, inputs: usize, width: usize, tokens: usize, actions: usize, act: Activation) -> ParamSet {
    let mut attn = Layer::attention(width, tokens, rng).unwrap();
    if let Layer::Attention(b) = &mut attn {
        b.gamma = rng.gen_range(0.3..1.2);
    }
    let mut first = Layer::dense(inputs, width, act, rng);
    if let Layer::Dense { bias, .. } = &mut first {
        bias.iter_mut().for_each(|b| *b = rng.gen_range(-0.2..0.2));
    }
    ParamSet::new(vec![
        first,
        attn,
        Layer::dense(width, width, act, rng),
        Layer::dense(width, actions, Activation::Identity, rng),
    ])
    .unwrap()
}

pub fn random_batch(rng: &mut impl Rng, rows: usize, cols: usize, actions: usize) -> (Matrix, Vec<usize>) {
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let targets = (0..rows).map(|_| rng.gen_range(0..actions)).collect();
    (Matrix::from_vec(rows, cols, data), targets)
}

/// Rollout record with one transition per action; the state carries `tag`
/// so tests can tell which episode a sampled transition came from.
pub fn episode(actions: &[usize], goal: bool, tag: f64) -> ifolab::models::EpisodeRecord {
    use ifolab::envs::State;
    use ifolab::models::{EpisodeRecord, Source, Transition};
    EpisodeRecord {
        transitions: actions
            .iter()
            .map(|&a| Transition {
                state: State(vec![tag]),
                action: a,
                next: State(vec![tag]),
                source: Source::Post,
            })
            .collect(),
        goal,
        reward: 0.0,
        non_map: vec![false; actions.len()],
    }
}

/// `n` pre-demonstration transitions cycling through the actions, tagged -1.
pub fn pre_set(n: usize, actions: usize) -> Vec<ifolab::models::Transition> {
    use ifolab::envs::State;
    use ifolab::models::{Source, Transition};
    (0..n)
        .map(|i| Transition {
            state: State(vec![-1.0]),
            action: i % actions,
            next: State(vec![-1.0]),
            source: Source::Pre,
        })
        .collect()
}
