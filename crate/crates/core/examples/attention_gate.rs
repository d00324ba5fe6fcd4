//! The attention block is residual and gated: with gamma = 0 a network
//! computes exactly what it computes without the block. Training opens the
//! gate when attention helps.

use ifolab::envs::StateShape;
use ifolab::models::{build_network, fit, Model, NetConfig, TrainConfig};
use ifolab::nn::{Layer, Matrix};
use ifolab::rng::rng_from_seed;
use rand::Rng;

fn main() -> ifolab::Result<()> {
    let mut rng = rng_from_seed(11);
    let rows = 400;
    let x = Matrix::from_vec(rows, 6, (0..rows * 6).map(|_| rng.gen_range(-1.0..1.0)).collect());
    // label depends on an interaction between the first and last features
    let targets: Vec<usize> = (0..rows).map(|r| usize::from(x[(r, 0)] * x[(r, 5)] > 0.0)).collect();

    let cfg = NetConfig {
        hidden: 16,
        ..NetConfig::default()
    };
    let net = build_network(StateShape::Vector(6), 2, &cfg, &x, &mut rng)?;
    let same = net.forward(&x)? == net.without_attention().forward(&x)?;
    println!("gamma = 0: outputs identical without the block: {same}");

    let mut model = Model::new(net);
    let train = TrainConfig {
        epochs: 150,
        batch_size: 32,
        lr: 3e-3,
    };
    let stats = fit(&mut model, &x, &targets, &train, &mut rng)?;
    for layer in &model.params.layers {
        if let Layer::Attention(block) = layer {
            println!("after training: gamma = {:.4}", block.gamma);
        }
    }
    println!("training accuracy {:.3}", stats.accuracy);
    Ok(())
}
