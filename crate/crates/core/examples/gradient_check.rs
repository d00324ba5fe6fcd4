//! Compares backpropagated gradients with central finite differences on a
//! small network with convolution and attention.

use ifolab::nn::{cross_entropy_grad, Activation, Layer, Matrix, ParamSet};
use ifolab::rng::rng_from_seed;
use rand::Rng;

fn loss(net: &ParamSet, x: &Matrix, t: &[usize]) -> f64 {
    cross_entropy_grad(net, x, t).unwrap().0
}

fn main() -> ifolab::Result<()> {
    let mut rng = rng_from_seed(5);
    let mut attention = Layer::attention(9 * 4, 9, &mut rng)?;
    if let Layer::Attention(block) = &mut attention {
        block.gamma = 0.7;
    }
    let net = ParamSet::new(vec![
        Layer::conv(3, 4, 3, 3, Activation::Tanh, &mut rng),
        attention,
        Layer::dense(36, 4, Activation::Identity, &mut rng),
    ])?;
    let x = Matrix::from_vec(4, 27, (0..108).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let t = [0, 3, 1, 2];
    let (_, grads) = cross_entropy_grad(&net, &x, &t)?;
    let analytic: Vec<f64> = grads.trainable().iter().flat_map(|b| b.iter().copied()).collect();

    let h = 1e-5;
    let mut probe = net.clone();
    let sizes: Vec<usize> = net.trainable().iter().map(|b| b.len()).collect();
    let (mut k, mut worst) = (0, 0.0f64);
    for (b, len) in sizes.into_iter().enumerate() {
        for i in 0..len {
            let orig = probe.trainable()[b][i];
            probe.trainable_mut()[b][i] = orig + h;
            let up = loss(&probe, &x, &t);
            probe.trainable_mut()[b][i] = orig - h;
            let down = loss(&probe, &x, &t);
            probe.trainable_mut()[b][i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let denom = analytic[k].abs().max(numeric.abs()).max(1e-6);
            worst = worst.max((analytic[k] - numeric).abs() / denom);
            k += 1;
        }
    }
    println!("{} parameters, max relative error {worst:.2e}", net.parameter_count());
    Ok(())
}
