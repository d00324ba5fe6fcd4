use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::StateShape;
use crate::error::Result;
use crate::nn::{Activation, Layer, Matrix, ParamSet};

/// Network sizes shared by the inverse dynamics and policy models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetConfig {
    /// Width of the hidden dense layers.
    pub hidden: usize,
    /// Channels of each convolution for grid states.
    pub channels: usize,
    /// 3×3 convolutions for grid states.
    pub conv_layers: usize,
    /// Tokens the hidden layer is split into for vector states.
    pub vector_tokens: usize,
    pub attention: bool,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            hidden: 64,
            channels: 16,
            conv_layers: 2,
            vector_tokens: 4,
            attention: true,
        }
    }
}

/// Per-feature standardization fitted on `data`; constant features keep scale 1.
pub fn fit_normalizer(data: &Matrix) -> Layer {
    let n = data.rows().max(1) as f64;
    let cols = data.cols();
    let mut mean = vec![0.0; cols];
    for r in 0..data.rows() {
        mean.iter_mut().zip(data.row(r)).for_each(|(m, v)| *m += v / n);
    }
    let mut var = vec![0.0; cols];
    for r in 0..data.rows() {
        for ((s, v), m) in var.iter_mut().zip(data.row(r)).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    let scale = var
        .iter()
        .map(|v| if v.sqrt() > 1e-8 { 1.0 / v.sqrt() } else { 1.0 })
        .collect();
    Layer::Normalize { shift: mean, scale }
}

/// Builds a classifier over inputs of `shape`.
///
/// Vector inputs: standardize, dense, optional attention over
/// `vector_tokens` slices of the hidden layer, dense, logits.
/// Grid inputs: 3×3 convolutions, each optionally followed by attention
/// across cells, then dense over the flattened grid, logits.
pub fn build_network(
    shape: StateShape,
    actions: usize,
    cfg: &NetConfig,
    sample_inputs: &Matrix,
    rng: &mut impl Rng,
) -> Result<ParamSet> {
    let mut layers = Vec::new();
    match shape {
        StateShape::Vector(n) => {
            layers.push(fit_normalizer(sample_inputs));
            layers.push(Layer::dense(n, cfg.hidden, Activation::Relu, rng));
            if cfg.attention {
                layers.push(Layer::attention(cfg.hidden, cfg.vector_tokens, rng)?);
            }
            layers.push(Layer::dense(cfg.hidden, cfg.hidden, Activation::Relu, rng));
        }
        StateShape::Grid {
            channels,
            height,
            width,
        } => {
            let cells = height * width;
            let mut depth = channels;
            for _ in 0..cfg.conv_layers {
                layers.push(Layer::conv(depth, cfg.channels, height, width, Activation::Relu, rng));
                depth = cfg.channels;
                if cfg.attention {
                    layers.push(Layer::attention(cells * depth, cells, rng)?);
                }
            }
            layers.push(Layer::dense(cells * depth, cfg.hidden, Activation::Relu, rng));
        }
    }
    layers.push(Layer::dense(cfg.hidden, actions, Activation::Identity, rng));
    ParamSet::new(layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn attention_toggle_only_adds_the_block() {
        let x = Matrix::from_rows(&[vec![0.0, 1.0, 2.0, 3.0], vec![1.0, 1.0, 0.0, -1.0]]);
        let on = build_network(StateShape::Vector(4), 2, &NetConfig::default(), &x, &mut rng_from_seed(1)).unwrap();
        assert!(on.has_attention());
        assert_eq!(on.input_dim(), 4);
        assert_eq!(on.output_dim(), 2);
        let grid = StateShape::Grid {
            channels: 6,
            height: 3,
            width: 3,
        };
        let cfg = NetConfig {
            attention: false,
            ..NetConfig::default()
        };
        let off = build_network(grid, 4, &cfg, &Matrix::zeros(1, 54), &mut rng_from_seed(1)).unwrap();
        assert!(!off.has_attention());
        assert_eq!(off.input_dim(), 54);
    }

    #[test]
    fn hidden_width_must_split_into_tokens() {
        let cfg = NetConfig {
            hidden: 30,
            ..NetConfig::default()
        };
        let err = build_network(StateShape::Vector(2), 2, &cfg, &Matrix::zeros(1, 2), &mut rng_from_seed(0));
        assert!(matches!(err, Err(crate::Error::Config(_))));
    }
}
