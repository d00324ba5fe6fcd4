use serde::{Deserialize, Serialize};

use super::matrix::{add_transposed_mul, mul, mul_transposed, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "identity" => Some(Activation::Identity),
            "relu" => Some(Activation::Relu),
            "tanh" => Some(Activation::Tanh),
            _ => None,
        }
    }

    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation's output.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

/// Residual gated self-attention over `tokens` positions:
/// `out = x + gamma * softmax(Q Kᵀ / sqrt(d)) V`, single head, `d = width / tokens`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionBlock {
    pub tokens: usize,
    pub query: Matrix,
    pub key: Matrix,
    pub value: Matrix,
    pub gamma: f64,
}

impl AttentionBlock {
    pub fn token_dim(&self) -> usize {
        self.query.cols()
    }

    pub fn width(&self) -> usize {
        self.tokens * self.token_dim()
    }

    /// Applies the block to one sample laid out token-major (`tokens × d`).
    pub fn apply(&self, features: &[f64]) -> Vec<f64> {
        let cache = self.forward_sample(features);
        cache.out
    }

    fn forward_sample(&self, x: &[f64]) -> AttentionCache {
        let n = self.tokens;
        let d = self.token_dim();
        let mut q = vec![0.0; n * d];
        let mut k = vec![0.0; n * d];
        let mut v = vec![0.0; n * d];
        mul_transposed(x, n, d, self.query.as_slice(), d, &mut q);
        mul_transposed(x, n, d, self.key.as_slice(), d, &mut k);
        mul_transposed(x, n, d, self.value.as_slice(), d, &mut v);
        let mut p = vec![0.0; n * n];
        mul_transposed(&q, n, d, &k, n, &mut p);
        let scale = 1.0 / (d as f64).sqrt();
        for row in p.chunks_mut(n) {
            row.iter_mut().for_each(|s| *s *= scale);
            softmax_in_place(row);
        }
        let mut o = vec![0.0; n * d];
        mul(&p, n, n, &v, d, &mut o);
        let out = x
            .iter()
            .zip(&o)
            .map(|(xi, oi)| xi + self.gamma * oi)
            .collect();
        AttentionCache { q, k, v, p, o, out }
    }

    /// Accumulates parameter gradients into `grads` and returns the input gradient.
    fn backward_sample(&self, x: &[f64], cache: &AttentionCache, d_out: &[f64], grads: &mut AttentionBlock) -> Vec<f64> {
        let n = self.tokens;
        let d = self.token_dim();
        let scale = 1.0 / (d as f64).sqrt();

        let mut d_x = d_out.to_vec();
        grads.gamma += d_out.iter().zip(&cache.o).map(|(a, b)| a * b).sum::<f64>();
        if self.gamma == 0.0 {
            return d_x;
        }
        let d_o: Vec<f64> = d_out.iter().map(|g| g * self.gamma).collect();

        let mut d_p = vec![0.0; n * n];
        mul_transposed(&d_o, n, d, &cache.v, n, &mut d_p);
        let mut d_v = vec![0.0; n * d];
        add_transposed_mul(&cache.p, n, n, &d_o, d, &mut d_v);

        let mut d_s = vec![0.0; n * n];
        for i in 0..n {
            let pr = &cache.p[i * n..(i + 1) * n];
            let dpr = &d_p[i * n..(i + 1) * n];
            let dot: f64 = pr.iter().zip(dpr).map(|(a, b)| a * b).sum();
            for j in 0..n {
                d_s[i * n + j] = pr[j] * (dpr[j] - dot) * scale;
            }
        }
        let mut d_q = vec![0.0; n * d];
        mul(&d_s, n, n, &cache.k, d, &mut d_q);
        let mut d_k = vec![0.0; n * d];
        add_transposed_mul(&d_s, n, n, &cache.q, d, &mut d_k);

        let mut tmp = vec![0.0; n * d];
        for (d_proj, weight, grad) in [
            (&d_q, &self.query, &mut grads.query),
            (&d_k, &self.key, &mut grads.key),
            (&d_v, &self.value, &mut grads.value),
        ] {
            add_transposed_mul(d_proj, n, d, x, d, grad.as_mut_slice());
            mul(d_proj, n, d, weight.as_slice(), d, &mut tmp);
            d_x.iter_mut().zip(&tmp).for_each(|(a, b)| *a += b);
        }
        d_x
    }
}

struct AttentionCache {
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    p: Vec<f64>,
    o: Vec<f64>,
    out: Vec<f64>,
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    row.iter_mut().for_each(|v| *v /= sum);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Layer {
    /// Fixed affine input standardization `(x - shift) * scale`; not trained.
    Normalize { shift: Vec<f64>, scale: Vec<f64> },
    /// Fully connected layer. With `tokens > 1` the same weights are applied
    /// to each of `tokens` consecutive feature groups (a 1×1 convolution over
    /// grid cells).
    Dense {
        weight: Matrix,
        bias: Vec<f64>,
        activation: Activation,
        tokens: usize,
    },
    /// 3×3 convolution with zero padding over a channels-last
    /// `height × width` grid; `weight` is `out × (9·in)`, taps row-major
    /// then channel.
    Conv {
        weight: Matrix,
        bias: Vec<f64>,
        activation: Activation,
        height: usize,
        width: usize,
    },
    Attention(AttentionBlock),
}

/// Per-cell 3×3 neighbourhoods of a channels-last grid, zero outside.
fn im2col(x: &[f64], height: usize, width: usize, channels: usize) -> Vec<f64> {
    let patch = 9 * channels;
    let mut out = vec![0.0; height * width * patch];
    for r in 0..height {
        for c in 0..width {
            let dst = &mut out[(r * width + c) * patch..][..patch];
            for tap in 0..9 {
                let (rr, cc) = ((r + tap / 3) as isize - 1, (c + tap % 3) as isize - 1);
                if rr >= 0 && cc >= 0 && (rr as usize) < height && (cc as usize) < width {
                    let src = (rr as usize * width + cc as usize) * channels;
                    dst[tap * channels..][..channels].copy_from_slice(&x[src..src + channels]);
                }
            }
        }
    }
    out
}

/// Adjoint of [`im2col`]: scatters patch gradients back onto the grid.
fn col2im(cols: &[f64], height: usize, width: usize, channels: usize, out: &mut [f64]) {
    let patch = 9 * channels;
    for r in 0..height {
        for c in 0..width {
            let src = &cols[(r * width + c) * patch..][..patch];
            for tap in 0..9 {
                let (rr, cc) = ((r + tap / 3) as isize - 1, (c + tap % 3) as isize - 1);
                if rr >= 0 && cc >= 0 && (rr as usize) < height && (cc as usize) < width {
                    let dst = (rr as usize * width + cc as usize) * channels;
                    out[dst..dst + channels]
                        .iter_mut()
                        .zip(&src[tap * channels..][..channels])
                        .for_each(|(o, g)| *o += g);
                }
            }
        }
    }
}

fn glorot(rows: usize, cols: usize, rng: &mut impl rand::Rng) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gen_range(-limit..=limit)).collect();
    Matrix::from_vec(rows, cols, data)
}

impl Layer {
    pub fn dense(inputs: usize, outputs: usize, activation: Activation, rng: &mut impl rand::Rng) -> Self {
        Layer::token_dense(inputs, outputs, 1, activation, rng)
    }

    pub fn token_dense(
        inputs: usize,
        outputs: usize,
        tokens: usize,
        activation: Activation,
        rng: &mut impl rand::Rng,
    ) -> Self {
        Layer::Dense {
            weight: glorot(outputs, inputs, rng),
            bias: vec![0.0; outputs],
            activation,
            tokens,
        }
    }

    pub fn conv(
        inputs: usize,
        outputs: usize,
        height: usize,
        width: usize,
        activation: Activation,
        rng: &mut impl rand::Rng,
    ) -> Self {
        Layer::Conv {
            weight: glorot(outputs, 9 * inputs, rng),
            bias: vec![0.0; outputs],
            activation,
            height,
            width,
        }
    }

    /// Attention over `width` features split into `tokens` positions; gamma starts at 0.
    pub fn attention(width: usize, tokens: usize, rng: &mut impl rand::Rng) -> Result<Self> {
        if tokens == 0 || width % tokens != 0 {
            return Err(Error::Config(format!(
                "attention width {width} is not divisible into {tokens} tokens"
            )));
        }
        let d = width / tokens;
        Ok(Layer::Attention(AttentionBlock {
            tokens,
            query: glorot(d, d, rng),
            key: glorot(d, d, rng),
            value: glorot(d, d, rng),
            gamma: 0.0,
        }))
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Layer::Normalize { shift, .. } => shift.len(),
            Layer::Dense { weight, tokens, .. } => weight.cols() * tokens,
            Layer::Conv {
                weight, height, width, ..
            } => weight.cols() / 9 * height * width,
            Layer::Attention(block) => block.width(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Layer::Normalize { shift, .. } => shift.len(),
            Layer::Dense { weight, tokens, .. } => weight.rows() * tokens,
            Layer::Conv {
                weight, height, width, ..
            } => weight.rows() * height * width,
            Layer::Attention(block) => block.width(),
        }
    }

    fn zeros_like(&self) -> Self {
        match self {
            Layer::Normalize { shift, .. } => Layer::Normalize {
                shift: vec![0.0; shift.len()],
                scale: vec![0.0; shift.len()],
            },
            Layer::Dense {
                weight,
                bias,
                activation,
                tokens,
            } => Layer::Dense {
                weight: Matrix::zeros(weight.rows(), weight.cols()),
                bias: vec![0.0; bias.len()],
                activation: *activation,
                tokens: *tokens,
            },
            Layer::Conv {
                weight,
                bias,
                activation,
                height,
                width,
            } => Layer::Conv {
                weight: Matrix::zeros(weight.rows(), weight.cols()),
                bias: vec![0.0; bias.len()],
                activation: *activation,
                height: *height,
                width: *width,
            },
            Layer::Attention(b) => Layer::Attention(AttentionBlock {
                tokens: b.tokens,
                query: Matrix::zeros(b.query.rows(), b.query.cols()),
                key: Matrix::zeros(b.key.rows(), b.key.cols()),
                value: Matrix::zeros(b.value.rows(), b.value.cols()),
                gamma: 0.0,
            }),
        }
    }

    fn forward(&self, x: &Matrix) -> (Matrix, Option<Vec<AttentionCache>>) {
        let batch = x.rows();
        match self {
            Layer::Normalize { shift, scale } => {
                let mut out = x.clone();
                for r in 0..batch {
                    for ((v, s), c) in out.row_mut(r).iter_mut().zip(shift).zip(scale) {
                        *v = (*v - s) * c;
                    }
                }
                (out, None)
            }
            Layer::Dense {
                weight,
                bias,
                activation,
                tokens,
            } => {
                let rows = batch * tokens;
                let (outs, ins) = (weight.rows(), weight.cols());
                let mut out = vec![0.0; rows * outs];
                mul_transposed(x.as_slice(), rows, ins, weight.as_slice(), outs, &mut out);
                for row in out.chunks_mut(outs) {
                    for (v, b) in row.iter_mut().zip(bias) {
                        *v = activation.apply(*v + b);
                    }
                }
                (Matrix::from_vec(batch, outs * tokens, out), None)
            }
            Layer::Conv {
                weight,
                bias,
                activation,
                height,
                width,
            } => {
                let cells = height * width;
                let (outs, patch) = (weight.rows(), weight.cols());
                let mut out = vec![0.0; batch * cells * outs];
                for r in 0..batch {
                    let cols = im2col(x.row(r), *height, *width, patch / 9);
                    let dst = &mut out[r * cells * outs..][..cells * outs];
                    mul_transposed(&cols, cells, patch, weight.as_slice(), outs, dst);
                }
                for row in out.chunks_mut(outs) {
                    for (v, b) in row.iter_mut().zip(bias) {
                        *v = activation.apply(*v + b);
                    }
                }
                (Matrix::from_vec(batch, cells * outs, out), None)
            }
            Layer::Attention(block) => {
                let mut out = Matrix::zeros(batch, block.width());
                let mut caches = Vec::with_capacity(batch);
                for r in 0..batch {
                    let cache = block.forward_sample(x.row(r));
                    out.row_mut(r).copy_from_slice(&cache.out);
                    caches.push(cache);
                }
                (out, Some(caches))
            }
        }
    }
}

/// Ordered network parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub layers: Vec<Layer>,
}

/// Activations recorded by [`ParamSet::forward_trace`] for backpropagation.
pub struct Trace {
    inputs: Vec<Matrix>,
    attention: Vec<Option<Vec<AttentionCache>>>,
    output: Matrix,
}

impl Trace {
    pub fn output(&self) -> &Matrix {
        &self.output
    }
}

impl ParamSet {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let params = ParamSet { layers };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Config("network has no layers".into()));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                Layer::Normalize { shift, scale } if shift.len() != scale.len() => {
                    return Err(Error::Config(format!("layer {i}: normalize shift/scale lengths differ")));
                }
                Layer::Dense { bias, weight, tokens, .. } if bias.len() != weight.rows() || *tokens == 0 => {
                    return Err(Error::Config(format!("layer {i}: bias length does not match weight rows")));
                }
                Layer::Conv {
                    bias,
                    weight,
                    height,
                    width,
                    ..
                } if bias.len() != weight.rows() || weight.cols() % 9 != 0 || height * width == 0 => {
                    return Err(Error::Config(format!(
                        "layer {i}: convolution needs 9 taps per input channel and one bias per output"
                    )));
                }
                Layer::Attention(b) => {
                    let d = b.token_dim();
                    if b.tokens == 0
                        || b.query.rows() != d
                        || b.key.rows() != d
                        || b.key.cols() != d
                        || b.value.rows() != d
                        || b.value.cols() != d
                    {
                        return Err(Error::Config(format!("layer {i}: attention projections must be {d}x{d}")));
                    }
                    if !b.gamma.is_finite() {
                        return Err(Error::Config(format!("layer {i}: attention gamma is not finite")));
                    }
                }
                _ => {}
            }
            if i > 0 && self.layers[i - 1].output_dim() != layer.input_dim() {
                return Err(Error::Config(format!(
                    "layer {i} expects {} inputs but layer {} produces {}",
                    layer.input_dim(),
                    i - 1,
                    self.layers[i - 1].output_dim()
                )));
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn zeros_like(&self) -> Self {
        ParamSet {
            layers: self.layers.iter().map(Layer::zeros_like).collect(),
        }
    }

    /// Same network with every attention block removed.
    pub fn without_attention(&self) -> Self {
        ParamSet {
            layers: self
                .layers
                .iter()
                .filter(|l| !matches!(l, Layer::Attention(_)))
                .cloned()
                .collect(),
        }
    }

    pub fn has_attention(&self) -> bool {
        self.layers.iter().any(|l| matches!(l, Layer::Attention(_)))
    }

    /// Trainable parameter buffers in a fixed order.
    pub fn trainable(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Normalize { .. } => {}
                Layer::Dense { weight, bias, .. } | Layer::Conv { weight, bias, .. } => {
                    out.push(weight.as_slice());
                    out.push(bias.as_slice());
                }
                Layer::Attention(b) => {
                    out.push(b.query.as_slice());
                    out.push(b.key.as_slice());
                    out.push(b.value.as_slice());
                    out.push(std::slice::from_ref(&b.gamma));
                }
            }
        }
        out
    }

    pub fn trainable_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Normalize { .. } => {}
                Layer::Dense { weight, bias, .. } | Layer::Conv { weight, bias, .. } => {
                    out.push(weight.as_mut_slice());
                    out.push(bias.as_mut_slice());
                }
                Layer::Attention(b) => {
                    out.push(b.query.as_mut_slice());
                    out.push(b.key.as_mut_slice());
                    out.push(b.value.as_mut_slice());
                    out.push(std::slice::from_mut(&mut b.gamma));
                }
            }
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.trainable().iter().map(|s| s.len()).sum()
    }

    fn check_input(&self, input: &Matrix) -> Result<()> {
        if input.cols() != self.input_dim() {
            return Err(Error::Config(format!(
                "input has {} features but the network expects {}",
                input.cols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Logits for each row of `input`.
    pub fn forward(&self, input: &Matrix) -> Result<Matrix> {
        self.check_input(input)?;
        let mut x = input.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            x = layer.forward(&x).0;
            if !x.is_finite() {
                return Err(Error::Numerical {
                    layer: i,
                    detail: "non-finite activation".into(),
                });
            }
        }
        Ok(x)
    }

    pub fn forward_trace(&self, input: &Matrix) -> Result<Trace> {
        self.check_input(input)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut attention = Vec::with_capacity(self.layers.len());
        let mut x = input.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let (next, cache) = layer.forward(&x);
            if !next.is_finite() {
                return Err(Error::Numerical {
                    layer: i,
                    detail: "non-finite activation".into(),
                });
            }
            inputs.push(x);
            attention.push(cache);
            x = next;
        }
        Ok(Trace {
            inputs,
            attention,
            output: x,
        })
    }

    /// Reverse pass: gradients of a scalar objective given `d_output`, the
    /// gradient with respect to the network output.
    pub fn backward(&self, trace: &Trace, d_output: &Matrix) -> ParamSet {
        let mut grads = self.zeros_like();
        let mut delta = d_output.clone();
        for idx in (0..self.layers.len()).rev() {
            let x = &trace.inputs[idx];
            let y = if idx + 1 < self.layers.len() {
                &trace.inputs[idx + 1]
            } else {
                &trace.output
            };
            let batch = x.rows();
            delta = match (&self.layers[idx], &mut grads.layers[idx]) {
                (Layer::Normalize { scale, .. }, _) => {
                    let mut d = delta;
                    for r in 0..batch {
                        d.row_mut(r).iter_mut().zip(scale).for_each(|(g, s)| *g *= s);
                    }
                    d
                }
                (
                    Layer::Dense {
                        weight,
                        activation,
                        tokens,
                        ..
                    },
                    Layer::Dense {
                        weight: gw, bias: gb, ..
                    },
                ) => {
                    let rows = batch * tokens;
                    let (outs, ins) = (weight.rows(), weight.cols());
                    let mut d_z = delta.into_vec();
                    for (g, a) in d_z.iter_mut().zip(y.as_slice()) {
                        *g *= activation.derivative_from_output(*a);
                    }
                    add_transposed_mul(&d_z, rows, outs, x.as_slice(), ins, gw.as_mut_slice());
                    for row in d_z.chunks(outs) {
                        gb.iter_mut().zip(row).for_each(|(b, g)| *b += g);
                    }
                    let mut d_x = vec![0.0; rows * ins];
                    mul(&d_z, rows, outs, weight.as_slice(), ins, &mut d_x);
                    Matrix::from_vec(batch, ins * tokens, d_x)
                }
                (
                    Layer::Conv {
                        weight,
                        activation,
                        height,
                        width,
                        ..
                    },
                    Layer::Conv {
                        weight: gw, bias: gb, ..
                    },
                ) => {
                    let cells = height * width;
                    let (outs, patch) = (weight.rows(), weight.cols());
                    let mut d_z = delta.into_vec();
                    for (g, a) in d_z.iter_mut().zip(y.as_slice()) {
                        *g *= activation.derivative_from_output(*a);
                    }
                    for row in d_z.chunks(outs) {
                        gb.iter_mut().zip(row).for_each(|(b, g)| *b += g);
                    }
                    let channels = patch / 9;
                    let mut d_x = Matrix::zeros(batch, cells * channels);
                    let mut d_cols = vec![0.0; cells * patch];
                    for r in 0..batch {
                        let cols = im2col(x.row(r), *height, *width, channels);
                        let dz = &d_z[r * cells * outs..][..cells * outs];
                        add_transposed_mul(dz, cells, outs, &cols, patch, gw.as_mut_slice());
                        mul(dz, cells, outs, weight.as_slice(), patch, &mut d_cols);
                        col2im(&d_cols, *height, *width, channels, d_x.row_mut(r));
                    }
                    d_x
                }
                (Layer::Attention(block), Layer::Attention(g)) => {
                    let caches = trace.attention[idx].as_ref().expect("attention cache recorded");
                    let mut d_x = Matrix::zeros(batch, block.width());
                    for r in 0..batch {
                        let row = block.backward_sample(x.row(r), &caches[r], delta.row(r), g);
                        d_x.row_mut(r).copy_from_slice(&row);
                    }
                    d_x
                }
                _ => unreachable!("gradient layout mirrors parameter layout"),
            };
        }
        grads
    }
}
