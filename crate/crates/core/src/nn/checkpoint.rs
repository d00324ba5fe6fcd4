//! Plain-text parameter checkpoints.
//!
//! ```text
//! ifolab-params 1
//! layers 3
//! normalize 4
//! <shift values>
//! <scale values>
//! dense relu 1 64 4        # activation, tokens, rows, cols
//! <row-major weights>
//! <bias>
//! conv relu 3 3 16 27      # activation, height, width, rows, cols
//! <row-major weights>
//! <bias>
//! attention 4 16           # tokens, token dim
//! <query>
//! <key>
//! <value>
//! <gamma>
//! ```
//!
//! Values are written with the shortest representation that parses back to
//! the identical `f64`, so a write/read cycle is bit-exact.

use std::fmt::Write as _;

use super::matrix::Matrix;
use super::network::{Activation, AttentionBlock, Layer, ParamSet};
use crate::error::{Error, Result};

pub const PARAMS_MAGIC: &str = "ifolab-params";
pub const PARAMS_VERSION: u32 = 1;

fn write_values(out: &mut String, values: &[f64]) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        first = false;
        write!(out, "{v:?}").unwrap();
    }
    out.push('\n');
}

pub fn params_to_string(params: &ParamSet) -> String {
    let mut out = String::new();
    writeln!(out, "{PARAMS_MAGIC} {PARAMS_VERSION}").unwrap();
    writeln!(out, "layers {}", params.layers.len()).unwrap();
    for layer in &params.layers {
        match layer {
            Layer::Normalize { shift, scale } => {
                writeln!(out, "normalize {}", shift.len()).unwrap();
                write_values(&mut out, shift);
                write_values(&mut out, scale);
            }
            Layer::Dense {
                weight,
                bias,
                activation,
                tokens,
            } => {
                writeln!(
                    out,
                    "dense {} {} {} {}",
                    activation.name(),
                    tokens,
                    weight.rows(),
                    weight.cols()
                )
                .unwrap();
                write_values(&mut out, weight.as_slice());
                write_values(&mut out, bias);
            }
            Layer::Conv {
                weight,
                bias,
                activation,
                height,
                width,
            } => {
                writeln!(
                    out,
                    "conv {} {height} {width} {} {}",
                    activation.name(),
                    weight.rows(),
                    weight.cols()
                )
                .unwrap();
                write_values(&mut out, weight.as_slice());
                write_values(&mut out, bias);
            }
            Layer::Attention(b) => {
                writeln!(out, "attention {} {}", b.tokens, b.token_dim()).unwrap();
                write_values(&mut out, b.query.as_slice());
                write_values(&mut out, b.key.as_slice());
                write_values(&mut out, b.value.as_slice());
                write_values(&mut out, &[b.gamma]);
            }
        }
    }
    out
}

/// Line cursor that reports 1-based line numbers in errors.
pub(crate) struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Lines {
            iter: text.lines().enumerate(),
            line: 0,
        }
    }

    pub(crate) fn line(&self) -> usize {
        self.line
    }

    pub(crate) fn error(&self, detail: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            detail: detail.into(),
        }
    }

    pub(crate) fn next_line(&mut self) -> Result<&'a str> {
        match self.iter.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l)
            }
            None => {
                self.line += 1;
                Err(self.error("unexpected end of file"))
            }
        }
    }

    pub(crate) fn values(&mut self, expected: usize) -> Result<Vec<f64>> {
        let line = self.next_line()?;
        let values = parse_values(line).map_err(|d| self.error(d))?;
        if values.len() != expected {
            return Err(self.error(format!("expected {expected} values, found {}", values.len())));
        }
        Ok(values)
    }
}

pub(crate) fn parse_values(line: &str) -> std::result::Result<Vec<f64>, String> {
    line.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| format!("invalid number `{t}`")))
        .collect()
}

fn parse_usize(lines: &Lines, token: Option<&str>, what: &str) -> Result<usize> {
    token
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| lines.error(format!("missing or invalid {what}")))
}

pub(crate) fn read_params(lines: &mut Lines) -> Result<ParamSet> {
    let header = lines.next_line()?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some(PARAMS_MAGIC) {
        return Err(lines.error(format!("expected `{PARAMS_MAGIC}` header")));
    }
    let version = parse_usize(lines, parts.next(), "version")?;
    if version != PARAMS_VERSION as usize {
        return Err(lines.error(format!("unsupported checkpoint version {version}")));
    }
    let count_line = lines.next_line()?;
    let mut parts = count_line.split_whitespace();
    if parts.next() != Some("layers") {
        return Err(lines.error("expected `layers <count>`"));
    }
    let count = parse_usize(lines, parts.next(), "layer count")?;
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let head = lines.next_line()?;
        let mut parts = head.split_whitespace();
        let layer = match parts.next() {
            Some("normalize") => {
                let n = parse_usize(lines, parts.next(), "dimension")?;
                let shift = lines.values(n)?;
                let scale = lines.values(n)?;
                Layer::Normalize { shift, scale }
            }
            Some("dense") => {
                let activation = parts
                    .next()
                    .and_then(Activation::from_name)
                    .ok_or_else(|| lines.error("unknown activation"))?;
                let tokens = parse_usize(lines, parts.next(), "token count")?;
                let rows = parse_usize(lines, parts.next(), "rows")?;
                let cols = parse_usize(lines, parts.next(), "cols")?;
                let weight = Matrix::from_vec(rows, cols, lines.values(rows * cols)?);
                let bias = lines.values(rows)?;
                Layer::Dense {
                    weight,
                    bias,
                    activation,
                    tokens,
                }
            }
            Some("conv") => {
                let activation = parts
                    .next()
                    .and_then(Activation::from_name)
                    .ok_or_else(|| lines.error("unknown activation"))?;
                let height = parse_usize(lines, parts.next(), "height")?;
                let width = parse_usize(lines, parts.next(), "width")?;
                let rows = parse_usize(lines, parts.next(), "rows")?;
                let cols = parse_usize(lines, parts.next(), "cols")?;
                let weight = Matrix::from_vec(rows, cols, lines.values(rows * cols)?);
                let bias = lines.values(rows)?;
                Layer::Conv {
                    weight,
                    bias,
                    activation,
                    height,
                    width,
                }
            }
            Some("attention") => {
                let tokens = parse_usize(lines, parts.next(), "token count")?;
                let d = parse_usize(lines, parts.next(), "token dim")?;
                let query = Matrix::from_vec(d, d, lines.values(d * d)?);
                let key = Matrix::from_vec(d, d, lines.values(d * d)?);
                let value = Matrix::from_vec(d, d, lines.values(d * d)?);
                let gamma = lines.values(1)?[0];
                Layer::Attention(AttentionBlock {
                    tokens,
                    query,
                    key,
                    value,
                    gamma,
                })
            }
            other => return Err(lines.error(format!("unknown layer kind {other:?}"))),
        };
        layers.push(layer);
    }
    let line = lines.line();
    ParamSet::new(layers).map_err(|e| Error::Parse {
        line,
        detail: e.to_string(),
    })
}

pub fn params_from_str(text: &str) -> Result<ParamSet> {
    read_params(&mut Lines::new(text))
}

pub fn save_params(params: &ParamSet, path: &std::path::Path) -> Result<()> {
    crate::io::write_atomic(path, params_to_string(params).as_bytes())
}

pub fn load_params(path: &std::path::Path) -> Result<ParamSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    params_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = rng_from_seed(9);
        let mut layers = vec![
            Layer::Normalize {
                shift: vec![0.1, -3.0e-300, 1.0 / 3.0, 7.0],
                scale: vec![1.0, 2.5, f64::MIN_POSITIVE, 1e10],
            },
            Layer::dense(4, 8, Activation::Relu, &mut rng),
            Layer::attention(8, 4, &mut rng).unwrap(),
            Layer::dense(8, 3, Activation::Identity, &mut rng),
        ];
        if let Layer::Attention(b) = &mut layers[2] {
            b.gamma = -0.123_456_789_012_345_67;
        }
        let params = ParamSet::new(layers).unwrap();
        let text = params_to_string(&params);
        let back = params_from_str(&text).unwrap();
        assert_eq!(params, back);
        let bits = |p: &ParamSet| -> Vec<u64> {
            p.trainable().iter().flat_map(|s| s.iter().map(|v| v.to_bits())).collect()
        };
        assert_eq!(bits(&params), bits(&back));
    }

    #[test]
    fn convolution_round_trip() {
        let mut rng = rng_from_seed(4);
        let params = ParamSet::new(vec![
            Layer::conv(3, 5, 2, 4, Activation::Relu, &mut rng),
            Layer::attention(40, 8, &mut rng).unwrap(),
            Layer::conv(5, 2, 2, 4, Activation::Tanh, &mut rng),
            Layer::dense(16, 4, Activation::Identity, &mut rng),
        ])
        .unwrap();
        assert_eq!(params_from_str(&params_to_string(&params)).unwrap(), params);
    }

    #[test]
    fn truncated_checkpoint_reports_line() {
        let mut rng = rng_from_seed(1);
        let params = ParamSet::new(vec![Layer::dense(2, 2, Activation::Identity, &mut rng)]).unwrap();
        let text = params_to_string(&params);
        let cut: String = text.lines().take(4).collect::<Vec<_>>().join("\n");
        let err = params_from_str(&cut).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err}");
    }
}
