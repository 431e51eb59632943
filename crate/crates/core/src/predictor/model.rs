//! Multi-horizon next-request classifier: a tanh MLP over the flattened
//! one-hot history with one softmax head per predicted mini-slot. Inputs are
//! carried as file indices, so the first layer is a sparse column sum.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dataset::TrainingSample;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    /// Number of past requests fed to the model (N).
    pub history: usize,
    /// Number of future mini-slots predicted (n).
    pub horizon: usize,
    pub num_files: usize,
    /// Hidden layer widths; empty means a linear softmax model.
    pub hidden: Vec<usize>,
}

impl Architecture {
    pub fn input_dim(&self) -> usize {
        self.history * self.num_files
    }

    pub fn output_dim(&self) -> usize {
        self.horizon * self.num_files
    }

    /// `(fan_in, fan_out)` for every dense layer, input to output.
    pub fn layers(&self) -> Vec<(usize, usize)> {
        let mut dims = vec![self.input_dim()];
        dims.extend(&self.hidden);
        dims.push(self.output_dim());
        dims.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|(i, o)| i * o + o).sum()
    }

    fn validate(&self) -> Result<()> {
        if self.history == 0 || self.horizon == 0 || self.num_files < 2 {
            return Err(Error::InvalidDimension(format!(
                "architecture needs history >= 1, horizon >= 1 and at least 2 files: {self:?}"
            )));
        }
        if self.hidden.contains(&0) {
            return Err(Error::InvalidDimension("hidden layer of width 0".into()));
        }
        Ok(())
    }
}

/// Flat parameter vector. Each layer stores its `fan_out x fan_in` weight
/// matrix row-major followed by its bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub arch: Architecture,
    pub values: Vec<f64>,
}

struct Layer {
    fan_in: usize,
    fan_out: usize,
    weights: usize,
    bias: usize,
}

fn layout(arch: &Architecture) -> Vec<Layer> {
    let mut offset = 0;
    arch.layers()
        .into_iter()
        .map(|(fan_in, fan_out)| {
            let layer = Layer {
                fan_in,
                fan_out,
                weights: offset,
                bias: offset + fan_in * fan_out,
            };
            offset += fan_in * fan_out + fan_out;
            layer
        })
        .collect()
}

fn cross_entropy(logits: &[f64], target: usize) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_norm = logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    log_norm + max - logits[target]
}

/// Dot product with eight independent partial sums so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// Appends `softmax(logits)` to `out` and returns the cross-entropy at
/// `target`.
fn softmax_into(logits: &[f64], target: usize, out: &mut Vec<f64>) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let start = out.len();
    out.extend(logits.iter().map(|z| (z - max).exp()));
    let total: f64 = out[start..].iter().sum();
    out[start..].iter_mut().for_each(|e| *e /= total);
    total.ln() + max - logits[target]
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

impl ModelParams {
    pub fn zeros(arch: Architecture) -> Result<Self> {
        arch.validate()?;
        let values = vec![0.0; arch.param_count()];
        Ok(Self { arch, values })
    }

    /// Gaussian weights scaled by `scale / sqrt(active fan-in)`, zero biases.
    /// The first layer sees exactly `history` active inputs.
    pub fn random(arch: Architecture, scale: f64, seed: u64) -> Result<Self> {
        let mut params = Self::zeros(arch)?;
        let mut rng = stream_rng(seed, Stream::ModelInit, &[]);
        for (l, layer) in layout(&params.arch).iter().enumerate() {
            let active = if l == 0 { params.arch.history } else { layer.fan_in };
            let std = scale / (active as f64).sqrt();
            for w in &mut params.values[layer.weights..layer.bias] {
                *w = std * rng.sample::<f64, _>(StandardNormal);
            }
        }
        Ok(params)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    fn check_history(&self, history: &[usize]) -> Result<()> {
        if history.len() != self.arch.history {
            return Err(Error::ShapeMismatch {
                expected: format!("{} history rows", self.arch.history),
                actual: format!("{} rows", history.len()),
            });
        }
        if let Some(&f) = history.iter().find(|&&f| f >= self.arch.num_files) {
            return Err(Error::ShapeMismatch {
                expected: format!("file ids below {}", self.arch.num_files),
                actual: format!("file id {f}"),
            });
        }
        Ok(())
    }

    /// Layer activations for one input; the last entry holds output logits.
    fn forward(&self, history: &[usize]) -> Vec<Vec<f64>> {
        let layers = layout(&self.arch);
        let f = self.arch.num_files;
        let w = &self.values;
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers.len());
        for (l, layer) in layers.iter().enumerate() {
            let mut z = w[layer.bias..layer.bias + layer.fan_out].to_vec();
            if l == 0 {
                for (j, zj) in z.iter_mut().enumerate() {
                    let row = layer.weights + j * layer.fan_in;
                    for (k, &file) in history.iter().enumerate() {
                        *zj += w[row + k * f + file];
                    }
                }
            } else {
                let prev = &acts[l - 1];
                for (j, zj) in z.iter_mut().enumerate() {
                    let row = &w[layer.weights + j * layer.fan_in..][..layer.fan_in];
                    *zj += dot(row, prev);
                }
            }
            if l + 1 < layers.len() {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(z);
        }
        acts
    }

    /// One softmax row per predicted mini-slot.
    pub fn predict(&self, history: &[usize]) -> Result<Vec<Vec<f64>>> {
        self.check_history(history)?;
        let acts = self.forward(history);
        let logits = acts.last().expect("at least one layer");
        Ok(logits.chunks(self.arch.num_files).map(softmax).collect())
    }

    /// [`predict`](Self::predict) on explicit one-hot rows.
    pub fn predict_one_hot(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let history = rows
            .iter()
            .map(|row| one_hot_index(row, self.arch.num_files))
            .collect::<Result<Vec<_>>>()?;
        self.predict(&history)
    }

    /// Summed cross-entropy over the horizon, averaged over `batch`.
    pub fn loss(&self, batch: &[TrainingSample]) -> f64 {
        let f = self.arch.num_files;
        let total: f64 = batch
            .iter()
            .map(|s| {
                let acts = self.forward(&s.x);
                let logits = acts.last().expect("output layer");
                logits
                    .chunks(f)
                    .zip(&s.y)
                    .map(|(head, &target)| cross_entropy(head, target))
                    .sum::<f64>()
            })
            .sum();
        total / batch.len() as f64
    }

    /// Mean loss over `batch`; writes the mean gradient into `grad`.
    pub fn loss_and_grad(&self, batch: &[TrainingSample], grad: &mut [f64]) -> f64 {
        self.batch_loss_and_grad(batch.iter(), grad)
    }

    pub(crate) fn batch_loss_and_grad<'a>(
        &self,
        batch: impl ExactSizeIterator<Item = &'a TrainingSample>,
        grad: &mut [f64],
    ) -> f64 {
        assert_eq!(grad.len(), self.values.len());
        let count = batch.len();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let layers = layout(&self.arch);
        let f = self.arch.num_files;
        let w = &self.values;
        let mut total = 0.0;
        for sample in batch {
            let acts = self.forward(&sample.x);
            let logits = acts.last().expect("output layer");
            let mut delta = Vec::with_capacity(logits.len());
            for (head, &target) in logits.chunks(f).zip(&sample.y) {
                let start = delta.len();
                total += softmax_into(head, target, &mut delta);
                delta[start + target] -= 1.0;
            }
            for (l, layer) in layers.iter().enumerate().rev() {
                for (j, &d) in delta.iter().enumerate() {
                    grad[layer.bias + j] += d;
                }
                if l == 0 {
                    for (j, &d) in delta.iter().enumerate() {
                        let row = layer.weights + j * layer.fan_in;
                        for (k, &file) in sample.x.iter().enumerate() {
                            grad[row + k * f + file] += d;
                        }
                    }
                    break;
                }
                let prev = &acts[l - 1];
                let mut back = vec![0.0; layer.fan_in];
                for (j, &d) in delta.iter().enumerate() {
                    let row = layer.weights + j * layer.fan_in;
                    let g_row = &mut grad[row..row + layer.fan_in];
                    for (g, a) in g_row.iter_mut().zip(prev) {
                        *g += d * a;
                    }
                    for (b, wv) in back.iter_mut().zip(&w[row..row + layer.fan_in]) {
                        *b += d * wv;
                    }
                }
                // tanh'(z) = 1 - tanh(z)^2
                delta = back
                    .iter()
                    .zip(prev)
                    .map(|(b, a)| b * (1.0 - a * a))
                    .collect();
            }
        }
        let scale = 1.0 / count as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        total * scale
    }
}

pub(crate) fn one_hot_index(row: &[f64], num_files: usize) -> Result<usize> {
    let ones: Vec<usize> = row
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == 1.0)
        .map(|(i, _)| i)
        .collect();
    let zeros = row.iter().filter(|&&v| v == 0.0).count();
    if row.len() != num_files || ones.len() != 1 || zeros != num_files - 1 {
        return Err(Error::ShapeMismatch {
            expected: format!("one-hot row of length {num_files}"),
            actual: format!("row of length {} with {} ones", row.len(), ones.len()),
        });
    }
    Ok(ones[0])
}

pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}
