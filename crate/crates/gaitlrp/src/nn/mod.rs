//! Minimal dense/convolutional network: forward pass with activation
//! caching, exact backpropagation, and mini-batch gradient descent.

mod checkpoint;
mod loss;
mod train;

pub use checkpoint::{load_network, save_network};
pub use loss::softmax_cross_entropy;
pub use train::{train, TrainConfig};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv1D {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
    pub stride: usize,
    pub padding: usize,
    /// `[out_channels, in_channels, kernel_size]`
    pub weight: Tensor,
    /// `[out_channels]`
    pub bias: Tensor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub in_features: usize,
    pub out_features: usize,
    /// `[out_features, in_features]`
    pub weight: Tensor,
    /// `[out_features]`
    pub bias: Tensor,
}

fn xavier_uniform(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize, len: usize) -> Vec<f64> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..len).map(|_| rng.gen_range(-bound..bound)).collect()
}

impl Conv1D {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
        stride: usize,
        padding: usize,
        rng: &mut ChaCha8Rng,
    ) -> Conv1D {
        let fan_in = in_channels * kernel_size;
        let fan_out = out_channels * kernel_size;
        let wlen = out_channels * in_channels * kernel_size;
        Conv1D {
            in_channels,
            out_channels,
            kernel_size,
            stride,
            padding,
            weight: Tensor::from_vec(
                &[out_channels, in_channels, kernel_size],
                xavier_uniform(rng, fan_in, fan_out, wlen),
            ),
            bias: Tensor::zeros(&[out_channels]),
        }
    }

    pub fn output_len(&self, input_len: usize) -> Option<usize> {
        let padded = input_len + 2 * self.padding;
        if padded < self.kernel_size {
            return None;
        }
        Some((padded - self.kernel_size) / self.stride + 1)
    }
}

impl Dense {
    pub fn new(in_features: usize, out_features: usize, rng: &mut ChaCha8Rng) -> Dense {
        Dense {
            in_features,
            out_features,
            weight: Tensor::from_vec(
                &[out_features, in_features],
                xavier_uniform(rng, in_features, out_features, out_features * in_features),
            ),
            bias: Tensor::zeros(&[out_features]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Layer {
    Conv1D(Conv1D),
    #[serde(rename = "relu")]
    ReLU,
    MaxPool1D { window: usize, stride: usize },
    Flatten,
    Dense(Dense),
}

impl Layer {
    pub fn params(&self) -> Option<(&Tensor, &Tensor)> {
        match self {
            Layer::Conv1D(c) => Some((&c.weight, &c.bias)),
            Layer::Dense(d) => Some((&d.weight, &d.bias)),
            _ => None,
        }
    }

    pub fn params_mut(&mut self) -> Option<(&mut Tensor, &mut Tensor)> {
        match self {
            Layer::Conv1D(c) => Some((&mut c.weight, &mut c.bias)),
            Layer::Dense(d) => Some((&mut d.weight, &mut d.bias)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    layers: Vec<Layer>,
}

/// Per-layer activations from one forward pass. `activation(i)` is the input
/// of layer `i`; the last entry holds the logits.
#[derive(Debug, Clone)]
pub struct Trace {
    activations: Vec<Tensor>,
}

impl Trace {
    pub fn input(&self, layer: usize) -> &Tensor {
        &self.activations[layer]
    }

    pub fn output(&self, layer: usize) -> &Tensor {
        &self.activations[layer + 1]
    }

    pub fn logits(&self) -> &Tensor {
        self.activations.last().expect("non-empty trace")
    }
}

/// Parameter gradients, aligned with the network's layer list.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub per_layer: Vec<Option<(Tensor, Tensor)>>,
}

fn shape_err(layer: usize, msg: impl Into<String>) -> Error {
    Error::Shape {
        layer,
        msg: msg.into(),
    }
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Network {
        Network { layers }
    }

    /// Conv(6->16, k5, p2) -> ReLU -> MaxPool(2,2) -> Conv(16->32, k5, p2) ->
    /// ReLU -> MaxPool(2,2) -> Flatten -> Dense(.->64) -> ReLU -> Dense(64->3),
    /// Xavier-uniform initialized from `seed`.
    pub fn default_architecture(in_channels: usize, input_len: usize, seed: u64) -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pooled = (input_len / 2) / 2;
        let flat = 32 * pooled;
        Network::new(vec![
            Layer::Conv1D(Conv1D::new(in_channels, 16, 5, 1, 2, &mut rng)),
            Layer::ReLU,
            Layer::MaxPool1D { window: 2, stride: 2 },
            Layer::Conv1D(Conv1D::new(16, 32, 5, 1, 2, &mut rng)),
            Layer::ReLU,
            Layer::MaxPool1D { window: 2, stride: 2 },
            Layer::Flatten,
            Layer::Dense(Dense::new(flat, 64, &mut rng)),
            Layer::ReLU,
            Layer::Dense(Dense::new(64, 3, &mut rng)),
        ])
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Output dimension of the final Dense layer, i.e. the class count.
    pub fn num_classes(&self) -> Option<usize> {
        match self.layers.last() {
            Some(Layer::Dense(d)) => Some(d.out_features),
            _ => None,
        }
    }

    pub fn forward(&self, input: &Tensor) -> Result<Trace> {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.clone());
        for (i, layer) in self.layers.iter().enumerate() {
            let out = layer_forward(layer, activations.last().unwrap(), i)?;
            activations.push(out);
        }
        Ok(Trace { activations })
    }

    /// Forward starting at layer `from`, given that layer's input. Returns the
    /// logits only.
    pub fn forward_from(&self, from: usize, input: &Tensor) -> Result<Tensor> {
        let mut x = input.clone();
        for (i, layer) in self.layers.iter().enumerate().skip(from) {
            x = layer_forward(layer, &x, i)?;
        }
        Ok(x)
    }

    /// Argmax class (first index on ties) and softmax probabilities.
    pub fn predict(&self, input: &Tensor) -> Result<(usize, Vec<f64>)> {
        let trace = self.forward(input)?;
        let logits = trace.logits().data();
        let probs = loss::softmax(logits);
        let class = argmax(logits);
        Ok((class, probs))
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn layer_forward(layer: &Layer, x: &Tensor, idx: usize) -> Result<Tensor> {
    match layer {
        Layer::Conv1D(c) => conv_forward(c, x, idx),
        Layer::ReLU => Ok(Tensor::from_vec(
            x.shape(),
            x.data().iter().map(|&v| v.max(0.0)).collect(),
        )),
        Layer::MaxPool1D { window, stride } => pool_forward(*window, *stride, x, idx),
        Layer::Flatten => Ok(x.reshaped(&[x.len()])),
        Layer::Dense(d) => dense_forward(d, x, idx),
    }
}

fn conv_forward(c: &Conv1D, x: &Tensor, idx: usize) -> Result<Tensor> {
    let [cin, l] = *x.shape() else {
        return Err(shape_err(idx, format!("Conv1D expects [C, L] input, got {:?}", x.shape())));
    };
    if cin != c.in_channels {
        return Err(shape_err(
            idx,
            format!("Conv1D expects {} input channels, got {cin}", c.in_channels),
        ));
    }
    let Some(lout) = c.output_len(l) else {
        return Err(shape_err(idx, format!("Conv1D kernel {} exceeds padded length", c.kernel_size)));
    };
    let w = c.weight.data();
    let b = c.bias.data();
    let xd = x.data();
    let k = c.kernel_size;
    let mut out = vec![0.0; c.out_channels * lout];
    for o in 0..c.out_channels {
        for p in 0..lout {
            let base = (p * c.stride) as isize - c.padding as isize;
            let mut acc = b[o];
            for ci in 0..cin {
                let wrow = &w[(o * cin + ci) * k..(o * cin + ci) * k + k];
                let xrow = &xd[ci * l..(ci + 1) * l];
                // clip the tap range to the unpadded signal
                let k_lo = (-base).max(0) as usize;
                let k_hi = k.min((l as isize - base).max(0) as usize);
                for kk in k_lo..k_hi {
                    acc += wrow[kk] * xrow[(base + kk as isize) as usize];
                }
            }
            out[o * lout + p] = acc;
        }
    }
    Ok(Tensor::from_vec(&[c.out_channels, lout], out))
}

fn pool_forward(window: usize, stride: usize, x: &Tensor, idx: usize) -> Result<Tensor> {
    let [ch, l] = *x.shape() else {
        return Err(shape_err(idx, format!("MaxPool1D expects [C, L] input, got {:?}", x.shape())));
    };
    if l < window {
        return Err(shape_err(idx, format!("MaxPool1D window {window} exceeds length {l}")));
    }
    let lout = (l - window) / stride + 1;
    let xd = x.data();
    let mut out = vec![0.0; ch * lout];
    for c in 0..ch {
        for p in 0..lout {
            let start = c * l + p * stride;
            let mut m = xd[start];
            for off in 1..window {
                if xd[start + off] > m {
                    m = xd[start + off];
                }
            }
            out[c * lout + p] = m;
        }
    }
    Ok(Tensor::from_vec(&[ch, lout], out))
}

fn dense_forward(d: &Dense, x: &Tensor, idx: usize) -> Result<Tensor> {
    if x.len() != d.in_features || x.shape().len() != 1 {
        return Err(shape_err(
            idx,
            format!("Dense expects [{}] input, got {:?}", d.in_features, x.shape()),
        ));
    }
    let w = d.weight.data();
    let xd = x.data();
    let out: Vec<f64> = (0..d.out_features)
        .map(|j| {
            let row = &w[j * d.in_features..(j + 1) * d.in_features];
            d.bias.data()[j]
                + row
                    .iter()
                    .zip(xd)
                    .map(|(wi, xi)| wi * xi)
                    .sum::<f64>()
        })
        .collect();
    Ok(Tensor::from_vec(&[d.out_features], out))
}

/// Exact backpropagation of `logits_grad` through the cached trace. Returns
/// weight/bias gradients per parametric layer; max-pool routes gradient to the
/// first position attaining the maximum.
pub fn backward(network: &Network, trace: &Trace, logits_grad: &Tensor) -> Result<Gradients> {
    let n = network.layers.len();
    if logits_grad.shape() != trace.logits().shape() {
        return Err(shape_err(n.saturating_sub(1), "logits gradient shape mismatch"));
    }
    let mut per_layer: Vec<Option<(Tensor, Tensor)>> = vec![None; n];
    let mut grad = logits_grad.clone();
    for i in (0..n).rev() {
        let x = trace.input(i);
        grad = match &network.layers[i] {
            Layer::Dense(d) => {
                let gy = grad.data();
                let xd = x.data();
                let mut dw = vec![0.0; d.out_features * d.in_features];
                for j in 0..d.out_features {
                    let row = &mut dw[j * d.in_features..(j + 1) * d.in_features];
                    let g = gy[j];
                    for (target, xi) in row.iter_mut().zip(xd) {
                        *target = g * xi;
                    }
                }
                let db = gy.to_vec();
                let w = d.weight.data();
                let mut dx = vec![0.0; d.in_features];
                for j in 0..d.out_features {
                    let row = &w[j * d.in_features..(j + 1) * d.in_features];
                    let g = gy[j];
                    for (target, wi) in dx.iter_mut().zip(row) {
                        *target += g * wi;
                    }
                }
                per_layer[i] = Some((
                    Tensor::from_vec(d.weight.shape(), dw),
                    Tensor::from_vec(d.bias.shape(), db),
                ));
                Tensor::from_vec(x.shape(), dx)
            }
            Layer::Conv1D(c) => {
                let [cin, l] = *x.shape() else { unreachable!("validated in forward") };
                let lout = trace.output(i).shape()[1];
                let gy = grad.data();
                let xd = x.data();
                let w = c.weight.data();
                let k = c.kernel_size;
                let mut dw = vec![0.0; w.len()];
                let mut db = vec![0.0; c.out_channels];
                let mut dx = vec![0.0; xd.len()];
                for o in 0..c.out_channels {
                    for p in 0..lout {
                        let g = gy[o * lout + p];
                        db[o] += g;
                        let base = (p * c.stride) as isize - c.padding as isize;
                        let k_lo = (-base).max(0) as usize;
                        let k_hi = k.min((l as isize - base).max(0) as usize);
                        for ci in 0..cin {
                            let woff = (o * cin + ci) * k;
                            let xoff = (ci * l) as isize + base;
                            for kk in k_lo..k_hi {
                                let xi_idx = (xoff + kk as isize) as usize;
                                dw[woff + kk] += g * xd[xi_idx];
                                dx[xi_idx] += g * w[woff + kk];
                            }
                        }
                    }
                }
                per_layer[i] = Some((
                    Tensor::from_vec(c.weight.shape(), dw),
                    Tensor::from_vec(c.bias.shape(), db),
                ));
                Tensor::from_vec(x.shape(), dx)
            }
            Layer::ReLU => Tensor::from_vec(
                x.shape(),
                x.data()
                    .iter()
                    .zip(grad.data())
                    .map(|(&xi, &g)| if xi > 0.0 { g } else { 0.0 })
                    .collect(),
            ),
            Layer::MaxPool1D { window, stride } => {
                let [ch, l] = *x.shape() else { unreachable!("validated in forward") };
                let lout = trace.output(i).shape()[1];
                let xd = x.data();
                let gy = grad.data();
                let mut dx = vec![0.0; xd.len()];
                for c in 0..ch {
                    for p in 0..lout {
                        let start = c * l + p * stride;
                        let mut best = 0;
                        for off in 1..*window {
                            if xd[start + off] > xd[start + best] {
                                best = off;
                            }
                        }
                        dx[start + best] += gy[c * lout + p];
                    }
                }
                Tensor::from_vec(x.shape(), dx)
            }
            Layer::Flatten => grad.reshaped(x.shape()),
        };
    }
    Ok(Gradients { per_layer })
}
