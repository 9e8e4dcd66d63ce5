//! Dense feed-forward network with hand-written backpropagation.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }
}

/// `rows` outputs by `cols` inputs, weights row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize, activation: Activation) -> Self {
        Self {
            rows,
            cols,
            weights: vec![0.0; rows * cols],
            bias: vec![0.0; rows],
            activation,
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng>(rows: usize, cols: usize, activation: Activation, rng: &mut R) -> Self {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let weights = (0..rows * cols)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        Self {
            rows,
            cols,
            weights,
            bias: vec![0.0; rows],
            activation,
        }
    }

    fn pre_activation(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| {
                let w = &self.weights[r * self.cols..(r + 1) * self.cols];
                self.bias[r] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Per-layer gradients with the same shapes as the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.bias) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }
}

impl Mlp {
    pub fn new<R: Rng>(
        inputs: usize,
        hidden_layers: usize,
        units: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let mut layers = Vec::with_capacity(hidden_layers + 1);
        let mut fan_in = inputs;
        for _ in 0..hidden_layers {
            layers.push(Dense::glorot(units, fan_in, activation, rng));
            fan_in = units;
        }
        layers.push(Dense::glorot(1, fan_in, Activation::Identity, rng));
        Self { layers }
    }

    pub fn inputs(&self) -> usize {
        self.layers.first().map_or(0, |l| l.cols)
    }

    /// Checks that layer shapes chain from the input width to one output.
    pub fn shapes_chain(&self) -> bool {
        let Some(last) = self.layers.last() else {
            return false;
        };
        last.rows == 1
            && self.layers.windows(2).all(|w| w[0].rows == w[1].cols)
            && self
                .layers
                .iter()
                .all(|l| l.weights.len() == l.rows * l.cols && l.bias.len() == l.rows)
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        let mut a = x.to_vec();
        for layer in &self.layers {
            a = layer
                .pre_activation(&a)
                .into_iter()
                .map(|z| layer.activation.apply(z))
                .collect();
        }
        a[0]
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let mut i = 0;
        for l in &mut self.layers {
            let n = l.weights.len();
            l.weights.copy_from_slice(&p[i..i + n]);
            i += n;
            let n = l.bias.len();
            l.bias.copy_from_slice(&p[i..i + n]);
            i += n;
        }
    }

    /// Mean-squared error over the batch and its gradient. `masks`, when given,
    /// holds one inverted-dropout multiplier per hidden unit per sample.
    pub fn loss_and_gradient(
        &self,
        xs: &[&[f64]],
        ys: &[f64],
        masks: Option<&[Vec<Vec<f64>>]>,
    ) -> (f64, Gradients) {
        let mut grads = Gradients::zeros_like(self);
        let n = xs.len() as f64;
        let mut loss = 0.0;
        let hidden = self.layers.len() - 1;
        for (s, (x, &y)) in xs.iter().zip(ys).enumerate() {
            // Forward, keeping inputs and pre-activations of every layer.
            let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
            let mut zs: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
            let mut outs: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
            let mut a = x.to_vec();
            for (li, layer) in self.layers.iter().enumerate() {
                let z = layer.pre_activation(&a);
                let mut out: Vec<f64> = z.iter().map(|&v| layer.activation.apply(v)).collect();
                inputs.push(a);
                let raw = out.clone();
                if li < hidden {
                    if let Some(m) = masks {
                        for (o, k) in out.iter_mut().zip(&m[s][li]) {
                            *o *= k;
                        }
                    }
                }
                zs.push(z);
                outs.push(raw);
                a = out;
            }
            let err = a[0] - y;
            loss += err * err;

            // Backward.
            let mut delta = vec![2.0 * err / n];
            for li in (0..self.layers.len()).rev() {
                let layer = &self.layers[li];
                if li < hidden {
                    if let Some(m) = masks {
                        for (d, k) in delta.iter_mut().zip(&m[s][li]) {
                            *d *= k;
                        }
                    }
                }
                for (d, (z, o)) in delta.iter_mut().zip(zs[li].iter().zip(&outs[li])) {
                    *d *= layer.activation.derivative(*z, *o);
                }
                let input = &inputs[li];
                for r in 0..layer.rows {
                    grads.bias[li][r] += delta[r];
                    let row = &mut grads.weights[li][r * layer.cols..(r + 1) * layer.cols];
                    for (g, xi) in row.iter_mut().zip(input) {
                        *g += delta[r] * xi;
                    }
                }
                if li > 0 {
                    let mut prev = vec![0.0; layer.cols];
                    for r in 0..layer.rows {
                        let w = &layer.weights[r * layer.cols..(r + 1) * layer.cols];
                        for (p, wi) in prev.iter_mut().zip(w) {
                            *p += delta[r] * wi;
                        }
                    }
                    delta = prev;
                }
            }
        }
        (loss / n, grads)
    }

    pub fn sgd_step(&mut self, grads: &Gradients, lr: f64) {
        for (li, l) in self.layers.iter_mut().enumerate() {
            for (w, g) in l.weights.iter_mut().zip(&grads.weights[li]) {
                *w -= lr * g;
            }
            for (b, g) in l.bias.iter_mut().zip(&grads.bias[li]) {
                *b -= lr * g;
            }
        }
    }

    /// Widths of the hidden layers, used to draw dropout masks.
    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(|l| l.rows).collect()
    }
}
