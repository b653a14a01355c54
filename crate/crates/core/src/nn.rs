//! Fully connected Q-network in double precision with hand-written
//! backpropagation, an Adam optimizer and a versioned JSON weight format.
//!
//! Weight matrices are stored input-major: `weights[i * outputs + j]` links
//! input `i` to output `j`. With one-hot style inputs most rows of the first
//! layer are skipped entirely during both passes.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::env::{Action, Experience};
use crate::error::NetError;
use crate::seeded_rng;

/// Negative-side slope of the leaky rectifier.
pub const LEAKY_SLOPE: f64 = 0.01;
/// Hidden layer widths of the Q-network.
pub const HIDDEN: [usize; 2] = [200, 100];
/// Weight file format version.
pub const FORMAT_VERSION: &str = "1";

#[inline]
fn leaky(z: f64) -> f64 {
    if z >= 0.0 {
        z
    } else {
        LEAKY_SLOPE * z
    }
}

#[inline]
fn leaky_grad(z: f64) -> f64 {
    if z >= 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weights: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }

    fn forward_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.bias);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &self.weights[i * self.outputs..(i + 1) * self.outputs];
            for (o, w) in out.iter_mut().zip(row) {
                *o += xi * w;
            }
        }
    }

    fn num_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Multi-layer perceptron with leaky-rectified hidden layers and a linear
/// output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    pub layers: Vec<Dense>,
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    /// Pre-activations of every layer.
    pre: Vec<Vec<f64>>,
    /// Inputs of every layer (the network input first).
    inputs: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.pre.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl QNetwork {
    /// Q-network for a given input width: two hidden layers of 200 and 100
    /// units and one output per action.
    pub fn new(input_dim: usize, seed: u64) -> Self {
        Self::with_sizes(&[input_dim, HIDDEN[0], HIDDEN[1], Action::COUNT], seed)
    }

    /// Network with arbitrary layer sizes, Glorot-normal weights and zero biases.
    pub fn with_sizes(sizes: &[usize], seed: u64) -> Self {
        assert!(sizes.len() >= 2, "need at least an input and an output size");
        let mut rng = seeded_rng(seed);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let std = (2.0 / (fan_in + fan_out) as f64).sqrt();
                let normal = Normal::new(0.0, std).expect("finite std");
                let mut layer = Dense::zeros(fan_in, fan_out);
                layer.weights.iter_mut().for_each(|w| *w = normal.sample(&mut rng));
                layer
            })
            .collect();
        Self { layers }
    }

    /// Same shapes, every parameter zero.
    pub fn zeros_like(&self) -> Self {
        Self { layers: self.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect() }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().outputs
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Dense::num_params).sum()
    }

    fn same_shape(&self, other: &QNetwork) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.inputs == b.inputs && a.outputs == b.outputs)
    }

    fn check_input(&self, x: &[f64]) -> Result<(), NetError> {
        if x.len() != self.input_dim() {
            return Err(NetError::DimensionMismatch { expected: self.input_dim(), got: x.len() });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NetError> {
        self.check_input(x)?;
        let last = self.layers.len() - 1;
        let mut h = x.to_vec();
        let mut z = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            layer.forward_into(&h, &mut z);
            if l < last {
                z.iter_mut().for_each(|v| *v = leaky(*v));
            }
            std::mem::swap(&mut h, &mut z);
        }
        Ok(h)
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<ForwardCache, NetError> {
        self.check_input(x)?;
        let last = self.layers.len() - 1;
        let mut cache = ForwardCache::default();
        let mut h = x.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.forward_into(&h, &mut z);
            let next = if l < last { z.iter().map(|&v| leaky(v)).collect() } else { Vec::new() };
            cache.inputs.push(h);
            cache.pre.push(z);
            h = next;
        }
        Ok(cache)
    }

    /// Accumulates parameter gradients for one sample into `grads`, given
    /// the loss gradient with respect to the network output.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &[f64], grads: &mut QNetwork) {
        let last = self.layers.len() - 1;
        let mut delta = grad_out.to_vec();
        for l in (0..=last).rev() {
            let layer = &self.layers[l];
            let g = &mut grads.layers[l];
            if l < last {
                for (d, &z) in delta.iter_mut().zip(&cache.pre[l]) {
                    *d *= leaky_grad(z);
                }
            }
            for (b, d) in g.bias.iter_mut().zip(&delta) {
                *b += d;
            }
            let input = &cache.inputs[l];
            let mut next_delta = if l > 0 { vec![0.0; layer.inputs] } else { Vec::new() };
            for (i, &xi) in input.iter().enumerate() {
                let range = i * layer.outputs..(i + 1) * layer.outputs;
                if xi != 0.0 {
                    for (gw, d) in g.weights[range.clone()].iter_mut().zip(&delta) {
                        *gw += xi * d;
                    }
                }
                if l > 0 {
                    next_delta[i] =
                        layer.weights[range].iter().zip(&delta).map(|(w, d)| w * d).sum();
                }
            }
            delta = next_delta;
        }
    }

    /// Mean squared error between `Q(s, a)` and fixed targets, with its
    /// gradient. Only the taken action's output receives gradient.
    pub fn td_loss_and_grad(
        &self,
        states: &[&[f64]],
        actions: &[usize],
        targets: &[f64],
    ) -> Result<(f64, QNetwork), NetError> {
        let n = states.len() as f64;
        let mut grads = self.zeros_like();
        let mut loss = 0.0;
        let mut grad_out = vec![0.0; self.output_dim()];
        for ((s, &a), &y) in states.iter().zip(actions).zip(targets) {
            let cache = self.forward_cached(s)?;
            let err = cache.output()[a] - y;
            loss += err * err;
            grad_out.iter_mut().for_each(|g| *g = 0.0);
            grad_out[a] = 2.0 * err / n;
            self.backward(&cache, &grad_out, &mut grads);
        }
        Ok((loss / n, grads))
    }

    /// Bellman targets for a batch: `r` on terminal transitions, otherwise
    /// `r + discount * max Q_target(s', a')` over moves that stay on the grid.
    pub fn bellman_targets(
        target: &QNetwork,
        batch: &[&Experience],
        discount: f64,
    ) -> Result<Vec<f64>, NetError> {
        batch
            .iter()
            .map(|e| {
                if e.terminal {
                    return Ok(e.reward);
                }
                let q = target.forward(&e.next_state_vec)?;
                let best = q
                    .iter()
                    .enumerate()
                    .filter(|(a, _)| e.next_wall_mask & (1 << a) != 0)
                    .map(|(_, v)| *v)
                    .fold(f64::NEG_INFINITY, f64::max);
                Ok(if best.is_finite() { e.reward + discount * best } else { e.reward })
            })
            .collect()
    }

    /// One learning step on a minibatch. Returns the loss before the update.
    pub fn train_step(
        &mut self,
        opt: &mut Adam,
        batch: &[&Experience],
        target: &QNetwork,
        discount: f64,
    ) -> Result<f64, NetError> {
        assert!(!batch.is_empty(), "empty minibatch");
        assert!(self.same_shape(target), "target network shape differs");
        let targets = Self::bellman_targets(target, batch, discount)?;
        let states: Vec<&[f64]> = batch.iter().map(|e| e.state_vec.as_slice()).collect();
        let actions: Vec<usize> = batch.iter().map(|e| e.action).collect();
        let (loss, grads) = self.td_loss_and_grad(&states, &actions, &targets)?;
        opt.step(self, &grads);
        Ok(loss)
    }

    /// Deep copy used as the target network.
    pub fn clone_into_target(&self) -> QNetwork {
        self.clone()
    }

    /// Index of the largest Q-value among the allowed actions, lowest index
    /// on ties.
    pub fn greedy(&self, state: &[f64], allowed: &[Action]) -> Result<Option<Action>, NetError> {
        let q = self.forward(state)?;
        Ok(argmax_over(&q, allowed))
    }

    pub fn save_weights(&self) -> String {
        let doc = WeightFile {
            format: "qnetwork".into(),
            version: FORMAT_VERSION.into(),
            leaky_slope: LEAKY_SLOPE,
            layers: self.layers.clone(),
        };
        serde_json::to_string(&doc).expect("weights serialize")
    }

    pub fn load_weights(text: &str) -> Result<QNetwork, NetError> {
        let doc: WeightFile = serde_json::from_str(text)?;
        if doc.version != FORMAT_VERSION {
            return Err(NetError::Version(doc.version));
        }
        if doc.layers.is_empty() {
            return Err(NetError::Shape { layer: 0, message: "no layers".into() });
        }
        for (l, layer) in doc.layers.iter().enumerate() {
            if layer.weights.len() != layer.inputs * layer.outputs {
                return Err(NetError::Shape {
                    layer: l,
                    message: format!(
                        "{} weights for a {}x{} layer",
                        layer.weights.len(),
                        layer.inputs,
                        layer.outputs
                    ),
                });
            }
            if layer.bias.len() != layer.outputs {
                return Err(NetError::Shape {
                    layer: l,
                    message: format!("{} biases for {} outputs", layer.bias.len(), layer.outputs),
                });
            }
            if l > 0 && doc.layers[l - 1].outputs != layer.inputs {
                return Err(NetError::Shape {
                    layer: l,
                    message: format!(
                        "expects {} inputs but previous layer has {} outputs",
                        layer.inputs,
                        doc.layers[l - 1].outputs
                    ),
                });
            }
        }
        Ok(QNetwork { layers: doc.layers })
    }
}

/// Argmax of `q` restricted to `allowed`, lowest action index on ties.
pub fn argmax_over(q: &[f64], allowed: &[Action]) -> Option<Action> {
    let mut best: Option<Action> = None;
    for &a in allowed {
        match best {
            Some(b) if q[a.0] > q[b.0] || (q[a.0] == q[b.0] && a.0 < b.0) => best = Some(a),
            None => best = Some(a),
            _ => {}
        }
    }
    best
}

#[derive(Debug, Serialize, Deserialize)]
struct WeightFile {
    format: String,
    version: String,
    leaky_slope: f64,
    layers: Vec<Dense>,
}

/// Adam optimizer state, without weight decay.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: QNetwork,
    v: QNetwork,
}

impl Adam {
    pub fn new(net: &QNetwork, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: net.zeros_like(),
            v: net.zeros_like(),
        }
    }

    pub fn step(&mut self, net: &mut QNetwork, grads: &QNetwork) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let (step_size, inv_c2) = (self.learning_rate / c1, 1.0 / c2);
        let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for (((p, g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= step_size * *m / ((*v * inv_c2).sqrt() + eps);
            }
        };
        for (((layer, g), m), v) in net
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.m.layers)
            .zip(&mut self.v.layers)
        {
            update(&mut layer.weights, &g.weights, &mut m.weights, &mut v.weights);
            update(&mut layer.bias, &g.bias, &mut m.bias, &mut v.bias);
        }
    }
}

/// Central finite-difference gradient of the TD loss with step `h`, laid
/// out like the network. Test helper for checking [`QNetwork::backward`].
pub fn numeric_gradient(
    net: &QNetwork,
    states: &[&[f64]],
    actions: &[usize],
    targets: &[f64],
    h: f64,
) -> Result<QNetwork, NetError> {
    let mut probe = net.clone();
    let mut grads = net.zeros_like();
    let loss = |n: &QNetwork| n.td_loss_and_grad(states, actions, targets).map(|(l, _)| l);
    for l in 0..net.layers.len() {
        for i in 0..net.layers[l].weights.len() {
            let w = net.layers[l].weights[i];
            probe.layers[l].weights[i] = w + h;
            let plus = loss(&probe)?;
            probe.layers[l].weights[i] = w - h;
            let minus = loss(&probe)?;
            probe.layers[l].weights[i] = w;
            grads.layers[l].weights[i] = (plus - minus) / (2.0 * h);
        }
        for i in 0..net.layers[l].bias.len() {
            let b = net.layers[l].bias[i];
            probe.layers[l].bias[i] = b + h;
            let plus = loss(&probe)?;
            probe.layers[l].bias[i] = b - h;
            let minus = loss(&probe)?;
            probe.layers[l].bias[i] = b;
            grads.layers[l].bias[i] = (plus - minus) / (2.0 * h);
        }
    }
    Ok(grads)
}

/// Largest relative difference between two parameter sets of the same
/// shape: `|a - b| / max(|a|, |b|, floor)`.
pub fn max_relative_error(a: &QNetwork, b: &QNetwork, floor: f64) -> f64 {
    a.layers
        .iter()
        .zip(&b.layers)
        .flat_map(|(la, lb)| {
            la.weights.iter().chain(&la.bias).zip(lb.weights.iter().chain(&lb.bias))
        })
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Fills every parameter with small uniform noise; test helper for nets
/// whose biases should not start at zero.
pub fn randomize(net: &mut QNetwork, scale: f64, seed: u64) {
    let mut rng = seeded_rng(seed);
    for layer in &mut net.layers {
        for p in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
            *p = rng.random_range(-scale..scale);
        }
    }
}
