use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => sigmoid(z),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    /// relu'(0) is taken as 0.
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
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        }
    }
}

/// Logistic function kept strictly inside (0, 1): the largest f64 below 1
/// and the smallest positive normal bound the saturated tails.
fn sigmoid(z: f64) -> f64 {
    let s = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// One dense layer: `act(x · W + b)` with `W` stored `[fan_in × fan_out]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weights: Tensor,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn new(weights: Tensor, biases: Vec<f64>, activation: Activation) -> Result<Self> {
        if weights.shape().len() != 2 {
            return Err(Error::shape("layer weights rank", 2, weights.shape().len()));
        }
        if biases.len() != weights.cols() {
            return Err(Error::shape("layer biases", weights.cols(), biases.len()));
        }
        if biases.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("layer biases".into()));
        }
        Ok(Self {
            weights,
            biases,
            activation,
        })
    }

    pub fn fan_in(&self) -> usize {
        self.weights.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.cols()
    }
}

/// Parameters of a feed-forward network, ordered input to output.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    layers: Vec<Layer>,
}

/// Per-layer values saved by [`MlpParams::forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// `inputs[i]` is the input to layer `i`; `inputs[0]` is the network input.
    inputs: Vec<Tensor>,
    pre_activations: Vec<Tensor>,
    output: Tensor,
}

impl ForwardCache {
    pub fn output(&self) -> &Tensor {
        &self.output
    }

    pub fn pre_activations(&self) -> &[Tensor] {
        &self.pre_activations
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrads {
    pub weights: Tensor,
    pub biases: Vec<f64>,
}

/// Gradients (or any other per-parameter quantity) shaped like an [`MlpParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrads>,
}

impl Gradients {
    pub fn zeros_like(params: &MlpParams) -> Self {
        Self {
            layers: params
                .layers
                .iter()
                .map(|l| LayerGrads {
                    weights: Tensor::zeros(l.weights.shape().to_vec()),
                    biases: vec![0.0; l.biases.len()],
                })
                .collect(),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(l.weights.data());
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights.data_mut().iter_mut().for_each(|v| *v *= factor);
            l.biases.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.to_flat().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn matches(&self, params: &MlpParams) -> bool {
        self.layers.len() == params.layers.len()
            && self.layers.iter().zip(&params.layers).all(|(g, l)| {
                g.weights.shape() == l.weights.shape() && g.biases.len() == l.biases.len()
            })
    }
}

impl MlpParams {
    /// Validates that consecutive layer dimensions chain.
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::config("layers", "network needs at least one layer"));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].fan_out() != pair[1].fan_in() {
                return Err(Error::LayerInput {
                    layer: i + 1,
                    expected: pair[0].fan_out(),
                    actual: pair[1].fan_in(),
                });
            }
        }
        Ok(Self { layers })
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    ///
    /// `sizes` lists every width including input and output, so
    /// `activations.len() == sizes.len() - 1`.
    pub fn init<R: Rng + ?Sized>(
        sizes: &[usize],
        activations: &[Activation],
        rng: &mut R,
    ) -> Result<Self> {
        if sizes.len() < 2 || activations.len() != sizes.len() - 1 {
            return Err(Error::config(
                "activations",
                format!(
                    "{} layer sizes need {} activations, got {}",
                    sizes.len(),
                    sizes.len().saturating_sub(1),
                    activations.len()
                ),
            ));
        }
        if let Some(i) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::config("sizes", format!("width {i} is zero")));
        }
        let layers = sizes
            .windows(2)
            .zip(activations)
            .map(|(w, &act)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let data = (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-limit..=limit))
                    .collect();
                Layer {
                    weights: Tensor::from_raw(vec![fan_in, fan_out], data),
                    biases: vec![0.0; fan_out],
                    activation: act,
                }
            })
            .collect();
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].fan_out()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// All parameters, layer by layer, weights (row-major) then biases.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(l.weights.data());
            out.extend_from_slice(&l.biases);
        }
        out
    }

    /// Inverse of [`MlpParams::to_flat`].
    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::shape(
                "flat parameters",
                self.num_params(),
                flat.len(),
            ));
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("flat parameters".into()));
        }
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.data_mut().copy_from_slice(&flat[off..off + nw]);
            off += nw;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&flat[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    /// Evaluates the network on a batch `[n × d_in]`.
    pub fn forward(&self, input: &Tensor) -> Result<ForwardCache> {
        if input.shape().len() != 2 {
            return Err(Error::shape("network input rank", 2, input.shape().len()));
        }
        if !input.is_finite() {
            return Err(Error::NonFinite("network input".into()));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut current = input.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            if current.cols() != layer.fan_in() {
                return Err(Error::LayerInput {
                    layer: i,
                    expected: layer.fan_in(),
                    actual: current.cols(),
                });
            }
            let mut z = current.matmul(&layer.weights);
            let m = layer.fan_out();
            for row in z.data_mut().chunks_mut(m) {
                for (v, b) in row.iter_mut().zip(&layer.biases) {
                    *v += b;
                }
            }
            let a_data = z
                .data()
                .iter()
                .map(|&v| layer.activation.apply(v))
                .collect();
            let a = Tensor::from_raw(z.shape().to_vec(), a_data);
            inputs.push(current);
            pre_activations.push(z);
            current = a;
        }
        if !current.is_finite() {
            return Err(Error::NonFinite("network output".into()));
        }
        Ok(ForwardCache {
            inputs,
            pre_activations,
            output: current,
        })
    }

    /// Forward pass returning only the output.
    pub fn predict(&self, input: &Tensor) -> Result<Tensor> {
        Ok(self.forward(input)?.output)
    }

    /// Reverse-mode gradients of a scalar loss given `dL/d(output)`.
    ///
    /// Returns parameter gradients and `dL/d(input)`.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        output_grad: &Tensor,
    ) -> Result<(Gradients, Tensor)> {
        if cache.inputs.len() != self.layers.len() {
            return Err(Error::shape(
                "forward cache layers",
                self.layers.len(),
                cache.inputs.len(),
            ));
        }
        if output_grad.shape() != cache.output.shape() {
            return Err(Error::shape(
                "output gradient",
                format!("{:?}", cache.output.shape()),
                format!("{:?}", output_grad.shape()),
            ));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = output_grad.clone();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let z = &cache.pre_activations[i];
            let a = if i + 1 == self.layers.len() {
                &cache.output
            } else {
                &cache.inputs[i + 1]
            };
            let dz_data = upstream
                .data()
                .iter()
                .zip(z.data().iter().zip(a.data()))
                .map(|(g, (&zv, &av))| g * layer.activation.derivative(zv, av))
                .collect();
            let dz = Tensor::from_raw(z.shape().to_vec(), dz_data);
            let dw = cache.inputs[i].t_matmul(&dz);
            let mut db = vec![0.0; layer.fan_out()];
            for row in dz.iter_rows() {
                for (acc, v) in db.iter_mut().zip(row) {
                    *acc += v;
                }
            }
            upstream = dz.matmul_t(&layer.weights);
            grads.push(LayerGrads {
                weights: dw,
                biases: db,
            });
        }
        grads.reverse();
        Ok((Gradients { layers: grads }, upstream))
    }
}
