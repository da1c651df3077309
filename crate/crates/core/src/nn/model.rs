use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{
    argmax, conv1d_forward, cross_entropy, dense_softmax, gap, relu_in_place, tap_span,
    Conv1dParams, DenseParams, FeatureMaps,
};
use crate::error::{Error, Result};

/// Architecture of the GAP-terminated 1D CNN.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_length: usize,
    pub conv_channels: Vec<usize>,
    pub kernel_size: usize,
    pub stride: usize,
    pub num_classes: usize,
}

impl ModelConfig {
    pub const DEFAULT_INPUT_LENGTH: usize = 1500;
    pub const DEFAULT_CHANNELS: [usize; 6] = [16, 32, 64, 128, 128, 128];
    pub const DEFAULT_KERNEL_SIZE: usize = 5;

    /// Default architecture (six conv layers, kernel 5) for the given shape.
    pub fn new(input_length: usize, num_classes: usize) -> Self {
        Self {
            input_length,
            conv_channels: Self::DEFAULT_CHANNELS.to_vec(),
            kernel_size: Self::DEFAULT_KERNEL_SIZE,
            stride: 1,
            num_classes,
        }
    }

    pub fn with_channels(mut self, channels: impl Into<Vec<usize>>) -> Self {
        self.conv_channels = channels.into();
        self
    }

    pub fn with_kernel_size(mut self, kernel_size: usize) -> Self {
        self.kernel_size = kernel_size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.kernel_size == 0 || self.kernel_size.is_multiple_of(2) {
            return fail(format!("kernel_size must be odd and >= 1, got {}", self.kernel_size));
        }
        if self.stride != 1 {
            return fail(format!("stride must be 1, got {}", self.stride));
        }
        if self.conv_channels.is_empty() || self.conv_channels.contains(&0) {
            return fail("conv_channels must be a non-empty list of positive counts".into());
        }
        if self.input_length < self.kernel_size {
            return fail(format!(
                "input_length {} is shorter than kernel_size {}",
                self.input_length, self.kernel_size
            ));
        }
        if self.num_classes < 2 {
            return fail(format!("num_classes must be >= 2, got {}", self.num_classes));
        }
        Ok(())
    }

    /// Channel count of the last conv layer (the K feature maps behind the CAM).
    pub fn feature_channels(&self) -> usize {
        *self.conv_channels.last().unwrap_or(&0)
    }
}

/// Every learnable parameter of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    pub conv: Vec<Conv1dParams>,
    pub dense: DenseParams,
}

impl ModelWeights {
    pub fn zeros(config: &ModelConfig) -> Self {
        let mut in_ch = 1;
        let conv = config
            .conv_channels
            .iter()
            .map(|&out_ch| {
                let layer = Conv1dParams::zeros(in_ch, out_ch, config.kernel_size);
                in_ch = out_ch;
                layer
            })
            .collect();
        Self { conv, dense: DenseParams::zeros(in_ch, config.num_classes) }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot(config: &ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Self::zeros(config);
        for layer in &mut weights.conv {
            let fan_in = (layer.in_channels * layer.kernel_size) as f64;
            let fan_out = (layer.out_channels * layer.kernel_size) as f64;
            fill_uniform(&mut layer.kernels, (6.0 / (fan_in + fan_out)).sqrt(), &mut rng);
        }
        let dense = &mut weights.dense;
        let limit = (6.0 / (dense.inputs + dense.outputs) as f64).sqrt();
        fill_uniform(&mut dense.weights, limit, &mut rng);
        weights
    }

    /// Parameter tensors in a fixed order: per conv layer kernels then
    /// biases, then dense weights and biases.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(2 * self.conv.len() + 2);
        for layer in &self.conv {
            out.push(&layer.kernels);
            out.push(&layer.biases);
        }
        out.push(&self.dense.weights);
        out.push(&self.dense.biases);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(2 * self.conv.len() + 2);
        for layer in &mut self.conv {
            out.push(&mut layer.kernels);
            out.push(&mut layer.biases);
        }
        out.push(&mut self.dense.weights);
        out.push(&mut self.dense.biases);
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    pub(crate) fn add_assign(&mut self, other: &ModelWeights) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            for x in t.iter_mut() {
                *x *= factor;
            }
        }
    }

    /// Checks that tensor shapes follow `config`.
    pub fn check_shapes(&self, config: &ModelConfig) -> Result<()> {
        let expected = Self::zeros(config);
        let ok = self.conv.len() == expected.conv.len()
            && self.conv.iter().zip(&expected.conv).all(|(a, b)| {
                a.in_channels == b.in_channels
                    && a.out_channels == b.out_channels
                    && a.kernel_size == b.kernel_size
                    && a.kernels.len() == b.kernels.len()
                    && a.biases.len() == b.biases.len()
            })
            && self.dense.inputs == expected.dense.inputs
            && self.dense.outputs == expected.dense.outputs
            && self.dense.weights.len() == expected.dense.weights.len()
            && self.dense.biases.len() == expected.dense.biases.len();
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch("weights do not match model configuration".into()))
        }
    }
}

fn fill_uniform(values: &mut [f64], limit: f64, rng: &mut ChaCha8Rng) {
    for v in values {
        *v = rng.random_range(-limit..=limit);
    }
}

/// Parameter gradients, shaped like [`ModelWeights`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub ModelWeights);

/// Everything the forward pass produces. `layers[i]` is the post-ReLU
/// output of conv layer `i`; the last entry holds the CAM feature maps.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub input: FeatureMaps,
    pub layers: Vec<FeatureMaps>,
    pub pooled: Vec<f64>,
    pub logits: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl ForwardPass {
    pub fn feature_maps(&self) -> &FeatureMaps {
        self.layers.last().expect("model has at least one conv layer")
    }
}

/// Output of a combined forward/backward pass for one sample.
#[derive(Debug, Clone)]
pub struct SampleGradient {
    pub loss: f64,
    pub probabilities: Vec<f64>,
    pub gradients: Gradients,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ModelConfig,
    weights: ModelWeights,
}

impl Model {
    pub fn new(config: ModelConfig, weights: ModelWeights) -> Result<Self> {
        config.validate()?;
        weights.check_shapes(&config)?;
        if !weights.is_finite() {
            return Err(Error::NonFinite("model weights".into()));
        }
        Ok(Self { config, weights })
    }

    /// Seeded Glorot-uniform initialization.
    pub fn initialize(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let weights = ModelWeights::glorot(&config, seed);
        Ok(Self { config, weights })
    }

    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let weights = ModelWeights::zeros(&config);
        Ok(Self { config, weights })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn weights(&self) -> &ModelWeights {
        &self.weights
    }

    /// Direct parameter access; shapes must not be changed.
    pub fn weights_mut(&mut self) -> &mut ModelWeights {
        &mut self.weights
    }

    fn check_sample(&self, sample: &[f64]) -> Result<()> {
        if sample.len() != self.config.input_length {
            return Err(Error::ShapeMismatch(format!(
                "sample has {} features, model expects {}",
                sample.len(),
                self.config.input_length
            )));
        }
        Ok(())
    }

    pub fn forward(&self, sample: &[f64]) -> Result<ForwardPass> {
        self.check_sample(sample)?;
        let input = FeatureMaps::from_signal(sample);
        let mut layers: Vec<FeatureMaps> = Vec::with_capacity(self.weights.conv.len());
        for params in &self.weights.conv {
            let mut out = conv1d_forward(layers.last().unwrap_or(&input), params)?;
            relu_in_place(&mut out);
            layers.push(out);
        }
        let pooled = gap(layers.last().expect("validated config has conv layers"))?;
        let (logits, probabilities) = dense_softmax(&pooled, &self.weights.dense)?;
        Ok(ForwardPass { input, layers, pooled, logits, probabilities })
    }

    /// Predicted class (lowest index on ties) and class probabilities.
    pub fn predict(&self, sample: &[f64]) -> Result<(usize, Vec<f64>)> {
        let pass = self.forward(sample)?;
        Ok((argmax(&pass.probabilities), pass.probabilities))
    }

    pub fn loss(&self, sample: &[f64], label: usize) -> Result<f64> {
        self.check_label(label)?;
        cross_entropy(&self.forward(sample)?.probabilities, label)
    }

    fn check_label(&self, label: usize) -> Result<()> {
        if label >= self.config.num_classes {
            return Err(Error::LabelOutOfRange { label, num_classes: self.config.num_classes });
        }
        Ok(())
    }

    /// Analytic gradient of the cross-entropy loss for one labelled sample.
    pub fn backward(&self, sample: &[f64], label: usize) -> Result<Gradients> {
        Ok(self.loss_and_gradients(sample, label)?.gradients)
    }

    pub fn loss_and_gradients(&self, sample: &[f64], label: usize) -> Result<SampleGradient> {
        self.check_label(label)?;
        let pass = self.forward(sample)?;
        let loss = cross_entropy(&pass.probabilities, label)?;
        let mut grads = ModelWeights::zeros(&self.config);

        // softmax + cross-entropy: dL/dlogit = p - onehot
        let mut d_logits = pass.probabilities.clone();
        d_logits[label] -= 1.0;

        let dense = &self.weights.dense;
        let k_maps = dense.inputs;
        let mut d_pooled = vec![0.0; k_maps];
        for (c, &dl) in d_logits.iter().enumerate() {
            grads.dense.biases[c] = dl;
            let row = dense.row(c);
            let grow = &mut grads.dense.weights[c * k_maps..(c + 1) * k_maps];
            for k in 0..k_maps {
                grow[k] = dl * pass.pooled[k];
                d_pooled[k] += row[k] * dl;
            }
        }

        let length = self.config.input_length;
        let inv_len = 1.0 / length as f64;
        let mut d_act = FeatureMaps::zeros(k_maps, length);
        for k in 0..k_maps {
            d_act.map_mut(k).fill(d_pooled[k] * inv_len);
        }

        for idx in (0..self.weights.conv.len()).rev() {
            let params = &self.weights.conv[idx];
            let output = &pass.layers[idx];
            let input = if idx == 0 { &pass.input } else { &pass.layers[idx - 1] };

            // ReLU gate: output > 0 exactly where the pre-activation was positive.
            let mut d_pre = d_act;
            for o in 0..params.out_channels {
                for (g, &a) in d_pre.map_mut(o).iter_mut().zip(output.map(o)) {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                }
            }

            let gl = &mut grads.conv[idx];
            let pad = params.kernel_size / 2;
            let need_input_grad = idx > 0;
            let mut d_in = FeatureMaps::zeros(params.in_channels, length);
            for o in 0..params.out_channels {
                let dz = d_pre.map(o);
                gl.biases[o] = dz.iter().sum();
                for i in 0..params.in_channels {
                    let x = input.map(i);
                    for tap in 0..params.kernel_size {
                        let (t0, t1) = tap_span(tap, pad, length);
                        if t0 >= t1 {
                            continue;
                        }
                        let off = t0 + tap - pad;
                        let n = t1 - t0;
                        let dzs = &dz[t0..t1];
                        let ki = params.kernel_index(o, i, tap);
                        gl.kernels[ki] = dzs.iter().zip(&x[off..off + n]).map(|(a, b)| a * b).sum();
                        if need_input_grad {
                            let w = params.kernels[ki];
                            if w != 0.0 {
                                for (d, &g) in d_in.map_mut(i)[off..off + n].iter_mut().zip(dzs) {
                                    *d += w * g;
                                }
                            }
                        }
                    }
                }
            }
            d_act = d_in;
        }

        if !grads.is_finite() {
            return Err(Error::NonFinite("gradients".into()));
        }
        Ok(SampleGradient { loss, probabilities: pass.probabilities, gradients: Gradients(grads) })
    }
}
