//! Stateless building blocks of the network: same-padded 1D convolution,
//! ReLU, global average pooling and the dense/softmax head.

use crate::error::{Error, Result};

/// Activations of one layer: `channels` rows of `length` values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMaps {
    channels: usize,
    length: usize,
    data: Vec<f64>,
}

impl FeatureMaps {
    pub fn new(channels: usize, length: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * length {
            return Err(Error::ShapeMismatch(format!(
                "feature maps {channels}x{length} need {} values, got {}",
                channels * length,
                data.len()
            )));
        }
        Ok(Self { channels, length, data })
    }

    pub fn zeros(channels: usize, length: usize) -> Self {
        Self { channels, length, data: vec![0.0; channels * length] }
    }

    /// Wraps a single-channel signal.
    pub fn from_signal(signal: &[f64]) -> Self {
        Self { channels: 1, length: signal.len(), data: signal.to_vec() }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn map(&self, channel: usize) -> &[f64] {
        &self.data[channel * self.length..(channel + 1) * self.length]
    }

    pub fn map_mut(&mut self, channel: usize) -> &mut [f64] {
        &mut self.data[channel * self.length..(channel + 1) * self.length]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

/// Parameters of one convolution layer. Kernels are laid out
/// `[out_channel][in_channel][tap]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1dParams {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
    pub kernels: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Conv1dParams {
    pub fn zeros(in_channels: usize, out_channels: usize, kernel_size: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel_size,
            kernels: vec![0.0; out_channels * in_channels * kernel_size],
            biases: vec![0.0; out_channels],
        }
    }

    #[inline]
    pub fn kernel_index(&self, out_ch: usize, in_ch: usize, tap: usize) -> usize {
        (out_ch * self.in_channels + in_ch) * self.kernel_size + tap
    }

    pub fn kernel(&self, out_ch: usize, in_ch: usize) -> &[f64] {
        let start = self.kernel_index(out_ch, in_ch, 0);
        &self.kernels[start..start + self.kernel_size]
    }

    fn check(&self) -> Result<()> {
        if self.kernel_size == 0 || self.kernel_size.is_multiple_of(2) {
            return Err(Error::ShapeMismatch(format!(
                "kernel size must be odd, got {}",
                self.kernel_size
            )));
        }
        if self.kernels.len() != self.out_channels * self.in_channels * self.kernel_size
            || self.biases.len() != self.out_channels
        {
            return Err(Error::ShapeMismatch(format!(
                "conv parameters do not match {}x{}x{}",
                self.out_channels, self.in_channels, self.kernel_size
            )));
        }
        Ok(())
    }
}

/// Parameters of the output layer: `weights` is `outputs x inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseParams {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weights: vec![0.0; inputs * outputs], biases: vec![0.0; outputs] }
    }

    /// Weight row of one output class.
    pub fn row(&self, class: usize) -> &[f64] {
        &self.weights[class * self.inputs..(class + 1) * self.inputs]
    }
}

/// Valid tap range for output position `t` is `t + tap - pad` in `[0, length)`.
/// Returns the `[t_start, t_end)` output positions for which `tap` hits real input.
#[inline]
pub(crate) fn tap_span(tap: usize, pad: usize, length: usize) -> (usize, usize) {
    let start = pad.saturating_sub(tap);
    let end = (length + pad).saturating_sub(tap).min(length);
    (start, end.max(start))
}

/// Stride-1 convolution with `kernel_size / 2` zeros of padding on each side,
/// so the output keeps the input length.
pub fn conv1d_forward(input: &FeatureMaps, params: &Conv1dParams) -> Result<FeatureMaps> {
    params.check()?;
    if input.channels != params.in_channels {
        return Err(Error::ShapeMismatch(format!(
            "conv expects {} input channels, got {}",
            params.in_channels, input.channels
        )));
    }
    if input.length == 0 {
        return Err(Error::EmptyInput("convolution input"));
    }
    let length = input.length;
    let pad = params.kernel_size / 2;
    let mut out = FeatureMaps::zeros(params.out_channels, length);
    for o in 0..params.out_channels {
        let row = out.map_mut(o);
        row.fill(params.biases[o]);
        for i in 0..params.in_channels {
            let src = input.map(i);
            for (tap, &w) in params.kernel(o, i).iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let (t0, t1) = tap_span(tap, pad, length);
                if t0 >= t1 {
                    continue;
                }
                let offset = t0 + tap - pad;
                for (dst, &x) in row[t0..t1].iter_mut().zip(&src[offset..offset + (t1 - t0)]) {
                    *dst += w * x;
                }
            }
        }
    }
    Ok(out)
}

pub fn relu(values: &[f64]) -> Vec<f64> {
    values.iter().map(|&x| x.max(0.0)).collect()
}

pub(crate) fn relu_in_place(values: &mut FeatureMaps) {
    for x in values.data.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Global average pooling: one mean per feature map.
pub fn gap(maps: &FeatureMaps) -> Result<Vec<f64>> {
    if maps.length == 0 {
        return Err(Error::EmptyInput("global average pooling over zero-length maps"));
    }
    let scale = 1.0 / maps.length as f64;
    Ok((0..maps.channels).map(|k| maps.map(k).iter().sum::<f64>() * scale).collect())
}

/// Numerically stable softmax (max-shifted).
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("logits".into()));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

pub fn dense_logits(pooled: &[f64], dense: &DenseParams) -> Result<Vec<f64>> {
    if pooled.len() != dense.inputs
        || dense.weights.len() != dense.inputs * dense.outputs
        || dense.biases.len() != dense.outputs
    {
        return Err(Error::ShapeMismatch(format!(
            "dense layer {}x{} applied to {} inputs",
            dense.outputs,
            dense.inputs,
            pooled.len()
        )));
    }
    Ok((0..dense.outputs)
        .map(|c| {
            dense.row(c).iter().zip(pooled).map(|(w, x)| w * x).sum::<f64>() + dense.biases[c]
        })
        .collect())
}

/// Output layer followed by softmax. Returns `(logits, probabilities)`.
pub fn dense_softmax(pooled: &[f64], dense: &DenseParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let logits = dense_logits(pooled, dense)?;
    let probabilities = softmax(&logits)?;
    Ok((logits, probabilities))
}

/// Lower bound applied to the target probability before taking the log.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

pub fn cross_entropy(probabilities: &[f64], label: usize) -> Result<f64> {
    let p = probabilities.get(label).ok_or(Error::LabelOutOfRange {
        label,
        num_classes: probabilities.len(),
    })?;
    Ok(-p.max(PROBABILITY_FLOOR).ln())
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(kernel: &[f64], bias: f64) -> Conv1dParams {
        Conv1dParams {
            in_channels: 1,
            out_channels: 1,
            kernel_size: kernel.len(),
            kernels: kernel.to_vec(),
            biases: vec![bias],
        }
    }

    fn conv(kernel: &[f64], bias: f64, input: &[f64]) -> Vec<f64> {
        conv1d_forward(&FeatureMaps::from_signal(input), &single(kernel, bias))
            .unwrap()
            .into_vec()
    }

    #[test]
    fn identity_kernel() {
        assert_eq!(conv(&[0.0, 1.0, 0.0], 0.0, &[3.0, 5.0, 7.0]), vec![3.0, 5.0, 7.0]);
    }

    #[test]
    fn bias_only() {
        assert_eq!(conv(&[0.0, 0.0, 0.0], 2.0, &[1.0, -4.0, 9.0, 0.5]), vec![2.0; 4]);
    }

    #[test]
    fn box_kernel_sees_zero_padding_at_edges() {
        assert_eq!(conv(&[1.0, 1.0, 1.0], 0.0, &[1.0, 1.0, 1.0]), vec![2.0, 3.0, 2.0]);
    }

    #[test]
    fn kernel_wider_than_input() {
        // taps that never land on the input contribute nothing
        assert_eq!(conv(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.0, &[1.0]), vec![3.0]);
        assert_eq!(conv(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.0, &[1.0, 10.0]), vec![43.0, 32.0]);
    }

    #[test]
    fn multi_channel_sums_over_inputs() {
        let input = FeatureMaps::new(2, 3, vec![1.0, 2.0, 3.0, 10.0, 20.0, 30.0]).unwrap();
        let params = Conv1dParams {
            in_channels: 2,
            out_channels: 1,
            kernel_size: 1,
            kernels: vec![1.0, 0.5],
            biases: vec![1.0],
        };
        let out = conv1d_forward(&input, &params).unwrap();
        assert_eq!(out.into_vec(), vec![7.0, 13.0, 19.0]);
    }

    #[test]
    fn conv_rejects_shape_mismatch() {
        let input = FeatureMaps::from_signal(&[1.0, 2.0]);
        let mut params = Conv1dParams::zeros(2, 1, 3);
        assert!(matches!(conv1d_forward(&input, &params), Err(Error::ShapeMismatch(_))));
        params = Conv1dParams::zeros(1, 1, 4);
        assert!(conv1d_forward(&input, &params).is_err());
        params = Conv1dParams::zeros(1, 1, 3);
        params.biases.clear();
        assert!(conv1d_forward(&input, &params).is_err());
    }

    #[test]
    fn relu_cases() {
        assert_eq!(relu(&[-1.0, 0.0, 2.0]), vec![0.0, 0.0, 2.0]);
        assert_eq!(relu(&[-1.0, -3.0]), vec![0.0, 0.0]);
        assert_eq!(relu(&[1.5, 3.0]), vec![1.5, 3.0]);
    }

    #[test]
    fn gap_cases() {
        assert_eq!(gap(&FeatureMaps::from_signal(&[3.0; 10])).unwrap(), vec![3.0]);
        assert_eq!(gap(&FeatureMaps::from_signal(&[0.0, 2.0])).unwrap(), vec![1.0]);
        let two = FeatureMaps::new(2, 2, vec![1.0, 1.0, 0.0, 4.0]).unwrap();
        assert_eq!(gap(&two).unwrap(), vec![1.0, 2.0]);
        assert!(matches!(gap(&FeatureMaps::zeros(3, 0)), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn softmax_cases() {
        let dense = DenseParams::zeros(3, 2);
        let (_, p) = dense_softmax(&[1.0, 2.0, 3.0], &dense).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);

        let p = softmax(&[0.0, 0.0, 0.0]).unwrap();
        for v in p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }

        let p = softmax(&[2f64.ln(), 0.0]).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-15);

        assert!(matches!(softmax(&[f64::NAN, 0.0]), Err(Error::NonFinite(_))));
        assert!(softmax(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn dense_logits_are_affine() {
        let dense = DenseParams {
            inputs: 2,
            outputs: 2,
            weights: vec![1.0, 2.0, -1.0, 0.5],
            biases: vec![0.25, -0.25],
        };
        assert_eq!(dense_logits(&[2.0, 3.0], &dense).unwrap(), vec![8.25, -0.75]);
        assert!(dense_logits(&[2.0], &dense).is_err());
    }

    #[test]
    fn cross_entropy_cases() {
        assert_eq!(cross_entropy(&[0.0, 1.0], 1).unwrap(), 0.0);
        let ce = cross_entropy(&[0.25; 4], 2).unwrap();
        assert!((ce - 4f64.ln()).abs() < 1e-15);
        assert_eq!(cross_entropy(&[1.0, 0.0], 1).unwrap(), -(1e-12f64).ln());
        assert!(matches!(cross_entropy(&[0.5, 0.5], 2), Err(Error::LabelOutOfRange { .. })));
    }

    #[test]
    fn argmax_ties_to_lowest() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.1, 0.7, 0.2]), 1);
        assert_eq!(argmax(&[0.2, 0.3, 0.3]), 1);
    }
}
