//! Local class activation maps.
//!
//! For class `c` the CAM at input position `t` is the output-layer weight
//! vector of `c` applied to the last conv layer's activations at `t`:
//! `raw[t] = sum_k W[c][k] * A_k(t)`. Because of global average pooling,
//! `mean_t(raw) + b[c]` is exactly the class logit. The dense bias is
//! position-independent and left out of the map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{argmax, ForwardPass, Model};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalCam {
    pub sample_id: String,
    pub class_index: usize,
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
    /// Set when every raw value is zero and `normalized` is all zeros.
    #[serde(default)]
    pub all_zero: bool,
}

/// Divides by the largest absolute value, mapping into `[-1, 1]` with the
/// sign and the zero point preserved. An all-zero map stays all zeros.
pub fn normalize_max_abs(raw: &[f64]) -> Vec<f64> {
    let peak = raw.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak > 0.0 {
        raw.iter().map(|x| (x / peak).clamp(-1.0, 1.0)).collect()
    } else {
        vec![0.0; raw.len()]
    }
}

fn project(model: &Model, pass: &ForwardPass, class_index: usize) -> Vec<f64> {
    let maps = pass.feature_maps();
    let row = model.weights().dense.row(class_index);
    let mut raw = vec![0.0; maps.length()];
    for (k, &w) in row.iter().enumerate() {
        for (r, &a) in raw.iter_mut().zip(maps.map(k)) {
            *r += w * a;
        }
    }
    raw
}

fn build(sample_id: &str, class_index: usize, raw: Vec<f64>) -> LocalCam {
    let normalized = normalize_max_abs(&raw);
    let all_zero = raw.iter().all(|&x| x == 0.0);
    LocalCam { sample_id: sample_id.to_owned(), class_index, raw, normalized, all_zero }
}

pub fn compute_cam(model: &Model, sample_id: &str, sample: &[f64], class_index: usize) -> Result<LocalCam> {
    let num_classes = model.config().num_classes;
    if class_index >= num_classes {
        return Err(Error::ClassOutOfRange { class: class_index, num_classes });
    }
    let pass = model.forward(sample)?;
    Ok(build(sample_id, class_index, project(model, &pass, class_index)))
}

/// CAM of the predicted class, computed from a single forward pass.
pub fn cam_for_prediction(model: &Model, sample_id: &str, sample: &[f64]) -> Result<LocalCam> {
    let pass = model.forward(sample)?;
    let class_index = argmax(&pass.probabilities);
    Ok(build(sample_id, class_index, project(model, &pass, class_index)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{ModelConfig, ModelWeights};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_model(seed: u64) -> Model {
        let mut model =
            Model::initialize(ModelConfig::new(24, 3).with_channels(vec![3, 5]), seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xdead);
        for t in model.weights_mut().tensors_mut() {
            for x in t.iter_mut() {
                *x += rng.random_range(-0.2..0.2);
            }
        }
        model
    }

    fn sample(seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..24).map(|_| rng.random_range(0.0..1.0)).collect()
    }

    #[test]
    fn zero_class_weights_give_zero_cam() {
        let mut model = random_model(1);
        model.weights_mut().dense.weights[..5].fill(0.0);
        let cam = compute_cam(&model, "s", &sample(2), 0).unwrap();
        assert!(cam.raw.iter().all(|&x| x == 0.0));
        assert!(cam.normalized.iter().all(|&x| x == 0.0));
        assert!(cam.all_zero);
    }

    #[test]
    fn single_map_unit_weight_returns_the_map() {
        let config = ModelConfig::new(24, 2).with_channels(vec![1]);
        let mut weights = ModelWeights::glorot(&config, 4);
        weights.dense.weights = vec![1.0, 0.3];
        let model = Model::new(config, weights).unwrap();
        let x = sample(3);
        let cam = compute_cam(&model, "s", &x, 0).unwrap();
        let pass = model.forward(&x).unwrap();
        assert_eq!(cam.raw, pass.feature_maps().map(0));
    }

    #[test]
    fn mean_plus_bias_is_the_logit() {
        for seed in 0..10 {
            let model = random_model(seed);
            let x = sample(seed + 100);
            let logits = model.forward(&x).unwrap().logits;
            for c in 0..3 {
                let cam = compute_cam(&model, "s", &x, c).unwrap();
                let mean = cam.raw.iter().sum::<f64>() / cam.raw.len() as f64;
                let b = model.weights().dense.biases[c];
                assert!((mean + b - logits[c]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn scaling_class_weights_scales_raw_only() {
        let model = random_model(5);
        let x = sample(6);
        let base = compute_cam(&model, "s", &x, 1).unwrap();
        let mut scaled = model.clone();
        let k = scaled.weights().dense.inputs;
        for w in &mut scaled.weights_mut().dense.weights[k..2 * k] {
            *w *= 2.5;
        }
        let cam = compute_cam(&scaled, "s", &x, 1).unwrap();
        for (a, b) in cam.raw.iter().zip(&base.raw) {
            assert!((a - 2.5 * b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        for (a, b) in cam.normalized.iter().zip(&base.normalized) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn normalization_is_idempotent_and_bounded() {
        let n = normalize_max_abs(&[0.5, -2.0, 1.0]);
        assert_eq!(n, vec![0.25, -1.0, 0.5]);
        assert_eq!(normalize_max_abs(&n), n);
        assert_eq!(normalize_max_abs(&[0.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn prediction_cam_matches_explicit_class() {
        let model = random_model(8);
        let x = sample(9);
        let (class, _) = model.predict(&x).unwrap();
        let a = cam_for_prediction(&model, "id", &x).unwrap();
        assert_eq!(a, compute_cam(&model, "id", &x, class).unwrap());
        assert_eq!(a, cam_for_prediction(&model, "id", &x).unwrap());
    }

    #[test]
    fn zero_model_predicts_class_zero_with_zero_cam() {
        let model = Model::zeros(ModelConfig::new(24, 2).with_channels(vec![2])).unwrap();
        let cam = cam_for_prediction(&model, "z", &sample(1)).unwrap();
        assert_eq!(cam.class_index, 0);
        assert!(cam.all_zero);
    }

    #[test]
    fn errors() {
        let model = random_model(1);
        assert!(matches!(compute_cam(&model, "s", &sample(1), 3), Err(Error::ClassOutOfRange { .. })));
        assert!(matches!(compute_cam(&model, "s", &[0.0; 5], 0), Err(Error::ShapeMismatch(_))));
    }
}
