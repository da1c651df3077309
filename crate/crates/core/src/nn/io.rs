//! JSON weight file (`camscope-weights-v1`).
//!
//! ```json
//! { "format": "camscope-weights-v1",
//!   "config": { "input_length": 1500, "conv_channels": [...], ... },
//!   "tensors": { "conv0.kernel": { "shape": [16, 1, 5], "data": [...] }, ... } }
//! ```
//!
//! Tensor names are `conv{i}.kernel` (`out x in x k`), `conv{i}.bias`,
//! `dense.weight` (`classes x channels`) and `dense.bias`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::layers::{Conv1dParams, DenseParams};
use super::model::{Model, ModelConfig, ModelWeights};
use crate::error::{Error, Result};

pub const WEIGHTS_FORMAT: &str = "camscope-weights-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightFile {
    pub format: String,
    pub config: ModelConfig,
    pub tensors: BTreeMap<String, TensorRecord>,
}

impl WeightFile {
    pub fn from_model(model: &Model) -> Self {
        let w = model.weights();
        let mut tensors = BTreeMap::new();
        for (i, layer) in w.conv.iter().enumerate() {
            tensors.insert(
                format!("conv{i}.kernel"),
                TensorRecord {
                    shape: vec![layer.out_channels, layer.in_channels, layer.kernel_size],
                    data: layer.kernels.clone(),
                },
            );
            tensors.insert(
                format!("conv{i}.bias"),
                TensorRecord { shape: vec![layer.out_channels], data: layer.biases.clone() },
            );
        }
        tensors.insert(
            "dense.weight".into(),
            TensorRecord { shape: vec![w.dense.outputs, w.dense.inputs], data: w.dense.weights.clone() },
        );
        tensors.insert(
            "dense.bias".into(),
            TensorRecord { shape: vec![w.dense.outputs], data: w.dense.biases.clone() },
        );
        Self { format: WEIGHTS_FORMAT.into(), config: model.config().clone(), tensors }
    }

    pub fn into_model(mut self) -> Result<Model> {
        if self.format != WEIGHTS_FORMAT {
            return Err(Error::InvalidWeights(format!("unknown format `{}`", self.format)));
        }
        self.config.validate()?;
        let expected = ModelWeights::zeros(&self.config);
        let mut take = |name: String, shape: Vec<usize>| -> Result<Vec<f64>> {
            let record = self
                .tensors
                .remove(&name)
                .ok_or_else(|| Error::InvalidWeights(format!("missing tensor `{name}`")))?;
            if record.shape != shape {
                return Err(Error::InvalidWeights(format!(
                    "tensor `{name}` has shape {:?}, expected {:?}",
                    record.shape, shape
                )));
            }
            if record.data.len() != shape.iter().product::<usize>() {
                return Err(Error::InvalidWeights(format!(
                    "tensor `{name}` holds {} values for shape {:?}",
                    record.data.len(),
                    shape
                )));
            }
            if record.data.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("tensor `{name}`")));
            }
            Ok(record.data)
        };

        let mut conv = Vec::with_capacity(expected.conv.len());
        for (i, layer) in expected.conv.iter().enumerate() {
            let kernels = take(
                format!("conv{i}.kernel"),
                vec![layer.out_channels, layer.in_channels, layer.kernel_size],
            )?;
            let biases = take(format!("conv{i}.bias"), vec![layer.out_channels])?;
            conv.push(Conv1dParams { kernels, biases, ..layer.clone() });
        }
        let d = &expected.dense;
        let dense = DenseParams {
            inputs: d.inputs,
            outputs: d.outputs,
            weights: take("dense.weight".into(), vec![d.outputs, d.inputs])?,
            biases: take("dense.bias".into(), vec![d.outputs])?,
        };
        if let Some(extra) = self.tensors.keys().next() {
            return Err(Error::InvalidWeights(format!("unexpected tensor `{extra}`")));
        }
        Model::new(self.config, ModelWeights { conv, dense })
    }
}

pub fn weights_to_json(model: &Model) -> Result<String> {
    Ok(serde_json::to_string(&WeightFile::from_model(model))?)
}

pub fn weights_from_json(text: &str) -> Result<Model> {
    // serde_json rejects NaN/Infinity literals outright; they surface as a
    // parse error rather than a non-finite tensor.
    let file: WeightFile = serde_json::from_str(text)?;
    file.into_model()
}

pub fn save_weights(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, weights_to_json(model)?)?;
    Ok(())
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<Model> {
    weights_from_json(&std::fs::read_to_string(path)?)
}
