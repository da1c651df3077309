//! Minimal numerical engine for the GAP-terminated 1D CNN:
//! `[conv -> relu] x N -> global average pooling -> dense -> softmax`.
//!
//! All arithmetic is `f64`. Convolutions use zero same-padding so every
//! feature map keeps the input length, which lets the CAM map 1:1 onto
//! input positions.

mod adam;
mod io;
mod layers;
mod model;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use io::{
    load_weights, save_weights, weights_from_json, weights_to_json, TensorRecord, WeightFile,
    WEIGHTS_FORMAT,
};
pub use layers::{
    argmax, conv1d_forward, cross_entropy, dense_logits, dense_softmax, gap, relu, softmax,
    Conv1dParams, DenseParams, FeatureMaps, PROBABILITY_FLOOR,
};
pub use model::{ForwardPass, Gradients, Model, ModelConfig, ModelWeights, SampleGradient};
pub use train::{classification_metrics, train, ClassMetrics, EpochMetrics, LabeledSample, TrainOptions};
