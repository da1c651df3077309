use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::layers::argmax;
use super::model::{Gradients, Model, ModelWeights};
use crate::error::{Error, Result};

/// Samples per parallel work unit. Partial sums are combined in chunk order,
/// so results do not depend on the thread count.
const CHUNK: usize = 8;

#[derive(Debug, Clone, Copy)]
pub struct LabeledSample<'a> {
    pub input: &'a [f64],
    pub label: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { epochs: 10, batch_size: 64, adam: AdamConfig::default(), seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Running metrics of one epoch, gathered from the forward passes used for
/// the updates (i.e. before each batch's step).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
}

impl EpochMetrics {
    pub fn macro_precision(&self) -> f64 {
        mean(self.per_class.iter().map(|c| c.precision))
    }

    pub fn macro_recall(&self) -> f64 {
        mean(self.per_class.iter().map(|c| c.recall))
    }

    pub fn macro_f1(&self) -> f64 {
        mean(self.per_class.iter().map(|c| c.f1))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Precision, recall and F1 per class from `(label, predicted)` pairs.
pub fn classification_metrics(pairs: &[(usize, usize)], num_classes: usize) -> Vec<ClassMetrics> {
    let mut tp = vec![0usize; num_classes];
    let mut predicted = vec![0usize; num_classes];
    let mut actual = vec![0usize; num_classes];
    for &(label, pred) in pairs {
        actual[label] += 1;
        predicted[pred] += 1;
        if label == pred {
            tp[label] += 1;
        }
    }
    (0..num_classes)
        .map(|c| {
            let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
            let precision = ratio(tp[c], predicted[c]);
            let recall = ratio(tp[c], actual[c]);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics { precision, recall, f1, support: actual[c] }
        })
        .collect()
}

struct BatchResult {
    grads: ModelWeights,
    loss: f64,
    predictions: Vec<usize>,
}

fn batch_gradient(model: &Model, batch: &[LabeledSample<'_>]) -> Result<BatchResult> {
    let partials: Vec<Result<BatchResult>> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = ModelWeights::zeros(model.config());
            let mut loss = 0.0;
            let mut predictions = Vec::with_capacity(chunk.len());
            for s in chunk {
                let sg = model.loss_and_gradients(s.input, s.label)?;
                acc.add_assign(&sg.gradients.0);
                loss += sg.loss;
                predictions.push(argmax(&sg.probabilities));
            }
            Ok(BatchResult { grads: acc, loss, predictions })
        })
        .collect();

    let mut total = BatchResult {
        grads: ModelWeights::zeros(model.config()),
        loss: 0.0,
        predictions: Vec::with_capacity(batch.len()),
    };
    for part in partials {
        let part = part?;
        total.grads.add_assign(&part.grads);
        total.loss += part.loss;
        total.predictions.extend(part.predictions);
    }
    total.grads.scale(1.0 / batch.len() as f64);
    Ok(total)
}

/// Mini-batch Adam on mean cross-entropy. Shuffling is seeded by
/// `options.seed`; the model should come from [`Model::initialize`].
pub fn train(
    model: &mut Model,
    samples: &[LabeledSample<'_>],
    options: &TrainOptions,
) -> Result<Vec<EpochMetrics>> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    if options.batch_size == 0 {
        return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
    }
    let num_classes = model.config().num_classes;
    let length = model.config().input_length;
    for s in samples {
        if s.label >= num_classes {
            return Err(Error::LabelOutOfRange { label: s.label, num_classes });
        }
        if s.input.len() != length {
            return Err(Error::ShapeMismatch(format!(
                "training sample has {} features, model expects {length}",
                s.input.len()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut state = AdamState::new(model.weights());
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut log = Vec::with_capacity(options.epochs);

    for epoch in 0..options.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut pairs = Vec::with_capacity(samples.len());
        for idx in order.chunks(options.batch_size) {
            let batch: Vec<LabeledSample<'_>> = idx.iter().map(|&i| samples[i]).collect();
            let result = batch_gradient(model, &batch)?;
            loss_sum += result.loss;
            pairs.extend(batch.iter().map(|s| s.label).zip(result.predictions));
            adam_step(model.weights_mut(), &Gradients(result.grads), &mut state, &options.adam)?;
        }
        if !model.weights().is_finite() {
            return Err(Error::NonFinite(format!("weights after epoch {}", epoch + 1)));
        }
        let correct = pairs.iter().filter(|(l, p)| l == p).count();
        log.push(EpochMetrics {
            epoch: epoch + 1,
            loss: loss_sum / samples.len() as f64,
            accuracy: correct as f64 / samples.len() as f64,
            per_class: classification_metrics(&pairs, num_classes),
        });
    }
    Ok(log)
}
