use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PreparedSample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCount {
    pub class_index: usize,
    pub before: usize,
    pub after: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub seed: u64,
    pub per_class_target: usize,
    pub classes: Vec<ClassCount>,
}

/// Reduces every class above `per_class_target` to exactly that many
/// samples, drawn uniformly without replacement. Smaller classes pass
/// through. Kept samples stay in input order.
pub fn undersample(
    samples: Vec<PreparedSample>,
    per_class_target: usize,
    seed: u64,
) -> Result<(Vec<PreparedSample>, DatasetSummary)> {
    if per_class_target == 0 {
        return Err(Error::InvalidConfig("per-class target must be >= 1".into()));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        let label = s.label.ok_or_else(|| {
            Error::InvalidTable(format!("sample `{}` has no label", s.sample_id))
        })?;
        by_class.entry(label).or_default().push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; samples.len()];
    let mut classes = Vec::with_capacity(by_class.len());
    for (&class_index, members) in &by_class {
        if members.len() > per_class_target {
            for j in rand::seq::index::sample(&mut rng, members.len(), per_class_target) {
                keep[members[j]] = true;
            }
        } else {
            members.iter().for_each(|&i| keep[i] = true);
        }
        classes.push(ClassCount {
            class_index,
            before: members.len(),
            after: members.len().min(per_class_target),
        });
    }

    let kept = samples
        .into_iter()
        .zip(keep)
        .filter_map(|(s, k)| k.then_some(s))
        .collect();
    Ok((kept, DatasetSummary { seed, per_class_target, classes }))
}
