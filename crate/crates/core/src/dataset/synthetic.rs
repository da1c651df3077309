//! Planted-motif data: uniform byte noise with a short, class-specific byte
//! pattern at a fixed, class-specific position. Useful for checking that
//! CAMs point at the bytes that actually decide the class.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetBundle, PreparedSample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedMotif {
    pub class_index: usize,
    pub start: usize,
    pub bytes: Vec<u8>,
}

impl PlantedMotif {
    pub fn span(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.bytes.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotifDataset {
    pub bundle: DatasetBundle,
    pub motifs: Vec<PlantedMotif>,
}

/// `per_class` samples for each of `num_classes` classes, inputs of
/// `length` bytes scaled by 1/255. Motifs are 0x00/0xff patterns (at least
/// two of each, distinct per class), centred at evenly spaced positions.
/// Samples are interleaved by class.
pub fn planted_motifs(
    num_classes: usize,
    per_class: usize,
    length: usize,
    motif_len: usize,
    seed: u64,
) -> MotifDataset {
    assert!((4..=16).contains(&motif_len), "motif length must be within 4..=16");
    assert!(length >= (num_classes + 1) * motif_len, "input too short for the motifs");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut patterns: Vec<u32> = Vec::with_capacity(num_classes);
    while patterns.len() < num_classes {
        let p: u32 = rng.random_range(0..1u32 << motif_len);
        let ones = p.count_ones() as usize;
        if ones >= 2 && motif_len - ones >= 2 && !patterns.contains(&p) {
            patterns.push(p);
        }
    }
    let motifs: Vec<PlantedMotif> = patterns
        .iter()
        .enumerate()
        .map(|(c, &p)| PlantedMotif {
            class_index: c,
            start: (c + 1) * length / (num_classes + 1) - motif_len / 2,
            bytes: (0..motif_len).map(|b| if p >> b & 1 == 1 { 0xff } else { 0x00 }).collect(),
        })
        .collect();

    let mut samples = Vec::with_capacity(num_classes * per_class);
    for i in 0..per_class {
        for motif in &motifs {
            let mut bytes: Vec<u8> = (0..length).map(|_| rng.random()).collect();
            bytes[motif.span()].copy_from_slice(&motif.bytes);
            samples.push(PreparedSample {
                sample_id: format!("c{}-{i}", motif.class_index),
                label: Some(motif.class_index),
                input: bytes.into_iter().map(|b| f64::from(b) / 255.0).collect(),
            });
        }
    }
    MotifDataset {
        bundle: DatasetBundle {
            input_length: length,
            class_names: (0..num_classes).map(|c| format!("class-{c}")).collect(),
            samples,
            summary: None,
        },
        motifs,
    }
}
