use rand::Rng;

use super::{Dataset, FeatureInfo, FeatureKind, Label};
use crate::error::{Error, Result};
use crate::seed::{self, Stream};

pub const SYNTHETIC_FEATURE: &str = "synthetic_bit";

/// A dataset with a random group bit and labels biased against `bit == 0`.
#[derive(Debug, Clone)]
pub struct BiasedDataset {
    pub base: Dataset,
    /// Synthetic bit per row, 0 marks the synthetic protected group.
    pub bits: Vec<u8>,
    pub biased_labels: Vec<Label>,
    /// Rows whose label was flipped from +1 to -1, ascending.
    pub flipped: Vec<usize>,
    pub eta: f64,
    pub seed: u64,
}

/// Draws an i.i.d. uniform bit per row and flips each positive label in the
/// `bit == 0` group to negative with probability `eta`.
///
/// The bits and the flips come from separate random streams, so the group
/// assignment stays the same for every `eta` under one seed.
pub fn inject_random_bias(ds: &Dataset, eta: f64, seed: u64) -> Result<BiasedDataset> {
    if !(0.0..0.5).contains(&eta) {
        return Err(Error::InvalidArgument(format!("eta must lie in [0, 1/2), got {eta}")));
    }
    let mut bit_rng = seed::rng(seed::derive(seed, Stream::BiasInjection, 0));
    let mut flip_rng = seed::rng(seed::derive(seed, Stream::BiasInjection, 1));
    let bits: Vec<u8> = (0..ds.n()).map(|_| u8::from(bit_rng.random_bool(0.5))).collect();
    let mut biased_labels = ds.labels().to_vec();
    let mut flipped = Vec::new();
    for (i, (&b, label)) in bits.iter().zip(biased_labels.iter_mut()).enumerate() {
        if b == 0 && *label == 1 && flip_rng.random_bool(eta) {
            *label = -1;
            flipped.push(i);
        }
    }
    Ok(BiasedDataset {
        base: ds.clone(),
        bits,
        biased_labels,
        flipped,
        eta,
        seed,
    })
}

impl BiasedDataset {
    pub fn synthetic_protected(&self) -> Vec<bool> {
        self.bits.iter().map(|&b| b == 0).collect()
    }

    /// The dataset a learner sees: the synthetic bit appended as a feature,
    /// biased labels, and the synthetic group as the protected group.
    pub fn learning_dataset(&self) -> Result<Dataset> {
        let bit_values: Vec<f64> = self.bits.iter().map(|&b| f64::from(b)).collect();
        self.base
            .with_feature(
                FeatureInfo {
                    name: SYNTHETIC_FEATURE.into(),
                    kind: FeatureKind::Synthetic,
                },
                &bit_values,
            )?
            .with_labels(self.biased_labels.clone())?
            .with_protected(self.synthetic_protected())
    }
}
