//! Weighted captioner training sets and beam decoding.
//!
//! Samples sharing a label or caption are down-weighted during fine-tuning:
//! the loss multiplier is `c(L)^(-1/4) * c(C)^(-1)` where `c` counts verbatim
//! occurrences in the training data. Decoding goes through the pluggable
//! captioner backend; metrics consume the first `k` of a fixed-width beam set.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, BeamSet, CaptionerBackend};
use crate::types::LabeledSample;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CaptionerError {
    #[error("occurrence counts must be positive, got cL={0}, cC={1}")]
    NonPositiveCount(u64, u64),
    #[error("k={k} exceeds beam width {width}")]
    KBeyondWidth { k: usize, width: usize },
    #[error("k must be at least 1")]
    KZero,
    #[error("backend returned {returned} beams, {k} requested")]
    InsufficientBeams { returned: usize, k: usize },
    #[error("sample {0} has no label for pseudo-label training")]
    MissingLabel(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Captioner fine-tuning hyperparameters (AdamW-style optimizer; the image
/// encoder stays frozen).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionerTrainConfig {
    pub batch_size: u32,
    pub lr: f64,
    pub optimizer_betas: (f64, f64),
    pub weight_decay: f64,
    pub epochs: u32,
}

impl Default for CaptionerTrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 16,
            lr: 1e-5,
            optimizer_betas: (0.9, 0.999),
            weight_decay: 0.1,
            epochs: 2,
        }
    }
}

/// Occurrence counts over the training set: `c(L)` per label text and `c(C)`
/// per caption text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightCounts {
    pub label_counts: BTreeMap<String, u64>,
    pub caption_counts: BTreeMap<String, u64>,
}

impl WeightCounts {
    pub fn from_samples(samples: &[LabeledSample]) -> Self {
        let mut counts = Self::default();
        for sample in samples {
            if let Some(label) = &sample.label {
                *counts.label_counts.entry(label.text().to_string()).or_insert(0) += 1;
            }
            *counts.caption_counts.entry(sample.caption.text().to_string()).or_insert(0) += 1;
        }
        counts
    }
}

/// The loss multiplier `cL^(-1/4) * cC^(-1)`.
pub fn sample_weight(label_count: u64, caption_count: u64) -> Result<f64, CaptionerError> {
    if label_count == 0 || caption_count == 0 {
        return Err(CaptionerError::NonPositiveCount(label_count, caption_count));
    }
    Ok(libm::pow(label_count as f64, -0.25) / caption_count as f64)
}

/// What the captioner is fine-tuned towards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainingTarget {
    /// The interaction pseudo-label, weighted by label and caption counts.
    PseudoLabel,
    /// The raw caption text, weighted by caption counts only.
    RawCaption,
}

/// Emits one weighted `(image_ref, target_text, weight)` example per sample.
pub fn build_training_set(
    samples: &[LabeledSample],
    target: TrainingTarget,
) -> Result<Vec<(String, String, f64)>, CaptionerError> {
    let counts = WeightCounts::from_samples(samples);
    let mut out = Vec::with_capacity(samples.len());
    for sample in samples {
        let (text, weight) = match target {
            TrainingTarget::PseudoLabel => {
                let label = sample
                    .label
                    .as_ref()
                    .ok_or_else(|| CaptionerError::MissingLabel(sample.id.clone()))?;
                let cl = counts.label_counts[label.text()];
                let cc = counts.caption_counts[sample.caption.text()];
                (label.text().to_string(), sample_weight(cl, cc)?)
            }
            TrainingTarget::RawCaption => {
                let cc = counts.caption_counts[sample.caption.text()];
                (sample.caption.text().to_string(), sample_weight(1, cc)?)
            }
        };
        out.push((sample.image_ref.clone(), text, weight));
    }
    Ok(out)
}

/// Decodes a width-`width` beam set and returns the texts of the first `k`
/// beams (already ordered by descending score).
pub fn decode_topk(
    backend: &dyn CaptionerBackend,
    image_ref: &str,
    width: usize,
    k: usize,
) -> Result<Vec<String>, CaptionerError> {
    if k == 0 {
        return Err(CaptionerError::KZero);
    }
    if k > width {
        return Err(CaptionerError::KBeyondWidth { k, width });
    }
    let set: BeamSet = backend.decode(image_ref, width)?;
    set.validate()?;
    if set.beams.len() < k {
        return Err(CaptionerError::InsufficientBeams { returned: set.beams.len(), k });
    }
    Ok(set.beams.into_iter().take(k).map(|b| b.text).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::Beam;
    use crate::types::{Interaction, MaskedCaption, Source, Split};

    fn sample(id: &str, caption: &str, label: Option<&str>) -> LabeledSample {
        LabeledSample {
            id: id.to_string(),
            image_ref: alloc::format!("img/{id}"),
            caption: MaskedCaption::new(caption, Source::WhosWaldo),
            face_count: 2,
            datetime_meta: None,
            label: label.map(|l| Interaction::new(l).unwrap()),
            split: Split::Train,
        }
    }

    #[test]
    fn weight_matches_analytic_points() {
        assert!((sample_weight(16, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!((sample_weight(1, 1).unwrap() - 1.0).abs() < 1e-15);
        assert!((sample_weight(81, 2).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!(sample_weight(0, 1).is_err());
    }

    #[test]
    fn weight_is_strictly_decreasing() {
        let mut previous = f64::INFINITY;
        for cl in [1u64, 2, 5, 10, 100] {
            let w = sample_weight(cl, 1).unwrap();
            assert!(w < previous);
            previous = w;
        }
        assert!(sample_weight(4, 3).unwrap() < sample_weight(4, 2).unwrap());
    }

    #[test]
    fn training_set_weights_by_mode() {
        let samples = alloc::vec![
            sample("a", "cap one", Some("[NAME] greeting [NAME]")),
            sample("b", "cap two", Some("[NAME] greeting [NAME]")),
            sample("c", "cap three", Some("[NAME] waving to [NAME]")),
        ];
        let set = build_training_set(&samples, TrainingTarget::PseudoLabel).unwrap();
        assert_eq!(set.len(), 3);
        let expected = libm::pow(2.0, -0.25);
        assert!((set[0].2 - expected).abs() < 1e-12);
        assert!((set[2].2 - 1.0).abs() < 1e-12);

        let raw = build_training_set(&samples, TrainingTarget::RawCaption).unwrap();
        assert!(raw.iter().all(|(_, _, w)| (w - 1.0).abs() < 1e-12));
        assert_eq!(raw[0].1, "cap one");
    }

    #[test]
    fn duplicated_caption_group_weights_sum_to_one() {
        let samples = alloc::vec![
            sample("a", "same cap", Some("[NAME] l1 [NAME]")),
            sample("b", "same cap", Some("[NAME] l2 [NAME]")),
            sample("c", "same cap", Some("[NAME] l3 [NAME]")),
        ];
        let set = build_training_set(&samples, TrainingTarget::PseudoLabel).unwrap();
        let total: f64 = set.iter().map(|(_, _, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    struct FixedBeams(Vec<(&'static str, f64)>);

    impl CaptionerBackend for FixedBeams {
        fn fit(&mut self, _samples: &[(String, String, f64)]) -> Result<(), BackendError> {
            Ok(())
        }

        fn decode(&self, _image_ref: &str, beams: usize) -> Result<BeamSet, BackendError> {
            Ok(BeamSet {
                beams: self
                    .0
                    .iter()
                    .take(beams)
                    .map(|(t, s)| Beam { text: t.to_string(), score: *s })
                    .collect(),
                width: beams,
            })
        }
    }

    #[test]
    fn topk_is_prefix_of_larger_k() {
        let backend =
            FixedBeams(alloc::vec![("b0", 0.9), ("b1", 0.7), ("b2", 0.5), ("b3", 0.1)]);
        let one = decode_topk(&backend, "img", 4, 1).unwrap();
        let three = decode_topk(&backend, "img", 4, 3).unwrap();
        assert_eq!(one, ["b0"]);
        assert_eq!(three[..1], one[..]);
        assert_eq!(three, ["b0", "b1", "b2"]);
        assert!(matches!(
            decode_topk(&backend, "img", 4, 5).unwrap_err(),
            CaptionerError::KBeyondWidth { .. }
        ));
    }
}
