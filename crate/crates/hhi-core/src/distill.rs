//! Student-summarizer training and pseudo-label generation.
//!
//! Training examples pair a prefixed caption with its interaction target.
//! Pseudo-labels come from running the trained summarizer over captions of
//! samples with enough face detections, keeping only outputs matching the
//! label grammar (`[NAME]`, an "-ing" word, exactly one more `[NAME]`, no
//! banned substring) and dropping anything that collides with the test set by
//! caption text or date-time metadata.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, SummarizerBackend};
use crate::names::NAME_TOKEN;
use crate::synth::InteractionCaptionPair;
use crate::types::{Interaction, LabeledSample};

/// Minimum face detections for a sample to receive a pseudo-label.
pub const MIN_FACES: u32 = 2;

/// Substrings that disqualify a pseudo-label.
pub const LABEL_BANNED_SUBSTRINGS: &[&str] = &["photo", "image", "picture"];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DistillError {
    #[error("cannot split {len} pairs into {k} folds")]
    FoldCount { len: usize, k: usize },
    #[error("fold count must be at least 2, got {0}")]
    TooFewFolds(usize),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Summarizer fine-tuning hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: u32,
    pub batch_size: u32,
    pub lr: f64,
    pub schedule: Schedule,
    pub optimizer_betas: (f64, f64),
    pub max_grad_norm: f64,
    pub task_prefix: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    Linear,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 3,
            batch_size: 8,
            lr: 5e-5,
            schedule: Schedule::Linear,
            optimizer_betas: (0.9, 0.999),
            max_grad_norm: 1.0,
            task_prefix: "summarize:".to_string(),
        }
    }
}

/// Builds one (input, target) example: the caption behind the task prefix,
/// the interaction as target. An empty prefix leaves the caption bare.
pub fn make_training_example(pair: &InteractionCaptionPair, prefix: &str) -> (String, String) {
    let input = if prefix.is_empty() {
        pair.caption.text().to_string()
    } else {
        alloc::format!("{prefix} {}", pair.caption.text())
    };
    (input, pair.interaction.text().to_string())
}

/// Splits pairs into `k` disjoint folds of near-equal size, deterministically
/// for a given seed.
pub fn split_folds<T: Clone>(pairs: &[T], k: usize, seed: u64) -> Result<Vec<Vec<T>>, DistillError> {
    if k < 2 {
        return Err(DistillError::TooFewFolds(k));
    }
    if k > pairs.len() {
        return Err(DistillError::FoldCount { len: pairs.len(), k });
    }
    let mut indices: Vec<usize> = (0..pairs.len()).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let mut folds: Vec<Vec<T>> = alloc::vec![Vec::new(); k];
    for (position, index) in indices.into_iter().enumerate() {
        folds[position % k].push(pairs[index].clone());
    }
    Ok(folds)
}

/// Keeps samples with at least [`MIN_FACES`] face detections.
pub fn select_eligible_samples(dataset: &[LabeledSample]) -> Vec<&LabeledSample> {
    dataset.iter().filter(|s| s.face_count >= MIN_FACES).collect()
}

/// Why a sample did not receive a pseudo-label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectionReason {
    /// Output does not match the label grammar.
    Format,
    /// Output contains a banned substring.
    BannedSubstring,
    /// Caption identical to a test-set caption.
    DedupCaption,
    /// Date-time metadata identical to a test-set sample's.
    DedupDatetime,
    /// Fewer than the required face detections.
    FaceCount,
}

impl RejectionReason {
    pub fn key(&self) -> &'static str {
        match self {
            RejectionReason::Format => "format",
            RejectionReason::BannedSubstring => "banned-substring",
            RejectionReason::DedupCaption => "dedup-caption",
            RejectionReason::DedupDatetime => "dedup-datetime",
            RejectionReason::FaceCount => "face-count",
        }
    }
}

/// Checks a raw summarizer output against the pseudo-label grammar:
/// leading `[NAME]`, then an "-ing" word, then a remainder with exactly one
/// more `[NAME]`; no banned substring anywhere.
pub fn filter_pseudo_label(text: &str) -> (bool, Option<RejectionReason>) {
    if LABEL_BANNED_SUBSTRINGS.iter().any(|b| text.contains(b)) {
        return (false, Some(RejectionReason::BannedSubstring));
    }
    let mut tokens = text.split_whitespace();
    let Some(first) = tokens.next() else {
        return (false, Some(RejectionReason::Format));
    };
    if first != NAME_TOKEN {
        return (false, Some(RejectionReason::Format));
    }
    let Some(verb) = tokens.next() else {
        return (false, Some(RejectionReason::Format));
    };
    if !verb.ends_with("ing") || verb.contains(NAME_TOKEN) {
        return (false, Some(RejectionReason::Format));
    }
    let remainder: Vec<&str> = tokens.collect();
    let slots: usize = remainder.iter().map(|t| t.matches(NAME_TOKEN).count()).sum();
    if slots != 1 {
        return (false, Some(RejectionReason::Format));
    }
    (true, None)
}

/// Removes train samples sharing a caption text or a date-time metadata value
/// with any test sample.
pub fn dedupe_against_test<'a>(
    train: &'a [LabeledSample],
    test: &[LabeledSample],
) -> Vec<&'a LabeledSample> {
    let test_captions: BTreeSet<&str> = test.iter().map(|s| s.caption.text()).collect();
    let test_datetimes: BTreeSet<&str> =
        test.iter().filter_map(|s| s.datetime_meta.as_deref()).collect();
    train
        .iter()
        .filter(|s| {
            !test_captions.contains(s.caption.text())
                && s.datetime_meta
                    .as_deref()
                    .is_none_or(|dt| !test_datetimes.contains(dt))
        })
        .collect()
}

/// Per-sample outcome of pseudo-label generation.
/// JSONL schema: `{sample_id, label?, accepted, rejection_reason?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabelRecord {
    pub sample_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Interaction>,
    pub accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejection_reason: Option<RejectionReason>,
}

/// Corpus-level counts over the accepted pseudo-labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_samples: usize,
    pub n_unique_verbs: usize,
    pub n_unique_interactions: usize,
    pub rejection_histogram: BTreeMap<String, usize>,
}

/// Runs the full pseudo-labelling pipeline: face-count eligibility, one
/// summarizer call per eligible caption, the grammar filter, and test-set
/// dedup. Returns one record per input sample plus corpus stats.
pub fn generate_pseudo_labels(
    dataset: &[LabeledSample],
    summarizer: &dyn SummarizerBackend,
    test_set: &[LabeledSample],
    task_prefix: &str,
) -> Result<(Vec<PseudoLabelRecord>, CorpusStats), DistillError> {
    let test_captions: BTreeSet<&str> = test_set.iter().map(|s| s.caption.text()).collect();
    let test_datetimes: BTreeSet<&str> =
        test_set.iter().filter_map(|s| s.datetime_meta.as_deref()).collect();

    let mut records = Vec::with_capacity(dataset.len());
    for sample in dataset {
        records.push(label_one(
            sample,
            summarizer,
            task_prefix,
            &test_captions,
            &test_datetimes,
        )?);
    }

    let mut histogram: BTreeMap<String, usize> = BTreeMap::new();
    let mut verbs: BTreeSet<&str> = BTreeSet::new();
    let mut interactions: BTreeSet<&str> = BTreeSet::new();
    let mut accepted = 0;
    for record in &records {
        match (&record.label, record.rejection_reason) {
            (Some(label), None) => {
                accepted += 1;
                interactions.insert(label.text());
                // The grammar fixes the verb as the second token.
                if let Some(verb) = label.text().split_whitespace().nth(1) {
                    verbs.insert(verb);
                }
            }
            (_, Some(reason)) => {
                *histogram.entry(reason.key().to_string()).or_insert(0) += 1;
            }
            _ => {}
        }
    }
    let stats = CorpusStats {
        n_samples: accepted,
        n_unique_verbs: verbs.len(),
        n_unique_interactions: interactions.len(),
        rejection_histogram: histogram,
    };
    Ok((records, stats))
}

fn label_one(
    sample: &LabeledSample,
    summarizer: &dyn SummarizerBackend,
    task_prefix: &str,
    test_captions: &BTreeSet<&str>,
    test_datetimes: &BTreeSet<&str>,
) -> Result<PseudoLabelRecord, DistillError> {
    let reject = |reason, label| PseudoLabelRecord {
        sample_id: sample.id.clone(),
        label,
        accepted: false,
        rejection_reason: Some(reason),
    };
    if sample.face_count < MIN_FACES {
        return Ok(reject(RejectionReason::FaceCount, None));
    }
    let input = if task_prefix.is_empty() {
        sample.caption.text().to_string()
    } else {
        alloc::format!("{task_prefix} {}", sample.caption.text())
    };
    let output = summarizer.summarize(&input)?;
    let output = output.trim();
    let (ok, reason) = filter_pseudo_label(output);
    if !ok {
        return Ok(reject(reason.expect("rejections carry a reason"), None));
    }
    let label = Interaction::new(output).expect("grammar guarantees slots");
    if test_captions.contains(sample.caption.text()) {
        return Ok(reject(RejectionReason::DedupCaption, Some(label)));
    }
    if let Some(dt) = sample.datetime_meta.as_deref() {
        if test_datetimes.contains(dt) {
            return Ok(reject(RejectionReason::DedupDatetime, Some(label)));
        }
    }
    Ok(PseudoLabelRecord {
        sample_id: sample.id.clone(),
        label: Some(label),
        accepted: true,
        rejection_reason: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{PairWire, Provenance};
    use crate::types::{MaskedCaption, Source, Split};

    fn pair(interaction: &str, caption: &str) -> InteractionCaptionPair {
        InteractionCaptionPair {
            interaction: Interaction::new(interaction).unwrap(),
            caption: MaskedCaption::new(caption, Source::Synthetic),
            entailment: 0.9,
            provenance: Provenance::Synthetic,
            gen_seed: Some(1),
        }
    }

    fn sample(id: &str, caption: &str, faces: u32, datetime: Option<&str>) -> LabeledSample {
        LabeledSample {
            id: id.to_string(),
            image_ref: alloc::format!("img/{id}"),
            caption: MaskedCaption::new(caption, Source::WhosWaldo),
            face_count: faces,
            datetime_meta: datetime.map(str::to_string),
            label: None,
            split: Split::Train,
        }
    }

    struct CannedSummarizer(&'static str);

    impl SummarizerBackend for CannedSummarizer {
        fn fit(&mut self, _examples: &[(String, String)]) -> Result<(), BackendError> {
            Ok(())
        }

        fn summarize(&self, _input: &str) -> Result<String, BackendError> {
            Ok(self.0.to_string())
        }
    }

    #[test]
    fn training_example_uses_prefix() {
        let p = pair("[NAME] hugging [NAME]", "[NAME] hugs [NAME] at a ceremony");
        let (input, target) = make_training_example(&p, "summarize:");
        assert_eq!(input, "summarize: [NAME] hugs [NAME] at a ceremony");
        assert_eq!(target, "[NAME] hugging [NAME]");
        let (bare, _) = make_training_example(&p, "");
        assert_eq!(bare, "[NAME] hugs [NAME] at a ceremony");
    }

    #[test]
    fn folds_partition_deterministically() {
        let pairs: Vec<u32> = (0..10).collect();
        let folds = split_folds(&pairs, 2, 7).unwrap();
        assert_eq!(folds.len(), 2);
        assert_eq!(folds[0].len(), 5);
        assert_eq!(folds[1].len(), 5);
        let mut all: Vec<u32> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, pairs);
        assert_eq!(split_folds(&pairs, 2, 7).unwrap(), folds);
        assert!(split_folds(&pairs, 11, 7).is_err());
        assert!(split_folds(&pairs, 1, 7).is_err());
    }

    #[test]
    fn eligibility_needs_two_faces() {
        let data = alloc::vec![
            sample("a", "[NAME] alone", 1, None),
            sample("b", "[NAME] with [NAME]", 2, None),
            sample("c", "[NAME] among [NAME] and [NAME]", 5, None),
        ];
        let kept = select_eligible_samples(&data);
        assert_eq!(kept.iter().map(|s| s.id.as_str()).collect::<Vec<_>>(), ["b", "c"]);
    }

    #[test]
    fn label_grammar() {
        assert!(filter_pseudo_label("[NAME] shaking hands with [NAME]").0);
        assert!(filter_pseudo_label("[NAME] attending [NAME]'s book fair").0);
        assert_eq!(
            filter_pseudo_label("[NAME] posing for a photo with [NAME]").1,
            Some(RejectionReason::BannedSubstring)
        );
        assert_eq!(
            filter_pseudo_label("[NAME] and [NAME] talking").1,
            Some(RejectionReason::Format)
        );
        assert_eq!(filter_pseudo_label("a man greeting [NAME]").1, Some(RejectionReason::Format));
        assert_eq!(
            filter_pseudo_label("[NAME] greeting [NAME] and [NAME]").1,
            Some(RejectionReason::Format)
        );
        assert_eq!(filter_pseudo_label("").1, Some(RejectionReason::Format));
    }

    #[test]
    fn dedup_matches_caption_and_datetime() {
        let train = alloc::vec![
            sample("t1", "[NAME] waves to [NAME]", 2, Some("2020-01-01")),
            sample("t2", "[NAME] unique caption [NAME]", 2, Some("2021-05-05")),
            sample("t3", "[NAME] also unique [NAME]", 2, None),
        ];
        let test = alloc::vec![
            sample("x1", "[NAME] waves to [NAME]", 2, None),
            sample("x2", "[NAME] different [NAME]", 2, Some("2021-05-05")),
        ];
        let kept = dedupe_against_test(&train, &test);
        assert_eq!(kept.iter().map(|s| s.id.as_str()).collect::<Vec<_>>(), ["t3"]);
    }

    #[test]
    fn pipeline_records_rejections_and_stats() {
        let dataset = alloc::vec![
            sample("a", "[NAME] greets [NAME] warmly", 2, None),
            sample("b", "[NAME] alone", 1, None),
            sample("c", "[NAME] waves to [NAME]", 3, Some("2020-01-01")),
        ];
        let test = alloc::vec![sample("x", "[NAME] waves to [NAME]", 2, None)];
        let summarizer = CannedSummarizer("[NAME] greeting [NAME]");
        let (records, stats) =
            generate_pseudo_labels(&dataset, &summarizer, &test, "summarize:").unwrap();
        assert_eq!(records.len(), 3);
        assert!(records[0].accepted);
        assert_eq!(records[1].rejection_reason, Some(RejectionReason::FaceCount));
        assert_eq!(records[2].rejection_reason, Some(RejectionReason::DedupCaption));
        assert_eq!(stats.n_samples, 1);
        assert_eq!(stats.n_unique_verbs, 1);
        assert_eq!(stats.n_unique_interactions, 1);
        assert_eq!(stats.rejection_histogram.get("face-count"), Some(&1));
        assert_eq!(stats.rejection_histogram.get("dedup-caption"), Some(&1));
    }

    #[test]
    fn stats_ordering_invariant() {
        // unique verbs <= unique interactions <= accepted
        let dataset = alloc::vec![
            sample("a", "[NAME] c1 [NAME]", 2, None),
            sample("b", "[NAME] c2 [NAME]", 2, None),
        ];
        let summarizer = CannedSummarizer("[NAME] greeting [NAME]");
        let (_, stats) = generate_pseudo_labels(&dataset, &summarizer, &[], "summarize:").unwrap();
        assert!(stats.n_unique_verbs <= stats.n_unique_interactions);
        assert!(stats.n_unique_interactions <= stats.n_samples);
    }

    #[test]
    fn pair_wire_round_trip() {
        let p = pair("[NAME] hugging [NAME]", "[NAME] hugs [NAME]");
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"p_e\":0.9"));
        let back: InteractionCaptionPair = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        let weak: Result<InteractionCaptionPair, _> = serde_json::from_str(
            r#"{"interaction":"[NAME] x [NAME]","caption":"c","p_e":0.2,"provenance":"synthetic"}"#,
        );
        assert!(weak.is_err());
        let _ = PairWire::from(p);
    }
}
