//! Benchmark construction.
//!
//! Two benchmarks feed the evaluation suite: a manually curated test set of
//! image-interaction pairs ingested from three caption sources, and a subset
//! of a situation-recognition corpus selected for human-human interactions by
//! person detections, NLI-classified human arguments, a banned-verb list, and
//! per-verb image support.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, NliBackend};
use crate::distill::filter_pseudo_label;
use crate::types::{Interaction, LabeledSample, MaskedCaption, Source, Split, TypeError};

/// Verbs with negative or inappropriate connotations, excluded from built
/// benchmark subsets. Also shipped as a data file by the pipeline crate.
pub const BANNED_VERBS: &[&str] = &[
    "ailing", "apprehending", "arresting", "attacking", "bandaging", "begging", "biting",
    "bothering", "brawling", "burning", "clawing", "complaining", "confronting", "crying",
    "destroying", "detaining", "disciplining", "dissecting", "exterminating", "frisking",
    "frowning", "gambling", "grieving", "grimacing", "handcuffing", "hanging", "hitting",
    "hunting", "interrogating", "misbehaving", "mourning", "panhandling", "peeing", "pinching",
    "poking", "pooing", "pouting", "punching", "restraining", "scolding", "shooting", "slapping",
    "spanking", "spearing", "spying", "stinging", "striking", "stripping", "subduing",
    "urinating", "weeping", "whipping",
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BenchError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("invalid gold labels: {0:?}")]
    InvalidGoldLabels(Vec<String>),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("record {0}: needs at least one caption")]
    NoCaptions(String),
}

/// One situation-recognition sample: a categorical verb plus its semantic
/// frame argument texts and a precomputed person-detection count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SituSample {
    pub id: String,
    pub image_ref: String,
    pub verb: String,
    pub arguments: Vec<String>,
    pub person_detections: u32,
    pub split: Split,
}

/// Thresholds for the benchmark subset builder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    /// Minimum person detections per image.
    pub min_persons: u32,
    /// Minimum arguments classified as human per sample.
    pub min_human_args: usize,
    /// Entailment threshold for the human-argument classifier.
    pub nli_threshold: f64,
    pub banned_verbs: BTreeSet<String>,
    /// Minimum images supporting a verb for it to stay in the subset.
    pub min_verb_support: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            min_persons: 2,
            min_human_args: 2,
            nli_threshold: 0.5,
            banned_verbs: BANNED_VERBS.iter().map(|v| v.to_string()).collect(),
            min_verb_support: 100,
        }
    }
}

/// Memoizing human/non-human classifier over argument texts.
///
/// Asks the NLI backend whether "This is a {arg}." entails "This is a human."
/// and caches the verdict per unique argument string.
pub struct HumanArgClassifier<'a> {
    nli: &'a dyn NliBackend,
    threshold: f64,
    cache: BTreeMap<String, bool>,
    backend_calls: usize,
}

impl<'a> HumanArgClassifier<'a> {
    pub fn new(nli: &'a dyn NliBackend, threshold: f64) -> Self {
        Self { nli, threshold, cache: BTreeMap::new(), backend_calls: 0 }
    }

    /// True when the entailment probability exceeds the threshold.
    pub fn classify(&mut self, arg: &str) -> Result<bool, BackendError> {
        if let Some(&verdict) = self.cache.get(arg) {
            return Ok(verdict);
        }
        let premise = alloc::format!("This is a {arg}.");
        let scores = self.nli.score(&premise, "This is a human.")?;
        self.backend_calls += 1;
        let verdict = scores.entailment > self.threshold;
        self.cache.insert(arg.to_string(), verdict);
        Ok(verdict)
    }

    /// Number of NLI calls actually issued (cache misses).
    pub fn backend_calls(&self) -> usize {
        self.backend_calls
    }
}

/// Convenience one-shot wrapper over [`HumanArgClassifier`].
pub fn classify_human_argument(
    arg: &str,
    nli: &dyn NliBackend,
    threshold: f64,
) -> Result<bool, BackendError> {
    HumanArgClassifier::new(nli, threshold).classify(arg)
}

/// Per-verb image support within the filtered pool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbSupport {
    pub verb: String,
    pub support: usize,
}

/// Builds the human-human interaction subset of a situation-recognition
/// corpus.
///
/// A sample enters the pool when it has enough person detections, enough
/// human-classified arguments, and a verb outside the banned list. Per-verb
/// support is computed on that pool, and only verbs supported by at least
/// `min_verb_support` images survive into the subset. The support table
/// covers the whole pool, sorted by descending support (ties alphabetical).
pub fn build_imsitu_hhi(
    samples: &[SituSample],
    cfg: &BenchConfig,
    classifier: &mut HumanArgClassifier<'_>,
) -> Result<(Vec<SituSample>, Vec<VerbSupport>), BenchError> {
    let mut pool: Vec<&SituSample> = Vec::new();
    for sample in samples {
        if sample.person_detections < cfg.min_persons {
            continue;
        }
        if cfg.banned_verbs.contains(&sample.verb) {
            continue;
        }
        let mut human_args = 0;
        for arg in &sample.arguments {
            if classifier.classify(arg)? {
                human_args += 1;
            }
        }
        if human_args >= cfg.min_human_args {
            pool.push(sample);
        }
    }

    let mut support: BTreeMap<&str, usize> = BTreeMap::new();
    for sample in &pool {
        *support.entry(sample.verb.as_str()).or_insert(0) += 1;
    }
    let mut table: Vec<VerbSupport> = support
        .iter()
        .map(|(verb, support)| VerbSupport { verb: verb.to_string(), support: *support })
        .collect();
    table.sort_by(|a, b| b.support.cmp(&a.support).then_with(|| a.verb.cmp(&b.verb)));

    let subset: Vec<SituSample> = pool
        .into_iter()
        .filter(|s| support[s.verb.as_str()] >= cfg.min_verb_support)
        .cloned()
        .collect();
    Ok((subset, table))
}

/// One curated test-set record before ingestion.
/// JSONL schema: `{id, image_ref, source, captions, interaction, datetime_meta?}`.
/// Multi-reference items carry all captions; the first one becomes the NLI
/// premise downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WendaRecord {
    pub id: String,
    pub image_ref: String,
    pub source: Source,
    pub captions: Vec<String>,
    pub interaction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datetime_meta: Option<String>,
}

/// Validates and ingests curated test records: every gold label must match
/// the pseudo-label grammar. Returns the samples plus per-source counts.
pub fn ingest_wenda(
    records: &[WendaRecord],
) -> Result<(Vec<LabeledSample>, BTreeMap<Source, usize>), BenchError> {
    let offenders: Vec<String> = records
        .iter()
        .filter(|r| !filter_pseudo_label(&r.interaction).0)
        .map(|r| alloc::format!("{}: {:?}", r.id, r.interaction))
        .collect();
    if !offenders.is_empty() {
        return Err(BenchError::InvalidGoldLabels(offenders));
    }
    let mut samples = Vec::with_capacity(records.len());
    let mut by_source: BTreeMap<Source, usize> = BTreeMap::new();
    for record in records {
        let Some(first_caption) = record.captions.first() else {
            return Err(BenchError::NoCaptions(record.id.clone()));
        };
        samples.push(LabeledSample {
            id: record.id.clone(),
            image_ref: record.image_ref.clone(),
            caption: MaskedCaption::try_new(first_caption.clone(), record.source)?,
            face_count: 2,
            datetime_meta: record.datetime_meta.clone(),
            label: Some(Interaction::new(record.interaction.clone())?),
            split: Split::Test,
        });
        *by_source.entry(record.source).or_insert(0) += 1;
    }
    Ok((samples, by_source))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::NliScores;

    /// NLI stub: arguments listed as human entail humanity with p=0.9.
    struct ListNli {
        humans: Vec<&'static str>,
        calls: core::cell::RefCell<usize>,
    }

    impl NliBackend for ListNli {
        fn score(&self, premise: &str, _hypothesis: &str) -> Result<NliScores, BackendError> {
            *self.calls.borrow_mut() += 1;
            let is_human = self.humans.iter().any(|h| premise.contains(h));
            let entailment = if is_human { 0.9 } else { 0.1 };
            Ok(NliScores {
                entailment,
                contradiction: (1.0 - entailment) / 2.0,
                neutral: (1.0 - entailment) / 2.0,
            })
        }
    }

    fn situ(id: &str, verb: &str, args: &[&str], persons: u32) -> SituSample {
        SituSample {
            id: id.to_string(),
            image_ref: alloc::format!("img/{id}"),
            verb: verb.to_string(),
            arguments: args.iter().map(|a| a.to_string()).collect(),
            person_detections: persons,
            split: Split::Train,
        }
    }

    #[test]
    fn classifier_memoizes() {
        let nli = ListNli { humans: alloc::vec!["friend"], calls: Default::default() };
        let mut classifier = HumanArgClassifier::new(&nli, 0.5);
        assert!(classifier.classify("friend").unwrap());
        assert!(classifier.classify("friend").unwrap());
        assert!(!classifier.classify("flamingo plant").unwrap());
        assert_eq!(classifier.backend_calls(), 2);
        assert_eq!(*nli.calls.borrow(), 2);
    }

    #[test]
    fn builder_applies_all_filters() {
        let nli = ListNli { humans: alloc::vec!["friend", "teacher"], calls: Default::default() };
        let mut classifier = HumanArgClassifier::new(&nli, 0.5);
        let samples = alloc::vec![
            situ("keep1", "teaching", &["teacher", "friend"], 3),
            situ("keep2", "teaching", &["friend", "teacher", "desk"], 2),
            situ("few-persons", "teaching", &["teacher", "friend"], 1),
            situ("few-humans", "teaching", &["friend", "desk"], 2),
            situ("banned", "hitting", &["friend", "teacher"], 2),
            situ("low-support", "waving", &["friend", "teacher"], 2),
        ];
        let cfg = BenchConfig { min_verb_support: 2, ..BenchConfig::default() };
        let (subset, table) = build_imsitu_hhi(&samples, &cfg, &mut classifier).unwrap();
        let ids: Vec<&str> = subset.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["keep1", "keep2"]);
        assert_eq!(
            table,
            alloc::vec![
                VerbSupport { verb: "teaching".to_string(), support: 2 },
                VerbSupport { verb: "waving".to_string(), support: 1 },
            ]
        );
    }

    #[test]
    fn builder_empty_input() {
        let nli = ListNli { humans: alloc::vec![], calls: Default::default() };
        let mut classifier = HumanArgClassifier::new(&nli, 0.5);
        let (subset, table) = build_imsitu_hhi(&[], &BenchConfig::default(), &mut classifier).unwrap();
        assert!(subset.is_empty());
        assert!(table.is_empty());
    }

    #[test]
    fn wenda_ingest_validates_gold_labels() {
        let good = WendaRecord {
            id: "w1".to_string(),
            image_ref: "img/w1".to_string(),
            source: Source::Coco,
            captions: alloc::vec!["two people shake hands".to_string(), "alt ref".to_string()],
            interaction: "[NAME] shaking hands with [NAME]".to_string(),
            datetime_meta: None,
        };
        let (samples, by_source) = ingest_wenda(&[good.clone()]).unwrap();
        assert_eq!(samples[0].caption.text(), "two people shake hands");
        assert_eq!(by_source.get(&Source::Coco), Some(&1));

        let bad = WendaRecord {
            interaction: "[NAME] and [NAME] talking".to_string(),
            ..good
        };
        match ingest_wenda(&[bad]).unwrap_err() {
            BenchError::InvalidGoldLabels(offenders) => assert_eq!(offenders.len(), 1),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
