//! The evaluation suite for interaction predictors.
//!
//! Four per-item metrics: learned textual similarity against the gold
//! interaction (`BL`), NLI entailment/contradiction of the prediction given
//! the item's caption premise (`p_e`/`p_c`), and cosine similarity between
//! predicted and gold verbs in word-embedding space (`sim`). Beam sets are
//! reduced by best-of-the-first-k per metric; sources aggregate by mean and
//! the cross-source figure is the unweighted macro mean. Situation-recognition
//! benchmarks use the verb metric only, reported overall, per verb, and per
//! split.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{
    Beam, BackendError, EmbeddingTable, NliBackend, ParserBackend, TextSimilarityBackend,
};
use crate::inflect::{to_present_continuous, InflectError};
use crate::names::NAME_TOKEN;
use crate::types::{Interaction, LabeledSample, Source, Split};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("prediction text is empty")]
    EmptyPrediction,
    #[error("premise text is empty")]
    EmptyPremise,
    #[error("k={k} out of range for {len} scores")]
    KRange { k: usize, len: usize },
    #[error("no predictions for samples: {0:?}")]
    MissingPredictions(Vec<String>),
    #[error("sample {id}: {found} beams but k up to {k} requested")]
    NotEnoughBeams { id: String, k: usize, found: usize },
    #[error("sample {0} has no gold label")]
    MissingLabel(String),
    #[error("parsed verb mode requires a parser backend")]
    NoParser,
    #[error("k list must be non-empty")]
    EmptyKList,
    #[error(transparent)]
    Inflect(#[from] InflectError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Replaces `[NAME]` slots with "person" for learned similarity scoring.
pub fn normalize_for_similarity(text: &str) -> String {
    text.replace(NAME_TOKEN, "person")
}

/// Replaces `[NAME]` slots with an underscore for NLI scoring.
pub fn normalize_for_nli(text: &str) -> String {
    text.replace(NAME_TOKEN, "_")
}

/// Entailment and contradiction of `prediction` given `premise_caption`,
/// both NLI-normalized first.
pub fn nli_groundedness(
    premise_caption: &str,
    prediction: &str,
    nli: &dyn NliBackend,
) -> Result<(f64, f64), MetricError> {
    if prediction.trim().is_empty() {
        return Err(MetricError::EmptyPrediction);
    }
    if premise_caption.trim().is_empty() {
        return Err(MetricError::EmptyPremise);
    }
    let scores = nli.score(&normalize_for_nli(premise_caption), &normalize_for_nli(prediction))?;
    Ok((scores.entailment, scores.contradiction))
}

/// How to find the verb of a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerbMode {
    /// The first non-`[NAME]` word; for predictions in the label grammar.
    SlotFormat,
    /// The first verb lemma per a parser backend, inflected to "-ing".
    Parsed,
}

fn word_core(token: &str) -> &str {
    token.trim_matches(|c: char| !c.is_alphanumeric())
}

/// Extracts the prediction's verb, or `None` when there is none.
pub fn extract_verb(
    prediction: &str,
    mode: VerbMode,
    parser: Option<&dyn ParserBackend>,
) -> Result<Option<String>, MetricError> {
    match mode {
        VerbMode::SlotFormat => Ok(prediction
            .split_whitespace()
            .filter(|t| !t.contains(NAME_TOKEN))
            .map(word_core)
            .find(|c| !c.is_empty())
            .map(str::to_string)),
        VerbMode::Parsed => {
            let parser = parser.ok_or(MetricError::NoParser)?;
            let parse = parser.parse(prediction)?;
            let verb = parse.tokens().iter().find(|t| t.pos == "VERB");
            match verb {
                Some(token) => Ok(Some(to_present_continuous(&token.lemma)?)),
                None => Ok(None),
            }
        }
    }
}

/// Cosine similarity of the two verbs' embeddings. A missing verb or an
/// out-of-vocabulary word maps to the zero vector, giving 0.0; identical
/// vectors give exactly 1.0.
pub fn verb_similarity(
    pred_verb: Option<&str>,
    gold_verb: &str,
    embeddings: &dyn EmbeddingTable,
) -> f64 {
    let lookup = |word: &str| {
        let core = word_core(word).to_lowercase();
        if core.is_empty() {
            None
        } else {
            embeddings.lookup(&core)
        }
    };
    let Some(pred) = pred_verb.and_then(lookup) else { return 0.0 };
    let Some(gold) = lookup(gold_verb) else { return 0.0 };
    if pred == gold {
        let zero = pred.iter().all(|v| *v == 0.0);
        return if zero { 0.0 } else { 1.0 };
    }
    cosine(&pred, &gold)
}

fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let mut dot = 0.0f64;
    let mut norm_a = 0.0f64;
    let mut norm_b = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        dot += f64::from(*x) * f64::from(*y);
        norm_a += f64::from(*x) * f64::from(*x);
        norm_b += f64::from(*y) * f64::from(*y);
    }
    if norm_a == 0.0 || norm_b == 0.0 {
        return 0.0;
    }
    dot / (libm::sqrt(norm_a) * libm::sqrt(norm_b))
}

/// Whether larger or smaller scores win.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    HigherBetter,
    LowerBetter,
}

/// Best score among the first `k` beams: max or min by direction.
pub fn topk_aggregate(scores: &[f64], k: usize, direction: Direction) -> Result<f64, MetricError> {
    if k == 0 || k > scores.len() {
        return Err(MetricError::KRange { k, len: scores.len() });
    }
    let prefix = &scores[..k];
    let best = match direction {
        Direction::HigherBetter => prefix.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Direction::LowerBetter => prefix.iter().copied().fold(f64::INFINITY, f64::min),
    };
    Ok(best)
}

/// Wraps a categorical verb prediction in the two evaluation templates,
/// `_ {V-ing} _` and `_ {V-ing} with _`; metrics take the per-item best over
/// both.
pub fn wrap_categorical_verb(verb: &str) -> Result<(String, String), InflectError> {
    let ing = to_present_continuous(verb)?;
    Ok((format!("_ {ing} _"), format!("_ {ing} with _")))
}

/// Prediction diversity counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiversityStats {
    /// Unique prediction strings.
    pub n_i: usize,
    /// Unique extracted verbs (predictions without a verb contribute none).
    pub n_v: usize,
}

/// Counts unique prediction texts and unique predicted verbs.
pub fn diversity(
    predictions: &[String],
    mode: VerbMode,
    parser: Option<&dyn ParserBackend>,
) -> Result<DiversityStats, MetricError> {
    let mut texts: alloc::collections::BTreeSet<&str> = Default::default();
    let mut verbs: alloc::collections::BTreeSet<String> = Default::default();
    for prediction in predictions {
        let fresh = texts.insert(prediction.as_str());
        if fresh {
            if let Some(verb) = extract_verb(prediction, mode, parser)? {
                verbs.insert(verb);
            }
        }
    }
    Ok(DiversityStats { n_i: texts.len(), n_v: verbs.len() })
}

/// One prediction record: the beam set decoded for a sample.
/// JSONL schema: `{sample_id, beams: [{text, score}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub sample_id: String,
    pub beams: Vec<Beam>,
}

/// Evaluation options shared by both benchmark modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub k_list: Vec<usize>,
    pub verb_mode: VerbMode,
    /// Treat beam texts as categorical verbs wrapped in the two templates.
    pub wrap_verbs: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { k_list: alloc::vec![1, 5, 8], verb_mode: VerbMode::SlotFormat, wrap_verbs: false }
    }
}

/// Backends used by the evaluation suite.
pub struct MetricBackends<'a> {
    pub similarity: &'a dyn TextSimilarityBackend,
    pub nli: &'a dyn NliBackend,
    pub embeddings: &'a dyn EmbeddingTable,
    pub parser: Option<&'a dyn ParserBackend>,
}

/// One curated-benchmark item ready for scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct WendaItem {
    pub id: String,
    pub source: Source,
    /// NLI premise: the item's caption (first reference for multi-reference
    /// sources).
    pub premise: String,
    pub gold: Interaction,
}

/// Converts ingested benchmark samples into scoring items; every sample must
/// carry a gold label.
pub fn wenda_items(samples: &[LabeledSample]) -> Result<Vec<WendaItem>, MetricError> {
    samples
        .iter()
        .map(|sample| {
            let gold = sample
                .label
                .clone()
                .ok_or_else(|| MetricError::MissingLabel(sample.id.clone()))?;
            Ok(WendaItem {
                id: sample.id.clone(),
                source: sample.caption.source(),
                premise: sample.caption.text().to_string(),
                gold,
            })
        })
        .collect()
}

/// Per-item metric values at one k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemMetrics {
    pub sample_id: String,
    pub source: Source,
    pub bleurt: f64,
    pub p_e: f64,
    pub p_c: f64,
    pub sim: f64,
}

/// Mean metric values over a group of items.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub bleurt: f64,
    pub p_e: f64,
    pub p_c: f64,
    pub sim: f64,
    pub n: usize,
}

/// Metrics at one k: per item, per source, and the macro mean across sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub k: usize,
    pub per_item: Vec<ItemMetrics>,
    pub per_source: BTreeMap<Source, MetricMeans>,
    /// Unweighted mean of the per-source means.
    pub overall: MetricMeans,
}

/// Full curated-benchmark evaluation output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WendaEvaluation {
    pub options: EvalOptions,
    pub reports: Vec<MetricReport>,
    /// Diversity over top-1 beam texts.
    pub diversity: DiversityStats,
}

/// Raw per-beam scores for one item.
struct BeamScores {
    bleurt: Vec<f64>,
    p_e: Vec<f64>,
    p_c: Vec<f64>,
    sim: Vec<f64>,
}

/// Evaluates beam predictions against the curated benchmark.
pub fn evaluate_wenda(
    items: &[WendaItem],
    predictions: &[Prediction],
    backends: &MetricBackends<'_>,
    options: &EvalOptions,
) -> Result<WendaEvaluation, MetricError> {
    let k_max = check_options(options)?;
    let by_id = index_predictions(items.iter().map(|i| i.id.as_str()), predictions, k_max)?;

    let mut scored: Vec<(&WendaItem, BeamScores)> = Vec::with_capacity(items.len());
    for item in items {
        let beams = by_id[item.id.as_str()];
        let gold_verb = extract_verb(item.gold.text(), VerbMode::SlotFormat, None)?;
        let gold_verb = gold_verb.ok_or_else(|| MetricError::MissingLabel(item.id.clone()))?;
        let reference = normalize_for_similarity(item.gold.text());

        let mut scores =
            BeamScores { bleurt: Vec::new(), p_e: Vec::new(), p_c: Vec::new(), sim: Vec::new() };
        for beam in beams {
            let variants = candidate_variants(&beam.text, options)?;
            let mut best_bl = f64::NEG_INFINITY;
            let mut best_pe = f64::NEG_INFINITY;
            let mut best_pc = f64::INFINITY;
            let mut best_sim = f64::NEG_INFINITY;
            for variant in &variants {
                let bl = backends
                    .similarity
                    .score(&normalize_for_similarity(variant), &reference)?;
                let (p_e, p_c) = nli_groundedness(&item.premise, variant, backends.nli)?;
                let verb = extract_verb(variant, options.verb_mode, backends.parser)?;
                let sim = verb_similarity(verb.as_deref(), &gold_verb, backends.embeddings);
                best_bl = best_bl.max(bl);
                best_pe = best_pe.max(p_e);
                best_pc = best_pc.min(p_c);
                best_sim = best_sim.max(sim);
            }
            scores.bleurt.push(best_bl);
            scores.p_e.push(best_pe);
            scores.p_c.push(best_pc);
            scores.sim.push(best_sim);
        }
        scored.push((item, scores));
    }

    let mut reports = Vec::with_capacity(options.k_list.len());
    for &k in &options.k_list {
        let mut per_item = Vec::with_capacity(scored.len());
        for (item, scores) in &scored {
            per_item.push(ItemMetrics {
                sample_id: item.id.clone(),
                source: item.source,
                bleurt: topk_aggregate(&scores.bleurt, k, Direction::HigherBetter)?,
                p_e: topk_aggregate(&scores.p_e, k, Direction::HigherBetter)?,
                p_c: topk_aggregate(&scores.p_c, k, Direction::LowerBetter)?,
                sim: topk_aggregate(&scores.sim, k, Direction::HigherBetter)?,
            });
        }
        let per_source = source_means(&per_item);
        let overall = macro_mean(&per_source, per_item.len());
        reports.push(MetricReport { k, per_item, per_source, overall });
    }

    let top1: Vec<String> = items
        .iter()
        .map(|item| by_id[item.id.as_str()][0].text.clone())
        .collect();
    let diversity = diversity(&top1, options.verb_mode, backends.parser)?;
    Ok(WendaEvaluation { options: options.clone(), reports, diversity })
}

fn check_options(options: &EvalOptions) -> Result<usize, MetricError> {
    options
        .k_list
        .iter()
        .copied()
        .max()
        .ok_or(MetricError::EmptyKList)
}

/// Indexes predictions by sample id, verifying that every item is covered
/// with at least `k_max` beams.
fn index_predictions<'a, 'p>(
    ids: impl Iterator<Item = &'a str>,
    predictions: &'p [Prediction],
    k_max: usize,
) -> Result<BTreeMap<&'p str, &'p [Beam]>, MetricError> {
    let mut by_id: BTreeMap<&str, &[Beam]> = BTreeMap::new();
    for prediction in predictions {
        by_id.insert(prediction.sample_id.as_str(), &prediction.beams);
    }
    let mut missing = Vec::new();
    for id in ids {
        match by_id.get(id) {
            None => missing.push(id.to_string()),
            Some(beams) if beams.len() < k_max => {
                return Err(MetricError::NotEnoughBeams {
                    id: id.to_string(),
                    k: k_max,
                    found: beams.len(),
                });
            }
            Some(beams) if beams.is_empty() => {
                missing.push(id.to_string());
            }
            _ => {}
        }
    }
    if !missing.is_empty() {
        return Err(MetricError::MissingPredictions(missing));
    }
    Ok(by_id)
}

/// The candidate texts scored for one beam: the beam itself, or its two
/// template wrappings in categorical-verb mode.
fn candidate_variants(beam_text: &str, options: &EvalOptions) -> Result<Vec<String>, MetricError> {
    if options.wrap_verbs {
        let (p1, p2) = wrap_categorical_verb(beam_text.trim())?;
        Ok(alloc::vec![p1, p2])
    } else {
        Ok(alloc::vec![beam_text.to_string()])
    }
}

fn source_means(per_item: &[ItemMetrics]) -> BTreeMap<Source, MetricMeans> {
    let mut sums: BTreeMap<Source, (f64, f64, f64, f64, usize)> = BTreeMap::new();
    for item in per_item {
        let entry = sums.entry(item.source).or_insert((0.0, 0.0, 0.0, 0.0, 0));
        entry.0 += item.bleurt;
        entry.1 += item.p_e;
        entry.2 += item.p_c;
        entry.3 += item.sim;
        entry.4 += 1;
    }
    sums.into_iter()
        .map(|(source, (bl, pe, pc, sim, n))| {
            let d = n as f64;
            (
                source,
                MetricMeans { bleurt: bl / d, p_e: pe / d, p_c: pc / d, sim: sim / d, n },
            )
        })
        .collect()
}

fn macro_mean(per_source: &BTreeMap<Source, MetricMeans>, total: usize) -> MetricMeans {
    let count = per_source.len().max(1) as f64;
    let mut overall = MetricMeans { bleurt: 0.0, p_e: 0.0, p_c: 0.0, sim: 0.0, n: total };
    for means in per_source.values() {
        overall.bleurt += means.bleurt / count;
        overall.p_e += means.p_e / count;
        overall.p_c += means.p_c / count;
        overall.sim += means.sim / count;
    }
    overall
}

/// One situation-recognition benchmark item: gold is a categorical "-ing"
/// verb.
#[derive(Debug, Clone, PartialEq)]
pub struct ImSituItem {
    pub id: String,
    pub verb: String,
    pub split: Split,
}

/// Verb-similarity metrics at one k for the situation-recognition benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImSituReport {
    pub k: usize,
    pub per_item: Vec<(String, f64)>,
    pub overall_sim: f64,
    /// Mean similarity per gold verb with its item count, by descending count.
    pub per_verb: Vec<VerbMean>,
    pub per_split: BTreeMap<Split, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerbMean {
    pub verb: String,
    pub sim: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImSituEvaluation {
    pub options: EvalOptions,
    pub reports: Vec<ImSituReport>,
    pub diversity: DiversityStats,
}

/// Evaluates beam predictions against categorical verb labels (`sim` only).
pub fn evaluate_imsitu(
    items: &[ImSituItem],
    predictions: &[Prediction],
    backends: &MetricBackends<'_>,
    options: &EvalOptions,
) -> Result<ImSituEvaluation, MetricError> {
    let k_max = check_options(options)?;
    let by_id = index_predictions(items.iter().map(|i| i.id.as_str()), predictions, k_max)?;

    let mut scored: Vec<(&ImSituItem, Vec<f64>)> = Vec::with_capacity(items.len());
    for item in items {
        let beams = by_id[item.id.as_str()];
        let mut sims = Vec::with_capacity(beams.len());
        for beam in beams {
            let variants = candidate_variants(&beam.text, options)?;
            let mut best = f64::NEG_INFINITY;
            for variant in &variants {
                let verb = extract_verb(variant, options.verb_mode, backends.parser)?;
                best = best.max(verb_similarity(verb.as_deref(), &item.verb, backends.embeddings));
            }
            sims.push(best);
        }
        scored.push((item, sims));
    }

    let mut reports = Vec::with_capacity(options.k_list.len());
    for &k in &options.k_list {
        let mut per_item = Vec::with_capacity(scored.len());
        let mut verb_sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
        let mut split_sums: BTreeMap<Split, (f64, usize)> = BTreeMap::new();
        let mut total = 0.0;
        for (item, sims) in &scored {
            let sim = topk_aggregate(sims, k, Direction::HigherBetter)?;
            per_item.push((item.id.clone(), sim));
            total += sim;
            let verb_entry = verb_sums.entry(item.verb.as_str()).or_insert((0.0, 0));
            verb_entry.0 += sim;
            verb_entry.1 += 1;
            let split_entry = split_sums.entry(item.split).or_insert((0.0, 0));
            split_entry.0 += sim;
            split_entry.1 += 1;
        }
        let mut per_verb: Vec<VerbMean> = verb_sums
            .into_iter()
            .map(|(verb, (sum, count))| VerbMean {
                verb: verb.to_string(),
                sim: sum / count as f64,
                count,
            })
            .collect();
        per_verb.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.verb.cmp(&b.verb)));
        let per_split = split_sums
            .into_iter()
            .map(|(split, (sum, count))| (split, sum / count as f64))
            .collect();
        let overall_sim = if scored.is_empty() { 0.0 } else { total / scored.len() as f64 };
        reports.push(ImSituReport { k, per_item, overall_sim, per_verb, per_split });
    }

    let top1: Vec<String> = items
        .iter()
        .map(|item| by_id[item.id.as_str()][0].text.clone())
        .collect();
    let diversity = diversity(&top1, options.verb_mode, backends.parser)?;
    Ok(ImSituEvaluation { options: options.clone(), reports, diversity })
}

/// Formats labeled curated-benchmark evaluations as @k blocks with the
/// BL / p_e / p_c / sim columns, one row per method and source.
pub fn format_wenda_tables(rows: &[(String, &WendaEvaluation)]) -> String {
    let mut out = String::new();
    let k_list: Vec<usize> = rows
        .first()
        .map(|(_, eval)| eval.options.k_list.clone())
        .unwrap_or_default();
    out.push_str(&format!(
        "{:<28} {:>8} {:>8} {:>8} {:>8}\n",
        "Method / Source", "BL^", "p_e^", "p_c_v", "sim^"
    ));
    for &k in &k_list {
        out.push_str(&format!("Results@{k}\n"));
        for (label, eval) in rows {
            let Some(report) = eval.reports.iter().find(|r| r.k == k) else { continue };
            for (source, means) in &report.per_source {
                out.push_str(&format!(
                    "  {:<26} {:>8.3} {:>8.3} {:>8.3} {:>8.3}\n",
                    format!("{label} [{source}]"),
                    means.bleurt,
                    means.p_e,
                    means.p_c,
                    means.sim
                ));
            }
            out.push_str(&format!(
                "  {:<26} {:>8.3} {:>8.3} {:>8.3} {:>8.3}\n",
                format!("{label} [macro]"),
                report.overall.bleurt,
                report.overall.p_e,
                report.overall.p_c,
                report.overall.sim
            ));
        }
    }
    if let Some((label, eval)) = rows.first() {
        let _ = label;
        out.push_str(&format!(
            "diversity: n_i={} n_v={}\n",
            eval.diversity.n_i, eval.diversity.n_v
        ));
    }
    out
}

/// Formats situation-recognition evaluations: average similarity plus the
/// most common verbs as columns, and a per-split block.
pub fn format_imsitu_tables(rows: &[(String, &ImSituEvaluation)], verb_columns: usize) -> String {
    let mut out = String::new();
    let Some((_, first)) = rows.first() else { return out };
    let verbs: Vec<&str> = first
        .reports
        .first()
        .map(|r| r.per_verb.iter().take(verb_columns).map(|v| v.verb.as_str()).collect())
        .unwrap_or_default();
    out.push_str(&format!("{:<24} {:>9}", "Method", "avg sim"));
    for verb in &verbs {
        out.push_str(&format!(" {verb:>14}"));
    }
    out.push('\n');
    for &k in &first.options.k_list {
        out.push_str(&format!("Results@{k}\n"));
        for (label, eval) in rows {
            let Some(report) = eval.reports.iter().find(|r| r.k == k) else { continue };
            out.push_str(&format!("  {label:<22} {:>9.3}", report.overall_sim));
            for verb in &verbs {
                let sim = report
                    .per_verb
                    .iter()
                    .find(|v| v.verb == *verb)
                    .map(|v| v.sim)
                    .unwrap_or(0.0);
                out.push_str(&format!(" {sim:>14.3}"));
            }
            out.push('\n');
        }
    }
    out.push_str("Per split\n");
    for (label, eval) in rows {
        if let Some(report) = eval.reports.first() {
            for (split, sim) in &report.per_split {
                out.push_str(&format!("  {label:<22} {split:<6} {sim:>9.3}\n"));
            }
        }
    }
    out
}
