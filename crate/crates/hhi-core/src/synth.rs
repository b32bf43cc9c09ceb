//! Synthetic interaction and interaction-caption pair generation.
//!
//! Novel interaction texts are generated by continuing a prompt of ten
//! name-filled seed interactions; generated lines pass a surface filter
//! (expected names in order, lowercase elsewhere, an "-ing" word, no dangling
//! article). Interaction-caption pairs are generated from a few-shot prompt of
//! `Caption of image showing {I}` / `{C}` line pairs; generated captions must
//! mention the target names and entail the target interaction, which is then
//! post-processed into the canonical two-slot form.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, NliBackend, ParserBackend, TextGeneratorBackend};
use crate::names::{
    count_slots, fill_text, NameCursor, NameError, NamePool, DEFAULT_NAME_LEXICON, NAME_TOKEN,
};
use crate::parse::DependencyParse;
use crate::types::{Interaction, MaskedCaption, Source, TypeError};

/// Few-shot example count for both prompt builders.
pub const PROMPT_SHOTS: usize = 10;

/// Substrings that disqualify a generated interaction: common generation
/// artifacts that describe the medium rather than an interaction.
pub const PAIR_BANNED_SUBSTRINGS: &[&str] = &["photo", "image", "picture", "in this", "In this"];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("expected exactly {expected} seeds, found {found}")]
    SeedCount { expected: usize, found: usize },
    #[error("prompt needs at least one example pair")]
    NoExamples,
    #[error("fewer example pairs ({available}) than prompt shots ({shots})")]
    NotEnoughExamples { available: usize, shots: usize },
    #[error(transparent)]
    Name(#[from] NameError),
    #[error("invalid generation params: {0}")]
    BadParams(&'static str),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Decoding parameters passed to the text generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    /// Nucleus sampling mass in (0, 1].
    pub nucleus_p: f64,
    pub temperature: f64,
    /// Size of n-grams the generator must not repeat; 0 disables.
    pub no_repeat_ngram: usize,
    pub max_new_tokens: usize,
    /// Generation stops when this string is emitted.
    pub stop: String,
    pub seed: u64,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            nucleus_p: 0.95,
            temperature: 1.0,
            no_repeat_ngram: 3,
            max_new_tokens: 200,
            stop: "\n".to_string(),
            seed: 0,
        }
    }
}

impl GenerationParams {
    /// Pair-generation defaults (lower temperature than interaction generation).
    pub fn for_pair_generation(seed: u64) -> Self {
        Self { temperature: 0.7, seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.nucleus_p > 0.0 && self.nucleus_p <= 1.0) {
            return Err(SynthError::BadParams("nucleus_p must lie in (0, 1]"));
        }
        if self.temperature <= 0.0 {
            return Err(SynthError::BadParams("temperature must be positive"));
        }
        if self.max_new_tokens == 0 {
            return Err(SynthError::BadParams("max_new_tokens must be positive"));
        }
        Ok(())
    }
}

/// Where a training pair came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    #[serde(rename = "whos-waldo-seed")]
    WhosWaldoSeed,
    #[serde(rename = "synthetic")]
    Synthetic,
}

/// An interaction paired with a caption that entails it; the unit the student
/// summarizer is trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PairWire", into = "PairWire")]
pub struct InteractionCaptionPair {
    pub interaction: Interaction,
    pub caption: MaskedCaption,
    /// Entailment probability caption => interaction at filter time. Seed
    /// pairs taken verbatim from the corpus carry 1.0.
    pub entailment: f64,
    pub provenance: Provenance,
    /// Generator seed for synthetic pairs.
    pub gen_seed: Option<u64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum PairError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("entailment {0} outside [0, 1]")]
    EntailmentRange(f64),
    #[error("synthetic pair requires entailment > 0.5, got {0}")]
    WeakEntailment(f64),
}

impl InteractionCaptionPair {
    pub fn validate(&self) -> Result<(), PairError> {
        if !(0.0..=1.0).contains(&self.entailment) {
            return Err(PairError::EntailmentRange(self.entailment));
        }
        if self.provenance == Provenance::Synthetic && self.entailment <= 0.5 {
            return Err(PairError::WeakEntailment(self.entailment));
        }
        Ok(())
    }
}

/// JSONL schema: `{interaction, caption, p_e, provenance, gen_seed?}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairWire {
    pub interaction: String,
    pub caption: String,
    pub p_e: f64,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen_seed: Option<u64>,
}

impl TryFrom<PairWire> for InteractionCaptionPair {
    type Error = PairError;

    fn try_from(wire: PairWire) -> Result<Self, Self::Error> {
        let source = match wire.provenance {
            Provenance::WhosWaldoSeed => Source::WhosWaldo,
            Provenance::Synthetic => Source::Synthetic,
        };
        let pair = Self {
            interaction: Interaction::new(wire.interaction)?,
            caption: MaskedCaption::try_new(wire.caption, source)?,
            entailment: wire.p_e,
            provenance: wire.provenance,
            gen_seed: wire.gen_seed,
        };
        pair.validate()?;
        Ok(pair)
    }
}

impl From<InteractionCaptionPair> for PairWire {
    fn from(pair: InteractionCaptionPair) -> Self {
        Self {
            interaction: pair.interaction.text().to_string(),
            caption: pair.caption.text().to_string(),
            p_e: pair.entailment,
            provenance: pair.provenance,
            gen_seed: pair.gen_seed,
        }
    }
}

/// Builds the novel-interaction prompt: exactly [`PROMPT_SHOTS`] seed
/// interactions, each name-filled from the pool start (so every line opens
/// with the same names), newline-joined with a trailing newline.
pub fn build_interaction_prompt(seeds: &[Interaction], pool: &NamePool) -> Result<String, SynthError> {
    if seeds.len() != PROMPT_SHOTS {
        return Err(SynthError::SeedCount { expected: PROMPT_SHOTS, found: seeds.len() });
    }
    let mut prompt = String::new();
    for seed in seeds {
        let (filled, _) = fill_text(seed.text(), pool.names())?;
        prompt.push_str(&filled);
        prompt.push('\n');
    }
    Ok(prompt)
}

/// A built caption-generation prompt plus the target bookkeeping needed to
/// filter and re-mask the generated caption.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptionPrompt {
    pub text: String,
    pub filled_target: String,
    pub target_names: Vec<String>,
}

/// Builds the pair-generation prompt: the target interaction is filled with
/// the first pool names, each example pair with subsequent fresh names, and
/// the prompt ends with `Caption of image showing {target}:` awaiting the
/// caption.
pub fn build_caption_prompt(
    pairs: &[&InteractionCaptionPair],
    target: &Interaction,
    pool: &NamePool,
) -> Result<CaptionPrompt, SynthError> {
    if pairs.is_empty() {
        return Err(SynthError::NoExamples);
    }
    let mut cursor = pool.cursor();
    let target_names = cursor.take(target.slots())?.to_vec();
    let (filled_target, _) = fill_text(target.text(), &target_names)?;

    let mut lines = Vec::with_capacity(pairs.len() * 2 + 1);
    for pair in pairs {
        let filled = fill_pair(pair, &mut cursor)?;
        lines.push(format!("Caption of image showing {}", filled.0));
        lines.push(filled.1);
    }
    lines.push(format!("Caption of image showing {filled_target}:"));
    Ok(CaptionPrompt { text: lines.join("\n"), filled_target, target_names })
}

/// Fills an example pair with a shared name window so the caption mentions
/// the interaction's participants.
fn fill_pair(
    pair: &InteractionCaptionPair,
    cursor: &mut NameCursor<'_>,
) -> Result<(String, String), SynthError> {
    let need = pair.interaction.slots().max(pair.caption.slots());
    let names = cursor.take(need)?;
    let (interaction, _) = fill_text(pair.interaction.text(), names)?;
    let (caption, _) = fill_text(pair.caption.text(), names)?;
    Ok((interaction, caption))
}

/// Rules a generated interaction line can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NovelReject {
    /// Expected names missing, out of order, repeated, or extra pool names.
    Names,
    /// Uppercase letters outside the expected names.
    Uppercase,
    /// No word ending in "-ing".
    NoIngWord,
    /// Ends with a dangling " the" or " a".
    EndsWithArticle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NovelVerdict {
    pub accepted: bool,
    pub reasons: Vec<NovelReject>,
}

/// Surface filter for raw generator output lines.
#[derive(Debug, Clone)]
pub struct NovelInteractionFilter {
    pub first_name: String,
    pub second_name: String,
    /// Full name lexicon; any other member appearing as a word rejects.
    pub lexicon: Vec<String>,
}

impl Default for NovelInteractionFilter {
    fn default() -> Self {
        Self {
            first_name: DEFAULT_NAME_LEXICON[0].to_string(),
            second_name: DEFAULT_NAME_LEXICON[1].to_string(),
            lexicon: DEFAULT_NAME_LEXICON.iter().map(|s| s.to_string()).collect(),
        }
    }
}

fn word_core(token: &str) -> &str {
    token.trim_matches(|c: char| !c.is_alphanumeric())
}

impl NovelInteractionFilter {
    pub fn check(&self, text: &str) -> NovelVerdict {
        let mut reasons = Vec::new();
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let cores: Vec<&str> = tokens.iter().map(|t| word_core(t)).collect();

        let firsts: Vec<usize> = positions(&cores, &self.first_name);
        let seconds: Vec<usize> = positions(&cores, &self.second_name);
        let extra_name = cores.iter().any(|c| {
            *c != self.first_name
                && *c != self.second_name
                && self.lexicon.iter().any(|n| n == c)
        });
        if firsts.len() != 1 || seconds.len() != 1 || firsts[0] >= seconds[0] || extra_name {
            reasons.push(NovelReject::Names);
        }

        let uppercase_outside = tokens.iter().zip(&cores).any(|(token, core)| {
            if self.lexicon.iter().any(|n| n == core) {
                false
            } else {
                token.chars().any(|c| c.is_uppercase())
            }
        });
        if uppercase_outside {
            reasons.push(NovelReject::Uppercase);
        }

        if !cores.iter().any(|c| c.len() >= 4 && c.ends_with("ing")) {
            reasons.push(NovelReject::NoIngWord);
        }

        let trimmed = text.trim_end();
        if trimmed.ends_with(" the") || trimmed.ends_with(" a") {
            reasons.push(NovelReject::EndsWithArticle);
        }

        NovelVerdict { accepted: reasons.is_empty(), reasons }
    }

    /// Re-masks the two expected names back to `[NAME]`, normalizing
    /// whitespace. Only meaningful for accepted lines.
    pub fn remask(&self, text: &str) -> Result<Interaction, TypeError> {
        let words: Vec<String> = text
            .split_whitespace()
            .map(|token| {
                let core = word_core(token);
                if core == self.first_name || core == self.second_name {
                    token.replace(core, NAME_TOKEN)
                } else {
                    token.to_string()
                }
            })
            .collect();
        Interaction::new(words.join(" "))
    }
}

fn positions(cores: &[&str], name: &str) -> Vec<usize> {
    cores
        .iter()
        .enumerate()
        .filter(|(_, c)| **c == name)
        .map(|(i, _)| i)
        .collect()
}

/// Convenience wrapper over the default filter.
pub fn filter_novel_interaction(text: &str) -> NovelVerdict {
    NovelInteractionFilter::default().check(text)
}

/// Rules a generated caption/interaction pair can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairReject {
    /// Caption does not mention every target name.
    MissingName,
    /// Entailment probability at or below 0.5.
    Entailment,
    /// The interaction's parse contains no verb.
    NoVerb,
    /// The interaction contains a banned substring.
    BannedSubstring,
}

impl PairReject {
    pub fn key(&self) -> &'static str {
        match self {
            PairReject::MissingName => "missing-name",
            PairReject::Entailment => "entailment",
            PairReject::NoVerb => "no-verb",
            PairReject::BannedSubstring => "banned-substring",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairVerdict {
    pub accepted: bool,
    pub entailment: f64,
    pub reasons: Vec<PairReject>,
}

/// Filters a generated caption against its target interaction: the caption
/// must mention every target name and entail the filled interaction, and the
/// interaction must contain a verb and no banned substring.
pub fn filter_synthetic_pair(
    interaction: &Interaction,
    caption: &str,
    names: &[String],
    nli: &dyn NliBackend,
    parse: &DependencyParse,
) -> Result<PairVerdict, SynthError> {
    let mut reasons = Vec::new();

    let caption_cores: Vec<&str> = caption.split_whitespace().map(word_core).collect();
    if !names.iter().all(|n| caption_cores.iter().any(|c| c == n)) {
        reasons.push(PairReject::MissingName);
    }

    let (filled, _) = fill_text(interaction.text(), names)?;
    let scores = nli.score(caption, &filled)?;
    if scores.entailment <= 0.5 {
        reasons.push(PairReject::Entailment);
    }

    if !parse.tokens().iter().any(|t| t.pos == "VERB") {
        reasons.push(PairReject::NoVerb);
    }

    if PAIR_BANNED_SUBSTRINGS.iter().any(|b| interaction.text().contains(b)) {
        reasons.push(PairReject::BannedSubstring);
    }

    Ok(PairVerdict { accepted: reasons.is_empty(), entailment: scores.entailment, reasons })
}

/// Why a post-processed interaction was rejected.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PostprocessReject {
    #[error("post-processing left {slots} [NAME] slots instead of 2 in {text:?}")]
    SlotCount { text: String, slots: usize },
    #[error("parse carries {parsed} person entities but the interaction has {slots} slots")]
    ParseMismatch { parsed: usize, slots: usize },
}

/// Connectors that join coordinated subjects.
const SUBJECT_CONNECTORS: &[&str] = &["and", "with", "&", ","];

/// Normalizes a filtered interaction into the canonical two-slot form:
/// prepositional phrases without `[NAME]` are dropped, and coordinated
/// multi-person subjects collapse to one subject plus a trailing
/// `with [NAME]`. `parse` must be over the name-filled interaction text.
pub fn postprocess_interaction(
    interaction: &Interaction,
    parse: &DependencyParse,
) -> Result<Interaction, PostprocessReject> {
    let tokens = parse.tokens();
    let parsed_persons = {
        let mut count = 0;
        let mut index = 0;
        while index < tokens.len() {
            if tokens[index].is_person() {
                count += 1;
                index = parse.entity_run(index).end;
            } else {
                index += 1;
            }
        }
        count
    };
    if parsed_persons != interaction.slots() {
        return Err(PostprocessReject::ParseMismatch {
            parsed: parsed_persons,
            slots: interaction.slots(),
        });
    }
    let mut removed = alloc::vec![false; tokens.len()];
    for (i, token) in tokens.iter().enumerate() {
        if removed[i] || token.pos != "ADP" {
            continue;
        }
        let subtree = parse.subtree(i);
        if subtree.iter().any(|&t| tokens[t].is_person()) {
            continue;
        }
        for t in subtree {
            removed[t] = true;
        }
    }

    // Rebuild the masked word sequence, collapsing person entity runs.
    let mut words: Vec<String> = Vec::new();
    let mut index = 0;
    while index < tokens.len() {
        if removed[index] {
            index += 1;
            continue;
        }
        if tokens[index].is_person() {
            words.push(NAME_TOKEN.to_string());
            index = parse.entity_run(index).end;
        } else {
            words.push(tokens[index].surface.clone());
            index += 1;
        }
    }

    let words = normalize_subject_group(words);
    let text = words.join(" ");
    let slots = count_slots(&text);
    if slots != 2 {
        return Err(PostprocessReject::SlotCount { text, slots });
    }
    Ok(Interaction::new(text).expect("two slots present"))
}

/// Collapses a leading `[NAME] (and|with|&|,) [NAME] ...` subject group to a
/// single subject, appending `with [NAME]` at the end.
fn normalize_subject_group(words: Vec<String>) -> Vec<String> {
    if words.first().map(String::as_str) != Some(NAME_TOKEN) {
        return words;
    }
    let mut index = 1;
    let mut group = 1;
    while index < words.len() {
        let connector = words[index].trim_end_matches(',');
        let is_connector = SUBJECT_CONNECTORS.contains(&words[index].as_str())
            || (connector.is_empty() && words[index] == ",");
        if is_connector && words.get(index + 1).map(String::as_str) == Some(NAME_TOKEN) {
            group += 1;
            index += 2;
        } else if words[index] == NAME_TOKEN {
            // comma attached to the previous token, e.g. "[NAME], [NAME]"
            group += 1;
            index += 1;
        } else {
            break;
        }
    }
    if group < 2 {
        return words;
    }
    let mut normalized = alloc::vec![NAME_TOKEN.to_string()];
    normalized.extend(words[index..].iter().cloned());
    normalized.push("with".to_string());
    normalized.push(NAME_TOKEN.to_string());
    normalized
}

/// Configuration for [`run_synthesis`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    /// Few-shot examples per prompt.
    pub shots: usize,
    /// Number of pairs to emit before stopping.
    pub budget: usize,
    pub params: GenerationParams,
    /// Global index of the first seed; lets a resumed run continue exactly
    /// where an interrupted one stopped.
    pub start_index: usize,
}

impl SynthesisConfig {
    pub fn new(budget: usize, params: GenerationParams) -> Self {
        Self { shots: PROMPT_SHOTS, budget, params, start_index: 0 }
    }
}

/// Counters persisted with every synthesis run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthesisManifest {
    pub seed: u64,
    pub pool_seed: u64,
    pub budget: usize,
    pub attempts: usize,
    pub accepted: usize,
    pub seeds_consumed: usize,
    pub rejections: BTreeMap<String, usize>,
}

/// A completed (or checkpointed) synthesis run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisRun {
    pub pairs: Vec<InteractionCaptionPair>,
    pub manifest: SynthesisManifest,
}

#[derive(Debug, Error)]
pub enum SynthesisError {
    /// A backend failed mid-run; `checkpoint` holds everything accepted so
    /// far so the caller can persist and resume.
    #[error("synthesis interrupted at seed {seed_index}: {source}")]
    Backend {
        seed_index: usize,
        source: BackendError,
        checkpoint: SynthesisRun,
    },
    #[error(transparent)]
    Setup(#[from] SynthError),
}

/// Generates interaction-caption pairs until `cfg.budget` are accepted or the
/// seed list is exhausted. Deterministic for fixed seeds, examples, pool, and
/// backends.
pub fn run_synthesis(
    seeds: &[Interaction],
    examples: &[InteractionCaptionPair],
    pool: &NamePool,
    generator: &dyn TextGeneratorBackend,
    nli: &dyn NliBackend,
    parser: &dyn ParserBackend,
    cfg: &SynthesisConfig,
) -> Result<SynthesisRun, SynthesisError> {
    cfg.params.validate()?;
    if examples.len() < cfg.shots {
        return Err(SynthError::NotEnoughExamples {
            available: examples.len(),
            shots: cfg.shots,
        }
        .into());
    }
    let mut manifest = SynthesisManifest {
        seed: cfg.params.seed,
        pool_seed: pool.seed(),
        budget: cfg.budget,
        attempts: 0,
        accepted: 0,
        seeds_consumed: 0,
        rejections: BTreeMap::new(),
    };
    let mut pairs: Vec<InteractionCaptionPair> = Vec::new();

    for (position, target) in seeds.iter().enumerate() {
        if pairs.len() >= cfg.budget {
            break;
        }
        let seed_index = cfg.start_index + position;
        // Absolute position, so checkpoints know where to resume.
        manifest.seeds_consumed = seed_index + 1;
        manifest.attempts += 1;

        // Per-iteration RNG, so a resumed run continues byte-identically.
        let mut rng = ChaCha12Rng::seed_from_u64(
            cfg.params.seed ^ (seed_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        let chosen = rand::seq::index::sample(&mut rng, examples.len(), cfg.shots);
        let shot_pairs: Vec<&InteractionCaptionPair> =
            chosen.iter().map(|i| &examples[i]).collect();
        // Fresh names every iteration, reshuffled from the base pool.
        let iteration_pool = NamePool::shuffled(pool.names(), pool.seed() ^ seed_index as u64)
            .expect("pool names already validated");

        let step = synthesize_one(
            target,
            &shot_pairs,
            &iteration_pool,
            generator,
            nli,
            parser,
            &cfg.params,
        );
        match step {
            Ok(Ok(pair)) => {
                manifest.accepted += 1;
                pairs.push(pair);
            }
            Ok(Err(reason)) => {
                *manifest.rejections.entry(reason).or_insert(0) += 1;
            }
            Err(source) => {
                return Err(SynthesisError::Backend {
                    seed_index,
                    source,
                    checkpoint: SynthesisRun { pairs, manifest },
                });
            }
        }
    }
    Ok(SynthesisRun { pairs, manifest })
}

/// One prompt/generate/filter/postprocess attempt. The outer error is a
/// backend failure; the inner one names the rejection-histogram bucket.
fn synthesize_one(
    target: &Interaction,
    shot_pairs: &[&InteractionCaptionPair],
    pool: &NamePool,
    generator: &dyn TextGeneratorBackend,
    nli: &dyn NliBackend,
    parser: &dyn ParserBackend,
    params: &GenerationParams,
) -> Result<Result<InteractionCaptionPair, String>, BackendError> {
    let prompt = build_caption_prompt(shot_pairs, target, pool)
        .map_err(|e| BackendError::new("prompt", e.to_string()))?;
    let raw = generator.generate(&prompt.text, params)?;
    let caption = raw.trim();
    if caption.is_empty() {
        return Ok(Err("empty-generation".to_string()));
    }
    let parse = parser.parse(&prompt.filled_target)?;
    let verdict = match filter_synthetic_pair(target, caption, &prompt.target_names, nli, &parse) {
        Ok(verdict) => verdict,
        Err(SynthError::Backend(e)) => return Err(e),
        Err(other) => return Ok(Err(format!("fill:{other}"))),
    };
    if !verdict.accepted {
        let key = verdict.reasons.first().expect("rejected verdicts carry reasons").key();
        return Ok(Err(key.to_string()));
    }
    let interaction = match postprocess_interaction(target, &parse) {
        Ok(interaction) => interaction,
        Err(_) => return Ok(Err("postprocess".to_string())),
    };
    // The canonical form must still satisfy the pair invariants.
    let has_ing = interaction
        .text()
        .split_whitespace()
        .any(|w| word_core(w).len() >= 4 && word_core(w).ends_with("ing"));
    if !has_ing || PAIR_BANNED_SUBSTRINGS.iter().any(|b| interaction.text().contains(b)) {
        return Ok(Err("postprocess".to_string()));
    }

    let masked = mask_known_names(caption, &prompt.target_names);
    let caption = match MaskedCaption::try_new(masked, Source::Synthetic) {
        Ok(caption) => caption,
        Err(_) => return Ok(Err("empty-generation".to_string())),
    };
    Ok(Ok(InteractionCaptionPair {
        interaction,
        caption,
        entailment: verdict.entailment,
        provenance: Provenance::Synthetic,
        gen_seed: Some(params.seed),
    }))
}

/// Masks word occurrences of the given names, normalizing whitespace.
pub fn mask_known_names(text: &str, names: &[String]) -> String {
    let words: Vec<String> = text
        .split_whitespace()
        .map(|token| {
            let core = word_core(token);
            if !core.is_empty() && names.iter().any(|n| n == core) {
                token.replace(core, NAME_TOKEN)
            } else {
                token.to_string()
            }
        })
        .collect();
    words.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::NliScores;

    struct FixedNli(f64);

    impl NliBackend for FixedNli {
        fn score(&self, _premise: &str, _hypothesis: &str) -> Result<NliScores, BackendError> {
            Ok(NliScores {
                entailment: self.0,
                contradiction: (1.0 - self.0) / 2.0,
                neutral: (1.0 - self.0) / 2.0,
            })
        }
    }

    fn interaction(text: &str) -> Interaction {
        Interaction::new(text).unwrap()
    }

    fn pool(names: &[&str]) -> NamePool {
        NamePool::ordered(names.iter().copied(), 0).unwrap()
    }

    #[test]
    fn interaction_prompt_fills_ten_seeds() {
        let seeds: Vec<Interaction> =
            (0..10).map(|i| interaction(&format!("[NAME] greeting [NAME] v{i}"))).collect();
        let pool = pool(&["Alex", "Bailey", "Adam"]);
        let prompt = build_interaction_prompt(&seeds, &pool).unwrap();
        assert!(prompt.ends_with('\n'));
        assert_eq!(prompt.lines().count(), 10);
        assert!(prompt.lines().all(|l| l.starts_with("Alex greeting Bailey")));
        assert!(!prompt.contains(NAME_TOKEN));

        let again = build_interaction_prompt(&seeds, &pool).unwrap();
        assert_eq!(prompt, again);

        let err = build_interaction_prompt(&seeds[..3], &pool).unwrap_err();
        assert_eq!(err, SynthError::SeedCount { expected: 10, found: 3 });
    }

    #[test]
    fn caption_prompt_gives_target_fresh_leading_names() {
        let pair = InteractionCaptionPair {
            interaction: interaction("[NAME] greeting [NAME]"),
            caption: MaskedCaption::new("[NAME] greets [NAME] warmly", Source::WhosWaldo),
            entailment: 1.0,
            provenance: Provenance::WhosWaldoSeed,
            gen_seed: None,
        };
        let pool = pool(&["Alex", "Bailey", "Adam", "Bob"]);
        let prompt =
            build_caption_prompt(&[&pair], &interaction("[NAME] hugging [NAME]"), &pool).unwrap();
        let lines: Vec<&str> = prompt.text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "Caption of image showing Adam greeting Bob");
        assert_eq!(lines[1], "Adam greets Bob warmly");
        assert_eq!(lines[2], "Caption of image showing Alex hugging Bailey:");
        assert_eq!(prompt.target_names, ["Alex", "Bailey"]);
    }

    #[test]
    fn caption_prompt_line_count_is_structural() {
        let pair = InteractionCaptionPair {
            interaction: interaction("[NAME] waving to [NAME]"),
            caption: MaskedCaption::new("[NAME] waves to [NAME]", Source::WhosWaldo),
            entailment: 1.0,
            provenance: Provenance::WhosWaldoSeed,
            gen_seed: None,
        };
        let pool = crate::names::default_ordered_pool(0);
        for k in 1..=10 {
            let pairs: Vec<&InteractionCaptionPair> = core::iter::repeat(&pair).take(k).collect();
            let prompt =
                build_caption_prompt(&pairs, &interaction("[NAME] hugging [NAME]"), &pool).unwrap();
            assert_eq!(prompt.text.lines().count(), 2 * k + 1);
        }
    }

    #[test]
    fn novel_filter_rules() {
        let accepted = filter_novel_interaction("Alex hugging Bailey");
        assert!(accepted.accepted);

        let no_ing = filter_novel_interaction("Alex meets Bailey");
        assert_eq!(no_ing.reasons, [NovelReject::NoIngWord]);

        let article = filter_novel_interaction("Alex hugging Bailey near the");
        assert_eq!(article.reasons, [NovelReject::EndsWithArticle]);

        let order = filter_novel_interaction("Bailey hugging Alex");
        assert_eq!(order.reasons, [NovelReject::Names]);

        let upper = filter_novel_interaction("Alex hugging Bailey At The Game");
        assert_eq!(upper.reasons, [NovelReject::Uppercase]);

        let extra = filter_novel_interaction("Alex hugging Bailey and Adam");
        assert_eq!(extra.reasons, [NovelReject::Names]);

        let twice = filter_novel_interaction("Alex hugging Alex and Bailey");
        assert_eq!(twice.reasons, [NovelReject::Names]);
    }

    #[test]
    fn novel_remask() {
        let filter = NovelInteractionFilter::default();
        let masked = filter.remask("Alex hugging Bailey after a win").unwrap();
        assert_eq!(masked.text(), "[NAME] hugging [NAME] after a win");
    }

    #[test]
    fn pair_filter_checks_names_entailment_verb_and_banned() {
        let nli = FixedNli(0.9);
        let target = interaction("[NAME] hugging [NAME]");
        let names = alloc::vec!["Bettye".to_string(), "Hester".to_string()];
        let parse = test_parse_hugging();

        let ok = filter_synthetic_pair(
            &target,
            "The hug between Bettye and Hester is a moment of joy.",
            &names,
            &nli,
            &parse,
        )
        .unwrap();
        assert!(ok.accepted);
        assert!((ok.entailment - 0.9).abs() < 1e-12);

        let missing =
            filter_synthetic_pair(&target, "Bettye smiles alone.", &names, &nli, &parse).unwrap();
        assert!(missing.reasons.contains(&PairReject::MissingName));

        let weak = filter_synthetic_pair(
            &target,
            "Bettye and Hester are here.",
            &names,
            &FixedNli(0.3),
            &parse,
        )
        .unwrap();
        assert!(weak.reasons.contains(&PairReject::Entailment));

        let banned = filter_synthetic_pair(
            &interaction("[NAME] posing for a photo with [NAME]"),
            "Bettye and Hester pose.",
            &names,
            &nli,
            &parse,
        )
        .unwrap();
        assert!(banned.reasons.contains(&PairReject::BannedSubstring));
    }

    /// Parse of "Bettye hugging Hester".
    fn test_parse_hugging() -> DependencyParse {
        use crate::parse::ParseToken;
        DependencyParse::new(alloc::vec![
            ParseToken {
                surface: "Bettye".into(),
                lemma: "Bettye".into(),
                pos: "PROPN".into(),
                head: 1,
                deprel: "nsubj".into(),
                entity: Some("NAME".into()),
                span: (0, 6),
            },
            ParseToken {
                surface: "hugging".into(),
                lemma: "hug".into(),
                pos: "VERB".into(),
                head: 1,
                deprel: "root".into(),
                entity: None,
                span: (7, 14),
            },
            ParseToken {
                surface: "Hester".into(),
                lemma: "Hester".into(),
                pos: "PROPN".into(),
                head: 1,
                deprel: "dobj".into(),
                entity: Some("NAME".into()),
                span: (15, 21),
            },
        ])
        .unwrap()
    }
}
