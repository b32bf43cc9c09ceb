//! The `hhi` command line: one subcommand per pipeline stage.
//!
//! Every stage validates its inputs, writes its outputs plus a
//! `<output>.manifest.json` (config hash, input hashes, seed, counts), and is
//! a no-op when re-run over identical inputs unless `--force` is given.
//! Exit codes: 0 success, 2 validation error, 3 backend error; failures print
//! machine-readable JSON to stderr.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use hhi_core::bench::{build_imsitu_hhi, ingest_wenda, HumanArgClassifier, SituSample, WendaRecord};
use hhi_core::captioner::{build_training_set, CaptionerTrainConfig, TrainingTarget};
use hhi_core::distill::{generate_pseudo_labels, make_training_example, split_folds, TrainConfig};
use hhi_core::extract::{extract_interaction, harvest_captions, HarvestConfig};
use hhi_core::metrics::{
    evaluate_imsitu, evaluate_wenda, format_imsitu_tables, format_wenda_tables, wenda_items,
    EvalOptions, ImSituEvaluation, ImSituItem, MetricBackends, Prediction, VerbMode,
    WendaEvaluation,
};
use hhi_core::names::{mask_names, NamePool, Span};
use hhi_core::synth::{
    build_interaction_prompt, run_synthesis, InteractionCaptionPair, NovelInteractionFilter,
    SynthesisConfig, SynthesisError, SynthesisRun, PROMPT_SHOTS,
};
use hhi_core::types::{Interaction, LabeledSample, MaskedCaption, Source, Split};

use crate::backends::BackendSet;
use crate::config::PipelineConfig;
use crate::conllu::read_conllu;
use crate::error::{PipelineError, Result};
use crate::jsonl::{read_json, read_jsonl, write_json, write_jsonl};
use crate::manifest::{manifest_path, sha256_str, Manifest};
use crate::stubs::{StubCaptioner, StubGenerator, StubSummarizer};
use crate::workers::ordered_map;

#[derive(Debug, Parser)]
#[command(name = "hhi", version, about = "Distills interaction pseudo-labels from captions and evaluates interaction predictors")]
pub struct Cli {
    /// Pipeline configuration file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured global seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the configured worker count.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Re-run even when inputs and config are unchanged.
    #[arg(long, global = true)]
    pub force: bool,
    /// Backend selection, e.g. `nli=lexical`, `nli=file:scores.jsonl`,
    /// `parser=conllu:parses.conllu`, `embeddings=file:vectors.txt`.
    #[arg(long = "backend", global = true, value_name = "NAME=KIND")]
    pub backends: Vec<String>,
    /// Name lexicon file (one name per line); defaults to the bundled list.
    #[arg(long, global = true)]
    pub names: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select caption-like lines from raw text and scrub credit markers.
    Harvest {
        /// Raw text, one line per candidate caption.
        #[arg(long)]
        input: PathBuf,
        /// Output JSONL: {id, text}.
        #[arg(long)]
        output: PathBuf,
        /// Harvest pattern file (TOML) overriding the configured patterns.
        #[arg(long)]
        patterns: Option<PathBuf>,
    },
    /// Extract rule-based interactions from parsed captions (CoNLL-U).
    Extract {
        #[arg(long)]
        parses: PathBuf,
        /// Output JSONL: {caption_id, interaction}.
        #[arg(long)]
        output: PathBuf,
        /// Also write interaction-caption pairs (captions re-masked from
        /// parse entities) for use as few-shot examples.
        #[arg(long)]
        pairs_output: Option<PathBuf>,
    },
    /// Generate novel interaction texts by prompt continuation.
    GenInteractions {
        /// Seed interactions JSONL ({caption_id, interaction} or {interaction}).
        #[arg(long)]
        seeds: PathBuf,
        /// Output JSONL: {interaction, gen_seed}.
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Generate filtered interaction-caption pairs.
    GenPairs {
        /// Target interactions JSONL.
        #[arg(long)]
        interactions: PathBuf,
        /// Few-shot example pairs JSONL.
        #[arg(long)]
        examples: PathBuf,
        /// Output JSONL: {interaction, caption, p_e, provenance, gen_seed}.
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Fine-tune the student summarizer on interaction-caption pairs.
    DistillTrain {
        #[arg(long)]
        pairs: PathBuf,
        /// Output model file (JSON).
        #[arg(long)]
        output: PathBuf,
        /// Split the pairs into this many folds and train on one.
        #[arg(long)]
        folds: Option<usize>,
        /// Which fold to train on (0-based; requires --folds).
        #[arg(long)]
        fold: Option<usize>,
    },
    /// Run the summarizer over eligible captions and filter pseudo-labels.
    PseudoLabel {
        /// Dataset JSONL (labeled samples).
        #[arg(long)]
        dataset: PathBuf,
        /// Test set JSONL for leakage dedup.
        #[arg(long)]
        test_set: Option<PathBuf>,
        /// Summarizer model file from distill-train.
        #[arg(long)]
        model: PathBuf,
        /// Output JSONL: one record per sample.
        #[arg(long)]
        output: PathBuf,
        /// Corpus stats JSON.
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Also write the accepted samples with labels attached, ready for
        /// train-captioner.
        #[arg(long)]
        labeled_output: Option<PathBuf>,
    },
    /// Build evaluation benchmarks.
    BuildBench {
        /// Situation-recognition samples JSONL; builds the HHI subset.
        #[arg(long)]
        imsitu: Option<PathBuf>,
        /// Curated test records JSONL; validates and ingests them.
        #[arg(long)]
        wenda: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        /// Verb support TSV (imsitu mode).
        #[arg(long)]
        support_table: Option<PathBuf>,
        #[arg(long)]
        min_verb_support: Option<usize>,
    },
    /// Fine-tune the captioner on pseudo-labels or raw captions.
    TrainCaptioner {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum, default_value = "pseudo-label")]
        target: TargetArg,
        #[arg(long)]
        output: PathBuf,
    },
    /// Decode beam sets for every dataset image.
    Decode {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Beam width.
        #[arg(long, default_value_t = 32)]
        beams: usize,
        /// Output JSONL: {sample_id, beams: [{text, score}]}.
        #[arg(long)]
        output: PathBuf,
    },
    /// Score predictions against a benchmark and write the metric report.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        benchmark: PathBuf,
        #[arg(long, value_enum)]
        mode: BenchModeArg,
        /// Report JSON output.
        #[arg(long)]
        output: PathBuf,
        /// Also write human-readable tables here.
        #[arg(long)]
        tables: Option<PathBuf>,
        /// Comma-separated beam cutoffs, e.g. `1,5,8`.
        #[arg(long)]
        k: Option<String>,
        /// Treat beam texts as categorical verbs wrapped in two templates.
        #[arg(long)]
        wrap_verbs: bool,
        #[arg(long, value_enum)]
        verb_mode: Option<VerbModeArg>,
        /// Row label recorded in the report.
        #[arg(long, default_value = "model")]
        label: String,
    },
    /// Render comparison tables from one or more evaluation reports.
    Report {
        /// Report JSON files, optionally as LABEL=PATH.
        #[arg(long, required = true, num_args = 1..)]
        inputs: Vec<String>,
        #[arg(long, value_enum)]
        mode: BenchModeArg,
        /// Output text file; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    #[value(name = "pseudo-label")]
    PseudoLabel,
    #[value(name = "raw-caption")]
    RawCaption,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchModeArg {
    Wenda,
    Imsitu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerbModeArg {
    #[value(name = "slot-format")]
    SlotFormat,
    Parsed,
}

impl From<VerbModeArg> for VerbMode {
    fn from(value: VerbModeArg) -> Self {
        match value {
            VerbModeArg::SlotFormat => VerbMode::SlotFormat,
            VerbModeArg::Parsed => VerbMode::Parsed,
        }
    }
}

/// Entry point: returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(error) => {
            eprintln!("{}", error.to_json());
            error.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => {
            let mut config = PipelineConfig::default();
            config.apply_env();
            config
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(workers) = cli.workers {
        config.workers = workers;
    }
    config.validate()?;
    let backends = BackendSet::from_flags(&cli.backends)?;
    let pool_names = load_names(cli.names.as_deref())?;

    let ctx = Context { config, backends, pool_names, force: cli.force };
    match cli.command {
        Command::Harvest { input, output, patterns } => harvest_cmd(&ctx, &input, &output, patterns.as_deref()),
        Command::Extract { parses, output, pairs_output } => {
            extract_cmd(&ctx, &parses, &output, pairs_output.as_deref())
        }
        Command::GenInteractions { seeds, output, budget } => {
            gen_interactions_cmd(&ctx, &seeds, &output, budget)
        }
        Command::GenPairs { interactions, examples, output, budget } => {
            gen_pairs_cmd(&ctx, &interactions, &examples, &output, budget)
        }
        Command::DistillTrain { pairs, output, folds, fold } => {
            distill_train_cmd(&ctx, &pairs, &output, folds, fold)
        }
        Command::PseudoLabel { dataset, test_set, model, output, stats, labeled_output } => pseudo_label_cmd(
            &ctx,
            &dataset,
            test_set.as_deref(),
            &model,
            &output,
            stats.as_deref(),
            labeled_output.as_deref(),
        ),
        Command::BuildBench { imsitu, wenda, output, support_table, min_verb_support } => {
            build_bench_cmd(&ctx, imsitu.as_deref(), wenda.as_deref(), &output, support_table.as_deref(), min_verb_support)
        }
        Command::TrainCaptioner { dataset, target, output } => {
            train_captioner_cmd(&ctx, &dataset, target, &output)
        }
        Command::Decode { model, dataset, beams, output } => {
            decode_cmd(&ctx, &model, &dataset, beams, &output)
        }
        Command::Evaluate {
            predictions,
            benchmark,
            mode,
            output,
            tables,
            k,
            wrap_verbs,
            verb_mode,
            label,
        } => evaluate_cmd(
            &ctx,
            &predictions,
            &benchmark,
            mode,
            &output,
            tables.as_deref(),
            k.as_deref(),
            wrap_verbs,
            verb_mode,
            &label,
        ),
        Command::Report { inputs, mode, output } => report_cmd(&inputs, mode, output.as_deref()),
    }
}

struct Context {
    config: PipelineConfig,
    backends: BackendSet,
    pool_names: Vec<String>,
    force: bool,
}

impl Context {
    fn stage_hash(&self, subcommand: &str, extra: &str) -> String {
        let config = serde_json::to_string(&self.config).expect("config serializes");
        sha256_str(&format!("{subcommand}|{config}|{extra}|{}", self.backends.fingerprint()))
    }

    fn ordered_pool(&self) -> Result<NamePool> {
        NamePool::ordered(self.pool_names.iter().map(String::as_str), self.config.seed)
            .map_err(|e| PipelineError::validation(e.to_string()))
    }

    fn shuffled_pool(&self) -> Result<NamePool> {
        NamePool::shuffled(self.pool_names.iter().map(String::as_str), self.config.seed)
            .map_err(|e| PipelineError::validation(e.to_string()))
    }
}

fn load_names(path: Option<&Path>) -> Result<Vec<String>> {
    let text = match path {
        Some(path) => std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?,
        None => crate::data::NAME_LEXICON.to_string(),
    };
    let names: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect();
    if names.len() < 2 {
        return Err(PipelineError::validation("name lexicon needs at least two names"));
    }
    Ok(names)
}

/// Builds the candidate manifest and reports whether this run is a no-op.
fn stage_preflight(
    ctx: &Context,
    subcommand: &str,
    extra: &str,
    inputs: &[(&str, &Path)],
    outputs: &[&Path],
) -> Result<(Manifest, PathBuf, bool)> {
    for (_, path) in inputs {
        if !path.exists() {
            return Err(PipelineError::validation(format!(
                "input {} does not exist",
                path.display()
            )));
        }
    }
    let mut manifest = Manifest::new(subcommand, ctx.stage_hash(subcommand, extra), ctx.config.seed);
    for (role, path) in inputs {
        manifest = manifest.with_input(role, path)?;
    }
    for output in outputs {
        manifest.output(output);
    }
    let primary = outputs.first().expect("stages have an output");
    let mpath = manifest_path(primary);
    let noop = !ctx.force && manifest.matches_existing(&mpath);
    Ok((manifest, mpath, noop))
}

fn finish(mut manifest: Manifest, mpath: &Path, counts: &[(&str, u64)]) -> Result<()> {
    for (key, value) in counts {
        manifest.count(key, *value);
    }
    manifest.write(mpath)?;
    let summary = serde_json::json!({
        "status": "ok",
        "subcommand": manifest.subcommand,
        "counts": manifest.counts,
        "outputs": manifest.outputs,
    });
    println!("{summary}");
    Ok(())
}

fn report_noop(subcommand: &str) {
    println!("{}", serde_json::json!({ "status": "no-op", "subcommand": subcommand }));
}

/// `{id, text}` rows written by harvest and consumed by parse/extract.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HarvestRow {
    pub id: String,
    pub text: String,
}

fn harvest_cmd(ctx: &Context, input: &Path, output: &Path, patterns: Option<&Path>) -> Result<()> {
    let cfg = match patterns {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
            let cfg: HarvestConfig = toml::from_str(&text)
                .map_err(|e| PipelineError::validation(format!("{}: {e}", path.display())))?;
            cfg.validate().map_err(|e| PipelineError::validation(e.to_string()))?;
            cfg
        }
        None => ctx.config.harvest.clone(),
    };
    let extra = serde_json::to_string(&cfg).expect("config serializes");
    let mut inputs = vec![("input", input)];
    if let Some(path) = patterns {
        inputs.push(("patterns", path));
    }
    let (manifest, mpath, noop) = stage_preflight(ctx, "harvest", &extra, &inputs, &[output])?;
    if noop {
        report_noop("harvest");
        return Ok(());
    }

    let text = std::fs::read_to_string(input).map_err(|e| PipelineError::io(input, e))?;
    let lines: Vec<&str> = text.lines().collect();
    let kept = harvest_captions(lines.iter().copied(), &cfg);
    let rows: Vec<HarvestRow> = kept
        .into_iter()
        .enumerate()
        .map(|(index, text)| HarvestRow { id: format!("line-{index}"), text })
        .collect();
    write_jsonl(output, &rows)?;
    finish(manifest, &mpath, &[("lines_in", lines.len() as u64), ("kept", rows.len() as u64)])
}

/// `{caption_id, interaction}` rows written by extract.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractionRow {
    pub caption_id: String,
    pub interaction: Interaction,
}

fn extract_cmd(ctx: &Context, parses: &Path, output: &Path, pairs_output: Option<&Path>) -> Result<()> {
    let mut outputs = vec![output];
    if let Some(path) = pairs_output {
        outputs.push(path);
    }
    let (manifest, mpath, noop) =
        stage_preflight(ctx, "extract", "", &[("parses", parses)], &outputs)?;
    if noop {
        report_noop("extract");
        return Ok(());
    }

    let sentences = read_conllu(parses)?;
    let mut rows: Vec<ExtractionRow> = Vec::new();
    let mut pairs: Vec<InteractionCaptionPair> = Vec::new();
    for (index, sentence) in sentences.iter().enumerate() {
        let caption_id = sentence.sent_id.clone().unwrap_or_else(|| format!("sent-{index}"));
        let extracted = extract_interaction(&sentence.parse, &ctx.config.extract)
            .map_err(|e| PipelineError::validation(format!("{caption_id}: {e}")))?;
        let Some(interaction) = extracted else { continue };
        if pairs_output.is_some() {
            let caption = masked_caption_of(sentence, Source::WhosWaldo)?;
            pairs.push(InteractionCaptionPair {
                interaction: interaction.clone(),
                caption,
                entailment: 1.0,
                provenance: hhi_core::synth::Provenance::WhosWaldoSeed,
                gen_seed: None,
            });
        }
        rows.push(ExtractionRow { caption_id, interaction });
    }
    write_jsonl(output, &rows)?;
    if let Some(path) = pairs_output {
        write_jsonl(path, &pairs)?;
    }
    finish(
        manifest,
        &mpath,
        &[("sentences", sentences.len() as u64), ("interactions", rows.len() as u64)],
    )
}

/// Re-masks a parsed caption's person entities to `[NAME]`.
fn masked_caption_of(
    sentence: &crate::conllu::ConlluSentence,
    source: Source,
) -> Result<MaskedCaption> {
    let text = sentence
        .text
        .clone()
        .unwrap_or_else(|| sentence.parse.joined_text());
    let mut spans: Vec<Span> = Vec::new();
    let tokens = sentence.parse.tokens();
    let mut index = 0;
    while index < tokens.len() {
        if tokens[index].is_person() {
            let run = sentence.parse.entity_run(index);
            let start = tokens[run.start].span.0;
            let end = tokens[run.end - 1].span.1;
            spans.push((start, end));
            index = run.end;
        } else {
            index += 1;
        }
    }
    mask_names(&text, &spans, source).map_err(|e| PipelineError::validation(e.to_string()))
}

/// `{interaction, gen_seed}` rows written by gen-interactions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NovelRow {
    pub interaction: Interaction,
    pub gen_seed: u64,
}

/// Input rows for gen-interactions: extraction rows or bare interactions.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SeedRow {
    interaction: Interaction,
}

fn gen_interactions_cmd(ctx: &Context, seeds: &Path, output: &Path, budget: Option<usize>) -> Result<()> {
    let budget = budget.unwrap_or(ctx.config.gen_interactions.budget);
    let extra = format!("budget={budget}");
    let (manifest, mpath, noop) =
        stage_preflight(ctx, "gen-interactions", &extra, &[("seeds", seeds)], &[output])?;
    if noop {
        report_noop("gen-interactions");
        return Ok(());
    }

    let seed_rows: Vec<SeedRow> = read_jsonl(seeds)?;
    if seed_rows.len() < PROMPT_SHOTS {
        return Err(PipelineError::validation(format!(
            "need at least {PROMPT_SHOTS} seed interactions, found {}",
            seed_rows.len()
        )));
    }
    let pool = ctx.ordered_pool()?;
    let filter = NovelInteractionFilter {
        first_name: pool.names()[0].clone(),
        second_name: pool.names()[1].clone(),
        lexicon: pool.names().to_vec(),
    };
    let generator = StubGenerator;
    let mut params = ctx.config.gen_interactions.params.clone();
    let base_seed = ctx.config.seed;

    let mut rows: Vec<NovelRow> = Vec::new();
    let mut rejections: BTreeMap<String, u64> = BTreeMap::new();
    let mut attempts = 0u64;
    let attempt_cap = (budget as u64) * 50 + 100;
    use hhi_core::backend::TextGeneratorBackend;
    use rand::SeedableRng;
    while rows.len() < budget && attempts < attempt_cap {
        let iteration = attempts;
        attempts += 1;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(
            base_seed ^ iteration.wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        let chosen = rand::seq::index::sample(&mut rng, seed_rows.len(), PROMPT_SHOTS);
        let shot: Vec<Interaction> =
            chosen.iter().map(|i| seed_rows[i].interaction.clone()).collect();
        let prompt = build_interaction_prompt(&shot, &pool)
            .map_err(|e| PipelineError::validation(e.to_string()))?;
        params.seed = base_seed ^ iteration;
        let line = generator.generate(&prompt, &params)?;
        let line = line.trim();
        if line.is_empty() {
            *rejections.entry("empty-generation".to_string()).or_insert(0) += 1;
            continue;
        }
        let verdict = filter.check(line);
        if !verdict.accepted {
            for reason in &verdict.reasons {
                *rejections.entry(format!("{reason:?}").to_lowercase()).or_insert(0) += 1;
            }
            continue;
        }
        let interaction = filter
            .remask(line)
            .map_err(|e| PipelineError::validation(e.to_string()))?;
        rows.push(NovelRow { interaction, gen_seed: params.seed });
    }
    write_jsonl(output, &rows)?;
    let mut counts: Vec<(&str, u64)> =
        vec![("accepted", rows.len() as u64), ("attempts", attempts)];
    let rejection_counts: Vec<(String, u64)> =
        rejections.iter().map(|(k, v)| (format!("rejected-{k}"), *v)).collect();
    for (key, value) in &rejection_counts {
        counts.push((key.as_str(), *value));
    }
    finish(manifest, &mpath, &counts)
}

fn gen_pairs_cmd(
    ctx: &Context,
    interactions: &Path,
    examples: &Path,
    output: &Path,
    budget: Option<usize>,
) -> Result<()> {
    let budget = budget.unwrap_or(ctx.config.gen_pairs.budget);
    let extra = format!("budget={budget}");
    let (manifest, mpath, noop) = stage_preflight(
        ctx,
        "gen-pairs",
        &extra,
        &[("interactions", interactions), ("examples", examples)],
        &[output],
    )?;
    if noop {
        report_noop("gen-pairs");
        return Ok(());
    }

    let targets: Vec<SeedRow> = read_jsonl(interactions)?;
    let example_pairs: Vec<InteractionCaptionPair> = read_jsonl(examples)?;
    let pool = ctx.shuffled_pool()?;
    let mut params = ctx.config.gen_pairs.params.clone();
    params.seed = ctx.config.seed;

    // Resume from a checkpoint when one exists.
    let checkpoint = output.with_extension("checkpoint.jsonl");
    let mut prior: Vec<InteractionCaptionPair> = Vec::new();
    let mut start_index = 0usize;
    if checkpoint.exists() && !ctx.force {
        prior = read_jsonl(&checkpoint)?;
        let state: CheckpointState = read_json(&checkpoint.with_extension("state.json"))?;
        start_index = state.seeds_consumed;
    }

    let cfg = SynthesisConfig {
        shots: PROMPT_SHOTS,
        budget: budget.saturating_sub(prior.len()),
        params,
        start_index,
    };
    let target_list: Vec<Interaction> = targets
        .iter()
        .skip(start_index)
        .map(|r| r.interaction.clone())
        .collect();
    let outcome = run_synthesis(
        &target_list,
        &example_pairs,
        &pool,
        &StubGenerator,
        ctx.backends.nli()?.as_ref(),
        ctx.backends.parser()?.as_ref(),
        &cfg,
    );
    match outcome {
        Ok(run) => {
            let mut pairs = prior;
            pairs.extend(run.pairs);
            write_jsonl(output, &pairs)?;
            if checkpoint.exists() {
                let _ = std::fs::remove_file(&checkpoint);
                let _ = std::fs::remove_file(checkpoint.with_extension("state.json"));
            }
            let mut counts = vec![
                ("pairs", pairs.len() as u64),
                ("attempts", run.manifest.attempts as u64),
                ("seeds_consumed", run.manifest.seeds_consumed as u64),
            ];
            let rejected: Vec<(String, u64)> = run
                .manifest
                .rejections
                .iter()
                .map(|(k, v)| (format!("rejected-{k}"), *v as u64))
                .collect();
            for (key, value) in &rejected {
                counts.push((key.as_str(), *value));
            }
            finish(manifest, &mpath, &counts)
        }
        Err(SynthesisError::Backend { seed_index, source, checkpoint: run }) => {
            write_checkpoint(&checkpoint, &prior, &run, seed_index)?;
            Err(PipelineError::Backend(source))
        }
        Err(SynthesisError::Setup(e)) => Err(PipelineError::validation(e.to_string())),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointState {
    seeds_consumed: usize,
    accepted: usize,
}

fn write_checkpoint(
    checkpoint: &Path,
    prior: &[InteractionCaptionPair],
    run: &SynthesisRun,
    seed_index: usize,
) -> Result<()> {
    let mut pairs = prior.to_vec();
    pairs.extend(run.pairs.iter().cloned());
    write_jsonl(checkpoint, &pairs)?;
    let state = CheckpointState { seeds_consumed: seed_index, accepted: pairs.len() };
    write_json(&checkpoint.with_extension("state.json"), &state)
}

/// Model file written by distill-train.
#[derive(Debug, Serialize, Deserialize)]
pub struct SummarizerModelFile {
    pub backend: String,
    pub train_config: TrainConfig,
    pub model: StubSummarizer,
}

fn distill_train_cmd(
    ctx: &Context,
    pairs: &Path,
    output: &Path,
    folds: Option<usize>,
    fold: Option<usize>,
) -> Result<()> {
    let extra = format!("folds={folds:?} fold={fold:?}");
    let (manifest, mpath, noop) =
        stage_preflight(ctx, "distill-train", &extra, &[("pairs", pairs)], &[output])?;
    if noop {
        report_noop("distill-train");
        return Ok(());
    }

    let all_pairs: Vec<InteractionCaptionPair> = read_jsonl(pairs)?;
    let train_pairs: Vec<InteractionCaptionPair> = match (folds, fold) {
        (Some(k), Some(i)) => {
            let folds = split_folds(&all_pairs, k, ctx.config.seed)
                .map_err(|e| PipelineError::validation(e.to_string()))?;
            folds
                .into_iter()
                .nth(i)
                .ok_or_else(|| PipelineError::validation(format!("fold {i} out of {k}")))?
        }
        (None, None) => all_pairs.clone(),
        _ => return Err(PipelineError::validation("--folds and --fold go together")),
    };
    let train_config = ctx.config.distill.clone();
    let examples: Vec<(String, String)> = train_pairs
        .iter()
        .map(|pair| make_training_example(pair, &train_config.task_prefix))
        .collect();
    use hhi_core::backend::SummarizerBackend;
    let mut model = StubSummarizer::default();
    for _ in 0..train_config.epochs {
        model.fit(&examples)?;
    }
    write_json(
        output,
        &SummarizerModelFile { backend: "stub".to_string(), train_config, model },
    )?;
    finish(
        manifest,
        &mpath,
        &[("pairs", all_pairs.len() as u64), ("train_examples", examples.len() as u64)],
    )
}

fn pseudo_label_cmd(
    ctx: &Context,
    dataset: &Path,
    test_set: Option<&Path>,
    model: &Path,
    output: &Path,
    stats_out: Option<&Path>,
    labeled_output: Option<&Path>,
) -> Result<()> {
    let mut inputs = vec![("dataset", dataset), ("model", model)];
    if let Some(path) = test_set {
        inputs.push(("test_set", path));
    }
    let mut outputs = vec![output];
    if let Some(path) = stats_out {
        outputs.push(path);
    }
    if let Some(path) = labeled_output {
        outputs.push(path);
    }
    let (manifest, mpath, noop) = stage_preflight(ctx, "pseudo-label", "", &inputs, &outputs)?;
    if noop {
        report_noop("pseudo-label");
        return Ok(());
    }

    let samples: Vec<LabeledSample> = read_jsonl(dataset)?;
    let test: Vec<LabeledSample> = match test_set {
        Some(path) => read_jsonl(path)?,
        None => Vec::new(),
    };
    let model_file: SummarizerModelFile = read_json(model)?;
    let (records, stats) = generate_pseudo_labels(
        &samples,
        &model_file.model,
        &test,
        &model_file.train_config.task_prefix,
    )
    .map_err(|e| match e {
        hhi_core::distill::DistillError::Backend(b) => PipelineError::Backend(b),
        other => PipelineError::validation(other.to_string()),
    })?;
    write_jsonl(output, &records)?;
    if let Some(path) = stats_out {
        write_json(path, &stats)?;
    }
    if let Some(path) = labeled_output {
        let labeled = attach_pseudo_labels(&samples, &records);
        write_jsonl(path, &labeled)?;
    }
    finish(
        manifest,
        &mpath,
        &[
            ("samples", samples.len() as u64),
            ("accepted", stats.n_samples as u64),
            ("unique_verbs", stats.n_unique_verbs as u64),
            ("unique_interactions", stats.n_unique_interactions as u64),
        ],
    )
}

fn build_bench_cmd(
    ctx: &Context,
    imsitu: Option<&Path>,
    wenda: Option<&Path>,
    output: &Path,
    support_table: Option<&Path>,
    min_verb_support: Option<usize>,
) -> Result<()> {
    match (imsitu, wenda) {
        (Some(imsitu), None) => {
            build_imsitu_cmd(ctx, imsitu, output, support_table, min_verb_support)
        }
        (None, Some(wenda)) => build_wenda_cmd(ctx, wenda, output),
        _ => Err(PipelineError::validation("pass exactly one of --imsitu or --wenda")),
    }
}

fn build_imsitu_cmd(
    ctx: &Context,
    imsitu: &Path,
    output: &Path,
    support_table: Option<&Path>,
    min_verb_support: Option<usize>,
) -> Result<()> {
    let mut cfg = ctx.config.bench.clone();
    if let Some(min) = min_verb_support {
        cfg.min_verb_support = min;
    }
    let extra = serde_json::to_string(&cfg).expect("config serializes");
    let mut outputs = vec![output];
    if let Some(path) = support_table {
        outputs.push(path);
    }
    let (manifest, mpath, noop) =
        stage_preflight(ctx, "build-bench", &extra, &[("imsitu", imsitu)], &outputs)?;
    if noop {
        report_noop("build-bench");
        return Ok(());
    }

    let samples: Vec<SituSample> = read_jsonl(imsitu)?;
    let nli = ctx.backends.nli()?;
    let mut classifier = HumanArgClassifier::new(nli.as_ref(), cfg.nli_threshold);
    let (subset, table) = build_imsitu_hhi(&samples, &cfg, &mut classifier)
        .map_err(|e| match e {
            hhi_core::bench::BenchError::Backend(b) => PipelineError::Backend(b),
            other => PipelineError::validation(other.to_string()),
        })?;
    write_jsonl(output, &subset)?;
    if let Some(path) = support_table {
        let mut tsv = String::new();
        for row in &table {
            tsv.push_str(&format!("{}\t{}\n", row.verb, row.support));
        }
        std::fs::write(path, tsv).map_err(|e| PipelineError::io(path, e))?;
    }
    finish(
        manifest,
        &mpath,
        &[
            ("samples", samples.len() as u64),
            ("subset", subset.len() as u64),
            ("verbs", table.iter().filter(|r| r.support >= cfg.min_verb_support).count() as u64),
            ("nli_calls", classifier.backend_calls() as u64),
        ],
    )
}

fn build_wenda_cmd(ctx: &Context, wenda: &Path, output: &Path) -> Result<()> {
    let (manifest, mpath, noop) =
        stage_preflight(ctx, "build-bench", "wenda", &[("wenda", wenda)], &[output])?;
    if noop {
        report_noop("build-bench");
        return Ok(());
    }
    let records: Vec<WendaRecord> = read_jsonl(wenda)?;
    let (samples, by_source) =
        ingest_wenda(&records).map_err(|e| PipelineError::validation(e.to_string()))?;
    write_jsonl(output, &samples)?;
    let mut counts: Vec<(String, u64)> = vec![("items".to_string(), samples.len() as u64)];
    for (source, count) in by_source {
        counts.push((format!("source-{source}"), count as u64));
    }
    let count_refs: Vec<(&str, u64)> = counts.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    finish(manifest, &mpath, &count_refs)
}

/// Model file written by train-captioner.
#[derive(Debug, Serialize, Deserialize)]
pub struct CaptionerModelFile {
    pub backend: String,
    pub train_config: CaptionerTrainConfig,
    pub target: String,
    pub model: StubCaptioner,
}

fn train_captioner_cmd(ctx: &Context, dataset: &Path, target: TargetArg, output: &Path) -> Result<()> {
    let extra = format!("target={target:?}");
    let (manifest, mpath, noop) =
        stage_preflight(ctx, "train-captioner", &extra, &[("dataset", dataset)], &[output])?;
    if noop {
        report_noop("train-captioner");
        return Ok(());
    }
    let samples: Vec<LabeledSample> = read_jsonl(dataset)?;
    let mode = match target {
        TargetArg::PseudoLabel => TrainingTarget::PseudoLabel,
        TargetArg::RawCaption => TrainingTarget::RawCaption,
    };
    let training_set =
        build_training_set(&samples, mode).map_err(|e| PipelineError::validation(e.to_string()))?;
    use hhi_core::backend::CaptionerBackend;
    let mut model = StubCaptioner::default();
    for _ in 0..ctx.config.captioner.epochs {
        model.fit(&training_set)?;
    }
    write_json(
        output,
        &CaptionerModelFile {
            backend: "stub".to_string(),
            train_config: ctx.config.captioner.clone(),
            target: format!("{mode:?}"),
            model,
        },
    )?;
    finish(manifest, &mpath, &[("samples", samples.len() as u64)])
}

fn decode_cmd(ctx: &Context, model: &Path, dataset: &Path, beams: usize, output: &Path) -> Result<()> {
    let extra = format!("beams={beams}");
    let (manifest, mpath, noop) = stage_preflight(
        ctx,
        "decode",
        &extra,
        &[("model", model), ("dataset", dataset)],
        &[output],
    )?;
    if noop {
        report_noop("decode");
        return Ok(());
    }
    let model_file: CaptionerModelFile = read_json(model)?;
    let samples: Vec<LabeledSample> = read_jsonl(dataset)?;
    use hhi_core::backend::CaptionerBackend;
    let predictions: Vec<Prediction> = ordered_map(&samples, ctx.config.workers, |sample| {
        let set = model_file.model.decode(&sample.image_ref, beams)?;
        set.validate()?;
        Ok::<_, hhi_core::backend::BackendError>(Prediction {
            sample_id: sample.id.clone(),
            beams: set.beams,
        })
    })
    .map_err(PipelineError::Backend)?;
    write_jsonl(output, &predictions)?;
    finish(manifest, &mpath, &[("predictions", predictions.len() as u64)])
}

/// Report JSON written by evaluate.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReportFile {
    Wenda { label: String, mode: String, evaluation: WendaEvaluation },
    ImSitu { label: String, mode: String, evaluation: ImSituEvaluation },
}

#[allow(clippy::too_many_arguments)]
fn evaluate_cmd(
    ctx: &Context,
    predictions: &Path,
    benchmark: &Path,
    mode: BenchModeArg,
    output: &Path,
    tables: Option<&Path>,
    k: Option<&str>,
    wrap_verbs: bool,
    verb_mode: Option<VerbModeArg>,
    label: &str,
) -> Result<()> {
    let k_list = match k {
        Some(text) => text
            .split(',')
            .map(|part| part.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| PipelineError::validation(format!("bad --k list: {e}")))?,
        None => ctx.config.metrics.k_list.clone(),
    };
    let options = EvalOptions {
        k_list,
        verb_mode: verb_mode.map(VerbMode::from).unwrap_or(VerbMode::SlotFormat),
        wrap_verbs,
    };
    let extra = format!("{options:?} label={label} mode={mode:?}");
    let mut outputs = vec![output];
    if let Some(path) = tables {
        outputs.push(path);
    }
    let (manifest, mpath, noop) = stage_preflight(
        ctx,
        "evaluate",
        &extra,
        &[("predictions", predictions), ("benchmark", benchmark)],
        &outputs,
    )?;
    if noop {
        report_noop("evaluate");
        return Ok(());
    }

    let prediction_rows: Vec<Prediction> = read_jsonl(predictions)?;
    let nli = ctx.backends.nli()?;
    let parser = ctx.backends.parser()?;
    let similarity = ctx.backends.similarity()?;
    let embeddings = ctx.backends.embeddings()?;
    let metric_backends = MetricBackends {
        similarity: similarity.as_ref(),
        nli: nli.as_ref(),
        embeddings: embeddings.as_ref(),
        parser: Some(parser.as_ref()),
    };

    let (report, rendered, items) = match mode {
        BenchModeArg::Wenda => {
            let samples: Vec<LabeledSample> = read_jsonl(benchmark)?;
            let items = wenda_items(&samples).map_err(map_metric_error)?;
            let evaluation = evaluate_wenda(&items, &prediction_rows, &metric_backends, &options)
                .map_err(map_metric_error)?;
            let rendered = format_wenda_tables(&[(label.to_string(), &evaluation)]);
            (
                ReportFile::Wenda {
                    label: label.to_string(),
                    mode: "wenda".to_string(),
                    evaluation,
                },
                rendered,
                items.len(),
            )
        }
        BenchModeArg::Imsitu => {
            let samples: Vec<SituSample> = read_jsonl(benchmark)?;
            let items: Vec<ImSituItem> = samples
                .iter()
                .map(|s| ImSituItem { id: s.id.clone(), verb: s.verb.clone(), split: s.split })
                .collect();
            let evaluation = evaluate_imsitu(&items, &prediction_rows, &metric_backends, &options)
                .map_err(map_metric_error)?;
            let rendered = format_imsitu_tables(&[(label.to_string(), &evaluation)], 15);
            (
                ReportFile::ImSitu {
                    label: label.to_string(),
                    mode: "imsitu".to_string(),
                    evaluation,
                },
                rendered,
                items.len(),
            )
        }
    };
    write_json(output, &report)?;
    if let Some(path) = tables {
        std::fs::write(path, &rendered).map_err(|e| PipelineError::io(path, e))?;
    }
    finish(manifest, &mpath, &[("items", items as u64)])
}

fn map_metric_error(e: hhi_core::metrics::MetricError) -> PipelineError {
    match e {
        hhi_core::metrics::MetricError::Backend(b) => PipelineError::Backend(b),
        other => PipelineError::validation(other.to_string()),
    }
}

fn report_cmd(inputs: &[String], mode: BenchModeArg, output: Option<&Path>) -> Result<()> {
    let mut wenda_rows: Vec<(String, WendaEvaluation)> = Vec::new();
    let mut imsitu_rows: Vec<(String, ImSituEvaluation)> = Vec::new();
    for spec in inputs {
        let (label, path) = match spec.split_once('=') {
            Some((label, path)) => (Some(label.to_string()), PathBuf::from(path)),
            None => (None, PathBuf::from(spec)),
        };
        let report: ReportFile = read_json(&path)?;
        match report {
            ReportFile::Wenda { label: stored, evaluation, .. } => {
                wenda_rows.push((label.unwrap_or(stored), evaluation));
            }
            ReportFile::ImSitu { label: stored, evaluation, .. } => {
                imsitu_rows.push((label.unwrap_or(stored), evaluation));
            }
        }
    }
    let rendered = match mode {
        BenchModeArg::Wenda => {
            if wenda_rows.is_empty() {
                return Err(PipelineError::validation("no curated-benchmark reports among inputs"));
            }
            let refs: Vec<(String, &WendaEvaluation)> =
                wenda_rows.iter().map(|(l, e)| (l.clone(), e)).collect();
            format_wenda_tables(&refs)
        }
        BenchModeArg::Imsitu => {
            if imsitu_rows.is_empty() {
                return Err(PipelineError::validation("no situation-benchmark reports among inputs"));
            }
            let refs: Vec<(String, &ImSituEvaluation)> =
                imsitu_rows.iter().map(|(l, e)| (l.clone(), e)).collect();
            format_imsitu_tables(&refs, 15)
        }
    };
    match output {
        Some(path) => std::fs::write(path, rendered).map_err(|e| PipelineError::io(path, e))?,
        None => print!("{rendered}"),
    }
    Ok(())
}

/// Dataset samples eligible for captioner training: pseudo-label records
/// joined back onto their samples.
pub fn attach_pseudo_labels(
    samples: &[LabeledSample],
    records: &[hhi_core::distill::PseudoLabelRecord],
) -> Vec<LabeledSample> {
    let by_id: BTreeMap<&str, &hhi_core::distill::PseudoLabelRecord> =
        records.iter().map(|r| (r.sample_id.as_str(), r)).collect();
    samples
        .iter()
        .filter_map(|sample| {
            let record = by_id.get(sample.id.as_str())?;
            if !record.accepted {
                return None;
            }
            let mut labeled = sample.clone();
            labeled.label = record.label.clone();
            labeled.split = Split::Train;
            Some(labeled)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
