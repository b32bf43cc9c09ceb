//! Caption harvesting and rule-based interaction extraction.
//!
//! `harvest_captions` pulls caption-like lines out of raw news text by length
//! and marker patterns, then scrubs the markers. `extract_interaction` walks a
//! dependency parse and builds an interaction text from the first verb with a
//! person subject, its argument heads, and their determiners, masking person
//! entities as `[NAME]`.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inflect::{to_present_continuous, InflectError};
use crate::names::NAME_TOKEN;
use crate::parse::{DependencyParse, DEFAULT_BANNED_ENTITY_TYPES};
use crate::types::Interaction;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExtractError {
    #[error("verb lemma could not be inflected: {0}")]
    Inflect(#[from] InflectError),
    #[error("harvest config invalid: {0}")]
    BadConfig(&'static str),
}

/// Line markers that identify caption-like lines in scraped news text.
pub const DEFAULT_SELECT_PATTERNS: &[&str] = &[
    "(left)",
    "(right)",
    "(center)",
    ", left,",
    ", right,",
    ", center,",
    ", centre,",
    ", pictured,",
    "PHOTO: ",
    "Photo by",
    "Image copyright",
    "Getty ",
    "AP Photo",
    "AP Image",
];

/// Templated credit/byline fragments scrubbed from harvested captions, in the
/// pattern mini-syntax understood by [`StripPattern::parse`].
pub const DEFAULT_STRIP_PATTERNS: &[&str] = &[
    "(Image ...)",
    "(Photo ...)",
    "(AP Photo ...)",
    "(Credit ...)",
    "[Image ...]",
    "[Featured Image ...]",
    "Getty Images",
    "Image copyright ... Image caption",
    "Photo:",
    "FILE PHOTO:",
    "Image (number) of (number)",
];

/// A strip rule. The textual form supports three templates besides literals:
/// `"(X ...)"` / `"[X ...]"` (bracketed group opened by a prefix), `"A ... B"`
/// (a pair of literals removed together, keeping the text between them), and
/// `"(number)"` placeholders matching digit runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StripPattern {
    Literal(String),
    /// Removes from `open`+`prefix` through the next `close` char.
    Bracketed { open: char, prefix: String, close: char },
    /// Removes both literals when `first` occurs before `second`.
    Pair { first: String, second: String },
    /// Alternating literal segments separated by digit runs.
    Numbered { segments: Vec<String> },
}

impl StripPattern {
    pub fn parse(pattern: &str) -> Result<Self, ExtractError> {
        if pattern.is_empty() {
            return Err(ExtractError::BadConfig("empty strip pattern"));
        }
        if pattern.contains("(number)") {
            let segments: Vec<String> = pattern.split("(number)").map(str::to_string).collect();
            return Ok(StripPattern::Numbered { segments });
        }
        if let Some(inner) = pattern.strip_prefix('(').and_then(|p| p.strip_suffix("...)")) {
            return Ok(StripPattern::Bracketed {
                open: '(',
                prefix: inner.trim_end().to_string(),
                close: ')',
            });
        }
        if let Some(inner) = pattern.strip_prefix('[').and_then(|p| p.strip_suffix("...]")) {
            return Ok(StripPattern::Bracketed {
                open: '[',
                prefix: inner.trim_end().to_string(),
                close: ']',
            });
        }
        if let Some((first, second)) = pattern.split_once(" ... ") {
            return Ok(StripPattern::Pair {
                first: first.to_string(),
                second: second.to_string(),
            });
        }
        Ok(StripPattern::Literal(pattern.to_string()))
    }

    /// Removes every occurrence of the pattern from `text`.
    fn strip(&self, text: &mut String) {
        match self {
            StripPattern::Literal(literal) => {
                while let Some(at) = text.find(literal.as_str()) {
                    text.replace_range(at..at + literal.len(), "");
                }
            }
            StripPattern::Bracketed { open, prefix, close } => {
                let needle = alloc::format!("{open}{prefix}");
                loop {
                    let Some(start) = text.find(&needle) else { break };
                    let Some(rel) = text[start..].find(*close) else { break };
                    text.replace_range(start..start + rel + close.len_utf8(), "");
                }
            }
            StripPattern::Pair { first, second } => {
                loop {
                    let Some(a) = text.find(first.as_str()) else { break };
                    let after = a + first.len();
                    let Some(rel) = text[after..].find(second.as_str()) else { break };
                    let b = after + rel;
                    text.replace_range(b..b + second.len(), "");
                    text.replace_range(a..a + first.len(), "");
                }
            }
            StripPattern::Numbered { segments } => {
                while let Some((start, end)) = find_numbered(text, segments) {
                    text.replace_range(start..end, "");
                }
            }
        }
    }
}

fn find_numbered(text: &str, segments: &[String]) -> Option<(usize, usize)> {
    let first = segments.first()?;
    let mut from = 0;
    'outer: while let Some(rel) = text[from..].find(first.as_str()) {
        let start = from + rel;
        let mut pos = start + first.len();
        for segment in &segments[1..] {
            let digits = text[pos..].chars().take_while(|c| c.is_ascii_digit()).count();
            if digits == 0 {
                from = start + 1;
                continue 'outer;
            }
            pos += digits;
            if !text[pos..].starts_with(segment.as_str()) {
                from = start + 1;
                continue 'outer;
            }
            pos += segment.len();
        }
        return Some((start, pos));
    }
    None
}

impl TryFrom<String> for StripPattern {
    type Error = ExtractError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::parse(&value)
    }
}

impl From<StripPattern> for String {
    fn from(pattern: StripPattern) -> Self {
        match pattern {
            StripPattern::Literal(s) => s,
            StripPattern::Bracketed { open, prefix, close } => {
                alloc::format!("{open}{prefix} ...{close}")
            }
            StripPattern::Pair { first, second } => alloc::format!("{first} ... {second}"),
            StripPattern::Numbered { segments } => segments.join("(number)"),
        }
    }
}

/// Configuration for [`harvest_captions`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarvestConfig {
    /// Maximum line length in characters.
    pub max_chars: usize,
    /// A line is kept only if it contains at least one of these.
    pub select_patterns: Vec<String>,
    /// Scrubbed from kept lines, before the select patterns themselves.
    pub strip_patterns: Vec<StripPattern>,
}

impl Default for HarvestConfig {
    fn default() -> Self {
        Self {
            max_chars: 1000,
            select_patterns: DEFAULT_SELECT_PATTERNS.iter().map(|s| s.to_string()).collect(),
            strip_patterns: DEFAULT_STRIP_PATTERNS
                .iter()
                .map(|s| StripPattern::parse(s).expect("bundled patterns are valid"))
                .collect(),
        }
    }
}

impl HarvestConfig {
    pub fn validate(&self) -> Result<(), ExtractError> {
        if self.max_chars == 0 {
            return Err(ExtractError::BadConfig("max_chars must be positive"));
        }
        if self.select_patterns.is_empty() || self.strip_patterns.is_empty() {
            return Err(ExtractError::BadConfig("pattern lists must be non-empty"));
        }
        Ok(())
    }
}

/// Selects caption-like lines and scrubs credit markers from them.
///
/// A line survives if it has at most `max_chars` characters and contains a
/// select pattern. Strip templates are applied first, then the select markers
/// themselves are removed as literals, and whitespace runs are collapsed.
/// Lines that end up empty are dropped.
pub fn harvest_captions<'a, I>(lines: I, cfg: &HarvestConfig) -> Vec<String>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut kept = Vec::new();
    for line in lines {
        if line.chars().count() > cfg.max_chars {
            continue;
        }
        if !cfg.select_patterns.iter().any(|p| line.contains(p.as_str())) {
            continue;
        }
        let mut text = line.to_string();
        for pattern in &cfg.strip_patterns {
            pattern.strip(&mut text);
        }
        for literal in &cfg.select_patterns {
            while let Some(at) = text.find(literal.as_str()) {
                text.replace_range(at..at + literal.len(), "");
            }
        }
        let normalized = text.split_whitespace().collect::<Vec<_>>().join(" ");
        if !normalized.is_empty() {
            kept.push(normalized);
        }
    }
    kept
}

/// Configuration for [`extract_interaction`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionRuleConfig {
    /// Argument texts touching entities of these types are dropped.
    pub banned_entity_types: BTreeSet<String>,
    /// Minimum number of person slots in the final text.
    pub min_name_entities: usize,
    /// Require the chosen verb's subject to be a person entity.
    pub require_subject_name: bool,
}

impl Default for ExtractionRuleConfig {
    fn default() -> Self {
        Self {
            banned_entity_types: DEFAULT_BANNED_ENTITY_TYPES.iter().map(|s| s.to_string()).collect(),
            min_name_entities: 2,
            require_subject_name: true,
        }
    }
}

/// Child relations never gathered as verb arguments.
const SKIP_DEPRELS: &[&str] = &[
    "punct", "cc", "conj", "mark", "aux", "auxpass", "cop", "expl", "prt", "case", "dep",
];
/// Child POS classes never gathered (clausal or functional material).
const SKIP_POS: &[&str] = &["VERB", "AUX", "PUNCT", "CCONJ", "SCONJ", "PART", "SYM", "X"];

/// One gathered argument: rendered words keyed by token index for surface
/// ordering, plus the anchor position used to order arguments.
struct Argument {
    anchor: usize,
    words: Vec<(usize, String)>,
}

/// Extracts an interaction from a parsed caption, or `None` when no verb with
/// a qualifying subject exists or too few person entities remain.
///
/// The caption behind `parse` must have person names filled (entity labels are
/// only meaningful on real names); the output is re-masked to `[NAME]`.
pub fn extract_interaction(
    parse: &DependencyParse,
    cfg: &ExtractionRuleConfig,
) -> Result<Option<Interaction>, ExtractError> {
    let tokens = parse.tokens();
    let verb = tokens.iter().enumerate().position(|(i, t)| {
        t.pos == "VERB"
            && parse.children(i).any(|c| {
                tokens[c].deprel.starts_with("nsubj")
                    && (!cfg.require_subject_name || tokens[c].is_person())
            })
    });
    let Some(verb) = verb else { return Ok(None) };

    let mut arguments: Vec<Argument> = Vec::new();
    for child in parse.children(verb) {
        if let Some(argument) = gather_argument(parse, child, cfg) {
            arguments.push(argument);
        }
    }
    arguments.sort_by_key(|a| a.anchor);

    let ing = to_present_continuous(&tokens[verb].lemma)?;
    let mut words: Vec<String> = Vec::new();
    let mut verb_emitted = false;
    for argument in &arguments {
        if !verb_emitted && argument.anchor > verb {
            words.push(ing.clone());
            verb_emitted = true;
        }
        let mut ordered = argument.words.clone();
        ordered.sort_by_key(|(key, _)| *key);
        words.extend(ordered.into_iter().map(|(_, w)| w));
    }
    if !verb_emitted {
        words.push(ing);
    }
    let text = words.join(" ");

    if crate::names::count_slots(&text) < cfg.min_name_entities {
        return Ok(None);
    }
    Ok(Some(Interaction::new(text).expect("slot count checked")))
}

fn gather_argument(
    parse: &DependencyParse,
    child: usize,
    cfg: &ExtractionRuleConfig,
) -> Option<Argument> {
    let tokens = parse.tokens();
    let token = &tokens[child];
    if SKIP_DEPRELS.contains(&token.deprel.as_str()) || SKIP_POS.contains(&token.pos.as_str()) {
        return None;
    }
    let mut words: Vec<(usize, String)> = Vec::new();
    let mut surface_indices: Vec<usize> = Vec::new();

    if token.is_person() {
        push_person(parse, child, &mut words);
    } else if token.pos == "ADP" {
        words.push((child, token.surface.clone()));
        surface_indices.push(child);
        if let Some(object) = resolve_prep_object(parse, child) {
            if tokens[object].is_person() {
                push_person(parse, object, &mut words);
            } else {
                push_nominal(parse, object, &mut words, &mut surface_indices);
            }
        }
    } else {
        push_nominal(parse, child, &mut words, &mut surface_indices);
    }

    // Arguments whose emitted text touches a banned entity are dropped whole.
    for index in surface_indices {
        if let Some(entity) = &tokens[index].entity {
            if cfg.banned_entity_types.contains(entity) {
                return None;
            }
        }
    }
    let anchor = words.iter().map(|(key, _)| *key).min()?;
    Some(Argument { anchor, words })
}

/// Emits `[NAME]` for the entity at `index`, expanding coordinated person
/// entities (`NAME and NAME`) to include each conjunct.
fn push_person(parse: &DependencyParse, index: usize, words: &mut Vec<(usize, String)>) {
    let tokens = parse.tokens();
    let run = parse.entity_run(index);
    words.push((run.start, NAME_TOKEN.to_string()));

    let mut queue = alloc::vec![index];
    let mut conjuncts: Vec<usize> = Vec::new();
    while let Some(current) = queue.pop() {
        for child in parse.children(current) {
            if tokens[child].deprel == "conj" && tokens[child].is_person() {
                conjuncts.push(child);
                queue.push(child);
            }
        }
    }
    conjuncts.sort_unstable();
    for conjunct in conjuncts {
        let connector = parse
            .children(tokens[conjunct].head)
            .filter(|&c| tokens[c].deprel == "cc" && c < conjunct)
            .max()
            .map(|c| tokens[c].surface.clone())
            .unwrap_or_else(|| "and".to_string());
        let run = parse.entity_run(conjunct);
        words.push((run.start.saturating_sub(1), connector));
        words.push((run.start, NAME_TOKEN.to_string()));
    }
}

/// Emits a noun (or other nominal) together with its determiner or possessive.
fn push_nominal(
    parse: &DependencyParse,
    index: usize,
    words: &mut Vec<(usize, String)>,
    surface_indices: &mut Vec<usize>,
) {
    if let Some(det) = parse
        .children(index)
        .find(|&c| matches!(parse.tokens()[c].deprel.as_str(), "det" | "poss"))
    {
        words.push((det, parse.tokens()[det].surface.clone()));
        surface_indices.push(det);
    }
    words.push((index, parse.tokens()[index].surface.clone()));
    surface_indices.push(index);
}

/// The nominal object of a preposition; recurses through at most one chained
/// preposition.
fn resolve_prep_object(parse: &DependencyParse, prep: usize) -> Option<usize> {
    let object = parse
        .children(prep)
        .find(|&c| parse.tokens()[c].deprel == "pobj")?;
    if parse.tokens()[object].pos == "ADP" {
        return parse
            .children(object)
            .find(|&c| parse.tokens()[c].deprel == "pobj");
    }
    Some(object)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strip_pattern_syntax() {
        assert_eq!(
            StripPattern::parse("Getty Images").unwrap(),
            StripPattern::Literal("Getty Images".to_string())
        );
        assert_eq!(
            StripPattern::parse("(AP Photo ...)").unwrap(),
            StripPattern::Bracketed { open: '(', prefix: "AP Photo".to_string(), close: ')' }
        );
        assert_eq!(
            StripPattern::parse("Image copyright ... Image caption").unwrap(),
            StripPattern::Pair {
                first: "Image copyright".to_string(),
                second: "Image caption".to_string()
            }
        );
        assert!(matches!(
            StripPattern::parse("Image (number) of (number)").unwrap(),
            StripPattern::Numbered { .. }
        ));
    }

    #[test]
    fn harvest_keeps_and_scrubs_marked_lines() {
        let cfg = HarvestConfig::default();
        let lines = [
            "Northern Ireland's Corry Evans, left, and Germany's Toni Kroos battle for the ball. (Brian Lawless/PA via AP)",
            "Arizona Coyotes defenseman Luke Schenn (2) reaches for the puck in Los Angeles on Saturday, Feb. 3, 2018. (AP Photo/Reed Saxon)",
            "A line with no caption markers at all.",
        ];
        let kept = harvest_captions(lines, &cfg);
        assert_eq!(kept.len(), 2);
        assert_eq!(
            kept[0],
            "Northern Ireland's Corry Evans and Germany's Toni Kroos battle for the ball. (Brian Lawless/PA via AP)"
        );
        assert_eq!(
            kept[1],
            "Arizona Coyotes defenseman Luke Schenn (2) reaches for the puck in Los Angeles on Saturday, Feb. 3, 2018."
        );
    }

    #[test]
    fn harvest_drops_overlong_lines() {
        let cfg = HarvestConfig::default();
        let long = alloc::format!("{} , left, tail", "x".repeat(1500));
        assert!(harvest_captions([long.as_str()], &cfg).is_empty());
    }

    #[test]
    fn harvest_removes_copyright_caption_pair() {
        let cfg = HarvestConfig::default();
        let line = "Image copyright Kalpana Vaughan Wilson Image caption Kalpana Wilson pictured with daughter Clara";
        let kept = harvest_captions([line], &cfg);
        assert_eq!(kept, ["Kalpana Vaughan Wilson Kalpana Wilson pictured with daughter Clara"]);
    }

    #[test]
    fn harvest_removes_numbered_template() {
        let cfg = HarvestConfig::default();
        let line = "Image 3 of 11 Players celebrate, pictured, after the match";
        let kept = harvest_captions([line], &cfg);
        assert_eq!(kept, ["Players celebrate after the match"]);
    }

    #[test]
    fn numbered_template_requires_digits() {
        let segments = alloc::vec!["Image ".to_string(), " of ".to_string(), String::new()];
        assert!(find_numbered("Image x of y", &segments).is_none());
        assert_eq!(find_numbered("see Image 12 of 30 here", &segments), Some((4, 18)));
    }

    const ANCESTRY: &str = "\
1\tAdam\tadam\tPROPN\t_\t_\t4\tnsubj\t_\tstart_char=0|end_char=4|entity=NAME
2\tand\tand\tCCONJ\t_\t_\t1\tcc\t_\tstart_char=5|end_char=8
3\tBob\tbob\tPROPN\t_\t_\t1\tconj\t_\tstart_char=9|end_char=12|entity=NAME
4\tdiscuss\tdiscuss\tVERB\t_\t_\t0\troot\t_\tstart_char=13|end_char=20
5\tAncestry\tancestry\tPROPN\t_\t_\t4\tdobj\t_\tstart_char=21|end_char=29
6\tat\tat\tADP\t_\t_\t4\tprep\t_\tstart_char=30|end_char=32
7\tthe\tthe\tDET\t_\t_\t11\tdet\t_\tstart_char=33|end_char=36
8\tMaltz\tmaltz\tPROPN\t_\t_\t11\tcompound\t_\tstart_char=37|end_char=42
9\tPerforming\tperforming\tPROPN\t_\t_\t11\tcompound\t_\tstart_char=43|end_char=53
10\tArts\tarts\tPROPN\t_\t_\t11\tcompound\t_\tstart_char=54|end_char=58
11\tCenter\tcenter\tPROPN\t_\t_\t6\tpobj\t_\tstart_char=59|end_char=65
";

    /// Verbless caption: "Luge World Cup Men 2017/18 in Altenberg : Flower Ceremony"
    const VERBLESS: &str = "\
1\tLuge\tluge\tPROPN\t_\t_\t3\tcompound\t_\tstart_char=0|end_char=4|entity=ORG
2\tWorld\tworld\tPROPN\t_\t_\t3\tcompound\t_\tstart_char=5|end_char=10|entity=ORG
3\tCup\tcup\tPROPN\t_\t_\t0\troot\t_\tstart_char=11|end_char=14|entity=ORG
4\tMen\tman\tNOUN\t_\t_\t3\tappos\t_\tstart_char=15|end_char=18
5\t2017/18\t2017/18\tNUM\t_\t_\t3\tnummod\t_\tstart_char=19|end_char=26|entity=DATE
6\tin\tin\tADP\t_\t_\t3\tprep\t_\tstart_char=27|end_char=29
7\tAltenberg\taltenberg\tPROPN\t_\t_\t6\tpobj\t_\tstart_char=30|end_char=39|entity=GPE
8\t:\t:\tPUNCT\t_\t_\t3\tpunct\t_\tstart_char=40|end_char=41
9\tFlower\tflower\tPROPN\t_\t_\t10\tcompound\t_\tstart_char=42|end_char=48
10\tCeremony\tceremony\tPROPN\t_\t_\t3\tappos\t_\tstart_char=49|end_char=57
";

    #[test]
    fn extracts_interaction_with_coordination_object_and_prep() {
        let parse = crate::parse::parse_conllu(ANCESTRY).unwrap().remove(0).1;
        let out = extract_interaction(&parse, &ExtractionRuleConfig::default()).unwrap();
        assert_eq!(
            out.unwrap().text(),
            "[NAME] and [NAME] discussing Ancestry at the Center"
        );
    }

    #[test]
    fn verbless_caption_yields_none() {
        let parse = crate::parse::parse_conllu(VERBLESS).unwrap().remove(0).1;
        let out = extract_interaction(&parse, &ExtractionRuleConfig::default()).unwrap();
        assert_eq!(out, None);
    }

    #[test]
    fn extraction_is_deterministic() {
        let parse = crate::parse::parse_conllu(ANCESTRY).unwrap().remove(0).1;
        let cfg = ExtractionRuleConfig::default();
        let first = extract_interaction(&parse, &cfg).unwrap();
        let second = extract_interaction(&parse, &cfg).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn min_name_entities_filters_single_person() {
        // "Adam waves happily": one person only.
        let single = "\
1\tAdam\tadam\tPROPN\t_\t_\t2\tnsubj\t_\tstart_char=0|end_char=4|entity=NAME
2\twaves\twave\tVERB\t_\t_\t0\troot\t_\tstart_char=5|end_char=10
3\thappily\thappily\tADV\t_\t_\t2\tadvmod\t_\tstart_char=11|end_char=18
";
        let parse = crate::parse::parse_conllu(single).unwrap().remove(0).1;
        let out = extract_interaction(&parse, &ExtractionRuleConfig::default()).unwrap();
        assert_eq!(out, None);
    }
}
