//! A deterministic rule-based parser backend for desk-scale runs.
//!
//! Good enough for the short interaction-style strings the pipeline parses
//! at generation and evaluation time: it finds the main "-ing" or lexicon
//! verb, tags person names from a name lexicon, attaches prepositions flat
//! under the verb, and groups determiner/compound/object nouns. Production
//! runs replace it with a real parser feeding CoNLL-U files.

use std::collections::BTreeSet;

use hhi_core::backend::{BackendError, ParserBackend};
use hhi_core::names::{DEFAULT_NAME_LEXICON, NAME_TOKEN};
use hhi_core::parse::{DependencyParse, ParseToken};

const PREPOSITIONS: &[&str] = &[
    "about", "above", "across", "after", "against", "along", "around", "at", "before", "behind",
    "below", "beside", "between", "by", "during", "for", "from", "in", "inside", "into", "near",
    "of", "off", "on", "onto", "outside", "over", "through", "to", "toward", "towards", "under",
    "upon", "with", "without",
];

const DETERMINERS: &[&str] = &[
    "a", "an", "another", "any", "both", "each", "every", "her", "his", "its", "my", "no", "our",
    "some", "that", "the", "their", "these", "this", "those", "your",
];

const CONJUNCTIONS: &[&str] = &["and", "or", "&"];

const PRONOUNS: &[&str] = &["he", "him", "i", "it", "she", "them", "they", "us", "we", "you"];

const AUXILIARIES: &[&str] = &[
    "am", "are", "be", "been", "being", "can", "could", "did", "do", "does", "had", "has", "have",
    "is", "may", "might", "must", "shall", "should", "was", "were", "will", "would",
];

/// "-ing" words that are nouns in caption-like text, not verb forms.
const ING_NOUNS: &[&str] = &[
    "anything", "ceiling", "darling", "duckling", "everything", "evening", "king", "morning",
    "nothing", "ring", "sibling", "something", "spring", "string", "thing", "wedding", "wing",
];

/// Finite verb forms seen in caption text, mapped to their lemma.
const VERB_FORMS: &[(&str, &str)] = &[
    ("battle", "battle"), ("battles", "battle"), ("bid", "bid"), ("bids", "bid"),
    ("celebrate", "celebrate"), ("celebrates", "celebrate"), ("discuss", "discuss"),
    ("discusses", "discuss"), ("greet", "greet"), ("greets", "greet"), ("hug", "hug"),
    ("hugs", "hug"), ("jump", "jump"), ("jumps", "jump"), ("meet", "meet"), ("meets", "meet"),
    ("perform", "perform"), ("performs", "perform"), ("pose", "pose"), ("poses", "pose"),
    ("reach", "reach"), ("reaches", "reach"), ("receive", "receive"), ("receives", "receive"),
    ("shake", "shake"), ("shakes", "shake"), ("sit", "sit"), ("sits", "sit"), ("speak", "speak"),
    ("speaks", "speak"), ("stand", "stand"), ("stands", "stand"), ("talk", "talk"),
    ("talks", "talk"), ("walk", "walk"), ("walks", "walk"), ("wave", "wave"), ("waves", "wave"),
    ("welcome", "welcome"), ("welcomes", "welcome"),
];

/// "-ing" forms whose lemma is not recovered by the regular rules.
const IRREGULAR_ING: &[(&str, &str)] = &[
    ("being", "be"), ("coming", "come"), ("dancing", "dance"), ("dyeing", "dye"),
    ("giving", "give"), ("having", "have"), ("hitting", "hit"), ("leaving", "leave"),
    ("lying", "lie"), ("making", "make"), ("posing", "pose"), ("riding", "ride"),
    ("serving", "serve"), ("shaking", "shake"), ("sharing", "share"), ("smiling", "smile"),
    ("taking", "take"), ("tying", "tie"), ("waving", "wave"), ("welcoming", "welcome"),
    ("writing", "write"),
];

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tag {
    Verb,
    Aux,
    Adp,
    Det,
    Cconj,
    Pron,
    Propn,
    Noun,
    Num,
    Punct,
    Part,
}

/// Rule-based single-sentence parser.
#[derive(Debug, Clone)]
pub struct HeuristicParser {
    person_names: BTreeSet<String>,
}

impl Default for HeuristicParser {
    fn default() -> Self {
        Self::with_names(DEFAULT_NAME_LEXICON.iter().map(|s| s.to_string()))
    }
}

impl HeuristicParser {
    /// Person entity tagging recognizes exactly these names (plus the
    /// `[NAME]` mask token itself).
    pub fn with_names(names: impl IntoIterator<Item = String>) -> Self {
        Self { person_names: names.into_iter().collect() }
    }

    fn tag(&self, surface: &str) -> (Tag, String, bool) {
        let lower = surface.to_lowercase();
        if surface == NAME_TOKEN || self.person_names.contains(surface) {
            return (Tag::Propn, lower, true);
        }
        if surface.chars().all(|c| !c.is_alphanumeric()) {
            return (Tag::Punct, lower, false);
        }
        if surface == "'s" {
            return (Tag::Part, lower, false);
        }
        if AUXILIARIES.contains(&lower.as_str()) {
            return (Tag::Aux, lemma_of_aux(&lower), false);
        }
        if PREPOSITIONS.contains(&lower.as_str()) {
            return (Tag::Adp, lower, false);
        }
        if DETERMINERS.contains(&lower.as_str()) {
            return (Tag::Det, lower, false);
        }
        if CONJUNCTIONS.contains(&lower.as_str()) {
            return (Tag::Cconj, lower, false);
        }
        if PRONOUNS.contains(&lower.as_str()) {
            return (Tag::Pron, lower, false);
        }
        if lower.chars().all(|c| c.is_ascii_digit() || c == '/' || c == '.') {
            return (Tag::Num, lower, false);
        }
        if lower.len() >= 5 && lower.ends_with("ing") && !ING_NOUNS.contains(&lower.as_str()) {
            return (Tag::Verb, ing_lemma(&lower), false);
        }
        if let Some((_, lemma)) = VERB_FORMS.iter().find(|(form, _)| *form == lower) {
            return (Tag::Verb, lemma.to_string(), false);
        }
        if surface.chars().next().is_some_and(char::is_uppercase) {
            return (Tag::Propn, lower, false);
        }
        (Tag::Noun, lower, false)
    }

    fn tokenize<'t>(&self, text: &'t str) -> Vec<(&'t str, usize, usize)> {
        let mut tokens = Vec::new();
        for (offset, chunk) in split_whitespace_indices(text) {
            let mut start = offset;
            let mut end = offset + chunk.len();
            let mut body = chunk;
            // Leading punctuation.
            while let Some(c) = body.chars().next() {
                if body.len() > c.len_utf8() && is_split_punct(c) && !body.starts_with(NAME_TOKEN) {
                    tokens.push((&body[..c.len_utf8()], start, start + c.len_utf8()));
                    start += c.len_utf8();
                    body = &body[c.len_utf8()..];
                } else {
                    break;
                }
            }
            // Trailing punctuation and possessive clitics.
            let mut tail: Vec<(&str, usize, usize)> = Vec::new();
            loop {
                if let Some(stripped) = body.strip_suffix("'s") {
                    if !stripped.is_empty() {
                        tail.push((&body[stripped.len()..], start + stripped.len(), end));
                        end = start + stripped.len();
                        body = stripped;
                        continue;
                    }
                }
                let Some(c) = body.chars().last() else { break };
                if body.len() > c.len_utf8() && is_split_punct(c) && !body.ends_with(NAME_TOKEN) {
                    let cut = body.len() - c.len_utf8();
                    tail.push((&body[cut..], start + cut, end));
                    end = start + cut;
                    body = &body[..cut];
                } else {
                    break;
                }
            }
            if !body.is_empty() {
                tokens.push((body, start, end));
            }
            tokens.extend(tail.into_iter().rev());
        }
        tokens
    }
}

fn is_split_punct(c: char) -> bool {
    matches!(c, '.' | ',' | '!' | '?' | ';' | ':' | '"' | '(' | ')' | '\u{2018}' | '\u{2019}')
}

fn split_whitespace_indices(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split_whitespace().map(move |chunk| {
        let offset = chunk.as_ptr() as usize - text.as_ptr() as usize;
        (offset, chunk)
    })
}

fn lemma_of_aux(lower: &str) -> String {
    match lower {
        "am" | "are" | "is" | "was" | "were" | "been" | "being" => "be".to_string(),
        "has" | "had" => "have".to_string(),
        "does" | "did" => "do".to_string(),
        other => other.to_string(),
    }
}

/// Recovers a lemma from an "-ing" form: irregular table, then undoubling,
/// then plain suffix strip.
fn ing_lemma(lower: &str) -> String {
    if let Some((_, lemma)) = IRREGULAR_ING.iter().find(|(form, _)| *form == lower) {
        return lemma.to_string();
    }
    let stem = &lower[..lower.len() - 3];
    let chars: Vec<char> = stem.chars().collect();
    if chars.len() >= 3 {
        let last = chars[chars.len() - 1];
        let prev = chars[chars.len() - 2];
        if last == prev && !"aeiou".contains(last) && !matches!(last, 'l' | 's' | 'z') {
            return stem[..stem.len() - 1].to_string();
        }
    }
    stem.to_string()
}

impl ParserBackend for HeuristicParser {
    fn parse(&self, text: &str) -> Result<DependencyParse, BackendError> {
        let raw = self.tokenize(text);
        if raw.is_empty() {
            return Err(BackendError::new("parser", "cannot parse empty text"));
        }
        let tagged: Vec<(Tag, String, bool)> = raw.iter().map(|(s, _, _)| self.tag(s)).collect();

        let n = raw.len();
        let root = tagged
            .iter()
            .position(|(tag, _, _)| *tag == Tag::Verb)
            .or_else(|| tagged.iter().position(|(tag, _, _)| matches!(tag, Tag::Noun | Tag::Propn)))
            .unwrap_or(0);

        let mut heads = vec![root; n];
        let mut deprels = vec!["dep".to_string(); n];
        deprels[root] = "root".to_string();

        // Pre-verb region: subject and coordinated subjects.
        let mut subject: Option<usize> = None;
        let mut last_subject_part: Option<usize> = None;
        for i in 0..root {
            match tagged[i].0 {
                Tag::Propn | Tag::Noun | Tag::Pron => match subject {
                    None => {
                        subject = Some(i);
                        last_subject_part = Some(i);
                        heads[i] = root;
                        deprels[i] = "nsubj".to_string();
                    }
                    Some(s) => {
                        heads[i] = s;
                        deprels[i] = "conj".to_string();
                        last_subject_part = Some(i);
                    }
                },
                Tag::Cconj => {
                    if let Some(s) = subject {
                        heads[i] = s;
                        deprels[i] = "cc".to_string();
                    }
                }
                Tag::Det => {
                    heads[i] = next_nominal(&tagged, i + 1, root).unwrap_or(root);
                    deprels[i] = det_label(&raw[i].0.to_lowercase());
                }
                Tag::Aux => {
                    heads[i] = root;
                    deprels[i] = "aux".to_string();
                }
                Tag::Punct => {
                    heads[i] = last_subject_part.unwrap_or(root);
                    deprels[i] = "punct".to_string();
                }
                _ => {}
            }
        }

        // Post-verb region: object group, then flat prepositional phrases.
        let mut current_prep: Option<usize> = None;
        let mut i = root + 1;
        while i < n {
            match tagged[i].0 {
                Tag::Adp => {
                    heads[i] = root;
                    deprels[i] = "prep".to_string();
                    current_prep = Some(i);
                }
                Tag::Det => {
                    heads[i] = next_nominal(&tagged, i + 1, n).unwrap_or(root);
                    deprels[i] = det_label(&raw[i].0.to_lowercase());
                }
                Tag::Propn | Tag::Noun | Tag::Pron | Tag::Num => {
                    let group_head = nominal_group_head(&tagged, i, n);
                    for j in i..=group_head {
                        if matches!(tagged[j].0, Tag::Propn | Tag::Noun | Tag::Pron | Tag::Num) {
                            if j == group_head {
                                match current_prep {
                                    Some(prep) => {
                                        heads[j] = prep;
                                        deprels[j] = "pobj".to_string();
                                    }
                                    None => {
                                        heads[j] = root;
                                        deprels[j] = "dobj".to_string();
                                    }
                                }
                            } else {
                                heads[j] = group_head;
                                deprels[j] = "compound".to_string();
                            }
                        } else if tagged[j].0 == Tag::Det {
                            heads[j] = group_head;
                            deprels[j] = det_label(&raw[j].0.to_lowercase());
                        }
                    }
                    i = group_head;
                }
                Tag::Cconj => {
                    heads[i] = root;
                    deprels[i] = "cc".to_string();
                }
                Tag::Verb | Tag::Aux => {
                    heads[i] = root;
                    deprels[i] = if tagged[i].0 == Tag::Aux { "aux" } else { "conj" }.to_string();
                }
                Tag::Part => {
                    heads[i] = if i > 0 { i - 1 } else { root };
                    deprels[i] = "case".to_string();
                }
                Tag::Punct => {
                    heads[i] = root;
                    deprels[i] = "punct".to_string();
                }
            }
            i += 1;
        }

        let tokens: Vec<ParseToken> = raw
            .iter()
            .zip(&tagged)
            .enumerate()
            .map(|(index, ((surface, start, end), (tag, lemma, person)))| ParseToken {
                surface: surface.to_string(),
                lemma: lemma.clone(),
                pos: pos_label(*tag).to_string(),
                head: heads[index],
                deprel: deprels[index].clone(),
                entity: person.then(|| "NAME".to_string()),
                span: (*start, *end),
            })
            .collect();
        DependencyParse::new(tokens)
            .map_err(|e| BackendError::new("parser", format!("inconsistent parse: {e}")))
    }
}

/// Index of the last nominal in the contiguous group starting at `from`
/// (determiners may be interleaved).
fn nominal_group_head(tagged: &[(Tag, String, bool)], from: usize, until: usize) -> usize {
    let mut head = from;
    let mut i = from;
    while i < until {
        match tagged[i].0 {
            Tag::Propn | Tag::Noun | Tag::Pron | Tag::Num => head = i,
            Tag::Det => {}
            _ => break,
        }
        i += 1;
    }
    head
}

fn next_nominal(tagged: &[(Tag, String, bool)], from: usize, until: usize) -> Option<usize> {
    (from..until).find(|&i| matches!(tagged[i].0, Tag::Propn | Tag::Noun | Tag::Pron | Tag::Num))
}

fn det_label(lower: &str) -> String {
    if matches!(lower, "his" | "her" | "its" | "my" | "our" | "their" | "your") {
        "poss".to_string()
    } else {
        "det".to_string()
    }
}

fn pos_label(tag: Tag) -> &'static str {
    match tag {
        Tag::Verb => "VERB",
        Tag::Aux => "AUX",
        Tag::Adp => "ADP",
        Tag::Det => "DET",
        Tag::Cconj => "CCONJ",
        Tag::Pron => "PRON",
        Tag::Propn => "PROPN",
        Tag::Noun => "NOUN",
        Tag::Num => "NUM",
        Tag::Punct => "PUNCT",
        Tag::Part => "PART",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_interaction_grammar() {
        let parser = HeuristicParser::default();
        let parse = parser.parse("Alex meeting with Bailey at a hotel").unwrap();
        let tokens = parse.tokens();
        assert_eq!(tokens[0].entity.as_deref(), Some("NAME"));
        assert_eq!(tokens[1].pos, "VERB");
        assert_eq!(tokens[1].lemma, "meet");
        assert_eq!(tokens[2].pos, "ADP");
        assert_eq!(tokens[3].deprel, "pobj");
        assert_eq!(tokens[3].entity.as_deref(), Some("NAME"));
        assert_eq!(tokens[4].surface, "at");
        // "a hotel" hangs under "at"
        assert_eq!(tokens[5].deprel, "det");
        assert_eq!(tokens[5].head, 6);
        assert_eq!(tokens[6].deprel, "pobj");
        assert_eq!(tokens[6].head, 4);
    }

    #[test]
    fn finds_lexicon_verbs_and_lemmas() {
        let parser = HeuristicParser::default();
        let parse = parser.parse("a man shakes hands with a woman").unwrap();
        let verb = parse.tokens().iter().find(|t| t.pos == "VERB").unwrap();
        assert_eq!(verb.surface, "shakes");
        assert_eq!(verb.lemma, "shake");
    }

    #[test]
    fn verbless_text_has_no_verb() {
        let parser = HeuristicParser::default();
        let parse = parser.parse("wallpaper with a concert and a well dressed person").unwrap();
        assert!(parse.tokens().iter().all(|t| t.pos != "VERB"));
    }

    #[test]
    fn ing_lemmas_invert_inflection() {
        for (form, lemma) in [
            ("hugging", "hug"),
            ("greeting", "greet"),
            ("welcoming", "welcome"),
            ("telling", "tell"),
            ("posing", "pose"),
            ("discussing", "discuss"),
        ] {
            assert_eq!(ing_lemma(form), lemma);
        }
    }

    #[test]
    fn tokenizer_splits_punct_and_clitics() {
        let parser = HeuristicParser::default();
        let tokens = parser.tokenize("Alex's friend, (Bailey).");
        let surfaces: Vec<&str> = tokens.iter().map(|(s, _, _)| *s).collect();
        assert_eq!(surfaces, ["Alex", "'s", "friend", ",", "(", "Bailey", ")", "."]);
        let text = "Alex's friend, (Bailey).";
        for (surface, start, end) in &tokens {
            assert_eq!(&text[*start..*end], *surface);
        }
    }

    #[test]
    fn masked_text_parses_with_person_slots() {
        let parser = HeuristicParser::default();
        let parse = parser.parse("[NAME] hugging [NAME] after a win").unwrap();
        let persons: Vec<&str> = parse
            .tokens()
            .iter()
            .filter(|t| t.is_person())
            .map(|t| t.surface.as_str())
            .collect();
        assert_eq!(persons, ["[NAME]", "[NAME]"]);
    }
}
