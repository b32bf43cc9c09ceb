//! Ingested dependency parses.
//!
//! Parsing itself is delegated to a pluggable backend (spaCy-style labels are
//! assumed: `nsubj`, `dobj`, `prep`/`pobj`, `det`, `poss`, `conj`, ...); this
//! module only carries the data structure, its validation, and a CoNLL-U
//! compatible codec. Token entity labels use `NAME` (or `PERSON`) for human
//! entities; char spans and entities ride in the MISC column as
//! `start_char=..|end_char=..|entity=..`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Entity labels excluded from extracted interaction arguments by default.
pub const DEFAULT_BANNED_ENTITY_TYPES: &[&str] = &["DATE", "GPE", "FAC", "ORG", "LOC", "TIME"];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: expected 10 tab-separated columns, found {found}")]
    ColumnCount { line: usize, found: usize },
    #[error("line {line}: {column} column: {message}")]
    BadColumn {
        line: usize,
        column: &'static str,
        message: String,
    },
    #[error("token {token}: head {head} out of range for {len} tokens")]
    HeadOutOfRange { token: usize, head: usize, len: usize },
    #[error("expected exactly one root, found {0}")]
    RootCount(usize),
    #[error("token {0} participates in a head cycle")]
    Cycle(usize),
    #[error("token {0}: char span disordered or overlapping the previous token")]
    SpanDisorder(usize),
    #[error("sentence is empty")]
    Empty,
}

/// One token of a dependency parse.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseToken {
    pub surface: String,
    pub lemma: String,
    /// Coarse POS tag (UPOS): `VERB`, `NOUN`, `ADP`, `DET`, ...
    pub pos: String,
    /// Index of the head token; the root points at itself.
    pub head: usize,
    pub deprel: String,
    /// Entity label, `None` when the token is outside any entity.
    pub entity: Option<String>,
    /// Byte span of the token in the source text.
    pub span: (usize, usize),
}

impl ParseToken {
    pub fn is_person(&self) -> bool {
        matches!(self.entity.as_deref(), Some("NAME") | Some("PERSON"))
    }
}

/// A validated single-sentence dependency parse.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ParseToken>", into = "Vec<ParseToken>")]
pub struct DependencyParse {
    tokens: Vec<ParseToken>,
}

impl DependencyParse {
    pub fn new(tokens: Vec<ParseToken>) -> Result<Self, ParseError> {
        validate(&tokens)?;
        Ok(Self { tokens })
    }

    pub fn tokens(&self) -> &[ParseToken] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn root(&self) -> usize {
        self.tokens
            .iter()
            .enumerate()
            .position(|(i, t)| t.head == i)
            .expect("validated parse has a root")
    }

    /// Direct dependents of `head`, in token order.
    pub fn children(&self, head: usize) -> impl Iterator<Item = usize> + '_ {
        self.tokens
            .iter()
            .enumerate()
            .filter(move |(i, t)| t.head == head && *i != head)
            .map(|(i, _)| i)
    }

    /// Indices of the subtree rooted at `index` (including it), sorted.
    pub fn subtree(&self, index: usize) -> Vec<usize> {
        let mut out = alloc::vec![index];
        let mut queue = alloc::vec![index];
        while let Some(head) = queue.pop() {
            for child in self.children(head) {
                out.push(child);
                queue.push(child);
            }
        }
        out.sort_unstable();
        out
    }

    /// The maximal run of consecutive tokens sharing `index`'s entity label.
    /// Returns just `index` when the token is outside any entity.
    pub fn entity_run(&self, index: usize) -> core::ops::Range<usize> {
        let label = match &self.tokens[index].entity {
            Some(label) => label,
            None => return index..index + 1,
        };
        let mut start = index;
        while start > 0 && self.tokens[start - 1].entity.as_ref() == Some(label) {
            start -= 1;
        }
        let mut end = index + 1;
        while end < self.tokens.len() && self.tokens[end].entity.as_ref() == Some(label) {
            end += 1;
        }
        start..end
    }

    /// Reconstructs surface text by joining tokens with single spaces.
    pub fn joined_text(&self) -> String {
        let surfaces: Vec<&str> = self.tokens.iter().map(|t| t.surface.as_str()).collect();
        surfaces.join(" ")
    }
}

impl TryFrom<Vec<ParseToken>> for DependencyParse {
    type Error = ParseError;

    fn try_from(tokens: Vec<ParseToken>) -> Result<Self, Self::Error> {
        Self::new(tokens)
    }
}

impl From<DependencyParse> for Vec<ParseToken> {
    fn from(parse: DependencyParse) -> Self {
        parse.tokens
    }
}

fn validate(tokens: &[ParseToken]) -> Result<(), ParseError> {
    if tokens.is_empty() {
        return Err(ParseError::Empty);
    }
    let len = tokens.len();
    let mut roots = 0;
    for (i, token) in tokens.iter().enumerate() {
        if token.head >= len {
            return Err(ParseError::HeadOutOfRange { token: i, head: token.head, len });
        }
        if token.head == i {
            roots += 1;
        }
    }
    if roots != 1 {
        return Err(ParseError::RootCount(roots));
    }
    // Every token must reach the root without revisiting itself.
    for start in 0..len {
        let mut slow = start;
        let mut steps = 0;
        while tokens[slow].head != slow {
            slow = tokens[slow].head;
            steps += 1;
            if steps > len {
                return Err(ParseError::Cycle(start));
            }
        }
    }
    for i in 0..len {
        let (start, end) = tokens[i].span;
        if start > end {
            return Err(ParseError::SpanDisorder(i));
        }
        if i > 0 && start < tokens[i - 1].span.1 {
            return Err(ParseError::SpanDisorder(i));
        }
    }
    Ok(())
}

/// Parses a CoNLL-U document: blank-line-separated sentences, `#` comments.
///
/// Returns each sentence with its `sent_id` comment value when present.
pub fn parse_conllu(text: &str) -> Result<Vec<(Option<String>, DependencyParse)>, ParseError> {
    let mut sentences = Vec::new();
    let mut tokens: Vec<ParseToken> = Vec::new();
    let mut sent_id: Option<String> = None;
    let mut first_line = 0;

    let mut flush = |tokens: &mut Vec<ParseToken>, sent_id: &mut Option<String>, line: usize| {
        if tokens.is_empty() {
            return Ok(());
        }
        let parse = DependencyParse::new(core::mem::take(tokens)).map_err(|e| match e {
            // Give document-level context to block-level errors.
            ParseError::Empty => ParseError::BadColumn {
                line,
                column: "sentence",
                message: "empty sentence".to_string(),
            },
            other => other,
        })?;
        sentences.push((sent_id.take(), parse));
        Ok(())
    };

    for (number, raw) in text.lines().enumerate() {
        let line = number + 1;
        let trimmed = raw.trim_end();
        if trimmed.is_empty() {
            flush(&mut tokens, &mut sent_id, first_line)?;
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "sent_id" {
                    sent_id = Some(value.trim().to_string());
                }
            }
            continue;
        }
        if tokens.is_empty() {
            first_line = line;
        }
        let columns: Vec<&str> = trimmed.split('\t').collect();
        if columns.len() != 10 {
            return Err(ParseError::ColumnCount { line, found: columns.len() });
        }
        let id: usize = columns[0].parse().map_err(|_| ParseError::BadColumn {
            line,
            column: "ID",
            message: format!("{:?} is not an integer token id", columns[0]),
        })?;
        if id != tokens.len() + 1 {
            return Err(ParseError::BadColumn {
                line,
                column: "ID",
                message: format!("expected id {}, found {id}", tokens.len() + 1),
            });
        }
        let head_raw: usize = columns[6].parse().map_err(|_| ParseError::BadColumn {
            line,
            column: "HEAD",
            message: format!("{:?} is not an integer head", columns[6]),
        })?;
        // CoNLL-U root head 0 becomes a self-pointing head.
        let head = if head_raw == 0 { id - 1 } else { head_raw - 1 };
        let mut span = (0, 0);
        let mut entity = None;
        for field in columns[9].split('|') {
            match field.split_once('=') {
                Some(("start_char", v)) => {
                    span.0 = v.parse().map_err(|_| ParseError::BadColumn {
                        line,
                        column: "MISC",
                        message: format!("bad start_char {v:?}"),
                    })?;
                }
                Some(("end_char", v)) => {
                    span.1 = v.parse().map_err(|_| ParseError::BadColumn {
                        line,
                        column: "MISC",
                        message: format!("bad end_char {v:?}"),
                    })?;
                }
                Some(("entity", v)) => entity = Some(v.to_string()),
                _ => {}
            }
        }
        tokens.push(ParseToken {
            surface: columns[1].to_string(),
            lemma: columns[2].to_string(),
            pos: columns[3].to_string(),
            head,
            deprel: columns[7].to_string(),
            entity,
            span,
        });
    }
    flush(&mut tokens, &mut sent_id, first_line)?;
    Ok(sentences)
}

/// Serializes one parse as a 10-column CoNLL-U sentence (no trailing blank line).
pub fn to_conllu(parse: &DependencyParse, sent_id: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(id) = sent_id {
        out.push_str("# sent_id = ");
        out.push_str(id);
        out.push('\n');
    }
    for (i, token) in parse.tokens().iter().enumerate() {
        let head = if token.head == i { 0 } else { token.head + 1 };
        let mut misc = format!("start_char={}|end_char={}", token.span.0, token.span.1);
        if let Some(entity) = &token.entity {
            misc.push_str("|entity=");
            misc.push_str(entity);
        }
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t_\t_\t{}\t{}\t_\t{}\n",
            i + 1,
            token.surface,
            token.lemma,
            token.pos,
            head,
            token.deprel,
            misc
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn token(surface: &str, pos: &str, head: usize, deprel: &str, span: (usize, usize)) -> ParseToken {
        ParseToken {
            surface: surface.to_string(),
            lemma: surface.to_lowercase(),
            pos: pos.to_string(),
            head,
            deprel: deprel.to_string(),
            entity: None,
            span,
        }
    }

    #[test]
    fn rejects_multiple_roots_and_cycles() {
        let two_roots = alloc::vec![
            token("a", "NOUN", 0, "root", (0, 1)),
            token("b", "NOUN", 1, "root", (2, 3)),
        ];
        assert_eq!(DependencyParse::new(two_roots).unwrap_err(), ParseError::RootCount(2));

        let cycle = alloc::vec![
            token("a", "NOUN", 0, "root", (0, 1)),
            token("b", "NOUN", 2, "dep", (2, 3)),
            token("c", "NOUN", 1, "dep", (4, 5)),
        ];
        assert!(matches!(DependencyParse::new(cycle).unwrap_err(), ParseError::Cycle(_)));
    }

    #[test]
    fn rejects_overlapping_spans() {
        let bad = alloc::vec![
            token("a", "NOUN", 0, "root", (0, 4)),
            token("b", "NOUN", 0, "dep", (2, 6)),
        ];
        assert_eq!(DependencyParse::new(bad).unwrap_err(), ParseError::SpanDisorder(1));
    }

    #[test]
    fn conllu_round_trip() {
        let tokens = alloc::vec![
            ParseToken {
                surface: "Ann".to_string(),
                lemma: "Ann".to_string(),
                pos: "PROPN".to_string(),
                head: 1,
                deprel: "nsubj".to_string(),
                entity: Some("NAME".to_string()),
                span: (0, 3),
            },
            token("waves", "VERB", 1, "root", (4, 9)),
        ];
        let parse = DependencyParse::new(tokens).unwrap();
        let text = to_conllu(&parse, Some("s1"));
        let parsed = parse_conllu(&text).unwrap();
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed[0].0.as_deref(), Some("s1"));
        assert_eq!(parsed[0].1, parse);
    }

    #[test]
    fn conllu_reports_line_numbers() {
        let text = "1\tAnn\tann\tPROPN\t_\t_\t0\troot\t_\tstart_char=0|end_char=3\n2\tbroken\n";
        match parse_conllu(text).unwrap_err() {
            ParseError::ColumnCount { line, found } => {
                assert_eq!(line, 2);
                assert_eq!(found, 2);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn entity_run_spans_contiguous_labels() {
        let mut tokens = alloc::vec![
            token("Xi", "PROPN", 2, "compound", (0, 2)),
            token("Jinping", "PROPN", 2, "nsubj", (3, 10)),
            token("waves", "VERB", 2, "root", (11, 16)),
        ];
        tokens[0].entity = Some("NAME".to_string());
        tokens[1].entity = Some("NAME".to_string());
        let parse = DependencyParse::new(tokens).unwrap();
        assert_eq!(parse.entity_run(1), 0..2);
        assert_eq!(parse.entity_run(2), 2..3);
    }
}
