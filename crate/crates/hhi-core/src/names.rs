//! Name masking and filling.
//!
//! Captions and interaction texts carry person names masked by the literal
//! `[NAME]` token. Masking replaces character spans with the token; filling
//! substitutes pool names positionally (i-th slot gets the i-th name) so that
//! a run is reproducible given the pool seed. `fill_names` returns the
//! substitution record needed to re-mask the text afterwards.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{MaskedCaption, Source};

/// The literal person-name placeholder. Matched exactly, never as a pattern.
pub const NAME_TOKEN: &str = "[NAME]";

/// Byte span `[start, end)` into a text, aligned to `char` boundaries.
pub type Span = (usize, usize);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NameError {
    #[error("text is empty")]
    EmptyText,
    #[error("span ({0}, {1}) is out of range or not on a character boundary")]
    SpanOutOfRange(usize, usize),
    #[error("span ({0}, {1}) overlaps a previous span")]
    SpanOverlap(usize, usize),
    #[error("name pool exhausted: {required} names required, {available} available")]
    PoolExhausted { required: usize, available: usize },
    #[error("pool name {0:?} is empty or not a single token")]
    BadPoolName(String),
    #[error("pool contains duplicate name {0:?}")]
    DuplicatePoolName(String),
}

/// Replaces each span of `text` with `[NAME]`, yielding a masked caption.
///
/// Spans may be given in any order but must be in range, on char boundaries,
/// and non-overlapping.
pub fn mask_names(text: &str, spans: &[Span], source: Source) -> Result<MaskedCaption, NameError> {
    if text.is_empty() {
        return Err(NameError::EmptyText);
    }
    let mut sorted: Vec<Span> = spans.to_vec();
    sorted.sort_unstable();
    for &(start, end) in &sorted {
        if start > end || end > text.len() || !text.is_char_boundary(start) || !text.is_char_boundary(end) {
            return Err(NameError::SpanOutOfRange(start, end));
        }
    }
    for window in sorted.windows(2) {
        if window[1].0 < window[0].1 {
            return Err(NameError::SpanOverlap(window[1].0, window[1].1));
        }
    }
    let mut masked = String::with_capacity(text.len());
    let mut cursor = 0;
    for &(start, end) in &sorted {
        masked.push_str(&text[cursor..start]);
        masked.push_str(NAME_TOKEN);
        cursor = end;
    }
    masked.push_str(&text[cursor..]);
    Ok(MaskedCaption::new(masked, source))
}

/// One name substitution performed by [`fill_names`]: the name and its byte
/// span in the filled string.
pub type Substitution = (String, Span);

/// Replaces the i-th `[NAME]` occurrence of `masked` with `pool.names()[i]`.
///
/// Returns the filled text together with the substitution record; re-masking
/// the recorded spans recovers the input byte for byte.
pub fn fill_names(masked: &MaskedCaption, pool: &NamePool) -> Result<(String, Vec<Substitution>), NameError> {
    fill_text(masked.text(), pool.names())
}

/// Slot-filling over a raw masked text with an explicit name sequence.
pub fn fill_text(masked: &str, names: &[String]) -> Result<(String, Vec<Substitution>), NameError> {
    let required = count_slots(masked);
    if required > names.len() {
        return Err(NameError::PoolExhausted {
            required,
            available: names.len(),
        });
    }
    let mut filled = String::with_capacity(masked.len());
    let mut record = Vec::with_capacity(required);
    let mut rest = masked;
    for name in names.iter().take(required) {
        let at = rest.find(NAME_TOKEN).expect("slot count verified");
        filled.push_str(&rest[..at]);
        let start = filled.len();
        filled.push_str(name);
        record.push((name.clone(), (start, filled.len())));
        rest = &rest[at + NAME_TOKEN.len()..];
    }
    filled.push_str(rest);
    Ok((filled, record))
}

/// Number of `[NAME]` occurrences in `text` (non-overlapping, left to right).
pub fn count_slots(text: &str) -> usize {
    text.match_indices(NAME_TOKEN).count()
}

/// An ordered list of distinct single-token person names.
///
/// Pools are either taken verbatim from a lexicon (`ordered`) or built from a
/// seeded shuffle of it (`shuffled`); either way substitution is positional
/// and fully determined by the pool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamePool {
    names: Vec<String>,
    seed: u64,
}

impl NamePool {
    /// Builds a pool preserving lexicon order. The seed is recorded for run
    /// manifests but does not affect the order.
    pub fn ordered<I, S>(lexicon: I, seed: u64) -> Result<Self, NameError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let names = validate_names(lexicon)?;
        Ok(Self { names, seed })
    }

    /// Builds a pool by shuffling the lexicon with a seeded RNG.
    pub fn shuffled<I, S>(lexicon: I, seed: u64) -> Result<Self, NameError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut names = validate_names(lexicon)?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        names.shuffle(&mut rng);
        Ok(Self { names, seed })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Sequential name dispenser for multi-text prompts, where each text needs
    /// names not used by the previous ones.
    pub fn cursor(&self) -> NameCursor<'_> {
        NameCursor { pool: self, next: 0 }
    }
}

fn validate_names<I, S>(lexicon: I) -> Result<Vec<String>, NameError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut names = Vec::new();
    for name in lexicon {
        let name = name.as_ref().trim();
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(NameError::BadPoolName(name.to_string()));
        }
        if names.iter().any(|n| n == name) {
            return Err(NameError::DuplicatePoolName(name.to_string()));
        }
        names.push(name.to_string());
    }
    Ok(names)
}

/// Hands out consecutive pool names; each `take` advances past what it used.
#[derive(Debug)]
pub struct NameCursor<'a> {
    pool: &'a NamePool,
    next: usize,
}

impl<'a> NameCursor<'a> {
    /// Returns the next `n` names without consuming them.
    pub fn peek(&self, n: usize) -> Result<&'a [String], NameError> {
        let end = self.next + n;
        if end > self.pool.names.len() {
            return Err(NameError::PoolExhausted {
                required: end,
                available: self.pool.names.len(),
            });
        }
        Ok(&self.pool.names[self.next..end])
    }

    /// Consumes and returns the next `n` names.
    pub fn take(&mut self, n: usize) -> Result<&'a [String], NameError> {
        let names = self.peek(n)?;
        self.next += n;
        Ok(names)
    }

    /// Marks `n` names as consumed without returning them.
    pub fn advance(&mut self, n: usize) -> Result<(), NameError> {
        self.peek(n)?;
        self.next += n;
        Ok(())
    }

    pub fn position(&self) -> usize {
        self.next
    }
}

/// Bundled generic-name lexicon. The first two entries are the names expected
/// by the novel-interaction filter; the rest covers prompts that need many
/// fresh names per iteration. Configurable at the CLI via a one-name-per-line
/// file.
pub const DEFAULT_NAME_LEXICON: &[&str] = &[
    "Alex", "Bailey", "Adam", "Bob", "Carol", "David", "Emma", "Frank", "Grace", "Henry",
    "Irene", "Jack", "Karen", "Liam", "Mary", "Noah", "Olivia", "Peter", "Quinn", "Rachel",
    "Sam", "Tina", "Victor", "Wendy", "Yara", "Zane", "Estella", "Lorne", "Angelia", "Gladi",
    "Emmie", "Jacinthe", "Bettye", "Hester", "Kippie", "Paulie", "Marco", "Nadia", "Oscar",
    "Priya", "Ravi", "Sofia", "Tom", "Uma", "Vera", "Walter", "Ximena", "Yusuf", "Zelda",
    "Amara", "Boris", "Celia", "Dario", "Elena", "Felix", "Gina", "Hugo", "Ines", "Jonas",
    "Kira", "Lucas", "Mila", "Nils", "Opal", "Pablo", "Rosa", "Stefan", "Talia", "Ulric",
    "Viola", "Wade", "Xander", "Yvonne", "Zora", "Anders", "Bianca", "Cyrus", "Dalia", "Edgar",
];

/// The default pool for extraction-time filling (lexicon order).
pub fn default_ordered_pool(seed: u64) -> NamePool {
    NamePool::ordered(DEFAULT_NAME_LEXICON.iter().copied(), seed).expect("bundled lexicon is valid")
}

/// The default pool for pair generation (seeded shuffle of the lexicon).
pub fn default_shuffled_pool(seed: u64) -> NamePool {
    NamePool::shuffled(DEFAULT_NAME_LEXICON.iter().copied(), seed).expect("bundled lexicon is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(names: &[&str]) -> NamePool {
        NamePool::ordered(names.iter().copied(), 0).unwrap()
    }

    #[test]
    fn mask_replaces_spans() {
        let masked = mask_names("Ann greets Bo", &[(0, 3), (11, 13)], Source::CcNews).unwrap();
        assert_eq!(masked.text(), "[NAME] greets [NAME]");
    }

    #[test]
    fn mask_identity_without_spans() {
        let masked = mask_names("no people here", &[], Source::CcNews).unwrap();
        assert_eq!(masked.text(), "no people here");
    }

    #[test]
    fn mask_rejects_overlap_and_range() {
        assert_eq!(
            mask_names("abcdef", &[(0, 3), (2, 5)], Source::Coco).unwrap_err(),
            NameError::SpanOverlap(2, 5)
        );
        assert!(matches!(
            mask_names("abc", &[(1, 9)], Source::Coco).unwrap_err(),
            NameError::SpanOutOfRange(1, 9)
        ));
    }

    #[test]
    fn fill_is_positional() {
        let masked = MaskedCaption::new("[NAME] hugging [NAME]", Source::WhosWaldo);
        let (filled, record) = fill_names(&masked, &pool(&["Alex", "Bailey"])).unwrap();
        assert_eq!(filled, "Alex hugging Bailey");
        assert_eq!(record, alloc::vec![("Alex".to_string(), (0, 4)), ("Bailey".to_string(), (13, 19))]);
    }

    #[test]
    fn fill_without_slots_is_identity() {
        let masked = MaskedCaption::new("no slots", Source::WhosWaldo);
        let (filled, record) = fill_names(&masked, &pool(&["Alex"])).unwrap();
        assert_eq!(filled, "no slots");
        assert!(record.is_empty());
    }

    #[test]
    fn fill_reports_exhaustion() {
        let masked = MaskedCaption::new("[NAME] and [NAME] and [NAME]", Source::WhosWaldo);
        let err = fill_names(&masked, &pool(&["Alex", "Bailey"])).unwrap_err();
        assert_eq!(err, NameError::PoolExhausted { required: 3, available: 2 });
    }

    #[test]
    fn fill_then_mask_round_trips() {
        let masked = MaskedCaption::new("[NAME], left, waves to [NAME]", Source::WhosWaldo);
        let (filled, record) = fill_names(&masked, &pool(&["Adam", "Bob"])).unwrap();
        let spans: Vec<Span> = record.iter().map(|(_, s)| *s).collect();
        let remasked = mask_names(&filled, &spans, Source::WhosWaldo).unwrap();
        assert_eq!(remasked.text(), masked.text());
    }

    #[test]
    fn shuffled_pool_is_seed_deterministic() {
        let a = default_shuffled_pool(7);
        let b = default_shuffled_pool(7);
        let c = default_shuffled_pool(8);
        assert_eq!(a.names(), b.names());
        assert_ne!(a.names(), c.names());
    }

    #[test]
    fn cursor_hands_out_fresh_names() {
        let pool = pool(&["Alex", "Bailey", "Adam", "Bob"]);
        let mut cursor = pool.cursor();
        assert_eq!(cursor.take(2).unwrap(), &["Alex", "Bailey"]);
        assert_eq!(cursor.take(2).unwrap(), &["Adam", "Bob"]);
        assert!(cursor.take(1).is_err());
    }

    #[test]
    fn pool_rejects_bad_names() {
        assert!(NamePool::ordered(["two words"], 0).is_err());
        assert!(NamePool::ordered(["Alex", "Alex"], 0).is_err());
    }
}
