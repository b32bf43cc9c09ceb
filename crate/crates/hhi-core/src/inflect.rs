//! Present-continuous inflection of verb lemmas.
//!
//! Pure spelling rules plus a small lexicon for the one case spelling cannot
//! decide: whether a multi-syllable consonant-vowel-consonant ending doubles
//! ("admit" does, "visit" does not) depends on stress, so final-stress verbs
//! are enumerated and everything else is left undoubled.

use alloc::format;
use alloc::string::String;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InflectError {
    #[error("lemma is empty")]
    Empty,
    #[error("lemma {0:?} contains whitespace")]
    Whitespace(String),
}

/// Multi-syllable verbs with final stress, which double their last consonant.
const FINAL_STRESS_DOUBLING: &[&str] = &[
    "admit", "allot", "begin", "commit", "compel", "concur", "confer", "control", "defer",
    "deter", "dispel", "emit", "enrol", "entrap", "equip", "excel", "expel", "forget", "incur",
    "infer", "occur", "omit", "outbid", "patrol", "permit", "prefer", "propel", "rebel", "recur",
    "refer", "regret", "remit", "repel", "reset", "submit", "transfer", "transmit", "unwrap",
    "upset",
];

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

/// A rough syllable count: the number of vowel groups, with a final silent
/// "e" not counting ("make" is one syllable).
fn syllable_count(word: &str) -> usize {
    let chars: alloc::vec::Vec<char> = word.chars().collect();
    let mut groups = 0;
    let mut in_group = false;
    for (i, &c) in chars.iter().enumerate() {
        let vowelish = is_vowel(c) || (c == 'y' && i > 0);
        if vowelish && !in_group {
            groups += 1;
        }
        in_group = vowelish;
    }
    if word.ends_with('e') && !word.ends_with("ee") && groups > 1 {
        let len = chars.len();
        if len >= 2 && !is_vowel(chars[len - 2]) {
            groups -= 1;
        }
    }
    groups.max(1)
}

/// True when the word ends consonant-vowel-consonant with a doubling-eligible
/// final consonant. A "u" after "q" counts as a consonant ("quit" doubles).
fn ends_cvc(word: &str) -> bool {
    let chars: alloc::vec::Vec<char> = word.chars().collect();
    let len = chars.len();
    if len < 2 {
        return false;
    }
    let last = chars[len - 1];
    let mid = chars[len - 2];
    if is_vowel(last) || matches!(last, 'w' | 'x' | 'y') || !last.is_ascii_alphabetic() {
        return false;
    }
    let mid_is_vowel = if mid == 'u' && len >= 3 && chars[len - 3] == 'q' {
        false
    } else {
        is_vowel(mid)
    };
    if !mid_is_vowel {
        return false;
    }
    if len == 2 {
        // "ad" pattern: vowel-consonant with nothing before is still CVC-like.
        return true;
    }
    let before = chars[len - 3];
    !is_vowel(before) || (before == 'u' && len >= 4 && chars[len - 4] == 'q')
}

/// Inflects a lowercase verb lemma to its "-ing" form.
///
/// The output never contains whitespace and always ends in "ing".
pub fn to_present_continuous(lemma: &str) -> Result<String, InflectError> {
    if lemma.is_empty() {
        return Err(InflectError::Empty);
    }
    if lemma.contains(char::is_whitespace) {
        return Err(InflectError::Whitespace(lemma.into()));
    }
    if let Some(stem) = lemma.strip_suffix("ie") {
        // die -> dying, tie -> tying
        return Ok(format!("{stem}ying"));
    }
    if lemma.ends_with('e')
        && lemma.len() > 2
        && !lemma.ends_with("ee")
        && !lemma.ends_with("ye")
        && !lemma.ends_with("oe")
    {
        // silent final e: welcome -> welcoming
        return Ok(format!("{}ing", &lemma[..lemma.len() - 1]));
    }
    if lemma.ends_with('c') && lemma.chars().rev().nth(1).is_some_and(is_vowel) {
        // panic -> panicking
        return Ok(format!("{lemma}king"));
    }
    if ends_cvc(lemma)
        && (syllable_count(lemma) == 1 || FINAL_STRESS_DOUBLING.contains(&lemma))
    {
        let last = lemma.chars().last().expect("non-empty");
        return Ok(format!("{lemma}{last}ing"));
    }
    Ok(format!("{lemma}ing"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubles_stressed_cvc() {
        assert_eq!(to_present_continuous("bid").unwrap(), "bidding");
        assert_eq!(to_present_continuous("sit").unwrap(), "sitting");
        assert_eq!(to_present_continuous("run").unwrap(), "running");
        assert_eq!(to_present_continuous("begin").unwrap(), "beginning");
        assert_eq!(to_present_continuous("quit").unwrap(), "quitting");
    }

    #[test]
    fn leaves_unstressed_cvc_alone() {
        assert_eq!(to_present_continuous("visit").unwrap(), "visiting");
        assert_eq!(to_present_continuous("open").unwrap(), "opening");
        assert_eq!(to_present_continuous("offer").unwrap(), "offering");
        assert_eq!(to_present_continuous("abandon").unwrap(), "abandoning");
    }

    #[test]
    fn drops_silent_e() {
        assert_eq!(to_present_continuous("welcome").unwrap(), "welcoming");
        assert_eq!(to_present_continuous("make").unwrap(), "making");
        assert_eq!(to_present_continuous("pose").unwrap(), "posing");
    }

    #[test]
    fn keeps_ee_ye_oe() {
        assert_eq!(to_present_continuous("see").unwrap(), "seeing");
        assert_eq!(to_present_continuous("dye").unwrap(), "dyeing");
        assert_eq!(to_present_continuous("canoe").unwrap(), "canoeing");
        assert_eq!(to_present_continuous("be").unwrap(), "being");
    }

    #[test]
    fn ie_becomes_y() {
        assert_eq!(to_present_continuous("die").unwrap(), "dying");
        assert_eq!(to_present_continuous("tie").unwrap(), "tying");
    }

    #[test]
    fn plain_append() {
        assert_eq!(to_present_continuous("sing").unwrap(), "singing");
        assert_eq!(to_present_continuous("jump").unwrap(), "jumping");
        assert_eq!(to_present_continuous("speak").unwrap(), "speaking");
        assert_eq!(to_present_continuous("discuss").unwrap(), "discussing");
        assert_eq!(to_present_continuous("perform").unwrap(), "performing");
        assert_eq!(to_present_continuous("play").unwrap(), "playing");
        assert_eq!(to_present_continuous("fix").unwrap(), "fixing");
    }

    #[test]
    fn c_takes_k() {
        assert_eq!(to_present_continuous("panic").unwrap(), "panicking");
        assert_eq!(to_present_continuous("picnic").unwrap(), "picnicking");
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(to_present_continuous("").unwrap_err(), InflectError::Empty);
        assert!(matches!(
            to_present_continuous("two words").unwrap_err(),
            InflectError::Whitespace(_)
        ));
    }
}
