//! Shared domain types: captions, interaction texts, and dataset rows.

use alloc::string::{String, ToString};
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::names::{count_slots, NAME_TOKEN};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TypeError {
    #[error("caption text is empty")]
    EmptyCaption,
    #[error("interaction {0:?} contains no {token} slot", token = NAME_TOKEN)]
    NoSlots(String),
}

/// Origin of a caption or sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "whos-waldo")]
    WhosWaldo,
    #[serde(rename = "cc-news")]
    CcNews,
    #[serde(rename = "coco")]
    Coco,
    #[serde(rename = "conceptual-captions")]
    ConceptualCaptions,
    #[serde(rename = "synthetic")]
    Synthetic,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Source::WhosWaldo => "whos-waldo",
            Source::CcNews => "cc-news",
            Source::Coco => "coco",
            Source::ConceptualCaptions => "conceptual-captions",
            Source::Synthetic => "synthetic",
        };
        f.write_str(name)
    }
}

/// Dataset split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        };
        f.write_str(name)
    }
}

/// A caption whose person names are masked by literal `[NAME]` tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MaskedCaption {
    text: String,
    source: Source,
}

impl MaskedCaption {
    /// Panics on empty text; use [`MaskedCaption::try_new`] for untrusted input.
    pub fn new(text: impl Into<String>, source: Source) -> Self {
        Self::try_new(text, source).expect("caption text must be non-empty")
    }

    pub fn try_new(text: impl Into<String>, source: Source) -> Result<Self, TypeError> {
        let text = text.into();
        if text.is_empty() {
            return Err(TypeError::EmptyCaption);
        }
        Ok(Self { text, source })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn source(&self) -> Source {
        self.source
    }

    /// Number of `[NAME]` slots in the caption.
    pub fn slots(&self) -> usize {
        count_slots(&self.text)
    }
}

/// A verbatim interaction description with at least one `[NAME]` slot.
///
/// Post-processed (final) interactions carry exactly two slots; intermediate
/// ones (extraction seeds, raw generations) may carry more.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Interaction {
    text: String,
}

impl Interaction {
    pub fn new(text: impl Into<String>) -> Result<Self, TypeError> {
        let text = text.into();
        if count_slots(&text) == 0 {
            return Err(TypeError::NoSlots(text));
        }
        Ok(Self { text })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn slots(&self) -> usize {
        count_slots(&self.text)
    }

    /// True for the canonical two-participant form.
    pub fn is_final(&self) -> bool {
        self.slots() == 2
    }
}

impl fmt::Display for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl TryFrom<String> for Interaction {
    type Error = TypeError;

    fn try_from(text: String) -> Result<Self, Self::Error> {
        Self::new(text)
    }
}

impl From<Interaction> for String {
    fn from(interaction: Interaction) -> Self {
        interaction.text
    }
}

/// One dataset row: an image reference, its masked caption, face-detection
/// count, and an optional interaction label (gold or pseudo).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LabeledSampleWire", into = "LabeledSampleWire")]
pub struct LabeledSample {
    pub id: String,
    pub image_ref: String,
    pub caption: MaskedCaption,
    pub face_count: u32,
    pub datetime_meta: Option<String>,
    pub label: Option<Interaction>,
    pub split: Split,
}

/// Flat JSONL schema for [`LabeledSample`]:
/// `{id, image_ref, caption, source, face_count, datetime_meta?, label?, split}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledSampleWire {
    pub id: String,
    pub image_ref: String,
    pub caption: String,
    pub source: Source,
    pub face_count: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datetime_meta: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub split: Split,
}

impl TryFrom<LabeledSampleWire> for LabeledSample {
    type Error = TypeError;

    fn try_from(wire: LabeledSampleWire) -> Result<Self, Self::Error> {
        let caption = MaskedCaption::try_new(wire.caption, wire.source)?;
        let label = wire.label.map(Interaction::new).transpose()?;
        Ok(Self {
            id: wire.id,
            image_ref: wire.image_ref,
            caption,
            face_count: wire.face_count,
            datetime_meta: wire.datetime_meta,
            label,
            split: wire.split,
        })
    }
}

impl From<LabeledSample> for LabeledSampleWire {
    fn from(sample: LabeledSample) -> Self {
        Self {
            id: sample.id,
            image_ref: sample.image_ref,
            caption: sample.caption.text.clone(),
            source: sample.caption.source,
            face_count: sample.face_count,
            datetime_meta: sample.datetime_meta,
            label: sample.label.map(|l| l.text().to_string()),
            split: sample.split,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interaction_requires_a_slot() {
        assert!(Interaction::new("[NAME] waving").is_ok());
        assert_eq!(
            Interaction::new("nobody here").unwrap_err(),
            TypeError::NoSlots("nobody here".to_string())
        );
    }

    #[test]
    fn labeled_sample_round_trips_flat_schema() {
        let sample = LabeledSample {
            id: "ww-1".to_string(),
            image_ref: "images/ww-1.jpg".to_string(),
            caption: MaskedCaption::new("[NAME] greets [NAME]", Source::WhosWaldo),
            face_count: 2,
            datetime_meta: Some("2014-04-17".to_string()),
            label: Some(Interaction::new("[NAME] greeting [NAME]").unwrap()),
            split: Split::Train,
        };
        let json = serde_json::to_string(&sample).unwrap();
        assert!(json.contains("\"caption\":\"[NAME] greets [NAME]\""));
        assert!(json.contains("\"source\":\"whos-waldo\""));
        let back: LabeledSample = serde_json::from_str(&json).unwrap();
        assert_eq!(back, sample);
    }

    #[test]
    fn labeled_sample_rejects_invalid_label() {
        let json = r#"{"id":"x","image_ref":"y","caption":"c","source":"coco","face_count":2,"label":"no slot","split":"test"}"#;
        assert!(serde_json::from_str::<LabeledSample>(json).is_err());
    }
}
