//! Pluggable model backends.
//!
//! All neural inference (teacher text generation, NLI scoring, parsing,
//! summarization, captioning, learned text similarity, word embeddings) sits
//! behind these traits. Implementations must be deterministic for a fixed
//! seed/handle so that pipeline runs are reproducible; the `hhi-pipeline`
//! crate ships deterministic stub and recorded-score implementations, and the
//! request/response shapes below double as the wire contract for
//! out-of-process servers.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parse::DependencyParse;
use crate::synth::GenerationParams;

/// Failure inside a backend; carries enough context to resume a run.
#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[error("backend {backend}: {message}")]
pub struct BackendError {
    pub backend: String,
    pub message: String,
}

impl BackendError {
    pub fn new(backend: impl Into<String>, message: impl Into<String>) -> Self {
        Self { backend: backend.into(), message: message.into() }
    }
}

/// Entailment / contradiction / neutral probabilities, summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NliScores {
    pub entailment: f64,
    pub contradiction: f64,
    pub neutral: f64,
}

impl NliScores {
    pub fn validate(&self) -> Result<(), BackendError> {
        let in_range = |p: f64| (0.0..=1.0).contains(&p);
        let sum = self.entailment + self.contradiction + self.neutral;
        if !in_range(self.entailment)
            || !in_range(self.contradiction)
            || !in_range(self.neutral)
            || libm::fabs(sum - 1.0) > 1e-6
        {
            return Err(BackendError::new(
                "nli",
                alloc::format!("probabilities must lie in [0,1] and sum to 1, got {self:?}"),
            ));
        }
        Ok(())
    }
}

/// A large language model generating a continuation of `prompt`.
/// Request: `{prompt, params}` / response: generated text up to `params.stop`.
pub trait TextGeneratorBackend {
    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<String, BackendError>;
}

/// A natural language inference scorer.
/// Request: `{premise, hypothesis}` / response: [`NliScores`].
pub trait NliBackend {
    fn score(&self, premise: &str, hypothesis: &str) -> Result<NliScores, BackendError>;
}

/// A syntactic parser producing one parse for a single-sentence text.
/// Request: `{text}` / response: CoNLL-U sentence.
pub trait ParserBackend {
    fn parse(&self, text: &str) -> Result<DependencyParse, BackendError>;
}

/// A trainable sequence-to-sequence summarizer (the student model).
pub trait SummarizerBackend {
    /// Fine-tunes on `(input_text, target_text)` examples. Hyperparameters
    /// travel in the caller's config; the backend echoes what it applied.
    fn fit(&mut self, examples: &[(String, String)]) -> Result<(), BackendError>;
    fn summarize(&self, input_text: &str) -> Result<String, BackendError>;
}

/// One decoded beam candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    pub text: String,
    pub score: f64,
}

/// A beam-search result: candidates in non-increasing score order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamSet {
    pub beams: Vec<Beam>,
    pub width: usize,
}

impl BeamSet {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.beams.len() > self.width {
            return Err(BackendError::new(
                "captioner",
                alloc::format!("{} beams exceed width {}", self.beams.len(), self.width),
            ));
        }
        if self.beams.windows(2).any(|w| w[1].score > w[0].score) {
            return Err(BackendError::new("captioner", "beam scores must be non-increasing"));
        }
        Ok(())
    }
}

/// A trainable image-to-text model with frozen image encoder.
pub trait CaptionerBackend {
    /// Fine-tunes on weighted `(image_ref, target_text, weight)` samples.
    /// Implementations must keep the image encoder frozen and attest to it in
    /// their run configuration echo.
    fn fit(&mut self, samples: &[(String, String, f64)]) -> Result<(), BackendError>;
    fn decode(&self, image_ref: &str, beams: usize) -> Result<BeamSet, BackendError>;
}

/// A learned candidate-vs-reference similarity scorer.
pub trait TextSimilarityBackend {
    fn score(&self, candidate: &str, reference: &str) -> Result<f64, BackendError>;
}

/// A word-embedding lookup table with fixed dimension.
pub trait EmbeddingTable {
    fn dimension(&self) -> usize;
    /// Returns the vector for `word`, or `None` when out of vocabulary.
    fn lookup(&self, word: &str) -> Option<Vec<f32>>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nli_scores_must_sum_to_one() {
        assert!(NliScores { entailment: 0.7, contradiction: 0.2, neutral: 0.1 }.validate().is_ok());
        assert!(NliScores { entailment: 0.9, contradiction: 0.9, neutral: 0.1 }.validate().is_err());
        assert!(NliScores { entailment: 1.2, contradiction: -0.3, neutral: 0.1 }.validate().is_err());
    }

    #[test]
    fn beam_set_orders_by_score() {
        let good = BeamSet {
            beams: alloc::vec![
                Beam { text: "a".into(), score: 0.9 },
                Beam { text: "b".into(), score: 0.5 },
            ],
            width: 4,
        };
        assert!(good.validate().is_ok());
        let bad = BeamSet {
            beams: alloc::vec![
                Beam { text: "a".into(), score: 0.2 },
                Beam { text: "b".into(), score: 0.5 },
            ],
            width: 4,
        };
        assert!(bad.validate().is_err());
    }
}
