//! Backend selection from `--backend NAME=KIND` flags.
//!
//! Kinds: `stub` (generator), `lexical`/`wordlist`/`file:PATH` (nli),
//! `heuristic`/`conllu:PATH` (parser), `lexical`/`file:PATH` (similarity),
//! `hash`/`file:PATH` (embeddings). File-backed kinds replay recorded model
//! outputs, which is the documented integration path for out-of-process
//! model servers.

use std::path::Path;

use hhi_core::backend::{
    EmbeddingTable, NliBackend, ParserBackend, TextGeneratorBackend, TextSimilarityBackend,
};

use crate::embeddings::InMemoryEmbeddings;
use crate::error::{PipelineError, Result};
use crate::heuristic::HeuristicParser;
use crate::stubs::{
    HashEmbeddings, LexicalNli, LexicalSimilarity, RecordedNli, RecordedParser,
    RecordedSimilarity, StubGenerator, WordListNli,
};

#[derive(Debug, Clone)]
pub struct BackendSet {
    pub generator: String,
    pub nli: String,
    pub parser: String,
    pub similarity: String,
    pub embeddings: String,
}

impl Default for BackendSet {
    fn default() -> Self {
        Self {
            generator: "stub".to_string(),
            nli: "lexical".to_string(),
            parser: "heuristic".to_string(),
            similarity: "lexical".to_string(),
            embeddings: "hash".to_string(),
        }
    }
}

impl BackendSet {
    pub fn from_flags(flags: &[String]) -> Result<Self> {
        let mut set = Self::default();
        for flag in flags {
            let Some((name, kind)) = flag.split_once('=') else {
                return Err(PipelineError::validation(format!(
                    "--backend takes NAME=KIND, got {flag:?}"
                )));
            };
            match name {
                "generator" => set.generator = kind.to_string(),
                "nli" => set.nli = kind.to_string(),
                "parser" => set.parser = kind.to_string(),
                "similarity" => set.similarity = kind.to_string(),
                "embeddings" => set.embeddings = kind.to_string(),
                other => {
                    return Err(PipelineError::validation(format!(
                        "unknown backend {other:?} (generator, nli, parser, similarity, embeddings)"
                    )))
                }
            }
        }
        Ok(set)
    }

    /// Stable identity string for run manifests.
    pub fn fingerprint(&self) -> String {
        format!(
            "generator={};nli={};parser={};similarity={};embeddings={}",
            self.generator, self.nli, self.parser, self.similarity, self.embeddings
        )
    }

    pub fn generator(&self) -> Result<Box<dyn TextGeneratorBackend>> {
        match self.generator.as_str() {
            "stub" => Ok(Box::new(StubGenerator)),
            other => Err(PipelineError::validation(format!(
                "unknown generator backend {other:?} (available: stub)"
            ))),
        }
    }

    pub fn nli(&self) -> Result<Box<dyn NliBackend>> {
        match self.nli.as_str() {
            "lexical" => Ok(Box::new(LexicalNli)),
            "wordlist" => Ok(Box::new(WordListNli)),
            other => match other.strip_prefix("file:") {
                Some(path) => Ok(Box::new(RecordedNli::from_file(Path::new(path))?)),
                None => Err(PipelineError::validation(format!(
                    "unknown nli backend {other:?} (available: lexical, wordlist, file:PATH)"
                ))),
            },
        }
    }

    pub fn parser(&self) -> Result<Box<dyn ParserBackend>> {
        match self.parser.as_str() {
            "heuristic" => Ok(Box::new(HeuristicParser::default())),
            other => match other.strip_prefix("conllu:") {
                Some(path) => Ok(Box::new(RecordedParser::from_file(Path::new(path))?)),
                None => Err(PipelineError::validation(format!(
                    "unknown parser backend {other:?} (available: heuristic, conllu:PATH)"
                ))),
            },
        }
    }

    pub fn similarity(&self) -> Result<Box<dyn TextSimilarityBackend>> {
        match self.similarity.as_str() {
            "lexical" => Ok(Box::new(LexicalSimilarity)),
            other => match other.strip_prefix("file:") {
                Some(path) => Ok(Box::new(RecordedSimilarity::from_file(Path::new(path))?)),
                None => Err(PipelineError::validation(format!(
                    "unknown similarity backend {other:?} (available: lexical, file:PATH)"
                ))),
            },
        }
    }

    pub fn embeddings(&self) -> Result<Box<dyn EmbeddingTable>> {
        match self.embeddings.as_str() {
            "hash" => Ok(Box::new(HashEmbeddings::new(64))),
            other => match other.strip_prefix("file:") {
                Some(path) => Ok(Box::new(InMemoryEmbeddings::from_file(Path::new(path))?)),
                None => Err(PipelineError::validation(format!(
                    "unknown embeddings backend {other:?} (available: hash, file:PATH)"
                ))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flags_and_rejects_unknown() {
        let set = BackendSet::from_flags(&["nli=wordlist".to_string(), "embeddings=hash".to_string()])
            .unwrap();
        assert_eq!(set.nli, "wordlist");
        assert!(set.nli().is_ok());
        assert!(BackendSet::from_flags(&["oops".to_string()]).is_err());
        assert!(BackendSet::from_flags(&["foo=bar".to_string()]).is_err());
        let bad = BackendSet { nli: "nope".to_string(), ..BackendSet::default() };
        assert!(bad.nli().is_err());
    }
}
