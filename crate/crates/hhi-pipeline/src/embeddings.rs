//! Word-embedding tables loaded from text files.
//!
//! File format: one `word <float> <float> ...` entry per line, whitespace
//! separated (the common plain-text distribution format for word vectors).

use std::collections::BTreeMap;
use std::path::Path;

use hhi_core::backend::EmbeddingTable;

use crate::error::{PipelineError, Result};

#[derive(Debug, Clone, Default)]
pub struct InMemoryEmbeddings {
    dimension: usize,
    table: BTreeMap<String, Vec<f32>>,
}

impl InMemoryEmbeddings {
    pub fn new(dimension: usize) -> Self {
        Self { dimension, table: BTreeMap::new() }
    }

    pub fn insert(&mut self, word: &str, vector: Vec<f32>) {
        debug_assert_eq!(vector.len(), self.dimension);
        self.table.insert(word.to_string(), vector);
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.table.keys().map(String::as_str)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let mut table = BTreeMap::new();
        let mut dimension = 0usize;
        for (index, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().expect("non-empty line has a word");
            let vector: std::result::Result<Vec<f32>, _> =
                fields.map(str::parse::<f32>).collect();
            let vector = vector.map_err(|e| PipelineError::Schema {
                path: path.to_path_buf(),
                line: index + 1,
                message: format!("bad float: {e}"),
            })?;
            if vector.is_empty() {
                return Err(PipelineError::Schema {
                    path: path.to_path_buf(),
                    line: index + 1,
                    message: "no vector components".to_string(),
                });
            }
            if dimension == 0 {
                dimension = vector.len();
            } else if vector.len() != dimension {
                return Err(PipelineError::Schema {
                    path: path.to_path_buf(),
                    line: index + 1,
                    message: format!("dimension {} != {}", vector.len(), dimension),
                });
            }
            table.insert(word.to_string(), vector);
        }
        Ok(Self { dimension, table })
    }
}

impl EmbeddingTable for InMemoryEmbeddings {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn lookup(&self, word: &str) -> Option<Vec<f32>> {
        self.table.get(word).cloned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_and_validates_dimensions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vectors.txt");
        std::fs::write(&path, "hugging 0.1 0.2\nembracing 0.3 0.4\n").unwrap();
        let table = InMemoryEmbeddings::from_file(&path).unwrap();
        assert_eq!(table.dimension(), 2);
        assert_eq!(table.lookup("hugging"), Some(vec![0.1, 0.2]));
        assert_eq!(table.lookup("missing"), None);

        std::fs::write(&path, "a 0.1 0.2\nb 0.3\n").unwrap();
        assert!(InMemoryEmbeddings::from_file(&path).is_err());
    }
}
