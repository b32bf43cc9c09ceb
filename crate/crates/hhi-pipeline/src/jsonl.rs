//! JSONL persistence: one record per line, stable field order, errors with
//! line numbers.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{PipelineError, Result};

/// Reads every record of a JSONL file; blank lines are not allowed.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| PipelineError::io(path, e))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| PipelineError::io(path, e))?;
        let record = serde_json::from_str(&line).map_err(|e| PipelineError::Schema {
            path: path.to_path_buf(),
            line: index + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Writes records as JSONL. Struct field order is preserved, so rewriting
/// unchanged data is byte-identical.
pub fn write_jsonl<'a, T: Serialize + 'a>(
    path: &Path,
    records: impl IntoIterator<Item = &'a T>,
) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
        }
    }
    let file = File::create(path).map_err(|e| PipelineError::io(path, e))?;
    let mut writer = BufWriter::new(file);
    for record in records {
        let line = serde_json::to_string(record).map_err(|e| PipelineError::Schema {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })?;
        writer.write_all(line.as_bytes()).map_err(|e| PipelineError::io(path, e))?;
        writer.write_all(b"\n").map_err(|e| PipelineError::io(path, e))?;
    }
    writer.flush().map_err(|e| PipelineError::io(path, e))
}

/// Writes a single pretty-printed JSON document.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
        }
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| PipelineError::Schema {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })?;
    std::fs::write(path, text + "\n").map_err(|e| PipelineError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Schema {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use hhi_core::types::{LabeledSample, MaskedCaption, Source, Split};

    fn sample(id: &str) -> LabeledSample {
        LabeledSample {
            id: id.to_string(),
            image_ref: format!("img/{id}"),
            caption: MaskedCaption::new("[NAME] greets [NAME]", Source::WhosWaldo),
            face_count: 2,
            datetime_meta: None,
            label: None,
            split: Split::Train,
        }
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("samples.jsonl");
        let records = vec![sample("a"), sample("b")];
        write_jsonl(&path, &records).unwrap();
        let first = std::fs::read(&path).unwrap();
        let back: Vec<LabeledSample> = read_jsonl(&path).unwrap();
        assert_eq!(back, records);
        write_jsonl(&path, &back).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
    }

    #[test]
    fn empty_file_reads_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        std::fs::write(&path, "").unwrap();
        let records: Vec<LabeledSample> = read_jsonl(&path).unwrap();
        assert!(records.is_empty());
    }

    #[test]
    fn missing_field_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        let good = serde_json::to_string(&sample("a")).unwrap();
        std::fs::write(&path, format!("{good}\n{{\"image_ref\":\"x\"}}\n")).unwrap();
        match read_jsonl::<LabeledSample>(&path).unwrap_err() {
            PipelineError::Schema { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("id"), "message: {message}");
            }
            other => panic!("unexpected error {other}"),
        }
    }
}
