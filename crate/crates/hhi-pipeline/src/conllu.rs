//! CoNLL-U file IO over the core codec: blank-line-separated sentences with
//! optional `# sent_id` / `# text` comments.

use std::path::Path;

use hhi_core::parse::{parse_conllu, to_conllu, DependencyParse};

use crate::error::{PipelineError, Result};

/// One parsed sentence with its id and original text when present.
#[derive(Debug, Clone, PartialEq)]
pub struct ConlluSentence {
    pub sent_id: Option<String>,
    pub text: Option<String>,
    pub parse: DependencyParse,
}

pub fn read_conllu(path: &Path) -> Result<Vec<ConlluSentence>> {
    let content = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let texts = collect_text_comments(&content);
    let sentences = parse_conllu(&content).map_err(|e| PipelineError::Schema {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })?;
    Ok(sentences
        .into_iter()
        .zip(texts)
        .map(|((sent_id, parse), text)| ConlluSentence { sent_id, text, parse })
        .collect())
}

/// `# text = ...` comments per sentence block, aligned with the codec's
/// sentence order.
fn collect_text_comments(content: &str) -> Vec<Option<String>> {
    let mut texts = Vec::new();
    let mut current: Option<String> = None;
    let mut in_block = false;
    for line in content.lines() {
        let trimmed = line.trim_end();
        if trimmed.is_empty() {
            if in_block {
                texts.push(current.take());
                in_block = false;
            } else {
                current = None;
            }
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "text" {
                    current = Some(value.trim().to_string());
                }
            }
            continue;
        }
        in_block = true;
    }
    if in_block {
        texts.push(current.take());
    }
    texts
}

pub fn write_conllu(path: &Path, sentences: &[ConlluSentence]) -> Result<()> {
    let mut out = String::new();
    for sentence in sentences {
        if let Some(text) = &sentence.text {
            out.push_str("# text = ");
            out.push_str(text);
            out.push('\n');
        }
        out.push_str(&to_conllu(&sentence.parse, sentence.sent_id.as_deref()));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| PipelineError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_sentences_with_ids_and_text() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("two.conllu");
        std::fs::write(
            &path,
            "# sent_id = s1\n# text = Ann waves\n\
             1\tAnn\tann\tPROPN\t_\t_\t2\tnsubj\t_\tstart_char=0|end_char=3|entity=NAME\n\
             2\twaves\twave\tVERB\t_\t_\t0\troot\t_\tstart_char=4|end_char=9\n\
             \n\
             # sent_id = s2\n\
             1\tHello\thello\tINTJ\t_\t_\t0\troot\t_\tstart_char=0|end_char=5\n",
        )
        .unwrap();
        let sentences = read_conllu(&path).unwrap();
        assert_eq!(sentences.len(), 2);
        assert_eq!(sentences[0].sent_id.as_deref(), Some("s1"));
        assert_eq!(sentences[0].text.as_deref(), Some("Ann waves"));
        assert_eq!(sentences[1].sent_id.as_deref(), Some("s2"));
        assert_eq!(sentences[1].text, None);

        let out = dir.path().join("round.conllu");
        write_conllu(&out, &sentences).unwrap();
        assert_eq!(read_conllu(&out).unwrap(), sentences);
    }
}
