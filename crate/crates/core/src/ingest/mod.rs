//! Corpus loading, segmentation and (subject, relation, object) extraction.

mod extract;
pub mod lexicon;
mod normalize;
mod segment;

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use extract::{extract_triples, load_external_triples, parse_external_triples, ExternalTriple, ExtractMode};
pub use normalize::{normalize_mentions, NormalizeStats};
pub use segment::{segment_and_tokenize, tokenize};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("line {line}: duplicate document id {id:?}")]
    DuplicateId { line: usize, id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: String,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<Document>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub doc_id: String,
    pub index: usize,
    pub tokens: Vec<String>,
    pub raw: String,
}

/// A contiguous run of tokens. `start` is the offset of the first token in
/// the sentence the surface text came from, when known.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<usize>,
}

impl Span {
    pub fn new(tokens: Vec<String>, start: Option<usize>) -> Self {
        Self { tokens, start }
    }

    pub fn from_words(words: &[&str]) -> Self {
        Self { tokens: words.iter().map(|w| w.to_string()).collect(), start: None }
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleMention {
    pub subject: Span,
    pub relation: Span,
    pub object: Span,
    pub doc_id: String,
    pub sent_index: usize,
}

impl Corpus {
    /// Parses JSON-lines text. Whitespace-only lines are skipped but still
    /// count toward reported line numbers.
    pub fn parse_jsonl(text: &str) -> Result<Self, IngestError> {
        let mut documents = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let doc: Document = serde_json::from_str(line).map_err(|e| IngestError::Format {
                line: line_no,
                message: e.to_string(),
            })?;
            if doc.id.is_empty() {
                return Err(IngestError::Format { line: line_no, message: "empty document id".into() });
            }
            if !seen.insert(doc.id.clone()) {
                return Err(IngestError::DuplicateId { line: line_no, id: doc.id });
            }
            documents.push(doc);
        }
        Ok(Corpus { documents })
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for doc in &self.documents {
            out.push_str(&serde_json::to_string(doc).expect("document serializes"));
            out.push('\n');
        }
        out
    }

    /// All sentences of all documents, in document order.
    pub fn sentences(&self) -> Vec<Sentence> {
        self.documents.iter().flat_map(segment_and_tokenize).collect()
    }
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, IngestError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    Corpus::parse_jsonl(&text)
}

/// Extracts and normalizes the triples of a whole corpus.
pub fn extract_corpus(
    sentences: &[Sentence],
    mode: ExtractMode,
    external: &[ExternalTriple],
) -> Result<(Vec<TripleMention>, NormalizeStats), IngestError> {
    let mut raw = Vec::new();
    for sentence in sentences {
        raw.extend(extract_triples(sentence, mode, external)?);
    }
    Ok(normalize_mentions(&raw, sentences))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_empty_corpus() {
        let corpus = Corpus::parse_jsonl("").unwrap();
        assert!(corpus.documents.is_empty());
    }

    #[test]
    fn order_is_preserved() {
        let text = "{\"id\":\"b\",\"title\":\"B\",\"text\":\"x\"}\n{\"id\":\"a\",\"title\":\"A\",\"text\":\"y\"}\n";
        let corpus = Corpus::parse_jsonl(text).unwrap();
        let ids: Vec<_> = corpus.documents.iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["b", "a"]);
    }

    #[test]
    fn missing_text_reports_line() {
        let text = concat!(
            "{\"id\":\"1\",\"title\":\"\",\"text\":\"a\"}\n",
            "{\"id\":\"2\",\"title\":\"\",\"text\":\"b\"}\n",
            "{\"id\":\"3\",\"title\":\"\"}\n",
        );
        match Corpus::parse_jsonl(text) {
            Err(IngestError::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = "{\"id\":\"1\",\"title\":\"\",\"text\":\"a\"}\n{\"id\":\"1\",\"title\":\"\",\"text\":\"b\"}\n";
        assert!(matches!(Corpus::parse_jsonl(text), Err(IngestError::DuplicateId { line: 2, .. })));
    }

    #[test]
    fn unreadable_path_is_io_error() {
        assert!(matches!(load_corpus("/nonexistent/corpus.jsonl"), Err(IngestError::Io { .. })));
    }

    #[test]
    fn jsonl_round_trip() {
        let text = "{\"id\":\"1\",\"title\":\"t\",\"text\":\"A b. C d.\"}\n";
        let corpus = Corpus::parse_jsonl(text).unwrap();
        assert_eq!(Corpus::parse_jsonl(&corpus.to_jsonl()).unwrap(), corpus);
    }
}
