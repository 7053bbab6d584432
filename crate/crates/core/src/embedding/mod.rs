//! Word vectors: `.vec` text files, a small subword skip-gram trainer, concept
//! composition and similarity.

mod train;

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use train::{train_embeddings, TrainConfig};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected {expected} values, found {found}")]
    DimMismatch { line: usize, expected: usize, found: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("vector file has no entries")]
    EmptyStore,
    #[error("vectors have different dimensions ({left} vs {right})")]
    VectorDims { left: usize, right: usize },
    #[error("not enough training data: {0}")]
    InsufficientData(String),
}

/// Character n-gram vectors kept by the trainer for out-of-vocabulary backoff.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramTable {
    pub min_n: usize,
    pub max_n: usize,
    pub(crate) index: HashMap<String, usize>,
    pub(crate) vectors: Vec<Vec<f64>>,
}

impl NgramTable {
    /// Sum of the known n-gram vectors of `word`, or `None` if none is known.
    pub fn compose(&self, word: &str, dim: usize) -> Option<Vec<f64>> {
        let mut sum = vec![0.0; dim];
        let mut hits = 0;
        for gram in char_ngrams(word, self.min_n, self.max_n) {
            if let Some(&i) = self.index.get(&gram) {
                add_into(&mut sum, &self.vectors[i]);
                hits += 1;
            }
        }
        (hits > 0).then_some(sum)
    }
}

/// Token → vector map with a fixed dimension. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorStore {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<Vec<f64>>,
    ngrams: Option<NgramTable>,
}

impl VectorStore {
    /// Builds a store from `(token, vector)` pairs; later duplicates are ignored.
    pub fn from_entries(
        dim: usize,
        entries: impl IntoIterator<Item = (String, Vec<f64>)>,
    ) -> Result<Self, EmbeddingError> {
        let mut store = VectorStore { dim, words: Vec::new(), index: HashMap::new(), vectors: Vec::new(), ngrams: None };
        for (token, vector) in entries {
            if vector.len() != dim {
                return Err(EmbeddingError::VectorDims { left: dim, right: vector.len() });
            }
            store.insert(token, vector);
        }
        if store.words.is_empty() || dim == 0 {
            return Err(EmbeddingError::EmptyStore);
        }
        Ok(store)
    }

    pub(crate) fn with_ngrams(mut self, table: NgramTable) -> Self {
        self.ngrams = Some(table);
        self
    }

    fn insert(&mut self, token: String, vector: Vec<f64>) {
        if self.index.contains_key(&token) {
            return;
        }
        self.index.insert(token.clone(), self.words.len());
        self.words.push(token);
        self.vectors.push(vector);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.words.len()
    }

    pub fn ngrams(&self) -> Option<&NgramTable> {
        self.ngrams.as_ref()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index.get(token).map(|&i| self.vectors[i].as_slice())
    }

    /// Entries in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.words.iter().zip(&self.vectors).map(|(w, v)| (w.as_str(), v.as_slice()))
    }

    /// Exact token, then its lower-case form, then the n-gram backoff.
    fn resolve(&self, token: &str) -> Option<Vec<f64>> {
        if let Some(v) = self.get(token) {
            return Some(v.to_vec());
        }
        let lower = token.to_lowercase();
        if let Some(v) = self.get(&lower) {
            return Some(v.to_vec());
        }
        self.ngrams.as_ref().and_then(|t| t.compose(&lower, self.dim))
    }

    /// Writes the `.vec` text format with a `count dim` header.
    pub fn to_vec_text(&self) -> String {
        let mut out = format!("{} {}\n", self.count(), self.dim);
        for (word, vector) in self.iter() {
            out.push_str(word);
            for x in vector {
                write!(out, " {x}").expect("write to string");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_vec_text(text: &str) -> Result<Self, EmbeddingError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).peekable();
        let mut dim = None;
        if let Some((_, first)) = lines.peek() {
            let fields: Vec<&str> = first.split_whitespace().collect();
            if fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
                dim = Some(fields[1].parse::<usize>().expect("checked above"));
                lines.next();
            }
        }
        let mut store = VectorStore { dim: 0, words: Vec::new(), index: HashMap::new(), vectors: Vec::new(), ngrams: None };
        for (i, line) in lines {
            let line_no = i + 1;
            let mut fields = line.split_whitespace();
            let token = fields.next().expect("line is not blank");
            let values: Vec<&str> = fields.collect();
            let expected = *dim.get_or_insert(values.len());
            if values.len() != expected || expected == 0 {
                return Err(EmbeddingError::DimMismatch { line: line_no, expected, found: values.len() });
            }
            let vector = values
                .iter()
                .map(|v| v.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| EmbeddingError::Parse { line: line_no, message: e.to_string() })?;
            store.insert(token.to_string(), vector);
        }
        if store.words.is_empty() {
            return Err(EmbeddingError::EmptyStore);
        }
        store.dim = dim.expect("set by the first entry");
        Ok(store)
    }
}

pub fn load_vectors(path: impl AsRef<Path>) -> Result<VectorStore, EmbeddingError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| EmbeddingError::Io { path: path.to_path_buf(), source })?;
    VectorStore::parse_vec_text(&text)
}

/// fastText-style n-grams of `<word>`.
pub fn char_ngrams(word: &str, min_n: usize, max_n: usize) -> Vec<String> {
    let chars: Vec<char> = format!("<{word}>").chars().collect();
    let mut out = Vec::new();
    // the whole bracketed word is covered by the word vector itself
    for n in min_n.max(1)..=max_n.min(chars.len() - 1) {
        out.extend(chars.windows(n).map(|w| w.iter().collect::<String>()));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConceptEmbedding {
    pub vector: Vec<f64>,
    /// Number of tokens that resolved to a vector; 0 means `vector` is zero.
    pub resolved: usize,
}

impl ConceptEmbedding {
    pub fn is_unresolved(&self) -> bool {
        self.resolved == 0
    }
}

/// Mean of the resolvable token vectors. Tokens are summed in sorted order so
/// the result does not depend on their order.
pub fn embed_concept<S: AsRef<str>>(tokens: &[S], store: &VectorStore) -> ConceptEmbedding {
    let mut sorted: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
    sorted.sort_unstable();
    let mut sum = vec![0.0; store.dim()];
    let mut resolved = 0;
    for token in sorted {
        if let Some(v) = store.resolve(token) {
            add_into(&mut sum, &v);
            resolved += 1;
        }
    }
    if resolved > 0 {
        let n = resolved as f64;
        sum.iter_mut().for_each(|x| *x /= n);
    }
    ConceptEmbedding { vector: sum, resolved }
}

pub(crate) fn add_into(acc: &mut [f64], v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

pub fn squared_distance(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, EmbeddingError> {
    if u.len() != v.len() {
        return Err(EmbeddingError::VectorDims { left: u.len(), right: v.len() });
    }
    let denom = norm(u) * norm(v);
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((dot(u, v) / denom).clamp(-1.0, 1.0))
}

/// Jaccard index of the two token sets; 0 when both are empty.
pub fn jaccard_tokens<S: AsRef<str>>(a: &[S], b: &[S]) -> f64 {
    let a: BTreeSet<&str> = a.iter().map(AsRef::as_ref).collect();
    let b: BTreeSet<&str> = b.iter().map(AsRef::as_ref).collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn store() -> VectorStore {
        VectorStore::from_entries(
            3,
            [("cat".to_string(), vec![1.0, 0.0, 2.0]), ("dog".to_string(), vec![3.0, 2.0, 0.0])],
        )
        .unwrap()
    }

    #[test]
    fn parse_with_header() {
        let s = VectorStore::parse_vec_text("2 3\ncat 1 0 2\ndog 3 2 0\n").unwrap();
        assert_eq!(s.count(), 2);
        assert_eq!(s.dim(), 3);
        assert_eq!(s.get("dog"), Some(&[3.0, 2.0, 0.0][..]));
    }

    #[test]
    fn parse_without_header_and_duplicates() {
        let s = VectorStore::parse_vec_text("cat 1 0\ncat 5 5\ndog 0 1\n").unwrap();
        assert_eq!(s.count(), 2);
        assert_eq!(s.get("cat"), Some(&[1.0, 0.0][..]));
    }

    #[test]
    fn dim_mismatch_reports_line() {
        let err = VectorStore::parse_vec_text("2 3\ncat 1 0 2\ndog 3 2\n").unwrap_err();
        assert!(matches!(err, EmbeddingError::DimMismatch { line: 3, expected: 3, found: 2 }));
    }

    #[test]
    fn empty_file() {
        assert!(matches!(VectorStore::parse_vec_text(""), Err(EmbeddingError::EmptyStore)));
        assert!(matches!(VectorStore::parse_vec_text("0 3\n"), Err(EmbeddingError::EmptyStore)));
    }

    #[test]
    fn text_round_trip() {
        let s = store();
        assert_eq!(VectorStore::parse_vec_text(&s.to_vec_text()).unwrap(), s);
    }

    #[test]
    fn single_word_concept_is_its_vector() {
        let e = embed_concept(&["cat"], &store());
        assert_eq!(e.vector, vec![1.0, 0.0, 2.0]);
        assert_eq!(e.resolved, 1);
    }

    #[test]
    fn two_word_concept_is_mean() {
        let e = embed_concept(&["cat", "dog"], &store());
        assert_eq!(e.vector, vec![2.0, 1.0, 1.0]);
    }

    #[test]
    fn case_folded_lookup_and_oov() {
        let e = embed_concept(&["Cat", "unicorn"], &store());
        assert_eq!(e.vector, vec![1.0, 0.0, 2.0]);
        let e = embed_concept(&["unicorn"], &store());
        assert!(e.is_unresolved());
        assert_eq!(e.vector, vec![0.0; 3]);
    }

    #[test]
    fn cosine_cases() {
        let u = [1.0, 2.0, -0.5];
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        assert!((cosine(&u, &u).unwrap() - 1.0).abs() < 1e-12);
        assert!((cosine(&u, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(cosine(&u, &[0.0; 3]).unwrap(), 0.0);
        assert!(matches!(cosine(&u, &[1.0]), Err(EmbeddingError::VectorDims { .. })));
    }

    #[test]
    fn jaccard_case() {
        assert!((jaccard_tokens(&["a", "b"], &["b", "c"]) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(jaccard_tokens::<&str>(&[], &[]), 0.0);
    }

    #[test]
    fn ngrams_of_short_word() {
        assert_eq!(char_ngrams("ab", 3, 4), vec!["<ab", "ab>"]);
    }

    proptest! {
        #[test]
        fn embedding_is_permutation_invariant(perm in Just(vec!["cat", "dog", "cat", "bird"]).prop_shuffle()) {
            let s = store();
            let base = embed_concept(&["cat", "dog", "cat", "bird"], &s);
            prop_assert_eq!(embed_concept(&perm, &s), base);
        }

        #[test]
        fn similarities_are_symmetric(
            u in prop::collection::vec(-5.0f64..5.0, 4),
            v in prop::collection::vec(-5.0f64..5.0, 4),
            a in prop::collection::vec("[a-d]", 0..5),
            b in prop::collection::vec("[a-d]", 0..5),
        ) {
            prop_assert_eq!(cosine(&u, &v).unwrap(), cosine(&v, &u).unwrap());
            let c = cosine(&u, &v).unwrap();
            prop_assert!((-1.0..=1.0).contains(&c));
            prop_assert_eq!(jaccard_tokens(&a, &b), jaccard_tokens(&b, &a));
        }
    }
}
