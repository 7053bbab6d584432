//! Per-concept feature vectors.
//!
//! Raw statistics are computed once per corpus ([`compute_stats`]), then
//! z-normalized over all concepts into a [`FeatureMatrix`]. Feature order is
//! fixed so that a set of size `n` is always the first `n` features.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::cosine;
use crate::hierarchy::{Concept, ConceptGraph};
use crate::ingest::lexicon;

pub const FEATURE_NAMES: [&str; 10] = [
    "tf_idf",
    "signature",
    "tf_idf_centroid_sim",
    "named_entity",
    "cooccurrence_degree",
    "gain",
    "ridf",
    "uppercase_ratio",
    "merge_count",
    "mean_edge_weight",
];

pub const SET_SIZES: [usize; 4] = [2, 5, 8, 10];

/// 95% quantile of chi-squared with one degree of freedom.
pub const CHI2_95: f64 = 3.841;

const SIGMA_FLOOR: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("unknown feature set size {0}; expected one of 2, 5, 8, 10")]
    UnknownSetSize(usize),
    #[error("no features for concept {0}")]
    UnknownConcept(usize),
}

/// Raw (unnormalized) statistics for one concept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptStats {
    pub tf_idf: f64,
    pub ridf: f64,
    pub gain: f64,
    pub signature: bool,
    pub named_entity: bool,
    pub uppercase_ratio: f64,
    pub centroid_sim: f64,
    pub degree: usize,
    pub mean_edge_weight: f64,
    pub merged: bool,
    pub merge_count: usize,
}

impl ConceptStats {
    /// Values in [`FEATURE_NAMES`] order.
    pub fn values(&self) -> [f64; 10] {
        [
            self.tf_idf,
            f64::from(u8::from(self.signature)),
            self.tf_idf * self.centroid_sim,
            f64::from(u8::from(self.named_entity)),
            self.degree as f64,
            self.gain,
            self.ridf,
            self.uppercase_ratio,
            self.merge_count as f64,
            self.mean_edge_weight,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub num_documents: usize,
    pub concepts: BTreeMap<usize, ConceptStats>,
    #[serde(skip)]
    pub cooccurrence: BTreeMap<(usize, usize), usize>,
}

/// Binomial log-likelihood ratio of observing `k` of `n` at rate `k/n`
/// against background rate `p0`.
fn log_likelihood_ratio(k: usize, n: usize, p0: f64) -> f64 {
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let term = |count: f64, observed: f64, background: f64| if count > 0.0 { count * (observed / background).ln() } else { 0.0 };
    2.0 * (term(k, p, p0) + term(n - k, 1.0 - p, 1.0 - p0))
}

/// True when every mention token that is not sentence-initial is capitalized.
fn is_named_entity(concept: &Concept) -> bool {
    let mut checked = 0;
    for mention in &concept.mentions {
        for (i, token) in mention.tokens.iter().enumerate() {
            if mention.start == Some(0) && i == 0 {
                continue;
            }
            if !lexicon::is_capitalized(token) {
                return false;
            }
            checked += 1;
        }
    }
    checked > 0
}

fn uppercase_ratio(concept: &Concept) -> f64 {
    let tokens: Vec<&String> = concept.mentions.iter().flat_map(|m| &m.tokens).collect();
    if tokens.is_empty() {
        return 0.0;
    }
    tokens.iter().filter(|t| lexicon::is_capitalized(t)).count() as f64 / tokens.len() as f64
}

pub fn compute_stats(num_documents: usize, concepts: &[Concept], graph: &ConceptGraph) -> CorpusStats {
    let n_docs = num_documents.max(1) as f64;
    let total_mentions: usize = concepts.iter().map(|c| c.mentions.len()).sum();
    let p_bg = 1.0 / concepts.len().max(1) as f64;
    let dim = concepts.first().map_or(0, |c| c.vector.len());
    let mut centroid = vec![0.0; dim];
    for c in concepts {
        crate::embedding::add_into(&mut centroid, &c.vector);
    }
    centroid.iter_mut().for_each(|x| *x /= concepts.len().max(1) as f64);
    let by_id: HashMap<usize, &Concept> = concepts.iter().map(|c| (c.id, c)).collect();

    let rows = concepts
        .iter()
        .map(|c| {
            let cf = c.mentions.len();
            let mut docs: Vec<&str> = c.mentions.iter().map(|m| m.doc_id.as_str()).collect();
            docs.sort_unstable();
            docs.dedup();
            let df = docs.len().max(1) as f64;
            let idf = (n_docs / df).ln();
            let tf_idf = cf as f64 / df * idf;
            let ridf = idf + (1.0 - (-(cf as f64) / n_docs).exp()).ln();
            let p = if total_mentions > 0 { cf as f64 / total_mentions as f64 } else { 0.0 };
            let gain = if p > 0.0 { p * (p / p_bg).ln() } else { 0.0 };
            let signature =
                total_mentions > 0 && p > p_bg && log_likelihood_ratio(cf, total_mentions, p_bg) > CHI2_95;
            let neighbors: Vec<usize> = graph.neighbors(c.id).into_iter().filter(|n| by_id.contains_key(n)).collect();
            let mean_edge_weight = if neighbors.is_empty() {
                0.0
            } else {
                neighbors.iter().map(|n| cosine(&c.vector, &by_id[n].vector).unwrap_or(0.0)).sum::<f64>()
                    / neighbors.len() as f64
            };
            let stats = ConceptStats {
                tf_idf,
                ridf,
                gain,
                signature,
                named_entity: is_named_entity(c),
                uppercase_ratio: uppercase_ratio(c),
                centroid_sim: cosine(&c.vector, &centroid).unwrap_or(0.0),
                degree: neighbors.len(),
                mean_edge_weight,
                merged: c.merge_count > 0,
                merge_count: c.merge_count,
            };
            (c.id, stats)
        })
        .collect();
    CorpusStats { num_documents, concepts: rows, cooccurrence: graph.cooccurrence.clone() }
}

impl CorpusStats {
    /// Tab-separated dump of raw statistics, one row per concept.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("concept");
        for name in FEATURE_NAMES {
            out.push('\t');
            out.push_str(name);
        }
        out.push_str("\tmerged\n");
        for (id, stats) in &self.concepts {
            let _ = write!(out, "{id}");
            for v in stats.values() {
                let _ = write!(out, "\t{v}");
            }
            let _ = writeln!(out, "\t{}", u8::from(stats.merged));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub schema: Vec<String>,
    pub values: Vec<f64>,
}

/// z-normalized features for every concept, truncated to a set size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub schema: Vec<String>,
    pub rows: BTreeMap<usize, Vec<f64>>,
}

pub fn check_set_size(set_size: usize) -> Result<(), FeatureError> {
    if SET_SIZES.contains(&set_size) {
        Ok(())
    } else {
        Err(FeatureError::UnknownSetSize(set_size))
    }
}

impl FeatureMatrix {
    pub fn new(stats: &CorpusStats, set_size: usize) -> Result<Self, FeatureError> {
        check_set_size(set_size)?;
        let raw: Vec<(usize, [f64; 10])> = stats.concepts.iter().map(|(&id, s)| (id, s.values())).collect();
        let n = raw.len().max(1) as f64;
        let mut rows: BTreeMap<usize, Vec<f64>> = raw.iter().map(|(id, _)| (*id, Vec::with_capacity(set_size))).collect();
        for f in 0..set_size {
            let mean = raw.iter().map(|(_, v)| v[f]).sum::<f64>() / n;
            let sd = (raw.iter().map(|(_, v)| (v[f] - mean).powi(2)).sum::<f64>() / n).sqrt();
            for (id, v) in &raw {
                let z = if sd < SIGMA_FLOOR { 0.0 } else { (v[f] - mean) / sd };
                rows.get_mut(id).expect("row exists").push(z);
            }
        }
        Ok(FeatureMatrix { schema: FEATURE_NAMES[..set_size].iter().map(|s| s.to_string()).collect(), rows })
    }

    pub fn dim(&self) -> usize {
        self.schema.len()
    }

    pub fn get(&self, concept: usize) -> Result<&[f64], FeatureError> {
        self.rows.get(&concept).map(Vec::as_slice).ok_or(FeatureError::UnknownConcept(concept))
    }

    pub fn phi(&self, concept: usize) -> Result<FeatureVector, FeatureError> {
        Ok(FeatureVector { schema: self.schema.clone(), values: self.get(concept)?.to_vec() })
    }
}

/// Normalized feature vector of one concept.
pub fn phi(concept: usize, stats: &CorpusStats, set_size: usize) -> Result<FeatureVector, FeatureError> {
    FeatureMatrix::new(stats, set_size)?.phi(concept)
}
