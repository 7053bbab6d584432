//! ROUGE-1, ROUGE-2 and ROUGE-L with a limited-length candidate.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub const DEFAULT_WORD_LIMIT: usize = 75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    R1,
    R2,
    RL,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::R1, Variant::R2, Variant::RL];
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::R1 => "R1",
            Variant::R2 => "R2",
            Variant::RL => "RL",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "R1" | "ROUGE-1" => Ok(Variant::R1),
            "R2" | "ROUGE-2" => Ok(Variant::R2),
            "RL" | "ROUGE-L" => Ok(Variant::RL),
            _ => Err(format!("unknown ROUGE variant {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub variant: Variant,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

impl RougeScore {
    fn new(variant: Variant, hits: usize, candidate_len: usize, reference_len: usize) -> Self {
        let ratio = |n: usize| if n == 0 { 0.0 } else { hits as f64 / n as f64 };
        let (recall, precision) = (ratio(reference_len), ratio(candidate_len));
        RougeScore { variant, recall, precision, f1: harmonic(recall, precision) }
    }
}

fn harmonic(r: f64, p: f64) -> f64 {
    if r + p == 0.0 {
        0.0
    } else {
        2.0 * r * p / (r + p)
    }
}

fn fold<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    tokens.iter().map(|t| t.as_ref().to_lowercase()).collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n > 0 {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram overlap.
fn ngram_hits(candidate: &[String], reference: &[String], n: usize) -> usize {
    let cand = ngram_counts(candidate, n);
    ngram_counts(reference, n).iter().map(|(g, &c)| c.min(cand.get(g).copied().unwrap_or(0))).sum()
}

pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

fn score_one(candidate: &[String], reference: &[String], variant: Variant) -> RougeScore {
    let grams = |toks: &[String], n: usize| toks.len().saturating_sub(n - 1);
    match variant {
        Variant::R1 => RougeScore::new(variant, ngram_hits(candidate, reference, 1), candidate.len(), reference.len()),
        Variant::R2 => {
            RougeScore::new(variant, ngram_hits(candidate, reference, 2), grams(candidate, 2), grams(reference, 2))
        }
        Variant::RL => RougeScore::new(variant, lcs_len(candidate, reference), candidate.len(), reference.len()),
    }
}

/// Scores the candidate, truncated to `word_limit` tokens, against each
/// reference and keeps the reference with the best recall (ties: best f1,
/// then the earliest). Tokens are case-folded; there is no stemming.
pub fn rouge_score<C: AsRef<str>, R: AsRef<str>>(
    candidate: &[C],
    references: &[Vec<R>],
    variant: Variant,
    word_limit: Option<usize>,
) -> RougeScore {
    let mut cand = fold(candidate);
    if let Some(limit) = word_limit {
        cand.truncate(limit);
    }
    let mut best = RougeScore { variant, recall: 0.0, precision: 0.0, f1: 0.0 };
    for reference in references {
        let s = score_one(&cand, &fold(reference), variant);
        if s.recall > best.recall || (s.recall == best.recall && s.f1 > best.f1) {
            best = s;
        }
    }
    best
}

/// All three variants, in [`Variant::ALL`] order.
pub fn rouge_all<C: AsRef<str>, R: AsRef<str>>(
    candidate: &[C],
    references: &[Vec<R>],
    word_limit: Option<usize>,
) -> Vec<RougeScore> {
    Variant::ALL.iter().map(|&v| rouge_score(candidate, references, v, word_limit)).collect()
}

pub const EVAL_TSV_HEADER: &str = "cluster\tvariant\trecall\tprecision\tf1";

pub fn eval_tsv_row(cluster: &str, score: &RougeScore) -> String {
    format!("{cluster}\t{}\t{:.6}\t{:.6}\t{:.6}", score.variant, score.recall, score.precision, score.f1)
}
