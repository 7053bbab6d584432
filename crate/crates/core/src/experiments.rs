//! Query-budget and feature-set sweeps against reference summaries.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::{tokenize, Corpus};
use crate::pipeline::{organize, personalize, score_summary, Organized, OrganizeConfig, PipelineError, RunConfig};
use crate::rouge::{RougeScore, Variant};

pub const QUERY_BUDGETS: [usize; 6] = [10, 15, 20, 25, 30, 35];
pub const FEATURE_SET_SIZES: [usize; 4] = [2, 5, 8, 10];

/// One reference summary per non-blank line.
pub fn parse_references(text: &str) -> Vec<Vec<String>> {
    text.lines().map(tokenize).filter(|t| !t.is_empty()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Query budget or feature-set size, depending on the sweep.
    pub value: usize,
    pub seed: u64,
    pub scores: Vec<RougeScore>,
}

impl SweepPoint {
    pub fn score(&self, variant: Variant) -> &RougeScore {
        self.scores.iter().find(|s| s.variant == variant).expect("all variants are scored")
    }
}

fn run_point(
    organized: &Organized,
    references: &[Vec<String>],
    config: &RunConfig,
    word_limit: Option<usize>,
) -> Result<Vec<RougeScore>, PipelineError> {
    let oracle = organized.oracle(references);
    let run = personalize(organized, config, |p| oracle.respond(p))?;
    Ok(score_summary(&run.summary, references, word_limit))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    QueryBudget,
    FeatureSet,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::QueryBudget => "query_budget",
            SweepAxis::FeatureSet => "feature_set",
        }
    }

    fn apply(self, base: &RunConfig, value: usize, seed: u64) -> RunConfig {
        let mut config = RunConfig { seed, ..base.clone() };
        match self {
            SweepAxis::QueryBudget => config.query_budget = value,
            SweepAxis::FeatureSet => config.feature_set = value,
        }
        config
    }
}

/// Scores every (value, seed) pair of the grid. Each seed builds its own map
/// from the corpus; grid points run in parallel and are returned seed-major.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    axis: SweepAxis,
    corpus: &Corpus,
    references: &[Vec<String>],
    values: &[usize],
    seeds: &[u64],
    organize_config: &OrganizeConfig,
    base: &RunConfig,
    word_limit: Option<usize>,
) -> Result<Vec<SweepPoint>, PipelineError> {
    let maps: Vec<Organized> = seeds
        .par_iter()
        .map(|&s| organize(corpus, &[], None, &OrganizeConfig { seed: s, ..organize_config.clone() }))
        .collect::<Result<_, _>>()?;
    let grid: Vec<(usize, usize)> = (0..seeds.len()).flat_map(|i| values.iter().map(move |&v| (i, v))).collect();
    grid.par_iter()
        .map(|&(i, v)| {
            let config = axis.apply(base, v, seeds[i]);
            let scores = run_point(&maps[i], references, &config, word_limit)?;
            Ok(SweepPoint { value: v, seed: seeds[i], scores })
        })
        .collect()
}

/// Mean recall of `variant` over the points with the given value.
pub fn mean_recall(points: &[SweepPoint], value: usize, variant: Variant) -> f64 {
    let hits: Vec<f64> = points.iter().filter(|p| p.value == value).map(|p| p.score(variant).recall).collect();
    if hits.is_empty() {
        0.0
    } else {
        hits.iter().sum::<f64>() / hits.len() as f64
    }
}

/// Rows of `axis\tseed\tvariant\trecall\tprecision\tf1`.
pub fn sweep_tsv(axis: SweepAxis, points: &[SweepPoint]) -> String {
    let mut out = format!("{}\tseed\tvariant\trecall\tprecision\tf1\n", axis.name());
    for p in points {
        for s in &p.scores {
            out.push_str(&format!(
                "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\n",
                p.value, p.seed, s.variant, s.recall, s.precision, s.f1
            ));
        }
    }
    out
}

/// Per-value mean recall, in the order of `values`.
pub fn mean_curve(points: &[SweepPoint], values: &[usize], variant: Variant) -> Vec<f64> {
    values.iter().map(|&v| mean_recall(points, v, variant)).collect()
}

/// Spearman rank correlation, with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for &k in &idx[i..=j] {
                r[k] = (i + j) as f64 / 2.0;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}
