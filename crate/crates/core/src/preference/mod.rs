//! Pairwise preference queries, Bradley-Terry utility learning and rankings.

pub mod model;
pub mod oracle;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use model::{bt_probability, gradient, objective, rank_concepts, sigmoid, train_utility, RankingTable, TrainHyper, UtilityModel};
pub use oracle::SimulatedOracle;

use crate::features::{FeatureError, FeatureMatrix};
use crate::hierarchy::HierarchyNode;
use crate::seed;

#[derive(Debug, Error, PartialEq)]
pub enum PreferenceError {
    #[error("model has {model} features but the feature matrix has {features}")]
    SchemaMismatch { model: usize, features: usize },
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("no query is pending")]
    NoPendingQuery,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryPair {
    pub level: usize,
    pub left: usize,
    pub right: usize,
    pub round: usize,
}

impl QueryPair {
    fn key(&self) -> (usize, usize) {
        (self.left.min(self.right), self.left.max(self.right))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceRecord {
    pub pair: QueryPair,
    pub choice: Choice,
}

impl PreferenceRecord {
    pub fn winner(&self) -> usize {
        match self.choice {
            Choice::Left => self.pair.left,
            Choice::Right => self.pair.right,
        }
    }

    pub fn loser(&self) -> usize {
        match self.choice {
            Choice::Left => self.pair.right,
            Choice::Right => self.pair.left,
        }
    }
}

/// One line of a session's preference log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceLogEntry {
    pub round: usize,
    pub level: usize,
    pub left: usize,
    pub right: usize,
    pub choice: Choice,
    pub timestamp: String,
}

impl PreferenceLogEntry {
    pub fn new(record: &PreferenceRecord, timestamp: String) -> Self {
        let p = &record.pair;
        PreferenceLogEntry { round: p.round, level: p.level, left: p.left, right: p.right, choice: record.choice, timestamp }
    }

    pub fn record(&self) -> PreferenceRecord {
        PreferenceRecord {
            pair: QueryPair { level: self.level, left: self.left, right: self.right, round: self.round },
            choice: self.choice,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Adjacent labels first, then labels two apart, and so on.
    #[default]
    Chain,
    /// Pairs whose current utility estimates are closest first.
    Active,
}

/// Distinct labels per level, top-down, in pre-order.
fn labels_by_level(root: &HierarchyNode) -> Vec<Vec<usize>> {
    let mut levels: Vec<Vec<usize>> = Vec::new();
    for node in root.walk() {
        if levels.len() <= node.level {
            levels.resize(node.level + 1, Vec::new());
        }
        if !levels[node.level].contains(&node.label_concept_id) {
            levels[node.level].push(node.label_concept_id);
        }
    }
    levels
}

/// Every distinct same-level pair in chain order: for gap 1, 2, ..., and
/// within a gap for each level top-down, `(l_i, l_{i+gap})`.
pub fn chain_pairs(root: &HierarchyNode) -> Vec<QueryPair> {
    let levels = labels_by_level(root);
    let widest = levels.iter().map(Vec::len).max().unwrap_or(0);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for gap in 1..widest {
        for (level, labels) in levels.iter().enumerate() {
            for i in 0..labels.len().saturating_sub(gap) {
                let pair = QueryPair { level, left: labels[i], right: labels[i + gap], round: 0 };
                if pair.left != pair.right && seen.insert(pair.key()) {
                    out.push(pair);
                }
            }
        }
    }
    out
}

pub enum Schedule<'a> {
    Chain,
    Active { model: &'a UtilityModel, features: &'a FeatureMatrix },
}

/// At most `budget` distinct same-level pairs.
pub fn schedule_queries(root: &HierarchyNode, budget: usize, schedule: Schedule<'_>) -> Result<Vec<QueryPair>, PreferenceError> {
    let mut pairs = chain_pairs(root);
    if let Schedule::Active { model, features } = schedule {
        let mut keyed = Vec::with_capacity(pairs.len());
        for pair in pairs {
            let gap = (model.utility(pair.left, features)? - model.utility(pair.right, features)?).abs();
            keyed.push((gap, pair));
        }
        // stable: equal gaps keep chain order
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs = keyed.into_iter().map(|(_, p)| p).collect();
    }
    pairs.truncate(budget);
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    pub query_budget: usize,
    pub strategy: Strategy,
    /// Retrain after this many answers.
    pub round_size: usize,
    pub hyper: TrainHyper,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig { query_budget: 10, strategy: Strategy::Chain, round_size: 5, hyper: TrainHyper::default() }
    }
}

/// Query/answer/retrain loop: one pending query at a time, retraining after
/// each round of answers and after the last one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryLoop {
    pub config: LoopConfig,
    pub records: Vec<PreferenceRecord>,
    pub model: UtilityModel,
    pub pending: Option<QueryPair>,
    pub served: usize,
    trained_on: usize,
}

impl QueryLoop {
    pub fn new(config: LoopConfig, features: &FeatureMatrix) -> Self {
        QueryLoop {
            config,
            records: Vec::new(),
            model: UtilityModel::zeros(&features.schema),
            pending: None,
            served: 0,
            trained_on: 0,
        }
    }

    pub fn remaining(&self) -> usize {
        self.config.query_budget - self.served
    }

    /// The pending query, or the next unasked pair; `None` once the budget or
    /// the pairs run out.
    pub fn next_query(&mut self, root: &HierarchyNode, features: &FeatureMatrix) -> Result<Option<QueryPair>, PreferenceError> {
        if let Some(p) = &self.pending {
            return Ok(Some(p.clone()));
        }
        if self.served >= self.config.query_budget {
            return Ok(None);
        }
        let asked: BTreeSet<(usize, usize)> = self.records.iter().map(|r| r.pair.key()).collect();
        let schedule = match self.config.strategy {
            Strategy::Chain => Schedule::Chain,
            Strategy::Active => Schedule::Active { model: &self.model, features },
        };
        let next = schedule_queries(root, usize::MAX, schedule)?.into_iter().find(|p| !asked.contains(&p.key()));
        Ok(next.map(|mut pair| {
            pair.round = self.served / self.config.round_size.max(1);
            self.served += 1;
            self.pending = Some(pair.clone());
            pair
        }))
    }

    /// Records the answer to the pending query, retraining at round ends.
    pub fn answer(&mut self, choice: Choice, features: &FeatureMatrix) -> Result<PreferenceRecord, PreferenceError> {
        let pair = self.pending.take().ok_or(PreferenceError::NoPendingQuery)?;
        let record = PreferenceRecord { pair, choice };
        self.records.push(record.clone());
        if self.records.len().is_multiple_of(self.config.round_size.max(1)) || self.served >= self.config.query_budget {
            self.retrain(features)?;
        }
        Ok(record)
    }

    /// Trains on any answers not yet reflected in the model.
    pub fn finish(&mut self, features: &FeatureMatrix) -> Result<&UtilityModel, PreferenceError> {
        if self.trained_on < self.records.len() {
            self.retrain(features)?;
        }
        Ok(&self.model)
    }

    fn retrain(&mut self, features: &FeatureMatrix) -> Result<(), PreferenceError> {
        let rounds = self.model.trained_rounds + 1;
        let hyper = TrainHyper { seed: seed::mix(self.config.hyper.seed, rounds as u64), ..self.config.hyper.clone() };
        self.model = train_utility(&self.records, features, &hyper)?;
        self.model.trained_rounds = rounds;
        self.trained_on = self.records.len();
        Ok(())
    }

    /// Runs the loop to completion with an automatic responder.
    pub fn run(
        &mut self,
        root: &HierarchyNode,
        features: &FeatureMatrix,
        mut respond: impl FnMut(&QueryPair) -> Choice,
    ) -> Result<&UtilityModel, PreferenceError> {
        while let Some(pair) = self.next_query(root, features)? {
            self.answer(respond(&pair), features)?;
        }
        self.finish(features)
    }
}
