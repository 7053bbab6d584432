//! Simulated user that answers preference queries from reference summaries.

use std::collections::{BTreeMap, HashSet};

use super::{Choice, QueryPair};
use crate::hierarchy::Concept;

#[derive(Debug, Clone)]
pub struct SimulatedOracle {
    vocabulary: HashSet<String>,
    labels: BTreeMap<usize, String>,
}

impl SimulatedOracle {
    pub fn new<S: AsRef<str>>(references: &[Vec<S>], concepts: &[Concept]) -> Self {
        let vocabulary = references.iter().flatten().map(|t| t.as_ref().to_lowercase()).collect();
        let labels = concepts.iter().map(|c| (c.id, c.canonical_label.clone())).collect();
        SimulatedOracle { vocabulary, labels }
    }

    fn label(&self, concept: usize) -> &str {
        self.labels.get(&concept).map_or("", String::as_str)
    }

    /// Fraction of the concept's label tokens that appear in any reference.
    pub fn utility(&self, concept: usize) -> f64 {
        let tokens: Vec<String> = self.label(concept).split_whitespace().map(str::to_lowercase).collect();
        if tokens.is_empty() {
            return 0.0;
        }
        tokens.iter().filter(|t| self.vocabulary.contains(*t)).count() as f64 / tokens.len() as f64
    }

    /// Picks the side with higher utility; ties go to the lexicographically
    /// smaller label, then to the left.
    pub fn respond(&self, pair: &QueryPair) -> Choice {
        let (ul, ur) = (self.utility(pair.left), self.utility(pair.right));
        if ul > ur {
            Choice::Left
        } else if ur > ul || self.label(pair.right) < self.label(pair.left) {
            Choice::Right
        } else {
            Choice::Left
        }
    }
}
