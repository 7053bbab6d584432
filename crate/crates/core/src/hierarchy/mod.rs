//! Concept grouping and the hierarchical concept map.
//!
//! Concepts are clustered top-down: every node with enough members picks its
//! number of children with the gap statistic and splits with
//! [`kmeans_even`]. Each node is labeled with the member concept nearest its
//! center, and members carry an inverse-squared-distance membership degree.

pub mod export;
pub mod gap;
pub mod grouping;
pub mod kmeans;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use export::{ExportNode, ExportOptions};
pub use gap::{clamp_range, gap_curve, select_k, GapCurve};
pub use grouping::{group_mentions, mention_key, mentions_from_triples, Concept, ConceptGraph, ConceptMention, Relation};
pub use kmeans::{kmeans_even, kmeans_even_restarts, Clustering};

use crate::embedding::{cosine, squared_distance};
use crate::seed;

#[derive(Debug, Error, PartialEq)]
pub enum HierarchyError {
    #[error("need at least {k} points, got {n}")]
    TooFewPoints { k: usize, n: usize },
    #[error("no concepts to organize")]
    EmptyInput,
    #[error("vector dimensions differ: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub concept: usize,
    pub membership: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyNode {
    pub label_concept_id: usize,
    /// Root is level 0.
    pub level: usize,
    pub members: Vec<Member>,
    pub center: Vec<f64>,
    pub children: Vec<HierarchyNode>,
}

impl HierarchyNode {
    pub fn member_ids(&self) -> Vec<usize> {
        self.members.iter().map(|m| m.concept).collect()
    }

    /// Pre-order traversal.
    pub fn walk(&self) -> Vec<&HierarchyNode> {
        let mut out = vec![self];
        for child in &self.children {
            out.extend(child.walk());
        }
        out
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(HierarchyNode::node_count).sum::<usize>()
    }

    /// Number of levels below the root.
    pub fn depth(&self) -> usize {
        self.children.iter().map(|c| 1 + c.depth()).max().unwrap_or(0)
    }

    /// Labels of all nodes at `level`, in pre-order.
    pub fn labels_at_level(&self, level: usize) -> Vec<usize> {
        self.walk().into_iter().filter(|n| n.level == level).map(|n| n.label_concept_id).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyParams {
    pub k_min: usize,
    /// Upper end of the k range; each node further caps it at half its size.
    pub k_max: usize,
    pub alpha: f64,
    pub min_node_size: usize,
    pub max_depth: usize,
    pub seed: u64,
    /// Reference sets for the gap statistic.
    pub gap_refs: usize,
    pub max_iter: usize,
    pub restarts: usize,
    pub epsilon: f64,
}

impl Default for HierarchyParams {
    fn default() -> Self {
        Self {
            k_min: 2,
            k_max: 50,
            alpha: 0.1,
            min_node_size: 3,
            max_depth: 3,
            seed: 42,
            gap_refs: 10,
            max_iter: 100,
            restarts: 3,
            epsilon: 1e-9,
        }
    }
}

/// `1 / max(|center - vector|^2, epsilon)`.
pub fn membership_degree(vector: &[f64], center: &[f64], epsilon: f64) -> Result<f64, HierarchyError> {
    if vector.len() != center.len() {
        return Err(HierarchyError::DimMismatch { left: vector.len(), right: center.len() });
    }
    Ok(1.0 / squared_distance(vector, center).max(epsilon))
}

fn mean(vectors: &[&[f64]]) -> Vec<f64> {
    let mut out = vec![0.0; vectors[0].len()];
    for v in vectors {
        crate::embedding::add_into(&mut out, v);
    }
    out.iter_mut().for_each(|x| *x /= vectors.len() as f64);
    out
}

/// The member concept nearest the node center; ties go to the lower id.
pub fn label_node(node: &HierarchyNode, concepts: &[Concept]) -> usize {
    let by_id: HashMap<usize, &Concept> = concepts.iter().map(|c| (c.id, c)).collect();
    nearest_member(&node.member_ids(), &node.center, &by_id)
}

fn nearest_member(ids: &[usize], center: &[f64], by_id: &HashMap<usize, &Concept>) -> usize {
    let mut best = (f64::INFINITY, usize::MAX);
    for &id in ids {
        let d = squared_distance(&by_id[&id].vector, center);
        if d < best.0 || (d == best.0 && id < best.1) {
            best = (d, id);
        }
    }
    best.1
}

fn make_node(ids: &[usize], level: usize, by_id: &HashMap<usize, &Concept>, epsilon: f64) -> HierarchyNode {
    let vectors: Vec<&[f64]> = ids.iter().map(|id| by_id[id].vector.as_slice()).collect();
    let center = mean(&vectors);
    let members = ids
        .iter()
        .map(|&id| Member { concept: id, membership: 1.0 / squared_distance(&by_id[&id].vector, &center).max(epsilon) })
        .collect();
    HierarchyNode { label_concept_id: nearest_member(ids, &center, by_id), level, members, center, children: Vec::new() }
}

fn grow(node: &mut HierarchyNode, by_id: &HashMap<usize, &Concept>, params: &HierarchyParams, node_seed: u64) {
    let ids = node.member_ids();
    if node.level >= params.max_depth || ids.len() <= params.min_node_size {
        return;
    }
    let points: Vec<(usize, Vec<f64>)> = ids.iter().map(|&id| (id, by_id[&id].vector.clone())).collect();
    let k_max = params.k_max.min(ids.len() / 2).max(1);
    let k = select_k(&points, params.k_min, k_max, params.gap_refs, node_seed).expect("points nonempty");
    if k <= 1 {
        return;
    }
    let clustering = kmeans_even_restarts(&points, k, params.alpha, seed::mix(node_seed, 1), params.max_iter, params.restarts)
        .expect("k within point count");
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (&id, &label) in clustering.ids.iter().zip(&clustering.labels) {
        groups[label].push(id);
    }
    groups.retain(|g| !g.is_empty());
    node.children = groups
        .par_iter()
        .enumerate()
        .map(|(c, group)| {
            let mut child = make_node(group, node.level + 1, by_id, params.epsilon);
            grow(&mut child, by_id, params, seed::mix(node_seed, 100 + c as u64));
            child
        })
        .collect();
}

/// Builds the concept hierarchy rooted at a node holding every concept.
pub fn build_hierarchy(concepts: &[Concept], params: &HierarchyParams) -> Result<HierarchyNode, HierarchyError> {
    if concepts.is_empty() {
        return Err(HierarchyError::EmptyInput);
    }
    let dim = concepts[0].vector.len();
    if let Some(c) = concepts.iter().find(|c| c.vector.len() != dim) {
        return Err(HierarchyError::DimMismatch { left: dim, right: c.vector.len() });
    }
    let by_id: HashMap<usize, &Concept> = concepts.iter().map(|c| (c.id, c)).collect();
    let ids: Vec<usize> = concepts.iter().map(|c| c.id).collect();
    let mut root = make_node(&ids, 0, &by_id, params.epsilon);
    grow(&mut root, &by_id, params, params.seed);
    Ok(root)
}

/// Removes every non-root subtree whose center has cosine below
/// `thresholds[level]` to its parent's center. Levels without a threshold are
/// left alone.
pub fn prune_hierarchy(root: &HierarchyNode, thresholds: &[f64]) -> HierarchyNode {
    let mut out = root.clone();
    prune_children(&mut out, thresholds);
    out
}

fn prune_children(node: &mut HierarchyNode, thresholds: &[f64]) {
    let parent_center = node.center.clone();
    node.children.retain(|child| match thresholds.get(child.level) {
        Some(&t) => cosine(&child.center, &parent_center).unwrap_or(0.0) >= t,
        None => true,
    });
    for child in &mut node.children {
        prune_children(child, thresholds);
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use rand::Rng;

    use super::*;

    fn concept(id: usize, vector: Vec<f64>) -> Concept {
        Concept {
            id,
            canonical_label: format!("c{id}"),
            mentions: vec![ConceptMention { tokens: vec![format!("c{id}")], doc_id: "d".into(), sent_index: 0, start: None }],
            vector,
            frequency: 1,
            merge_count: 0,
        }
    }

    fn blob_concepts(seed: u64, per: usize) -> Vec<Concept> {
        let centers = [[0.0, 0.0], [10.0, 0.0], [5.0, 9.0]];
        let mut rng = seed::rng(seed);
        let mut out = Vec::new();
        for c in centers {
            for _ in 0..per {
                let v = vec![c[0] + rng.random_range(-1.0..1.0), c[1] + rng.random_range(-1.0..1.0)];
                out.push(concept(out.len(), v));
            }
        }
        out
    }

    fn check_superset(node: &HierarchyNode) {
        let own: BTreeSet<usize> = node.member_ids().into_iter().collect();
        for child in &node.children {
            assert!(child.member_ids().iter().all(|id| own.contains(id)));
            assert_eq!(child.level, node.level + 1);
            check_superset(child);
        }
    }

    #[test]
    fn membership_values() {
        assert_eq!(membership_degree(&[2.0, 0.0], &[0.0, 0.0], 1e-9).unwrap(), 0.25);
        assert_eq!(membership_degree(&[1.0], &[0.0], 1e-9).unwrap(), 1.0);
        assert!((membership_degree(&[3.0], &[3.0], 1e-9).unwrap() - 1e9).abs() < 1e-3);
        assert!(matches!(membership_degree(&[1.0], &[0.0, 1.0], 1e-9), Err(HierarchyError::DimMismatch { .. })));
    }

    #[test]
    fn single_concept_is_a_leaf_root() {
        let root = build_hierarchy(&[concept(7, vec![1.0, 2.0])], &HierarchyParams::default()).unwrap();
        assert_eq!(root.label_concept_id, 7);
        assert!(root.children.is_empty());
        assert_eq!(build_hierarchy(&[], &HierarchyParams::default()), Err(HierarchyError::EmptyInput));
    }

    #[test]
    fn max_depth_zero_is_root_only() {
        let params = HierarchyParams { max_depth: 0, ..HierarchyParams::default() };
        assert!(build_hierarchy(&blob_concepts(1, 10), &params).unwrap().children.is_empty());
    }

    #[test]
    fn three_blobs_partition_at_level_one() {
        let concepts = blob_concepts(3, 10);
        let params = HierarchyParams { k_min: 2, k_max: 5, ..HierarchyParams::default() };
        let root = build_hierarchy(&concepts, &params).unwrap();
        check_superset(&root);
        let mut union: Vec<usize> = root.children.iter().flat_map(|c| c.member_ids()).collect();
        union.sort_unstable();
        assert_eq!(union, (0..30).collect::<Vec<_>>());
        assert_eq!(root.children.len(), 3);
        for node in root.walk() {
            assert!(node.members.iter().all(|m| m.membership.is_finite() && m.membership > 0.0 && m.membership <= 1e9));
        }
        for level in 0..=root.depth() {
            let labels = root.labels_at_level(level);
            assert_eq!(labels.len(), labels.iter().collect::<BTreeSet<_>>().len());
        }
    }

    #[test]
    fn deterministic_build() {
        let concepts = blob_concepts(5, 8);
        let params = HierarchyParams { seed: 9, ..HierarchyParams::default() };
        assert_eq!(build_hierarchy(&concepts, &params).unwrap(), build_hierarchy(&concepts, &params).unwrap());
    }

    #[test]
    fn label_is_nearest_member_with_low_id_tiebreak() {
        let concepts = vec![concept(4, vec![1.0, 0.0]), concept(2, vec![-1.0, 0.0]), concept(9, vec![5.0, 0.0])];
        let node = HierarchyNode {
            label_concept_id: 0,
            level: 0,
            members: concepts.iter().map(|c| Member { concept: c.id, membership: 1.0 }).collect(),
            center: vec![0.0, 0.0],
            children: Vec::new(),
        };
        assert_eq!(label_node(&node, &concepts), 2);
        let single = HierarchyNode { members: vec![Member { concept: 9, membership: 1.0 }], ..node };
        assert_eq!(label_node(&single, &concepts), 9);
    }

    #[test]
    fn prune_extremes() {
        let root = build_hierarchy(&blob_concepts(2, 10), &HierarchyParams::default()).unwrap();
        assert!(root.node_count() > 1);
        assert_eq!(prune_hierarchy(&root, &[-1.0; 8]), root);
        let pruned = prune_hierarchy(&root, &[1.01; 8]);
        assert!(pruned.children.is_empty());
        assert_eq!(pruned.members, root.members);
        assert_eq!(prune_hierarchy(&root, &[]), root);
    }
}
