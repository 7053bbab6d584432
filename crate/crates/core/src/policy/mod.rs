//! Summary construction as an episodic MDP over hierarchy labels.
//!
//! A state is a draft summary. Adding a label costs one unit of budget; a
//! label whose parent label is not the root can only be added after its
//! parent. Reward is paid once, on termination.

pub mod td;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use td::{generate_summary, train_td, Policy, PolicyHyper};

use crate::hierarchy::{Concept, ConceptGraph, HierarchyNode};
use crate::preference::RankingTable;

/// Limits for exhaustive enumeration.
pub const MAX_ENUM_ITEMS: usize = 20;
pub const MAX_ENUM_BUDGET: usize = 6;

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("illegal action: {0}")]
    IllegalAction(String),
    #[error("{items} selectable concepts with budget {budget} exceeds the enumeration limit")]
    TooLarge { items: usize, budget: usize },
}

/// A selectable label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub concept: usize,
    pub level: usize,
    /// Label that must be selected first, if any.
    pub prerequisite: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRelation {
    pub from: usize,
    pub to: usize,
    pub phrase: String,
}

/// Everything the MDP needs from the hierarchy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarySpace {
    /// In pre-order, so prerequisites come before dependents.
    pub items: Vec<Item>,
    /// Every distinct label in the hierarchy, root included.
    pub labels: Vec<usize>,
    pub names: BTreeMap<usize, String>,
    pub relations: Vec<SummaryRelation>,
}

impl SummarySpace {
    pub fn from_hierarchy(root: &HierarchyNode) -> Self {
        let mut items: Vec<Item> = Vec::new();
        let mut labels = vec![root.label_concept_id];
        if root.children.is_empty() {
            items.push(Item { concept: root.label_concept_id, level: 0, prerequisite: None });
        }
        fn visit(node: &HierarchyNode, prerequisite: Option<usize>, items: &mut Vec<Item>, labels: &mut Vec<usize>) {
            let label = node.label_concept_id;
            if !labels.contains(&label) {
                labels.push(label);
            }
            let own = if prerequisite == Some(label) || items.iter().any(|i| i.concept == label) {
                prerequisite
            } else {
                items.push(Item { concept: label, level: node.level, prerequisite });
                Some(label)
            };
            for child in &node.children {
                visit(child, own, items, labels);
            }
        }
        for child in &root.children {
            visit(child, None, &mut items, &mut labels);
        }
        SummarySpace { items, labels, names: BTreeMap::new(), relations: Vec::new() }
    }

    /// Adds label names and the relations between labels.
    pub fn with_concepts(mut self, concepts: &[Concept], graph: &ConceptGraph) -> Self {
        let labels: BTreeSet<usize> = self.labels.iter().copied().collect();
        self.names = concepts.iter().filter(|c| labels.contains(&c.id)).map(|c| (c.id, c.canonical_label.clone())).collect();
        self.relations = graph
            .relations
            .iter()
            .filter(|r| labels.contains(&r.from) && labels.contains(&r.to))
            .map(|r| SummaryRelation { from: r.from, to: r.to, phrase: r.phrase.clone() })
            .collect();
        self
    }

    pub fn item(&self, concept: usize) -> Option<&Item> {
        self.items.iter().find(|i| i.concept == concept)
    }

    /// `(|L| - 1) * budget`, the reward normalizer.
    pub fn normalizer(&self, budget: usize) -> f64 {
        (self.labels.len().saturating_sub(1) * budget) as f64
    }

    /// Normalized reward for a selection under the initial budget.
    pub fn reward(&self, selected: &[usize], budget: usize, ranking: &RankingTable) -> f64 {
        let norm = self.normalizer(budget);
        if norm == 0.0 {
            return 0.0;
        }
        selected.iter().map(|&c| ranking.rank_of(c) as f64).sum::<f64>() / norm
    }

    pub fn is_admissible(&self, state: &MdpState, concept: usize) -> bool {
        !state.terminal
            && state.remaining_budget > 0
            && !state.selected.contains(&concept)
            && self.item(concept).is_some_and(|i| i.prerequisite.is_none_or(|p| state.selected.contains(&p)))
    }

    pub fn admissible(&self, state: &MdpState) -> Vec<usize> {
        self.items.iter().map(|i| i.concept).filter(|&c| self.is_admissible(state, c)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MdpState {
    pub selected: Vec<usize>,
    pub remaining_budget: usize,
    pub budget: usize,
    pub terminal: bool,
}

impl MdpState {
    pub fn initial(budget: usize) -> Self {
        MdpState { selected: Vec::new(), remaining_budget: budget, budget, terminal: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "type", content = "concept")]
pub enum Action {
    Add(usize),
    Terminate,
}

/// Applies an action. Adding pays 0; terminating pays the normalized rank
/// sum of the selection.
pub fn step(space: &SummarySpace, state: &MdpState, action: Action, ranking: &RankingTable) -> Result<(MdpState, f64), PolicyError> {
    if state.terminal {
        return Err(PolicyError::IllegalAction("state is terminal".into()));
    }
    match action {
        Action::Terminate => {
            let reward = space.reward(&state.selected, state.budget, ranking);
            Ok((MdpState { terminal: true, ..state.clone() }, reward))
        }
        Action::Add(c) => {
            if state.selected.contains(&c) {
                return Err(PolicyError::IllegalAction(format!("concept {c} already selected")));
            }
            if state.remaining_budget == 0 {
                return Err(PolicyError::IllegalAction("budget exhausted".into()));
            }
            let Some(item) = space.item(c) else {
                return Err(PolicyError::IllegalAction(format!("concept {c} is not a selectable label")));
            };
            if let Some(p) = item.prerequisite.filter(|p| !state.selected.contains(p)) {
                return Err(PolicyError::IllegalAction(format!("concept {c} requires its parent {p}")));
            }
            let mut next = state.clone();
            next.selected.push(c);
            next.remaining_budget -= 1;
            Ok((next, 0.0))
        }
    }
}

/// Every admissible selection of at most `budget` labels with its reward.
/// Selections list concepts in item order.
pub fn enumerate_summaries(space: &SummarySpace, budget: usize, ranking: &RankingTable) -> Result<Vec<(Vec<usize>, f64)>, PolicyError> {
    if space.items.len() > MAX_ENUM_ITEMS || budget > MAX_ENUM_BUDGET {
        return Err(PolicyError::TooLarge { items: space.items.len(), budget });
    }
    let mut out = Vec::new();
    let mut current = Vec::new();
    enumerate_from(space, 0, budget, &mut current, &mut |sel| out.push((sel.to_vec(), space.reward(sel, budget, ranking))));
    Ok(out)
}

/// Depth-first over items in order; an item can join only if its
/// prerequisite is already in.
pub(crate) fn enumerate_from(space: &SummarySpace, start: usize, room: usize, current: &mut Vec<usize>, emit: &mut impl FnMut(&[usize])) {
    emit(current);
    if room == 0 {
        return;
    }
    for i in start..space.items.len() {
        let item = &space.items[i];
        if item.prerequisite.is_none_or(|p| current.contains(&p)) {
            current.push(item.concept);
            enumerate_from(space, i + 1, room - 1, current, emit);
            current.pop();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryConcept {
    pub id: usize,
    pub label: String,
    pub level: usize,
    pub rank: usize,
}

/// Exported summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarySelection {
    pub concepts: Vec<SummaryConcept>,
    pub relations: Vec<SummaryRelation>,
    pub reward: f64,
    pub budget: usize,
}

impl SummarySelection {
    pub fn new(space: &SummarySpace, selected: &[usize], budget: usize, ranking: &RankingTable) -> Self {
        let concepts = selected
            .iter()
            .map(|&id| SummaryConcept {
                id,
                label: space.names.get(&id).cloned().unwrap_or_default(),
                level: space.item(id).map_or(0, |i| i.level),
                rank: ranking.rank_of(id),
            })
            .collect();
        let relations = space
            .relations
            .iter()
            .filter(|r| selected.contains(&r.from) && selected.contains(&r.to))
            .cloned()
            .collect();
        SummarySelection { concepts, relations, reward: space.reward(selected, budget, ranking), budget }
    }

    pub fn ids(&self) -> Vec<usize> {
        self.concepts.iter().map(|c| c.id).collect()
    }

    /// Label tokens in selection order, for ROUGE scoring.
    pub fn tokens(&self) -> Vec<String> {
        self.concepts.iter().flat_map(|c| c.label.split_whitespace().map(str::to_string)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::Member;

    pub(crate) fn node(label: usize, level: usize, children: Vec<HierarchyNode>) -> HierarchyNode {
        HierarchyNode { label_concept_id: label, level, members: vec![Member { concept: label, membership: 1.0 }], center: vec![0.0], children }
    }

    fn ranking(ranks: &[(usize, f64)]) -> RankingTable {
        RankingTable::from_utilities(ranks.iter().copied().collect())
    }

    #[test]
    fn reward_of_two_label_selection() {
        // |L| = 3: root 9 plus labels 0, 1; ranks 2 and 0 for the selection
        let space = SummarySpace::from_hierarchy(&node(9, 0, vec![node(0, 1, vec![]), node(1, 1, vec![])]));
        let r = ranking(&[(0, 5.0), (9, 1.0), (1, 0.0)]);
        assert_eq!((r.rank_of(0), r.rank_of(1)), (2, 0));
        let s0 = MdpState::initial(2);
        let (s1, r1) = step(&space, &s0, Action::Add(0), &r).unwrap();
        let (s2, r2) = step(&space, &s1, Action::Add(1), &r).unwrap();
        let (s3, r3) = step(&space, &s2, Action::Terminate, &r).unwrap();
        assert_eq!((r1, r2), (0.0, 0.0));
        assert_eq!(r3, 0.5);
        assert!(s3.terminal);
        assert_eq!(step(&space, &s0, Action::Terminate, &r).unwrap().1, 0.0);
    }

    #[test]
    fn illegal_actions() {
        let space = SummarySpace::from_hierarchy(&node(9, 0, vec![node(0, 1, vec![node(5, 2, vec![])]), node(1, 1, vec![])]));
        let r = ranking(&[(0, 1.0)]);
        let s = MdpState::initial(1);
        assert!(matches!(step(&space, &s, Action::Add(5), &r), Err(PolicyError::IllegalAction(_))));
        assert!(matches!(step(&space, &s, Action::Add(42), &r), Err(PolicyError::IllegalAction(_))));
        let (s, _) = step(&space, &s, Action::Add(0), &r).unwrap();
        assert!(matches!(step(&space, &s, Action::Add(0), &r), Err(PolicyError::IllegalAction(_))));
        assert!(matches!(step(&space, &s, Action::Add(5), &r), Err(PolicyError::IllegalAction(_))));
        let (t, _) = step(&space, &s, Action::Terminate, &r).unwrap();
        assert!(matches!(step(&space, &t, Action::Terminate, &r), Err(PolicyError::IllegalAction(_))));
    }

    #[test]
    fn items_skip_root_and_repeated_labels() {
        let root = node(9, 0, vec![node(0, 1, vec![node(0, 2, vec![]), node(4, 2, vec![])]), node(9, 1, vec![])]);
        let space = SummarySpace::from_hierarchy(&root);
        assert_eq!(
            space.items,
            vec![
                Item { concept: 0, level: 1, prerequisite: None },
                Item { concept: 4, level: 2, prerequisite: Some(0) },
                Item { concept: 9, level: 1, prerequisite: None },
            ]
        );
        assert_eq!(space.labels, vec![9, 0, 4]);
        let single = SummarySpace::from_hierarchy(&node(3, 0, vec![]));
        assert_eq!(single.items, vec![Item { concept: 3, level: 0, prerequisite: None }]);
    }

    #[test]
    fn enumeration_counts() {
        let r = ranking(&[(0, 1.0), (1, 2.0), (2, 3.0)]);
        let flat = SummarySpace::from_hierarchy(&node(9, 0, vec![node(0, 1, vec![]), node(1, 1, vec![]), node(2, 1, vec![])]));
        assert_eq!(enumerate_summaries(&flat, 3, &r).unwrap().len(), 8);
        assert_eq!(enumerate_summaries(&flat, 0, &r).unwrap(), vec![(vec![], 0.0)]);
        let big = SummarySpace::from_hierarchy(&node(99, 0, (0..21).map(|i| node(i, 1, vec![])).collect()));
        assert!(matches!(enumerate_summaries(&big, 2, &r), Err(PolicyError::TooLarge { .. })));
        assert!(matches!(enumerate_summaries(&flat, 7, &r), Err(PolicyError::TooLarge { .. })));
    }

    /// Root 9 with children 0 (children 3, 4) and 1 (child 5), budget 2.
    /// By hand: {}, {0}, {1}, {0,3}, {0,4}, {0,1}, {1,5}.
    #[test]
    fn two_level_enumeration_by_hand() {
        let root = node(9, 0, vec![node(0, 1, vec![node(3, 2, vec![]), node(4, 2, vec![])]), node(1, 1, vec![node(5, 2, vec![])])]);
        let space = SummarySpace::from_hierarchy(&root);
        let r = ranking(&[(0, 0.0), (1, 1.0), (3, 2.0), (4, 3.0), (5, 4.0), (9, 5.0)]);
        let got: BTreeSet<Vec<usize>> = enumerate_summaries(&space, 2, &r).unwrap().into_iter().map(|(s, _)| s).collect();
        let expected: BTreeSet<Vec<usize>> =
            [vec![], vec![0], vec![1], vec![0, 3], vec![0, 4], vec![0, 1], vec![1, 5]].into_iter().collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn summary_export_shape() {
        let mut space = SummarySpace::from_hierarchy(&node(9, 0, vec![node(0, 1, vec![]), node(1, 1, vec![])]));
        space.names = [(0, "cancer treatment".to_string()), (1, "hospitals".to_string()), (9, "health".to_string())].into_iter().collect();
        space.relations = vec![SummaryRelation { from: 0, to: 1, phrase: "funds".into() }, SummaryRelation { from: 0, to: 9, phrase: "is".into() }];
        let r = ranking(&[(0, 2.0), (1, 1.0), (9, 0.0)]);
        let sel = SummarySelection::new(&space, &[0, 1], 2, &r);
        assert_eq!(sel.relations.len(), 1);
        assert_eq!(sel.tokens(), vec!["cancer", "treatment", "hospitals"]);
        let v = serde_json::to_value(&sel).unwrap();
        assert_eq!(v["concepts"][0]["label"], "cancer treatment");
        assert_eq!(v["concepts"][0]["rank"], 2);
        assert_eq!(v["budget"], 2);
        assert_eq!(v["reward"], 0.75);
    }
}
