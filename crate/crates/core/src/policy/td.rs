//! Linear TD(0) value learning and greedy summary rollout.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{step, Action, MdpState, PolicyError, SummarySelection, SummarySpace};
use crate::embedding::dot;
use crate::features::FeatureMatrix;
use crate::preference::RankingTable;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyHyper {
    pub gamma: f64,
    /// Step size before normalization by `1 + |psi|^2`.
    pub lr: f64,
    pub epsilon_start: f64,
    pub epsilon_decay: f64,
    pub episodes: usize,
    pub seed: u64,
    /// The step size decays as `lr / (1 + anneal * episode / episodes)`.
    pub anneal: f64,
    /// Adds considered jointly when rolling out the greedy policy. One is a
    /// plain one-step lookahead; deeper lookahead lets a weak parent label be
    /// chosen for the sake of a strong child.
    pub lookahead: usize,
}

impl Default for PolicyHyper {
    fn default() -> Self {
        PolicyHyper {
            gamma: 1.0,
            lr: 0.5,
            epsilon_start: 1.0,
            epsilon_decay: 0.998,
            episodes: 2000,
            seed: 42,
            anneal: 10.0,
            lookahead: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    /// Weights over `[sum of (phi, scaled rank); remaining / budget; |selected| / budget]`.
    pub value_weights: Vec<f64>,
    pub hyper: PolicyHyper,
}

/// Per-concept part of the state features: `phi(c)` followed by the
/// concept's rank scaled to [0, 1].
fn item_vector(concept: usize, ctx: &Ctx<'_>) -> Vec<f64> {
    let mut v = ctx.features.get(concept).map_or_else(|_| vec![0.0; ctx.features.dim()], <[f64]>::to_vec);
    v.push(if ctx.rank_scale > 0.0 { ctx.ranking.rank_of(concept) as f64 / ctx.rank_scale } else { 0.0 });
    v
}

struct Ctx<'a> {
    features: &'a FeatureMatrix,
    ranking: &'a RankingTable,
    rank_scale: f64,
}

impl<'a> Ctx<'a> {
    fn new(space: &SummarySpace, features: &'a FeatureMatrix, ranking: &'a RankingTable) -> Self {
        Ctx { features, ranking, rank_scale: space.labels.len().saturating_sub(1) as f64 }
    }

    fn item_dim(&self) -> usize {
        self.features.dim() + 1
    }

    fn psi(&self, state: &MdpState) -> Vec<f64> {
        let d = self.item_dim();
        let mut out = vec![0.0; d + 2];
        for &c in &state.selected {
            crate::embedding::add_into(&mut out[..d], &item_vector(c, self));
        }
        if state.budget > 0 {
            out[d] = state.remaining_budget as f64 / state.budget as f64;
            out[d + 1] = state.selected.len() as f64 / state.budget as f64;
        }
        out
    }
}

impl Policy {
    fn state_value(&self, state: &MdpState, ctx: &Ctx<'_>) -> f64 {
        if state.terminal {
            return 0.0;
        }
        dot(&self.value_weights, &ctx.psi(state))
    }

    /// `V(s)`; zero for terminal states.
    pub fn value(&self, space: &SummarySpace, state: &MdpState, features: &FeatureMatrix, ranking: &RankingTable) -> f64 {
        self.state_value(state, &Ctx::new(space, features, ranking))
    }

    /// Greedy choice from a non-terminal state: the first add of the
    /// admissible add-set (up to `lookahead` labels) reaching the highest
    /// value, or terminate when nothing can be added. Add-sets that spend
    /// the whole budget are scored by their actual reward, others by `V`.
    pub fn choose(&self, space: &SummarySpace, state: &MdpState, features: &FeatureMatrix, ranking: &RankingTable) -> Action {
        self.choose_with(space, state, &Ctx::new(space, features, ranking))
    }

    fn choose_with(&self, space: &SummarySpace, state: &MdpState, ctx: &Ctx<'_>) -> Action {
        if state.terminal || state.remaining_budget == 0 || space.admissible(state).is_empty() {
            return Action::Terminate;
        }
        let candidates: Vec<usize> = space.items.iter().map(|i| i.concept).filter(|c| !state.selected.contains(c)).collect();
        let d = ctx.item_dim();
        let (w_rem, w_sel) = (self.value_weights[d], self.value_weights[d + 1]);
        let budget = state.budget as f64;
        let depth = self.hyper.lookahead.max(1).min(state.remaining_budget);
        let scores: Vec<f64> = candidates.iter().map(|&c| dot(&self.value_weights[..d], &item_vector(c, ctx))).collect();
        let norm = space.normalizer(state.budget);
        let gains: Vec<f64> =
            candidates.iter().map(|&c| if norm > 0.0 { ctx.ranking.rank_of(c) as f64 / norm } else { 0.0 }).collect();
        let base_value = dot(&self.value_weights[..d], &ctx.psi(state)[..d]);
        let base_reward = space.reward(&state.selected, state.budget, ctx.ranking);
        let mut best: Option<(f64, usize)> = None;
        let mut chosen: Vec<usize> = Vec::new();
        search(space, state, &candidates, &scores, 0, depth, &mut chosen, 0.0, &mut |set, score| {
            let k = set.len() as f64;
            let value = if set.len() == state.remaining_budget {
                base_reward + set.iter().map(|&i| gains[i]).sum::<f64>()
            } else {
                base_value + score + w_rem * (state.remaining_budget as f64 - k) / budget + w_sel * (state.selected.len() as f64 + k) / budget
            };
            if best.is_none_or(|(v, _)| value > v) {
                best = Some((value, set[0]));
            }
        });
        Action::Add(candidates[best.expect("an admissible add exists").1])
    }
}

/// Enumerates nonempty admissible add-sets of at most `room` candidates, in
/// candidate order, reporting candidate indices and summed scores.
#[allow(clippy::too_many_arguments)]
fn search(
    space: &SummarySpace,
    state: &MdpState,
    candidates: &[usize],
    scores: &[f64],
    start: usize,
    room: usize,
    chosen: &mut Vec<usize>,
    score: f64,
    emit: &mut impl FnMut(&[usize], f64),
) {
    if room == 0 {
        return;
    }
    for i in start..candidates.len() {
        let item = space.item(candidates[i]).expect("candidate is an item");
        let ready = item.prerequisite.is_none_or(|p| state.selected.contains(&p) || chosen.iter().any(|&j| candidates[j] == p));
        if ready {
            chosen.push(i);
            emit(chosen, score + scores[i]);
            search(space, state, candidates, scores, i + 1, room - 1, chosen, score + scores[i], emit);
            chosen.pop();
        }
    }
}

/// Episodic TD(0) with an epsilon-greedy behavior policy over one-step
/// lookahead. Updates use a step size normalized by `1 + |psi|^2`.
pub fn train_td(
    space: &SummarySpace,
    features: &FeatureMatrix,
    ranking: &RankingTable,
    budget: usize,
    hyper: &PolicyHyper,
) -> Policy {
    let ctx = Ctx::new(space, features, ranking);
    let mut policy = Policy { value_weights: vec![0.0; ctx.item_dim() + 2], hyper: hyper.clone() };
    // start from V = reward of the current draft
    if budget > 0 {
        policy.value_weights[ctx.item_dim() - 1] = 1.0 / budget as f64;
    }
    let mut rng = seed::rng(hyper.seed);
    let mut epsilon = hyper.epsilon_start;
    for episode in 0..hyper.episodes {
        let anneal = 1.0 / (1.0 + hyper.anneal * episode as f64 / hyper.episodes.max(1) as f64);
        let mut state = MdpState::initial(budget);
        loop {
            let mut actions: Vec<Action> = space.admissible(&state).into_iter().map(Action::Add).collect();
            actions.push(Action::Terminate);
            let action = if rng.random::<f64>() < epsilon {
                actions[rng.random_range(0..actions.len())]
            } else {
                let mut best = (f64::NEG_INFINITY, Action::Terminate);
                for &a in &actions {
                    let (next, reward) = step(space, &state, a, ranking).expect("admissible action");
                    let q = reward + hyper.gamma * policy.state_value(&next, &ctx);
                    if q > best.0 {
                        best = (q, a);
                    }
                }
                best.1
            };
            let (next, reward) = step(space, &state, action, ranking).expect("admissible action");
            debug_assert!(next.terminal || reward == 0.0);
            let x = ctx.psi(&state);
            let target = reward + hyper.gamma * policy.state_value(&next, &ctx);
            let error = target - dot(&policy.value_weights, &x);
            let rate = anneal * hyper.lr / (1.0 + dot(&x, &x));
            for (w, xi) in policy.value_weights.iter_mut().zip(&x) {
                *w += rate * error * xi;
            }
            if next.terminal {
                break;
            }
            state = next;
        }
        epsilon *= hyper.epsilon_decay;
    }
    policy
}

/// Rolls out the greedy policy from the empty draft.
pub fn generate_summary(
    space: &SummarySpace,
    policy: &Policy,
    features: &FeatureMatrix,
    ranking: &RankingTable,
    budget: usize,
) -> Result<SummarySelection, PolicyError> {
    let ctx = Ctx::new(space, features, ranking);
    let mut state = MdpState::initial(budget);
    loop {
        let action = policy.choose_with(space, &state, &ctx);
        let (next, _) = step(space, &state, action, ranking)?;
        if next.terminal {
            break;
        }
        state = next;
    }
    Ok(SummarySelection::new(space, &state.selected, budget, ranking))
}

#[cfg(test)]
mod tests {
    use super::super::tests::node;
    use super::super::{enumerate_summaries, Item};
    use super::*;
    use crate::preference::RankingTable;

    fn matrix(rows: &[(usize, Vec<f64>)]) -> FeatureMatrix {
        FeatureMatrix { schema: (0..rows[0].1.len()).map(|i| format!("f{i}")).collect(), rows: rows.iter().cloned().collect() }
    }

    #[test]
    fn single_concept() {
        let space = SummarySpace::from_hierarchy(&node(3, 0, vec![]));
        let f = matrix(&[(3, vec![1.0])]);
        let ranking = RankingTable::from_utilities([(3, 1.0)].into_iter().collect());
        let policy = train_td(&space, &f, &ranking, 1, &PolicyHyper::default());
        let summary = generate_summary(&space, &policy, &f, &ranking, 1).unwrap();
        assert!(summary.ids().len() <= 1);
        assert_eq!(summary.reward, 0.0);
    }

    #[test]
    fn budget_zero_is_empty() {
        let space = SummarySpace::from_hierarchy(&node(9, 0, vec![node(0, 1, vec![]), node(1, 1, vec![])]));
        let f = matrix(&[(0, vec![1.0]), (1, vec![0.0]), (9, vec![0.5])]);
        let ranking = RankingTable::from_utilities([(0, 1.0), (1, 0.0), (9, 0.5)].into_iter().collect());
        let policy = train_td(&space, &f, &ranking, 0, &PolicyHyper::default());
        let summary = generate_summary(&space, &policy, &f, &ranking, 0).unwrap();
        assert!(summary.concepts.is_empty());
        assert_eq!(summary.reward, 0.0);
    }

    #[test]
    fn same_seed_same_weights() {
        let space = SummarySpace::from_hierarchy(&node(9, 0, vec![node(0, 1, vec![node(2, 2, vec![])]), node(1, 1, vec![])]));
        let f = matrix(&[(0, vec![1.0, 0.0]), (1, vec![0.0, 1.0]), (2, vec![0.5, 0.5]), (9, vec![0.0, 0.0])]);
        let ranking = RankingTable::from_utilities([(0, 2.0), (1, 0.0), (2, 1.0), (9, 0.5)].into_iter().collect());
        let hyper = PolicyHyper { seed: 11, ..PolicyHyper::default() };
        let a = train_td(&space, &f, &ranking, 2, &hyper);
        assert_eq!(a, train_td(&space, &f, &ranking, 2, &hyper));
        assert!(a.value_weights.iter().all(|w| w.is_finite()));
    }

    #[test]
    fn large_budget_takes_every_admissible_label() {
        let space = SummarySpace::from_hierarchy(&node(9, 0, vec![node(0, 1, vec![node(2, 2, vec![])]), node(1, 1, vec![])]));
        let f = matrix(&[(0, vec![1.0]), (1, vec![0.2]), (2, vec![0.6]), (9, vec![0.0])]);
        let ranking = RankingTable::from_utilities([(0, 1.0), (1, 0.2), (2, 0.6), (9, 0.0)].into_iter().collect());
        let policy = train_td(&space, &f, &ranking, 5, &PolicyHyper::default());
        let summary = generate_summary(&space, &policy, &f, &ranking, 5).unwrap();
        let mut ids = summary.ids();
        ids.sort_unstable();
        assert_eq!(ids, vec![0, 1, 2]);
    }

    #[test]
    fn matches_enumeration_argmax_on_small_tree() {
        // the strong label 4 sits under the weakest label 0
        let root = node(9, 0, vec![node(0, 1, vec![node(3, 2, vec![]), node(4, 2, vec![])]), node(1, 1, vec![node(5, 2, vec![])])]);
        let space = SummarySpace::from_hierarchy(&root);
        assert_eq!(space.items[0], Item { concept: 0, level: 1, prerequisite: None });
        let utilities = [(0, 0.0), (1, 2.0), (3, 1.0), (4, 5.0), (5, 3.0), (9, 4.0)];
        let f = matrix(&utilities.iter().map(|&(c, u)| (c, vec![u])).collect::<Vec<_>>());
        let ranking = RankingTable::from_utilities(utilities.into_iter().collect());
        for budget in 1..=4 {
            let best = enumerate_summaries(&space, budget, &ranking).unwrap().into_iter().map(|(_, r)| r).fold(0.0, f64::max);
            let policy = train_td(&space, &f, &ranking, budget, &PolicyHyper::default());
            let summary = generate_summary(&space, &policy, &f, &ranking, budget).unwrap();
            assert!((summary.reward - best).abs() < 1e-12, "budget {budget}: {} vs {best}", summary.reward);
        }
    }
}
