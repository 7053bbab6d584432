//! Bradley-Terry utility learning over concept features.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{PreferenceError, PreferenceRecord};
use crate::embedding::dot;
use crate::features::FeatureMatrix;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityModel {
    pub weights: Vec<f64>,
    pub schema: Vec<String>,
    pub trained_rounds: usize,
}

impl UtilityModel {
    pub fn zeros(schema: &[String]) -> Self {
        UtilityModel { weights: vec![0.0; schema.len()], schema: schema.to_vec(), trained_rounds: 0 }
    }

    fn check(&self, features: &FeatureMatrix) -> Result<(), PreferenceError> {
        if self.schema != features.schema {
            return Err(PreferenceError::SchemaMismatch { model: self.schema.len(), features: features.schema.len() });
        }
        Ok(())
    }

    /// `w . phi(concept)`.
    pub fn utility(&self, concept: usize, features: &FeatureMatrix) -> Result<f64, PreferenceError> {
        self.check(features)?;
        Ok(dot(&self.weights, features.get(concept)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHyper {
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub l2: f64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        TrainHyper { lr: 0.1, epochs: 50, seed: 42, l2: 1e-4 }
    }
}

/// Logistic function; `sigmoid(-x) == 1 - sigmoid(x)` holds exactly.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        1.0 - sigmoid(-x)
    }
}

/// `ln sigmoid(x)` without underflow.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Probability that `li` is preferred over `lj`:
/// `1 / (1 + exp(U(lj) - U(li)))`.
pub fn bt_probability(li: usize, lj: usize, model: &UtilityModel, features: &FeatureMatrix) -> Result<f64, PreferenceError> {
    let d = model.utility(li, features)? - model.utility(lj, features)?;
    Ok(sigmoid(d))
}

fn winner_loser<'a>(record: &PreferenceRecord, features: &'a FeatureMatrix) -> Result<(&'a [f64], &'a [f64]), PreferenceError> {
    Ok((features.get(record.winner())?, features.get(record.loser())?))
}

/// Log-likelihood of the records minus `l2 * |w|^2`.
pub fn objective(weights: &[f64], records: &[PreferenceRecord], features: &FeatureMatrix, l2: f64) -> Result<f64, PreferenceError> {
    let mut total = -l2 * dot(weights, weights);
    for record in records {
        let (w, l) = winner_loser(record, features)?;
        total += log_sigmoid(dot(weights, w) - dot(weights, l));
    }
    Ok(total)
}

/// Gradient of [`objective`].
pub fn gradient(weights: &[f64], records: &[PreferenceRecord], features: &FeatureMatrix, l2: f64) -> Result<Vec<f64>, PreferenceError> {
    let mut grad: Vec<f64> = weights.iter().map(|w| -2.0 * l2 * w).collect();
    for record in records {
        let (w, l) = winner_loser(record, features)?;
        let miss = 1.0 - sigmoid(dot(weights, w) - dot(weights, l));
        for k in 0..grad.len() {
            grad[k] += miss * (w[k] - l[k]);
        }
    }
    Ok(grad)
}

/// Per-record stochastic gradient ascent on [`objective`]. The regularizer is
/// spread evenly over the records of an epoch.
pub fn train_utility(records: &[PreferenceRecord], features: &FeatureMatrix, hyper: &TrainHyper) -> Result<UtilityModel, PreferenceError> {
    let mut model = UtilityModel::zeros(&features.schema);
    if records.is_empty() {
        return Ok(model);
    }
    let pairs: Vec<(&[f64], &[f64])> = records.iter().map(|r| winner_loser(r, features)).collect::<Result<_, _>>()?;
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut rng = seed::rng(hyper.seed);
    let decay = 2.0 * hyper.l2 / pairs.len() as f64;
    let w = &mut model.weights;
    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (win, lose) = pairs[i];
            let miss = 1.0 - sigmoid(dot(w, win) - dot(w, lose));
            for k in 0..w.len() {
                w[k] += hyper.lr * (miss * (win[k] - lose[k]) - decay * w[k]);
            }
        }
    }
    model.trained_rounds = 1;
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingTable {
    /// Number of labels with strictly lower utility.
    pub rank: BTreeMap<usize, usize>,
    pub utility: BTreeMap<usize, f64>,
}

impl RankingTable {
    pub fn from_utilities(utility: BTreeMap<usize, f64>) -> Self {
        let values: Vec<f64> = utility.values().copied().collect();
        let rank = utility.iter().map(|(&id, &u)| (id, values.iter().filter(|&&v| u > v).count())).collect();
        RankingTable { rank, utility }
    }

    pub fn rank_of(&self, concept: usize) -> usize {
        self.rank.get(&concept).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }
}

pub fn rank_concepts(model: &UtilityModel, labels: &[usize], features: &FeatureMatrix) -> Result<RankingTable, PreferenceError> {
    let utility = labels.iter().map(|&l| Ok((l, model.utility(l, features)?))).collect::<Result<_, PreferenceError>>()?;
    Ok(RankingTable::from_utilities(utility))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::Rng;

    use super::super::{Choice, QueryPair};
    use super::*;

    fn matrix(rows: Vec<Vec<f64>>) -> FeatureMatrix {
        let dim = rows[0].len();
        FeatureMatrix { schema: (0..dim).map(|i| format!("f{i}")).collect(), rows: rows.into_iter().enumerate().collect() }
    }

    fn record(left: usize, right: usize, choice: Choice) -> PreferenceRecord {
        PreferenceRecord { pair: QueryPair { level: 1, left, right, round: 0 }, choice }
    }

    #[test]
    fn probability_closed_forms() {
        let f = matrix(vec![vec![3f64.ln()], vec![0.0], vec![0.0]]);
        let model = UtilityModel { weights: vec![1.0], schema: f.schema.clone(), trained_rounds: 0 };
        assert_eq!(bt_probability(1, 2, &model, &f).unwrap(), 0.5);
        assert!((bt_probability(0, 1, &model, &f).unwrap() - 0.75).abs() < 1e-15);
        let wrong = UtilityModel::zeros(&["a".to_string(), "b".to_string()]);
        assert!(matches!(bt_probability(0, 1, &wrong, &f), Err(PreferenceError::SchemaMismatch { .. })));
    }

    #[test]
    fn empty_records_keep_zero_weights() {
        let f = matrix(vec![vec![1.0, 2.0], vec![0.0, 1.0]]);
        assert_eq!(train_utility(&[], &f, &TrainHyper::default()).unwrap().weights, vec![0.0, 0.0]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = seed::rng(5);
        let f = matrix((0..6).map(|_| (0..4).map(|_| rng.random_range(-2.0..2.0)).collect()).collect());
        let records: Vec<PreferenceRecord> = (0..5)
            .map(|i| record(i, (i + 1 + rng.random_range(0..4)) % 6, if rng.random() { Choice::Left } else { Choice::Right }))
            .filter(|r| r.pair.left != r.pair.right)
            .collect();
        let w: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let analytic = gradient(&w, &records, &f, 0.01).unwrap();
        let h = 1e-6;
        for k in 0..4 {
            let mut up = w.clone();
            let mut down = w.clone();
            up[k] += h;
            down[k] -= h;
            let numeric = (objective(&up, &records, &f, 0.01).unwrap() - objective(&down, &records, &f, 0.01).unwrap()) / (2.0 * h);
            assert!((numeric - analytic[k]).abs() < 1e-5);
        }
    }

    #[test]
    fn full_batch_objective_rises_between_epochs() {
        let mut rng = seed::rng(8);
        let f = matrix((0..12).map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect()).collect());
        let truth = [1.0, -0.5, 0.3, 0.0, 2.0];
        let records: Vec<PreferenceRecord> = (0..30)
            .map(|_| {
                let (a, b) = (rng.random_range(0..12), rng.random_range(0..12));
                let better = dot(&truth, f.get(a).unwrap()) >= dot(&truth, f.get(b).unwrap());
                record(a, b, if better { Choice::Left } else { Choice::Right })
            })
            .filter(|r| r.pair.left != r.pair.right)
            .collect();
        let mut last = f64::NEG_INFINITY;
        for epochs in 0..20 {
            let model = train_utility(&records, &f, &TrainHyper { lr: 0.01, epochs, seed: 1, l2: 1e-4 }).unwrap();
            let j = objective(&model.weights, &records, &f, 1e-4).unwrap();
            assert!(j >= last - 1e-12, "epoch {epochs}: {j} < {last}");
            last = j;
        }
    }

    fn kendall_tau(a: &[f64], b: &[f64]) -> f64 {
        let mut score = 0.0;
        let mut pairs = 0.0;
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                score += ((a[i] - a[j]) * (b[i] - b[j])).signum();
                pairs += 1.0;
            }
        }
        score / pairs
    }

    #[test]
    fn planted_weights_are_recovered() {
        for trial in 0..5 {
            let mut rng = seed::rng(100 + trial);
            let f = matrix((0..50).map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect()).collect());
            let truth: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let true_u: Vec<f64> = (0..50).map(|i| dot(&truth, f.get(i).unwrap())).collect();
            let mut records = Vec::new();
            while records.len() < 200 {
                let (a, b) = (rng.random_range(0..50), rng.random_range(0..50));
                if a != b {
                    records.push(record(a, b, if true_u[a] > true_u[b] { Choice::Left } else { Choice::Right }));
                }
            }
            let model = train_utility(&records, &f, &TrainHyper::default()).unwrap();
            let learned: Vec<f64> = (0..50).map(|i| model.utility(i, &f).unwrap()).collect();
            let tau = kendall_tau(&learned, &true_u);
            assert!(tau >= 0.9, "trial {trial}: tau {tau}");
        }
    }

    #[test]
    fn rank_examples() {
        let t = RankingTable::from_utilities([(0, 3.0), (1, 2.0), (2, 1.0)].into_iter().collect());
        assert_eq!(t.rank.values().copied().collect::<Vec<_>>(), vec![2, 1, 0]);
        let flat = RankingTable::from_utilities([(0, 1.0), (1, 1.0), (2, 1.0)].into_iter().collect());
        assert!(flat.rank.values().all(|&r| r == 0));
    }

    #[test]
    fn rank_matches_pairwise_win_count() {
        let mut rng = seed::rng(3);
        let utilities: Vec<f64> = (0..10).map(|_| (rng.random_range(0..6) as f64) * 0.5).collect();
        let t = RankingTable::from_utilities(utilities.iter().copied().enumerate().collect());
        for i in 0..10 {
            let mut wins = 0;
            for j in 0..10 {
                if utilities[i] > utilities[j] {
                    wins += 1;
                }
            }
            assert_eq!(t.rank[&i], wins);
        }
    }

    proptest! {
        #[test]
        fn antisymmetry(ui in -50.0f64..50.0, uj in -50.0f64..50.0) {
            let f = matrix(vec![vec![ui], vec![uj]]);
            let model = UtilityModel { weights: vec![1.0], schema: f.schema.clone(), trained_rounds: 0 };
            let a = bt_probability(0, 1, &model, &f).unwrap();
            let b = bt_probability(1, 0, &model, &f).unwrap();
            prop_assert_eq!(a, 1.0 - b);
            prop_assert!((0.0..=1.0).contains(&a));
        }

        #[test]
        fn ranking_invariant_under_positive_scaling(
            w in prop::collection::vec(-3.0f64..3.0, 3),
            rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 2..12),
            c in 0.01f64..100.0,
        ) {
            let f = matrix(rows);
            let labels: Vec<usize> = f.rows.keys().copied().collect();
            let model = UtilityModel { weights: w.clone(), schema: f.schema.clone(), trained_rounds: 0 };
            let scaled = UtilityModel { weights: w.iter().map(|x| x * c).collect(), ..model.clone() };
            let a = rank_concepts(&model, &labels, &f).unwrap();
            let b = rank_concepts(&scaled, &labels, &f).unwrap();
            let order = |t: &RankingTable| {
                let mut ids = labels.clone();
                ids.sort_by(|x, y| t.utility[x].partial_cmp(&t.utility[y]).unwrap().then(x.cmp(y)));
                ids
            };
            // products with c can reorder values that differ only by rounding
            let distinct = a.utility.values().all(|u| a.utility.values().filter(|v| (*v - u).abs() < 1e-9).count() == 1);
            if distinct {
                prop_assert_eq!(order(&a), order(&b));
            }
        }
    }
}
