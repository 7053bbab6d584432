//! Lloyd-style k-means with an evenness term.
//!
//! The minimized objective is `J = SSE - alpha * min_c |c|`: a larger smallest
//! cluster lowers `J`, so small clusters are discouraged. With `alpha = 0` this
//! is plain k-means.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::HierarchyError;
use crate::embedding::squared_distance;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub k: usize,
    pub centers: Vec<Vec<f64>>,
    /// Point ids in input order.
    pub ids: Vec<usize>,
    /// Cluster index of each point, aligned with `ids`.
    pub labels: Vec<usize>,
    /// Final value of `J`.
    pub objective: f64,
    /// `J` after initialization and after every iteration that moved a point.
    pub history: Vec<f64>,
}

impl Clustering {
    pub fn assignment(&self) -> BTreeMap<usize, usize> {
        self.ids.iter().copied().zip(self.labels.iter().copied()).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        cluster_sizes(&self.labels, self.k)
    }

    pub fn sse(&self, points: &[(usize, Vec<f64>)]) -> f64 {
        sse(points, &self.labels, &self.centers)
    }
}

fn cluster_sizes(labels: &[usize], k: usize) -> Vec<usize> {
    let mut sizes = vec![0; k];
    for &l in labels {
        sizes[l] += 1;
    }
    sizes
}

pub(crate) fn sse(points: &[(usize, Vec<f64>)], labels: &[usize], centers: &[Vec<f64>]) -> f64 {
    points.iter().zip(labels).map(|((_, v), &l)| squared_distance(v, &centers[l])).sum()
}

fn objective(points: &[(usize, Vec<f64>)], labels: &[usize], centers: &[Vec<f64>], alpha: f64) -> f64 {
    let min_size = cluster_sizes(labels, centers.len()).into_iter().min().unwrap_or(0);
    sse(points, labels, centers) - alpha * min_size as f64
}

fn means(points: &[(usize, Vec<f64>)], labels: &[usize], k: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for ((_, v), &l) in points.iter().zip(labels) {
        crate::embedding::add_into(&mut sums[l], v);
        counts[l] += 1;
    }
    for (sum, &count) in sums.iter_mut().zip(&counts) {
        if count > 0 {
            sum.iter_mut().for_each(|x| *x /= count as f64);
        }
    }
    sums
}

fn nearest(v: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        let d = squared_distance(v, c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

fn plus_plus_seeds(points: &[(usize, Vec<f64>)], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut dist: Vec<f64> = points.iter().map(|(_, v)| squared_distance(v, &points[chosen[0]].1)).collect();
    while chosen.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in dist.iter().enumerate() {
                if d > 0.0 && target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            // guard against rounding landing on an already chosen point
            if dist[pick] == 0.0 {
                pick = dist.iter().rposition(|&d| d > 0.0).expect("total > 0");
            }
            pick
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (i, (_, v)) in points.iter().enumerate() {
            dist[i] = dist[i].min(squared_distance(v, &points[next].1));
        }
    }
    chosen.into_iter().map(|i| points[i].1.clone()).collect()
}

/// Moves the point farthest from its center in the largest cluster into each
/// empty cluster.
fn repair_empty(points: &[(usize, Vec<f64>)], labels: &mut [usize], centers: &mut [Vec<f64>]) {
    let k = centers.len();
    loop {
        let sizes = cluster_sizes(labels, k);
        let Some(empty) = sizes.iter().position(|&s| s == 0) else { return };
        let largest = (0..k).max_by_key(|&c| (sizes[c], std::cmp::Reverse(c))).expect("k > 0");
        let mut far = None;
        let mut far_d = -1.0;
        for (i, ((_, v), &l)) in points.iter().zip(labels.iter()).enumerate() {
            if l == largest {
                let d = squared_distance(v, &centers[largest]);
                if d > far_d {
                    far = Some(i);
                    far_d = d;
                }
            }
        }
        let far = far.expect("largest cluster is nonempty");
        labels[far] = empty;
        centers[empty] = points[far].1.clone();
    }
}

fn min_after_move(sizes: &[usize], from: usize, to: usize) -> usize {
    sizes
        .iter()
        .enumerate()
        .map(|(c, &s)| if c == from { s - 1 } else if c == to { s + 1 } else { s })
        .min()
        .expect("k > 0")
}

/// One sequential pass; a point moves only if that strictly lowers `J`, and
/// never out of a singleton cluster. The change in squared error is exact
/// (both means shift), and the means are updated after every move.
fn assignment_pass(points: &[(usize, Vec<f64>)], labels: &mut [usize], centers: &mut [Vec<f64>], alpha: f64) -> bool {
    let k = centers.len();
    let mut sizes = cluster_sizes(labels, k);
    let mut moved = false;
    for (i, (_, v)) in points.iter().enumerate() {
        let from = labels[i];
        let n_from = sizes[from] as f64;
        if sizes[from] <= 1 {
            continue;
        }
        let removal = n_from / (n_from - 1.0) * squared_distance(v, &centers[from]);
        let min_before = *sizes.iter().min().expect("k > 0");
        let mut best = None;
        let mut best_delta = -1e-12;
        for to in 0..k {
            if to == from {
                continue;
            }
            let n_to = sizes[to] as f64;
            let mut delta = n_to / (n_to + 1.0) * squared_distance(v, &centers[to]) - removal;
            if alpha != 0.0 {
                delta -= alpha * (min_after_move(&sizes, from, to) as f64 - min_before as f64);
            }
            if delta < best_delta {
                best = Some(to);
                best_delta = delta;
            }
        }
        if let Some(to) = best {
            let n_to = sizes[to] as f64;
            for (c, x) in centers[from].iter_mut().zip(v) {
                *c = (*c * n_from - x) / (n_from - 1.0);
            }
            for (c, x) in centers[to].iter_mut().zip(v) {
                *c = (*c * n_to + x) / (n_to + 1.0);
            }
            labels[i] = to;
            sizes[from] -= 1;
            sizes[to] += 1;
            moved = true;
        }
    }
    moved
}

/// Clusters `points` into `k` groups with k-means++ seeding.
pub fn kmeans_even(
    points: &[(usize, Vec<f64>)],
    k: usize,
    alpha: f64,
    seed: u64,
    max_iter: usize,
) -> Result<Clustering, HierarchyError> {
    if k == 0 || points.len() < k {
        return Err(HierarchyError::TooFewPoints { k, n: points.len() });
    }
    let dim = points[0].1.len();
    if let Some((_, v)) = points.iter().find(|(_, v)| v.len() != dim) {
        return Err(HierarchyError::DimMismatch { left: dim, right: v.len() });
    }
    let mut rng = seed::rng(seed);
    let mut centers = plus_plus_seeds(points, k, &mut rng);
    let mut labels: Vec<usize> = points.iter().map(|(_, v)| nearest(v, &centers)).collect();
    repair_empty(points, &mut labels, &mut centers);
    centers = means(points, &labels, k, dim);
    let mut current = objective(points, &labels, &centers, alpha);
    let mut history = vec![current];

    for _ in 0..max_iter {
        if !assignment_pass(points, &mut labels, &mut centers, alpha) {
            break;
        }
        centers = means(points, &labels, k, dim);
        let next = objective(points, &labels, &centers, alpha);
        debug_assert!(next <= current + 1e-9 * current.abs().max(1.0), "objective increased: {current} -> {next}");
        current = next;
        history.push(current);
    }

    Ok(Clustering { k, centers, ids: points.iter().map(|(id, _)| *id).collect(), labels, objective: current, history })
}

/// Best of `restarts` independently seeded runs, by objective.
pub fn kmeans_even_restarts(
    points: &[(usize, Vec<f64>)],
    k: usize,
    alpha: f64,
    seed: u64,
    max_iter: usize,
    restarts: usize,
) -> Result<Clustering, HierarchyError> {
    let mut best = kmeans_even(points, k, alpha, seed, max_iter)?;
    for r in 1..restarts {
        let run = kmeans_even(points, k, alpha, seed::mix(seed, r as u64), max_iter)?;
        if run.objective < best.objective {
            best = run;
        }
    }
    Ok(best)
}
