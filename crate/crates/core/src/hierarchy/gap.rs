//! Gap statistic (Tibshirani, Walther & Hastie) for choosing the number of
//! clusters.

use rand::Rng;
use rayon::prelude::*;

use super::kmeans::kmeans_even_restarts;
use super::HierarchyError;
use crate::seed;

/// Restarts per k-means fit inside the gap computation.
const RESTARTS: usize = 3;
const MAX_ITER: usize = 100;
const LOG_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct GapCurve {
    pub ks: Vec<usize>,
    pub gap: Vec<f64>,
    /// `s_k = sd_k * sqrt(1 + 1/B)`.
    pub s: Vec<f64>,
    pub chosen: usize,
}

fn log_dispersion(points: &[(usize, Vec<f64>)], k: usize, seed: u64) -> f64 {
    let clustering = kmeans_even_restarts(points, k, 0.0, seed, MAX_ITER, RESTARTS).expect("k within range");
    clustering.objective.max(LOG_FLOOR).ln()
}

fn bounding_box(points: &[(usize, Vec<f64>)]) -> (Vec<f64>, Vec<f64>) {
    let dim = points[0].1.len();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for (_, v) in points {
        for d in 0..dim {
            lo[d] = lo[d].min(v[d]);
            hi[d] = hi[d].max(v[d]);
        }
    }
    (lo, hi)
}

/// Clamps `[k_min, k_max]` to `[1, n]`.
pub fn clamp_range(k_min: usize, k_max: usize, n: usize) -> (usize, usize) {
    let hi = k_max.min(n).max(1);
    let lo = k_min.max(1).min(hi);
    (lo, hi)
}

/// Full gap curve over the clamped range with `refs` uniform reference sets
/// drawn over the bounding box of the points.
pub fn gap_curve(
    points: &[(usize, Vec<f64>)],
    k_min: usize,
    k_max: usize,
    refs: usize,
    seed: u64,
) -> Result<GapCurve, HierarchyError> {
    if points.is_empty() {
        return Err(HierarchyError::TooFewPoints { k: k_min, n: 0 });
    }
    let (lo_k, hi_k) = clamp_range(k_min, k_max, points.len());
    let ks: Vec<usize> = (lo_k..=hi_k).collect();
    if ks.len() == 1 {
        return Ok(GapCurve { ks, gap: vec![0.0], s: vec![0.0], chosen: lo_k });
    }
    let refs = refs.max(1);
    let (lo, hi) = bounding_box(points);
    let reference_sets: Vec<Vec<(usize, Vec<f64>)>> = (0..refs)
        .map(|b| {
            let mut rng = seed::rng_for(seed, b as u64);
            (0..points.len())
                .map(|i| (i, lo.iter().zip(&hi).map(|(&l, &h)| if h > l { rng.random_range(l..=h) } else { l }).collect()))
                .collect()
        })
        .collect();

    let rows: Vec<(f64, f64)> = ks
        .par_iter()
        .map(|&k| {
            let fit_seed = seed::mix(seed, 0x1000 + k as u64);
            let observed = log_dispersion(points, k, fit_seed);
            let logs: Vec<f64> = reference_sets
                .iter()
                .enumerate()
                .map(|(b, data)| log_dispersion(data, k, seed::mix(fit_seed, b as u64 + 1)))
                .collect();
            let mean = logs.iter().sum::<f64>() / refs as f64;
            let var = logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / refs as f64;
            (mean - observed, var.sqrt() * (1.0 + 1.0 / refs as f64).sqrt())
        })
        .collect();
    let gap: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let s: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let chosen = (0..ks.len() - 1).find(|&i| gap[i] >= gap[i + 1] - s[i + 1]).map_or(hi_k, |i| ks[i]);
    Ok(GapCurve { ks, gap, s, chosen })
}

/// Smallest k with `Gap(k) >= Gap(k+1) - s_{k+1}`; the upper end of the range
/// when no k qualifies.
pub fn select_k(
    points: &[(usize, Vec<f64>)],
    k_min: usize,
    k_max: usize,
    refs: usize,
    seed: u64,
) -> Result<usize, HierarchyError> {
    gap_curve(points, k_min, k_max, refs, seed).map(|c| c.chosen)
}
