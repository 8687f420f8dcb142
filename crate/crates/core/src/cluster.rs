//! K-means++ on 1D intensities and silhouette-based choice of `K`.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Result of clustering a flat list of intensities.
///
/// Centers are strictly ascending, so cluster 0 is always the darkest group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    centers: Vec<f64>,
    labels: Vec<usize>,
    /// Within-cluster sum of squares after each Lloyd assignment step.
    #[serde(skip)]
    sse_history: Vec<f64>,
}

impl ClusterModel {
    /// Builds a model from explicit parts, e.g. when a caller wants a cluster
    /// that no pixel uses.
    pub fn from_parts(centers: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        if centers.is_empty() {
            return Err(invalid("cluster model needs at least one center"));
        }
        if centers.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("cluster centers must be strictly ascending"));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= centers.len()) {
            return Err(invalid(format!("label {l} has no center")));
        }
        Ok(Self {
            centers,
            labels,
            sse_history: Vec::new(),
        })
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sse_history(&self) -> &[f64] {
        &self.sse_history
    }

    /// Number of points assigned to each cluster.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// Index of the nearest center; ties go to the lower index.
fn nearest(centers: &[f64], x: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, &center) in centers.iter().enumerate() {
        let d = (x - center).abs();
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

fn distinct_count(values: &[f64]) -> usize {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    sorted.len()
}

fn seed_centers(values: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut centers = vec![values[rng.random_range(0..values.len())]];
    let mut d2: Vec<f64> = values.iter().map(|&x| (x - centers[0]).powi(2)).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = values.len() - 1;
        for (idx, &w) in d2.iter().enumerate() {
            if w > 0.0 && target < w {
                pick = idx;
                break;
            }
            target -= w;
        }
        // rounding can leave `pick` on a zero-weight point; step to the last positive one
        if d2[pick] == 0.0 {
            pick = d2.iter().rposition(|&w| w > 0.0).expect("k exceeds distinct values");
        }
        let c = values[pick];
        centers.push(c);
        for (w, &x) in d2.iter_mut().zip(values) {
            *w = w.min((x - c).powi(2));
        }
    }
    centers
}

/// Lloyd's algorithm from a k-means++ seeding.
///
/// Stops when no center moves by `tol` or more, or after `max_iter`
/// iterations. Centers are returned ascending and every label names the
/// nearest center.
pub fn kmeans_pp(values: &[f64], k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<ClusterModel> {
    if values.is_empty() {
        return Err(invalid("cannot cluster an empty set"));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(invalid(format!("intensities must be finite, found {bad}")));
    }
    if k == 0 || max_iter == 0 || !(tol > 0.0) {
        return Err(invalid("k, max_iter and tol must be positive"));
    }
    let distinct = distinct_count(values);
    if k > distinct {
        return Err(invalid(format!("k = {k} exceeds the {distinct} distinct values")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = seed_centers(values, k, &mut rng);
    let mut labels = vec![0; values.len()];
    let mut sse_history = Vec::new();

    for _ in 0..max_iter {
        let mut sse = 0.0;
        for (l, &x) in labels.iter_mut().zip(values) {
            *l = nearest(&centers, x);
            sse += (x - centers[*l]).powi(2);
        }
        sse_history.push(sse);

        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (&l, &x) in labels.iter().zip(values) {
            sums[l] += x;
            counts[l] += 1;
        }
        let mut next = centers.clone();
        for c in 0..k {
            if counts[c] > 0 {
                next[c] = sums[c] / counts[c] as f64;
            } else {
                // empty cluster: reseed at the point farthest from its own center
                let far = values
                    .iter()
                    .zip(&labels)
                    .map(|(&x, &l)| (x - centers[l]).abs())
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(idx, _)| idx)
                    .unwrap_or(0);
                next[c] = values[far];
            }
        }
        let shift = centers
            .iter()
            .zip(&next)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        centers = next;
        if shift < tol {
            break;
        }
    }

    centers.sort_by(f64::total_cmp);
    centers.dedup();
    for (l, &x) in labels.iter_mut().zip(values) {
        *l = nearest(&centers, x);
    }
    Ok(ClusterModel {
        centers,
        labels,
        sse_history,
    })
}

/// Mean silhouette coefficient of a labelled 1D point set.
///
/// A point alone in its cluster has cohesion `a = 0`, so it scores 1 whenever
/// another cluster exists. Returns `None` when fewer than two clusters are
/// populated.
pub fn silhouette_score(values: &[f64], labels: &[usize]) -> Option<f64> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; k];
    for &l in labels {
        counts[l] += 1;
    }
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return None;
    }
    let mut total = 0.0;
    let mut dist_sum = vec![0.0; k];
    for (i, &x) in values.iter().enumerate() {
        dist_sum.iter_mut().for_each(|d| *d = 0.0);
        for (&y, &l) in values.iter().zip(labels) {
            dist_sum[l] += (x - y).abs();
        }
        let own = labels[i];
        let a = if counts[own] > 1 {
            dist_sum[own] / (counts[own] - 1) as f64
        } else {
            0.0
        };
        let b = (0..k)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| dist_sum[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        total += if denom > 0.0 { (b - a) / denom } else { 0.0 };
    }
    Some(total / values.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteReport {
    /// `(k, mean silhouette)`; `None` where the score is undefined.
    pub candidates: Vec<(usize, Option<f64>)>,
    pub selected_k: usize,
    /// Set when the input held a single distinct value.
    pub degenerate: bool,
}

/// Default number of points the silhouette is evaluated on.
pub const SILHOUETTE_SAMPLE: usize = 2000;

/// Clusters for every `k` in `k_min..=k_max` and keeps the best mean
/// silhouette (ties go to the smaller `k`).
///
/// Scores are computed on a seeded uniform subsample of at most
/// `sample_size` points.
pub fn silhouette_select(
    values: &[f64],
    k_min: usize,
    k_max: usize,
    seed: u64,
    sample_size: usize,
) -> Result<SilhouetteReport> {
    if k_min < 2 || k_max < k_min {
        return Err(invalid(format!("need 2 ≤ k_min ≤ k_max, got {k_min}..{k_max}")));
    }
    if sample_size < 2 {
        return Err(invalid("silhouette sample size must be at least 2"));
    }
    if values.is_empty() {
        return Err(invalid("cannot cluster an empty set"));
    }
    let distinct = distinct_count(values);
    if distinct == 1 {
        return Ok(SilhouetteReport {
            candidates: (k_min..=k_max).map(|k| (k, None)).collect(),
            selected_k: k_min,
            degenerate: true,
        });
    }

    let subset: Vec<usize> = if values.len() > sample_size {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5111_0e77e);
        let mut idx = sample(&mut rng, values.len(), sample_size).into_vec();
        idx.sort_unstable();
        idx
    } else {
        (0..values.len()).collect()
    };
    let sub_values: Vec<f64> = subset.iter().map(|&i| values[i]).collect();

    let mut candidates = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for k in k_min..=k_max {
        if k > distinct {
            candidates.push((k, None));
            continue;
        }
        let model = kmeans_pp(values, k, seed, 300, 1e-6)?;
        let sub_labels: Vec<usize> = subset.iter().map(|&i| model.labels[i]).collect();
        let score = silhouette_score(&sub_values, &sub_labels);
        if let Some(s) = score {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((k, s));
            }
        }
        candidates.push((k, score));
    }
    Ok(SilhouetteReport {
        candidates,
        selected_k: best.map_or(k_min, |(k, _)| k),
        degenerate: false,
    })
}
