//! Lloyd's algorithm with k-means++ seeding and restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scenario::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KMeansConfig {
    pub max_iters: usize,
    pub n_init: usize,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            n_init: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KMeansError {
    #[error("k = {k} is outside 1..={n}")]
    InvalidK { k: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    /// Cluster index per input point.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Point>,
    /// Sum of squared distances to the assigned centroid.
    pub objective: f64,
    /// Objective after every Lloyd iteration of the winning restart.
    pub history: Vec<f64>,
}

pub fn objective(points: &[Point], assignments: &[usize], centroids: &[Point]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &a)| p.distance_sq(&centroids[a]))
        .sum()
}

fn seed_plus_plus(points: &[Point], k: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)]];
    let mut d2: Vec<f64> = points.iter().map(|p| p.distance_sq(&centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if r < w {
                    idx = i;
                    break;
                }
                r -= w;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        let c = points[pick];
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(p.distance_sq(&c));
        }
        centroids.push(c);
    }
    centroids
}

fn assign(points: &[Point], centroids: &[Point], out: &mut [usize]) -> bool {
    let mut changed = false;
    for (p, a) in points.iter().zip(out.iter_mut()) {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, c) in centroids.iter().enumerate() {
            let d = p.distance_sq(c);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        if *a != best {
            *a = best;
            changed = true;
        }
    }
    changed
}

/// Gives every empty cluster the point farthest from its own centroid,
/// taken from a cluster that keeps at least one point.
fn repair_empty(points: &[Point], centroids: &mut [Point], assignments: &mut [usize]) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &a in assignments.iter() {
            sizes[a] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut far = None;
        let mut far_d = -1.0;
        for (i, p) in points.iter().enumerate() {
            let a = assignments[i];
            if sizes[a] < 2 {
                continue;
            }
            let d = p.distance_sq(&centroids[a]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let i = far.expect("k <= n leaves a donor cluster");
        assignments[i] = empty;
        centroids[empty] = points[i];
    }
}

fn update(points: &[Point], assignments: &[usize], centroids: &mut [Point]) {
    let k = centroids.len();
    let mut sum = vec![(0.0, 0.0, 0usize); k];
    for (p, &a) in points.iter().zip(assignments) {
        sum[a].0 += p.x;
        sum[a].1 += p.y;
        sum[a].2 += 1;
    }
    for (c, (sx, sy, n)) in centroids.iter_mut().zip(sum) {
        if n > 0 {
            *c = Point::new(sx / n as f64, sy / n as f64);
        }
    }
}

fn lloyd(points: &[Point], k: usize, max_iters: usize, rng: &mut ChaCha8Rng) -> ClusterResult {
    let mut centroids = seed_plus_plus(points, k, rng);
    let mut assignments = vec![usize::MAX; points.len()];
    let mut history = Vec::new();
    for _ in 0..max_iters.max(1) {
        let changed = assign(points, &centroids, &mut assignments);
        if !changed && !history.is_empty() {
            break;
        }
        repair_empty(points, &mut centroids, &mut assignments);
        update(points, &assignments, &mut centroids);
        history.push(objective(points, &assignments, &centroids));
    }
    ClusterResult {
        objective: objective(points, &assignments, &centroids),
        assignments,
        centroids,
        history,
    }
}

/// Best of `n_init` seeded Lloyd runs.
pub fn kmeans(points: &[Point], k: usize, cfg: &KMeansConfig) -> Result<ClusterResult, KMeansError> {
    if k == 0 || k > points.len() {
        return Err(KMeansError::InvalidK { k, n: points.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<ClusterResult> = None;
    for _ in 0..cfg.n_init.max(1) {
        let r = lloyd(points, k, cfg.max_iters, &mut rng);
        if best.as_ref().is_none_or(|b| r.objective < b.objective) {
            best = Some(r);
        }
    }
    Ok(best.unwrap())
}
