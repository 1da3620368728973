//! Seeded k-means over planar points: k-means++ seeding followed by Lloyd
//! iterations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const MAX_LLOYD_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansOutcome {
    pub centroids: Vec<[f64; 2]>,
    /// Cluster index per input point.
    pub assignments: Vec<usize>,
    /// Lloyd iterations performed after seeding.
    pub iterations: usize,
    /// Within-cluster sum of squared distances after seeding and after every
    /// Lloyd iteration.
    pub inertia_history: Vec<f64>,
}

impl KMeansOutcome {
    pub fn inertia(&self) -> f64 {
        *self.inertia_history.last().unwrap_or(&0.0)
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn nearest(p: [f64; 2], centroids: &[[f64; 2]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, &c) in centroids.iter().enumerate() {
        let d = dist2(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn count_distinct(points: &[[f64; 2]]) -> usize {
    let mut keys: Vec<(u64, u64)> = points.iter().map(|p| (p[0].to_bits(), p[1].to_bits())).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

/// k-means++ seeding: first centre uniform, each next one drawn with
/// probability proportional to the squared distance to the closest centre.
fn seed_centroids(points: &[[f64; 2]], k: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..points.len())]);
    let mut d2: Vec<f64> = points.iter().map(|&p| dist2(p, centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut chosen = None;
        for (i, &w) in d2.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            chosen = Some(i);
            if target < w {
                break;
            }
            target -= w;
        }
        let c = points[chosen.expect("at least k distinct points")];
        centroids.push(c);
        for (i, &p) in points.iter().enumerate() {
            d2[i] = d2[i].min(dist2(p, c));
        }
    }
    centroids
}

fn assign(points: &[[f64; 2]], centroids: &[[f64; 2]]) -> (Vec<usize>, f64) {
    let pairs: Vec<(usize, f64)> = points.par_iter().map(|&p| nearest(p, centroids)).collect();
    let inertia = pairs.iter().map(|&(_, d)| d).sum();
    (pairs.into_iter().map(|(i, _)| i).collect(), inertia)
}

/// Cluster `points` into `k` groups. Stops when no assignment changes or after
/// `max_iterations` Lloyd steps. An emptied cluster keeps its previous centre.
pub fn kmeans(points: &[[f64; 2]], k: usize, seed: u64, max_iterations: usize) -> Result<KMeansOutcome> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be >= 1".into()));
    }
    let distinct = count_distinct(points);
    if distinct < k {
        return Err(Error::NotEnoughPoints {
            needed: k,
            found: distinct,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let (mut assignments, inertia) = assign(points, &centroids);
    let mut history = vec![inertia];
    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        let mut sums = vec![[0.0f64; 2]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            sums[a][0] += p[0];
            sums[a][1] += p[1];
            counts[a] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = [sums[c][0] / counts[c] as f64, sums[c][1] / counts[c] as f64];
            }
        }
        let (next, inertia) = assign(points, &centroids);
        history.push(inertia);
        let changed = next != assignments;
        assignments = next;
        if !changed {
            break;
        }
    }
    Ok(KMeansOutcome {
        centroids,
        assignments,
        iterations,
        inertia_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn blobs() -> Vec<[f64; 2]> {
        let centres = [[0.0, 0.0], [1000.0, 0.0], [0.0, 1000.0], [1000.0, 1000.0]];
        let mut pts = Vec::new();
        for c in centres {
            for i in 0..10 {
                let o = i as f64;
                pts.push([c[0] + o, c[1] - o * 0.5]);
            }
        }
        pts
    }

    #[test]
    fn separates_tight_blobs() {
        let pts = blobs();
        let out = kmeans(&pts, 4, 7, MAX_LLOYD_ITERATIONS).unwrap();
        // points from the same blob share a label, different blobs differ
        for b in 0..4 {
            let label = out.assignments[b * 10];
            assert!(out.assignments[b * 10..b * 10 + 10].iter().all(|&a| a == label));
        }
        let mut labels: Vec<usize> = (0..4).map(|b| out.assignments[b * 10]).collect();
        labels.sort();
        labels.dedup();
        assert_eq!(labels.len(), 4);
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let pts = vec![[0.0, 0.0], [2.0, 0.0], [1.0, 3.0]];
        let out = kmeans(&pts, 1, 0, MAX_LLOYD_ITERATIONS).unwrap();
        assert!((out.centroids[0][0] - 1.0).abs() < 1e-12);
        assert!((out.centroids[0][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_distinct_points() {
        let pts = vec![[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]];
        assert!(matches!(
            kmeans(&pts, 3, 0, 10),
            Err(Error::NotEnoughPoints { needed: 3, found: 2 })
        ));
    }

    #[test]
    fn same_seed_same_result() {
        let pts = blobs();
        assert_eq!(kmeans(&pts, 3, 11, 100).unwrap(), kmeans(&pts, 3, 11, 100).unwrap());
    }

    proptest! {
        #[test]
        fn inertia_never_increases(
            pts in prop::collection::vec((0.0f64..1000.0, 0.0f64..1000.0), 8..60),
            k in 1usize..6,
            seed in any::<u64>(),
        ) {
            let pts: Vec<[f64; 2]> = pts.into_iter().map(|(x, y)| [x, y]).collect();
            let out = kmeans(&pts, k, seed, MAX_LLOYD_ITERATIONS).unwrap();
            for w in out.inertia_history.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-9, "{:?}", out.inertia_history);
            }
        }
    }
}
