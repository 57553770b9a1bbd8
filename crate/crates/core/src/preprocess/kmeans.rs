//! Lloyd's k-means with seeded initialisation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Cluster index of every input point.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squared distances for the final state.
    pub sse: f64,
    /// SSE after each centroid update, one entry per iteration.
    pub sse_history: Vec<f64>,
    pub converged: bool,
}

impl KMeansResult {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid. Ties keep `current` when it is among the closest,
/// otherwise the lowest index wins.
fn nearest(p: &[f64], centroids: &[Vec<f64>], current: Option<usize>) -> usize {
    let dists: Vec<f64> = centroids.iter().map(|c| sq_dist(p, c)).collect();
    let min = dists.iter().copied().fold(f64::INFINITY, f64::min);
    match current {
        Some(c) if dists[c] == min => c,
        _ => dists.iter().position(|&d| d == min).unwrap_or(0),
    }
}

/// Clusters `points` into `k` groups.
///
/// Initial centroids are `k` distinct input points drawn with `seed`. Lloyd
/// iterations run until the assignment stops changing or `max_iter` updates
/// have been made. A cluster that empties out seizes the point lying farthest
/// from its own centroid, which never increases the SSE.
pub fn kmeans<P: AsRef<[f64]>>(points: &[P], k: usize, seed: u64, max_iter: usize) -> Result<KMeansResult> {
    let n = points.len();
    if k == 0 {
        return Err(Error::invalid("k", "must be >= 1"));
    }
    if k > n {
        return Err(Error::KTooLarge { k, n });
    }
    let dim = points[0].as_ref().len();
    if let Some(bad) = points.iter().find(|p| p.as_ref().len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: bad.as_ref().len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<Vec<f64>> = rand::seq::index::sample(&mut rng, n, k)
        .into_iter()
        .map(|i| points[i].as_ref().to_vec())
        .collect();
    let mut assignments: Vec<usize> = points.iter().map(|p| nearest(p.as_ref(), &centroids, None)).collect();
    let mut sse_history = Vec::new();
    let mut converged = false;

    loop {
        update_centroids(points, &mut assignments, &mut centroids);
        sse_history.push(sse(points, &assignments, &centroids));

        let next: Vec<usize> = points
            .iter()
            .zip(&assignments)
            .map(|(p, &a)| nearest(p.as_ref(), &centroids, Some(a)))
            .collect();
        if next == assignments {
            converged = true;
            break;
        }
        if sse_history.len() >= max_iter {
            break;
        }
        assignments = next;
    }

    let sse = *sse_history.last().expect("at least one iteration");
    Ok(KMeansResult {
        assignments,
        centroids,
        sse,
        sse_history,
        converged,
    })
}

fn update_centroids<P: AsRef<[f64]>>(points: &[P], assignments: &mut [usize], centroids: &mut [Vec<f64>]) {
    let k = centroids.len();
    let dim = centroids[0].len();
    loop {
        let mut counts = vec![0usize; k];
        let mut sums = vec![vec![0.0; dim]; k];
        for (p, &a) in points.iter().zip(assignments.iter()) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p.as_ref()) {
                *s += v;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                let c = counts[j] as f64;
                centroids[j] = sums[j].iter().map(|s| s / c).collect();
            }
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        // Farthest point among clusters that can spare one.
        let donor = (0..points.len())
            .filter(|&i| counts[assignments[i]] > 1)
            .max_by(|&a, &b| {
                let da = sq_dist(points[a].as_ref(), &centroids[assignments[a]]);
                let db = sq_dist(points[b].as_ref(), &centroids[assignments[b]]);
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("k <= n leaves a cluster with spare points");
        assignments[donor] = empty;
    }
}

fn sse<P: AsRef<[f64]>>(points: &[P], assignments: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &a)| sq_dist(p.as_ref(), &centroids[a]))
        .sum()
}
