//! Density-based clustering with core, edge and noise roles.
//!
//! Neighbourhood queries use a uniform bucket grid with cell side `eps`, so
//! only the 3x3 block of cells around a point is scanned.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbscanParams {
    pub eps: f64,
    pub min_pts: usize,
}

impl DbscanParams {
    pub fn new(eps: f64, min_pts: usize) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::invalid("eps", format!("must be > 0, got {eps}")));
        }
        if min_pts == 0 {
            return Err(Error::invalid("min_pts", "must be >= 1"));
        }
        Ok(Self { eps, min_pts })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointRole {
    Core,
    Edge,
    Noise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointLabel {
    pub role: PointRole,
    pub cluster_id: Option<usize>,
}

impl PointLabel {
    pub const NOISE: PointLabel = PointLabel {
        role: PointRole::Noise,
        cluster_id: None,
    };

    pub fn is_noise(&self) -> bool {
        self.role == PointRole::Noise
    }
}

struct BucketGrid<'a> {
    points: &'a [[f64; 2]],
    eps: f64,
    eps2: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl<'a> BucketGrid<'a> {
    fn new(points: &'a [[f64; 2]], eps: f64) -> Self {
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, eps)).or_default().push(i);
        }
        Self {
            points,
            eps,
            eps2: eps * eps,
            cells,
        }
    }

    fn key(p: &[f64; 2], eps: f64) -> (i64, i64) {
        ((p[0] / eps).floor() as i64, (p[1] / eps).floor() as i64)
    }

    /// Calls `f` for every point within `eps` of point `i`, itself included.
    fn for_each_neighbor(&self, i: usize, mut f: impl FnMut(usize)) {
        let p = &self.points[i];
        let (cx, cy) = Self::key(p, self.eps);
        for gx in cx.saturating_sub(1)..=cx.saturating_add(1) {
            for gy in cy.saturating_sub(1)..=cy.saturating_add(1) {
                let Some(bucket) = self.cells.get(&(gx, gy)) else {
                    continue;
                };
                for &j in bucket {
                    let q = &self.points[j];
                    let dx = p[0] - q[0];
                    let dy = p[1] - q[1];
                    if dx * dx + dy * dy <= self.eps2 {
                        f(j);
                    }
                }
            }
        }
    }
}

/// Labels every point as core, edge or noise.
///
/// A point is core when at least `min_pts` points (itself included) lie within
/// `eps`. Clusters are the connected components of cores, numbered in the
/// order their first core appears in the input. A non-core point within `eps`
/// of some core joins the cluster of the lowest-indexed such core.
pub fn dbscan(points: &[[f64; 2]], params: &DbscanParams) -> Vec<PointLabel> {
    let n = points.len();
    let grid = BucketGrid::new(points, params.eps);

    let core: Vec<bool> = (0..n)
        .map(|i| {
            let mut count = 0usize;
            grid.for_each_neighbor(i, |_| count += 1);
            count >= params.min_pts
        })
        .collect();

    let mut cluster: Vec<Option<usize>> = vec![None; n];
    let mut next_id = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if !core[start] || cluster[start].is_some() {
            continue;
        }
        cluster[start] = Some(next_id);
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            grid.for_each_neighbor(i, |j| {
                if core[j] && cluster[j].is_none() {
                    cluster[j] = Some(next_id);
                    queue.push_back(j);
                }
            });
        }
        next_id += 1;
    }

    (0..n)
        .map(|i| {
            if core[i] {
                return PointLabel {
                    role: PointRole::Core,
                    cluster_id: cluster[i],
                };
            }
            let mut first_core: Option<usize> = None;
            grid.for_each_neighbor(i, |j| {
                if core[j] && first_core.is_none_or(|f| j < f) {
                    first_core = Some(j);
                }
            });
            match first_core {
                Some(c) => PointLabel {
                    role: PointRole::Edge,
                    cluster_id: cluster[c],
                },
                None => PointLabel::NOISE,
            }
        })
        .collect()
}

/// Runs [`dbscan`] per k-means partition once the input exceeds
/// `partition_threshold` points; smaller inputs go straight to [`dbscan`].
///
/// Cluster ids stay unique across partitions (later partitions are offset).
/// Neighbourhoods that straddle a partition boundary are cut, so labels near
/// boundaries can differ from a global run.
pub fn dbscan_partitioned(
    points: &[[f64; 2]],
    params: &DbscanParams,
    partition_threshold: usize,
    seed: u64,
) -> Result<Vec<PointLabel>> {
    if points.len() <= partition_threshold.max(1) {
        return Ok(dbscan(points, params));
    }
    let k = points.len().div_ceil(partition_threshold.max(1));
    let parts = super::kmeans(points, k, seed, 50)?;

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &a) in parts.assignments.iter().enumerate() {
        members[a].push(i);
    }
    let mut labels = vec![PointLabel::NOISE; points.len()];
    let mut offset = 0;
    for idx in members.iter().filter(|m| !m.is_empty()) {
        let sub: Vec<[f64; 2]> = idx.iter().map(|&i| points[i]).collect();
        let sub_labels = dbscan(&sub, params);
        let mut max_id = None;
        for (&i, l) in idx.iter().zip(sub_labels) {
            labels[i] = PointLabel {
                role: l.role,
                cluster_id: l.cluster_id.map(|c| c + offset),
            };
            max_id = max_id.max(l.cluster_id);
        }
        offset += max_id.map_or(0, |m| m + 1);
    }
    Ok(labels)
}
