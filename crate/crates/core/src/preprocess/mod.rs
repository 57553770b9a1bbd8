//! Noise removal and segmentation of raw trajectories.

mod dbscan;
mod kmeans;

use std::collections::VecDeque;

pub use dbscan::{dbscan, dbscan_partitioned, DbscanParams, PointLabel, PointRole};
pub use kmeans::{kmeans, KMeansResult};

use crate::error::{Error, Result};
use crate::trajectory::{validate_trajectory, Trajectory, TrajectorySegment};

/// Point count above which density clustering runs per k-means partition.
pub const DEFAULT_PARTITION_THRESHOLD: usize = 50_000;

/// Drops the points that density clustering labels as noise.
pub fn denoise(traj: &Trajectory, params: &DbscanParams) -> Result<Trajectory> {
    denoise_with(traj, params, DEFAULT_PARTITION_THRESHOLD, 0)
}

pub fn denoise_with(
    traj: &Trajectory,
    params: &DbscanParams,
    partition_threshold: usize,
    seed: u64,
) -> Result<Trajectory> {
    let xy: Vec<[f64; 2]> = traj.points().iter().map(|p| p.xy()).collect();
    let labels = dbscan_partitioned(&xy, params, partition_threshold, seed)?;
    let kept: Vec<_> = traj
        .points()
        .iter()
        .zip(&labels)
        .filter(|(_, l)| !l.is_noise())
        .map(|(p, _)| p.clone())
        .collect();
    if kept.is_empty() {
        return Err(Error::AllPointsNoise);
    }
    validate_trajectory(kept)
}

/// Splits a trajectory into runs of consecutive points whose successive
/// gaps are all within `eps`.
///
/// Runs are found by breadth-first traversal of the chain graph linking
/// `p[i]` and `p[i+1]` when `|p[i+1] - p[i]| <= eps`. Runs shorter than
/// `min_pts` are dropped.
pub fn segment(traj: &Trajectory, params: &DbscanParams) -> Result<Vec<TrajectorySegment>> {
    let pts = traj.points();
    let n = pts.len();
    if n == 0 {
        return Err(Error::Empty);
    }
    let linked: Vec<bool> = pts.windows(2).map(|w| w[0].distance(&w[1]) <= params.eps).collect();

    let mut visited = vec![false; n];
    let mut segments = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        queue.push_back(start);
        let (mut lo, mut hi) = (start, start);
        while let Some(i) = queue.pop_front() {
            lo = lo.min(i);
            hi = hi.max(i);
            if i > 0 && linked[i - 1] && !visited[i - 1] {
                visited[i - 1] = true;
                queue.push_back(i - 1);
            }
            if i + 1 < n && linked[i] && !visited[i + 1] {
                visited[i + 1] = true;
                queue.push_back(i + 1);
            }
        }
        if hi - lo + 1 >= params.min_pts {
            let index = segments.len();
            segments.push(TrajectorySegment::new(traj.object_id(), index, pts[lo..=hi].to_vec())?);
        }
    }
    if segments.is_empty() {
        return Err(Error::NoSegments);
    }
    Ok(segments)
}

/// Denoise then segment; trajectories that end up empty are skipped.
pub fn preprocess_all(
    trajectories: &[Trajectory],
    denoise_params: &DbscanParams,
    segment_params: &DbscanParams,
) -> Vec<TrajectorySegment> {
    let mut out = Vec::new();
    for t in trajectories {
        let Ok(clean) = denoise(t, denoise_params) else {
            continue;
        };
        if let Ok(segs) = segment(&clean, segment_params) {
            out.extend(segs);
        }
    }
    out
}
