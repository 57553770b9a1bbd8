//! Trajectory domain types: validated tracks, segments, grid sequences and
//! windowed displacement features.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub object_id: String,
    pub timestamp: f64,
    pub x: f64,
    pub y: f64,
}

impl TrackPoint {
    pub fn new(object_id: impl Into<String>, timestamp: f64, x: f64, y: f64) -> Self {
        Self {
            object_id: object_id.into(),
            timestamp,
            x,
            y,
        }
    }

    pub fn xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn distance(&self, other: &TrackPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// An ordered, single-object track with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    object_id: String,
    points: Vec<TrackPoint>,
}

impl Trajectory {
    pub fn object_id(&self) -> &str {
        &self.object_id
    }

    pub fn points(&self) -> &[TrackPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<TrackPoint> {
        self.points
    }
}

/// Checks the trajectory invariants and wraps the points.
pub fn validate_trajectory(raw: Vec<TrackPoint>) -> Result<Trajectory> {
    let first = raw.first().ok_or(Error::Empty)?;
    let object_id = first.object_id.clone();
    for (i, p) in raw.iter().enumerate() {
        if !(p.timestamp.is_finite() && p.x.is_finite() && p.y.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if p.object_id != object_id {
            return Err(Error::MixedObjectIds {
                first: object_id,
                other: p.object_id.clone(),
            });
        }
        if i > 0 && raw[i - 1].timestamp >= p.timestamp {
            return Err(Error::NonMonotonicTimestamps {
                index: i,
                prev: raw[i - 1].timestamp,
                next: p.timestamp,
            });
        }
    }
    Ok(Trajectory { object_id, points: raw })
}

impl TryFrom<Vec<TrackPoint>> for Trajectory {
    type Error = Error;

    fn try_from(raw: Vec<TrackPoint>) -> Result<Self> {
        validate_trajectory(raw)
    }
}

/// A contiguous run of a parent trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySegment {
    pub parent_id: String,
    pub index: usize,
    points: Vec<TrackPoint>,
}

impl TrajectorySegment {
    pub fn new(parent_id: impl Into<String>, index: usize, points: Vec<TrackPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(i) = (1..points.len()).find(|&i| points[i - 1].timestamp >= points[i].timestamp) {
            return Err(Error::NonMonotonicTimestamps {
                index: i,
                prev: points[i - 1].timestamp,
                next: points[i].timestamp,
            });
        }
        Ok(Self {
            parent_id: parent_id.into(),
            index,
            points,
        })
    }

    /// The whole trajectory as segment 0.
    pub fn whole(traj: &Trajectory) -> Self {
        Self {
            parent_id: traj.object_id.clone(),
            index: 0,
            points: traj.points.clone(),
        }
    }

    pub fn points(&self) -> &[TrackPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin_x: f64,
    pub origin_y: f64,
    pub cell_size: f64,
}

impl GridSpec {
    pub fn new(origin_x: f64, origin_y: f64, cell_size: f64) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::invalid("cell_size", format!("must be > 0, got {cell_size}")));
        }
        if !(origin_x.is_finite() && origin_y.is_finite()) {
            return Err(Error::invalid("grid_origin", "must be finite"));
        }
        Ok(Self {
            origin_x,
            origin_y,
            cell_size,
        })
    }

    /// Cell containing `(x, y)`; boundaries belong to the higher cell.
    pub fn cell_of(&self, x: f64, y: f64) -> (i64, i64) {
        (
            ((x - self.origin_x) / self.cell_size).floor() as i64,
            ((y - self.origin_y) / self.cell_size).floor() as i64,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSequence {
    pub cells: Vec<(i64, i64)>,
}

pub fn to_grid_sequence(points: &[TrackPoint], grid: &GridSpec) -> GridSequence {
    let mut cells: Vec<(i64, i64)> = Vec::new();
    for p in points {
        let c = grid.cell_of(p.x, p.y);
        if cells.last() != Some(&c) {
            cells.push(c);
        }
    }
    GridSequence { cells }
}

/// History/future displacement window around an anchor point.
///
/// `history` holds the `H` displacement pairs ending at the anchor and
/// `future` the `F` pairs that follow it, interleaved as `dx, dy`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub anchor: TrackPoint,
    pub history: Vec<f64>,
    pub future: Vec<f64>,
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.history.len() + self.future.len()
    }

    pub fn concat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.extend_from_slice(&self.history);
        v.extend_from_slice(&self.future);
        v
    }
}

/// Displacement pairs `p[i+1] - p[i]` over a run of points, flattened.
pub fn displacements(points: &[TrackPoint]) -> Vec<f64> {
    points
        .windows(2)
        .flat_map(|w| [w[1].x - w[0].x, w[1].y - w[0].y])
        .collect()
}

pub fn build_feature_vectors(
    points: &[TrackPoint],
    history_len: usize,
    future_len: usize,
) -> Result<Vec<FeatureVector>> {
    if history_len == 0 {
        return Err(Error::invalid("H", "must be >= 1"));
    }
    if future_len == 0 {
        return Err(Error::invalid("F", "must be >= 1"));
    }
    let n = points.len();
    if n <= history_len + future_len {
        return Ok(Vec::new());
    }
    let out = (history_len..n - future_len)
        .map(|a| FeatureVector {
            anchor: points[a].clone(),
            history: displacements(&points[a - history_len..=a]),
            future: displacements(&points[a..=a + future_len]),
        })
        .collect();
    Ok(out)
}

/// Feature vectors for every segment, windows never crossing segment boundaries.
pub fn build_feature_set(
    segments: &[TrajectorySegment],
    history_len: usize,
    future_len: usize,
) -> Result<Vec<FeatureVector>> {
    let mut all = Vec::new();
    for s in segments {
        all.extend(build_feature_vectors(s.points(), history_len, future_len)?);
    }
    Ok(all)
}

/// Seeded shuffle-and-split into `(train, test)`.
///
/// The test side receives `round(n * test_fraction)` items.
pub fn split_dataset<T: Clone>(items: &[T], test_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if items.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(
            "test_fraction",
            format!("must lie in (0, 1), got {test_fraction}"),
        ));
    }
    let n = items.len();
    let n_test = ((n as f64) * test_fraction).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = order[..n_test].iter().map(|&i| items[i].clone()).collect();
    let train = order[n_test..].iter().map(|&i| items[i].clone()).collect();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(xy: &[(f64, f64)]) -> Vec<TrackPoint> {
        xy.iter()
            .enumerate()
            .map(|(i, &(x, y))| TrackPoint::new("1", i as f64, x, y))
            .collect()
    }

    #[test]
    fn validate_accepts_well_formed() {
        let t = validate_trajectory(pts(&[(0.0, 0.0), (1.0, 0.0)])).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.object_id(), "1");
    }

    #[test]
    fn validate_rejects_duplicate_time() {
        let raw = vec![TrackPoint::new("1", 1.0, 0.0, 0.0), TrackPoint::new("1", 1.0, 1.0, 0.0)];
        assert!(matches!(
            validate_trajectory(raw),
            Err(Error::NonMonotonicTimestamps { .. })
        ));
    }

    #[test]
    fn validate_rejects_mixed_ids() {
        let raw = vec![TrackPoint::new("1", 0.0, 0.0, 0.0), TrackPoint::new("2", 1.0, 1.0, 0.0)];
        assert!(matches!(validate_trajectory(raw), Err(Error::MixedObjectIds { .. })));
    }

    #[test]
    fn validate_rejects_empty_and_nan() {
        assert!(matches!(validate_trajectory(vec![]), Err(Error::Empty)));
        let raw = vec![TrackPoint::new("1", 0.0, f64::NAN, 0.0)];
        assert!(matches!(validate_trajectory(raw), Err(Error::NonFinite(0))));
    }

    #[test]
    fn grid_sequence_collapses_duplicates() {
        let g = GridSpec::new(0.0, 0.0, 1.0).unwrap();
        let s = to_grid_sequence(&pts(&[(0.2, 0.2), (0.4, 0.3), (1.5, 0.2)]), &g);
        assert_eq!(s.cells, vec![(0, 0), (1, 0)]);
        let s = to_grid_sequence(&pts(&[(-0.5, 0.5)]), &g);
        assert_eq!(s.cells, vec![(-1, 0)]);
        let s = to_grid_sequence(&pts(&[(0.1, 0.1), (0.9, 0.9), (0.5, 0.5)]), &g);
        assert_eq!(s.cells.len(), 1);
    }

    #[test]
    fn grid_boundary_belongs_to_higher_cell() {
        let g = GridSpec::new(0.0, 0.0, 2.0).unwrap();
        assert_eq!(g.cell_of(2.0, -2.0), (1, -1));
        assert!(GridSpec::new(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn feature_vector_counts() {
        let p = pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (4.0, 0.0)]);
        assert_eq!(build_feature_vectors(&p, 2, 1).unwrap().len(), 2);
        assert!(build_feature_vectors(&p[..3], 2, 2).unwrap().is_empty());
        for fv in build_feature_vectors(&p, 1, 1).unwrap() {
            assert_eq!(fv.history, vec![1.0, 0.0]);
            assert_eq!(fv.future, vec![1.0, 0.0]);
        }
        assert!(build_feature_vectors(&p, 0, 1).is_err());
    }

    #[test]
    fn feature_vector_layout() {
        let p = pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 2.0), (4.0, 2.0)]);
        let fv = build_feature_vectors(&p, 2, 1).unwrap();
        assert_eq!(fv.len(), 1);
        assert_eq!(fv[0].anchor.x, 1.0);
        assert_eq!(fv[0].anchor.y, 2.0);
        assert_eq!(fv[0].history, vec![1.0, 0.0, 0.0, 2.0]);
        assert_eq!(fv[0].future, vec![3.0, 0.0]);
        assert_eq!(fv[0].concat().len(), 6);
    }

    #[test]
    fn split_sizes_and_determinism() {
        let items: Vec<u32> = (0..10).collect();
        let (tr, te) = split_dataset(&items, 0.2, 7).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        assert_eq!(split_dataset(&items, 0.2, 7).unwrap(), (tr.clone(), te.clone()));
        let (tr8, te8) = split_dataset(&items, 0.2, 8).unwrap();
        assert_eq!((tr8.len(), te8.len()), (8, 2));
        let mut all: Vec<u32> = tr.into_iter().chain(te).collect();
        all.sort();
        assert_eq!(all, items);
        assert!(matches!(split_dataset::<u32>(&[], 0.2, 7), Err(Error::EmptyInput)));
        assert!(split_dataset(&items, 1.0, 7).is_err());
    }

    // Dyadic coordinates keep the translated differences exact.
    fn dyadic() -> impl Strategy<Value = f64> {
        (-(1i64 << 20)..(1i64 << 20)).prop_map(|v| v as f64 / 1024.0)
    }

    proptest! {
        #[test]
        fn translation_invariant_features(
            xy in proptest::collection::vec((dyadic(), dyadic()), 2..30),
            dx in dyadic(), dy in dyadic(), h in 1usize..4, f in 1usize..4,
        ) {
            let p = pts(&xy);
            let shifted: Vec<TrackPoint> = p.iter()
                .map(|q| TrackPoint::new("1", q.timestamp, q.x + dx, q.y + dy))
                .collect();
            let a = build_feature_vectors(&p, h, f).unwrap();
            let b = build_feature_vectors(&shifted, h, f).unwrap();
            prop_assert_eq!(a.len(), xy.len().saturating_sub(h + f));
            prop_assert_eq!(a.len(), b.len());
            for (u, v) in a.iter().zip(&b) {
                prop_assert_eq!(&u.history, &v.history);
                prop_assert_eq!(&u.future, &v.future);
            }
        }

        #[test]
        fn grid_sequence_has_no_repeats(
            xy in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..60),
            cell in 0.1f64..20.0,
        ) {
            let g = GridSpec::new(-3.0, 1.5, cell).unwrap();
            let s = to_grid_sequence(&pts(&xy), &g);
            prop_assert!(!s.cells.is_empty());
            prop_assert!(s.cells.windows(2).all(|w| w[0] != w[1]));
        }

        #[test]
        fn validation_is_idempotent(xy in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..20)) {
            let t = validate_trajectory(pts(&xy)).unwrap();
            let again = validate_trajectory(t.points().to_vec()).unwrap();
            prop_assert_eq!(t, again);
        }
    }
}
