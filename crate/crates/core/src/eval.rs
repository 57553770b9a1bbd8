//! Prediction metrics, a constant-velocity baseline and the observable-length
//! sweep.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::predict::{select_model, CandidateGrid, TrajectoryPredictor};
use crate::trajectory::{GridSpec, TrackPoint, TrajectorySegment};
use crate::vbgmm::FitOptions;

pub const REPORT_HEADER: &str = "observable_length,rmse,accuracy,n_cases";

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch(a, b));
    }
    if a == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// Mean Euclidean distance between paired points: `(1/k) Σ |p_i - a_i|`.
///
/// Despite the name this is not a root-mean-square.
pub fn rmse(predicted: &[[f64; 2]], actual: &[[f64; 2]]) -> Result<f64> {
    check_lengths(predicted.len(), actual.len())?;
    let total: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p[0] - a[0]).hypot(p[1] - a[1]))
        .sum();
    Ok(total / predicted.len() as f64)
}

/// Fraction of positions where the prediction lands in the true point's cell.
pub fn accuracy(predicted: &[[f64; 2]], actual: &[[f64; 2]], grid: &GridSpec) -> Result<f64> {
    check_lengths(predicted.len(), actual.len())?;
    let hits = predicted
        .iter()
        .zip(actual)
        .filter(|(p, a)| grid.cell_of(p[0], p[1]) == grid.cell_of(a[0], a[1]))
        .count();
    Ok(hits as f64 / predicted.len() as f64)
}

/// Repeats the last observed displacement `steps` times.
pub fn constant_velocity_baseline(recent: &[TrackPoint], steps: usize) -> Result<Vec<[f64; 2]>> {
    let n = recent.len();
    if n < 2 {
        return Err(Error::InsufficientHistory { needed: 2, got: n });
    }
    let (a, b) = (&recent[n - 2], &recent[n - 1]);
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    Ok((1..=steps)
        .map(|i| [b.x + i as f64 * dx, b.y + i as f64 * dy])
        .collect())
}

/// One evaluation window: `H + 1` observed points and the `F` that follow.
#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub history: Vec<TrackPoint>,
    pub future: Vec<TrackPoint>,
}

impl TestCase {
    pub fn future_xy(&self) -> Vec<[f64; 2]> {
        self.future.iter().map(|p| [p.x, p.y]).collect()
    }
}

/// Every window of each segment, aligned with the feature vectors that
/// `build_feature_vectors` produces for the same `H` and `F`.
pub fn build_test_cases(segments: &[TrajectorySegment], history_len: usize, horizon: usize) -> Vec<TestCase> {
    let mut out = Vec::new();
    for seg in segments {
        let p = seg.points();
        if p.len() < history_len + horizon + 1 {
            continue;
        }
        for anchor in history_len..p.len() - horizon {
            out.push(TestCase {
                history: p[anchor - history_len..=anchor].to_vec(),
                future: p[anchor + 1..=anchor + horizon].to_vec(),
            });
        }
    }
    out
}

pub trait Forecaster: Send + Sync {
    /// Predicts `case.future.len()` positions from `case.history`.
    fn forecast(&self, case: &TestCase) -> Result<Vec<[f64; 2]>>;
}

impl Forecaster for TrajectoryPredictor {
    fn forecast(&self, case: &TestCase) -> Result<Vec<[f64; 2]>> {
        Ok(self
            .predict_future(&case.history, case.future.len())?
            .iter()
            .map(|p| [p.x, p.y])
            .collect())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantVelocity;

impl Forecaster for ConstantVelocity {
    fn forecast(&self, case: &TestCase) -> Result<Vec<[f64; 2]>> {
        constant_velocity_baseline(&case.history, case.future.len())
    }
}

/// Returns the true future. Useful for checking the harness itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct PerfectOracle;

impl Forecaster for PerfectOracle {
    fn forecast(&self, case: &TestCase) -> Result<Vec<[f64; 2]>> {
        Ok(case.future_xy())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub observable_length: usize,
    pub rmse: f64,
    pub accuracy: f64,
    pub n_cases: usize,
}

/// Unweighted mean error and accuracy over all windows.
pub fn evaluate(forecaster: &dyn Forecaster, cases: &[TestCase], grid: &GridSpec) -> Result<(f64, f64)> {
    if cases.is_empty() {
        return Err(Error::NoTestCases);
    }
    let mut err = 0.0;
    let mut acc = 0.0;
    for case in cases {
        let pred = forecaster.forecast(case)?;
        let truth = case.future_xy();
        err += rmse(&pred, &truth)?;
        acc += accuracy(&pred, &truth, grid)?;
    }
    let n = cases.len() as f64;
    Ok((err / n, acc / n))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
}

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(REPORT_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:.6},{:.6},{}",
                r.observable_length, r.rmse, r.accuracy, r.n_cases
            );
        }
        s
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

/// Supplies the forecaster to use for a given observable length.
pub trait ModelSource: Sync {
    fn forecaster_for(&self, history_len: usize, horizon: usize, seed: u64) -> Result<Box<dyn Forecaster>>;
}

/// Fits a fresh model per observable length, choosing K on validation data.
pub struct SelectPerLength<'a> {
    pub train: &'a [TrajectorySegment],
    pub validation: &'a [TrajectorySegment],
    pub candidates: CandidateGrid,
    pub opts: FitOptions,
    pub eta_paper_exact: bool,
}

impl ModelSource for SelectPerLength<'_> {
    fn forecaster_for(&self, history_len: usize, horizon: usize, seed: u64) -> Result<Box<dyn Forecaster>> {
        let grid = CandidateGrid {
            h_values: vec![history_len],
            horizon,
            ..self.candidates.clone()
        };
        let opts = FitOptions { seed, ..self.opts };
        let sel = select_model(self.train, self.validation, &grid, &opts, self.eta_paper_exact)?;
        Ok(Box::new(sel.predictor))
    }
}

/// Already-fitted predictors, looked up by their history length.
pub struct FixedModels(pub Vec<TrajectoryPredictor>);

impl ModelSource for FixedModels {
    fn forecaster_for(&self, history_len: usize, horizon: usize, _seed: u64) -> Result<Box<dyn Forecaster>> {
        let p = self
            .0
            .iter()
            .find(|p| p.history_len == history_len && p.horizon == horizon)
            .ok_or_else(|| Error::invalid("H", format!("no model with H={history_len} F={horizon}")))?;
        Ok(Box::new(p.clone()))
    }
}

impl ModelSource for PerfectOracle {
    fn forecaster_for(&self, _: usize, _: usize, _: u64) -> Result<Box<dyn Forecaster>> {
        Ok(Box::new(PerfectOracle))
    }
}

impl ModelSource for ConstantVelocity {
    fn forecaster_for(&self, _: usize, _: usize, _: u64) -> Result<Box<dyn Forecaster>> {
        Ok(Box::new(ConstantVelocity))
    }
}

/// One report row per observable length, ascending. Rows are computed in
/// parallel; every row uses the same `seed`.
pub fn sweep_observable_length(
    models: &dyn ModelSource,
    test: &[TrajectorySegment],
    h_range: &[usize],
    horizon: usize,
    grid: &GridSpec,
    seed: u64,
) -> Result<EvalReport> {
    let mut hs = h_range.to_vec();
    hs.sort_unstable();
    hs.dedup();
    if hs.is_empty() {
        return Err(Error::invalid("h_values", "at least one observable length is required"));
    }
    let rows: Vec<Result<ReportRow>> = hs
        .par_iter()
        .map(|&h| {
            let cases = build_test_cases(test, h, horizon);
            if cases.is_empty() {
                return Err(Error::NoTestCases);
            }
            let f = models.forecaster_for(h, horizon, seed)?;
            let (rmse, accuracy) = evaluate(f.as_ref(), &cases, grid)?;
            Ok(ReportRow {
                observable_length: h,
                rmse,
                accuracy,
                n_cases: cases.len(),
            })
        })
        .collect();
    Ok(EvalReport {
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}
