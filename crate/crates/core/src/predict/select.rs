//! Adaptive choice of component count and history length by held-out
//! conditional log-likelihood.

use rayon::prelude::*;

use super::forecast::TrajectoryPredictor;
use crate::error::{Error, Result};
use crate::trajectory::{build_feature_set, TrajectorySegment};
use crate::vbgmm::{fit, rows_to_matrix, FitOptions, HyperOverrides, Hyperparameters};

/// Scores closer than this (relative) count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateGrid {
    pub k_values: Vec<usize>,
    pub h_values: Vec<usize>,
    /// Prediction horizon `F`, shared by every candidate.
    pub horizon: usize,
    /// Prior overrides; the rest of the prior is derived from each cell's data.
    pub hyper: HyperOverrides,
}

impl CandidateGrid {
    pub fn new(k_values: Vec<usize>, h_values: Vec<usize>, horizon: usize, hyper: HyperOverrides) -> Result<Self> {
        if k_values.is_empty() || h_values.is_empty() {
            return Err(Error::invalid("grid", "K and H value lists must be non-empty"));
        }
        if k_values.contains(&0) || h_values.contains(&0) || horizon == 0 {
            return Err(Error::invalid("grid", "all K, H and F values must be >= 1"));
        }
        Ok(Self {
            k_values,
            h_values,
            horizon,
            hyper,
        })
    }

    /// `(K, H)` pairs ordered by K, then H, duplicates removed.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        let mut ks = self.k_values.clone();
        let mut hs = self.h_values.clone();
        ks.sort_unstable();
        ks.dedup();
        hs.sort_unstable();
        hs.dedup();
        ks.iter().flat_map(|&k| hs.iter().map(move |&h| (k, h))).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellScore {
    pub k: usize,
    pub h: usize,
    /// Mean held-out conditional log density, or the failure message.
    pub score: std::result::Result<f64, String>,
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub predictor: TrajectoryPredictor,
    pub k: usize,
    pub h: usize,
    pub score: f64,
    pub table: Vec<CellScore>,
}

/// Index of the best score; near-ties go to the earliest entry.
pub fn pick_best(scores: &[Option<f64>]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.iter().enumerate() {
        let Some(s) = *s else { continue };
        match best {
            Some((_, b)) if s <= b + TIE_TOLERANCE * b.abs().max(1.0) => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}

/// Fits one model for a grid cell and scores it on the validation windows.
pub fn fit_cell(
    train: &[TrajectorySegment],
    validation: &[TrajectorySegment],
    k: usize,
    h: usize,
    grid: &CandidateGrid,
    opts: &FitOptions,
    eta_paper_exact: bool,
) -> Result<(TrajectoryPredictor, f64)> {
    let train_fv = build_feature_set(train, h, grid.horizon)?;
    let val_fv = build_feature_set(validation, h, grid.horizon)?;
    if val_fv.is_empty() {
        return Err(Error::NoTestCases);
    }
    let rows: Vec<Vec<f64>> = train_fv.iter().map(|f| f.concat()).collect();
    let data = rows_to_matrix(&rows)?;
    let hyper = Hyperparameters::from_data(&data, k, &grid.hyper)?;
    let model = fit(&data, k, &hyper, opts)?;
    let predictor = TrajectoryPredictor::new(model, h, grid.horizon, eta_paper_exact)?;
    let mut total = 0.0;
    for fv in &val_fv {
        total += predictor.score(fv)?;
    }
    Ok((predictor, total / val_fv.len() as f64))
}

/// Fits every `(K, H)` cell and keeps the one with the best mean validation
/// log density. Ties prefer smaller K, then smaller H. Cell `i` (in that
/// order) is fitted with seed `opts.seed + i`.
pub fn select_model(
    train: &[TrajectorySegment],
    validation: &[TrajectorySegment],
    grid: &CandidateGrid,
    opts: &FitOptions,
    eta_paper_exact: bool,
) -> Result<Selection> {
    let cells = grid.cells();
    let results: Vec<Result<(TrajectoryPredictor, f64)>> = cells
        .par_iter()
        .enumerate()
        .map(|(i, &(k, h))| {
            let cell_opts = FitOptions {
                seed: opts.seed.wrapping_add(i as u64),
                ..*opts
            };
            fit_cell(train, validation, k, h, grid, &cell_opts, eta_paper_exact)
        })
        .collect();

    let scores: Vec<Option<f64>> = results
        .iter()
        .map(|r| r.as_ref().ok().map(|(_, s)| *s).filter(|s| s.is_finite()))
        .collect();
    let table = cells
        .iter()
        .zip(&results)
        .map(|(&(k, h), r)| CellScore {
            k,
            h,
            score: r.as_ref().map(|(_, s)| *s).map_err(|e| e.to_string()),
        })
        .collect();
    let best = pick_best(&scores).ok_or(Error::AllFitsFailed)?;
    let (k, h) = cells[best];
    let (predictor, score) = results.into_iter().nth(best).expect("index in range")?;
    Ok(Selection {
        predictor,
        k,
        h,
        score,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tie_goes_to_first() {
        assert_eq!(pick_best(&[Some(-3.0), Some(-3.0 + 1e-15)]), Some(0));
        assert_eq!(pick_best(&[Some(-3.0), Some(-2.0)]), Some(1));
        assert_eq!(pick_best(&[None, Some(-5.0), Some(-6.0)]), Some(1));
        assert_eq!(pick_best(&[None, None]), None);
    }

    #[test]
    fn grid_cells_are_ordered() {
        let g = CandidateGrid::new(vec![4, 1, 4], vec![3, 2], 2, HyperOverrides::default()).unwrap();
        assert_eq!(g.cells(), vec![(1, 2), (1, 3), (4, 2), (4, 3)]);
        assert!(CandidateGrid::new(vec![], vec![1], 1, HyperOverrides::default()).is_err());
        assert!(CandidateGrid::new(vec![1], vec![0], 1, HyperOverrides::default()).is_err());
    }
}
