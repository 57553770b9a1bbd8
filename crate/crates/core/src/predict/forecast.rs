use nalgebra::DVector;

use super::mixture::{condition, to_predictive_mixture, ConditionalPrediction, PredictiveMixture};
use crate::error::{Error, Result};
use crate::trajectory::{displacements, FeatureVector, TrackPoint};
use crate::vbgmm::VbGmmModel;

/// A fitted mixture bound to its history/horizon window.
#[derive(Debug, Clone)]
pub struct TrajectoryPredictor {
    pub model: VbGmmModel,
    pub mixture: PredictiveMixture,
    /// Number of history displacements `H`.
    pub history_len: usize,
    /// Number of future displacements `F`.
    pub horizon: usize,
    pub eta_paper_exact: bool,
}

impl TrajectoryPredictor {
    pub fn new(model: VbGmmModel, history_len: usize, horizon: usize, eta_paper_exact: bool) -> Result<Self> {
        if history_len == 0 || horizon == 0 {
            return Err(Error::invalid("H/F", "history and horizon must be >= 1"));
        }
        let expected = 2 * (history_len + horizon);
        if model.d != expected {
            return Err(Error::DimensionMismatch { expected, got: model.d });
        }
        let mixture = to_predictive_mixture(&model, 2 * history_len, eta_paper_exact)?;
        Ok(Self {
            model,
            mixture,
            history_len,
            horizon,
            eta_paper_exact,
        })
    }

    pub fn condition_on(&self, history: &[f64]) -> Result<ConditionalPrediction> {
        condition(&self.mixture, &DVector::from_column_slice(history))
    }

    /// Conditional log density of a feature vector's future given its history.
    pub fn score(&self, fv: &FeatureVector) -> Result<f64> {
        self.condition_on(&fv.history)?
            .log_density(&DVector::from_column_slice(&fv.future))
    }

    /// Predicts `steps` positions following `recent`.
    ///
    /// The last `H` displacements of `recent` are conditioned on and the
    /// predicted displacements are accumulated from the last observed point.
    /// Beyond `F` steps the predictions are fed back in as history.
    pub fn predict_future(&self, recent: &[TrackPoint], steps: usize) -> Result<Vec<TrackPoint>> {
        let needed = self.history_len + 1;
        if recent.len() < needed {
            return Err(Error::InsufficientHistory {
                needed,
                got: recent.len(),
            });
        }
        let last = &recent[recent.len() - 1];
        let dt = last.timestamp - recent[recent.len() - 2].timestamp;
        let mut window: Vec<TrackPoint> = recent[recent.len() - needed..].to_vec();
        let mut out = Vec::with_capacity(steps);
        while out.len() < steps {
            let history = displacements(&window[window.len() - needed..]);
            let pred = self.condition_on(&history)?;
            let mut cur = window[window.len() - 1].clone();
            for j in 0..self.horizon {
                if out.len() == steps {
                    break;
                }
                let next = TrackPoint::new(
                    last.object_id.clone(),
                    last.timestamp + (out.len() + 1) as f64 * dt,
                    cur.x + pred.point[2 * j],
                    cur.y + pred.point[2 * j + 1],
                );
                out.push(next.clone());
                window.push(next.clone());
                cur = next;
            }
        }
        Ok(out)
    }
}

pub fn predict_future(
    model: &VbGmmModel,
    recent: &[TrackPoint],
    history_len: usize,
    horizon: usize,
    steps: usize,
) -> Result<Vec<TrackPoint>> {
    TrajectoryPredictor::new(model.clone(), history_len, horizon, false)?.predict_future(recent, steps)
}
