//! Student-t predictive mixtures, history-conditioned regression, trajectory
//! forecasting and adaptive model selection.

mod forecast;
mod mixture;
mod select;
mod student_t;

pub use forecast::{predict_future, TrajectoryPredictor};
pub use mixture::{condition, to_predictive_mixture, ConditionalPrediction, PredictiveMixture, StudentTComponent};
pub use select::{fit_cell, pick_best, select_model, CandidateGrid, CellScore, Selection, TIE_TOLERANCE};
pub use student_t::student_t_logpdf;
