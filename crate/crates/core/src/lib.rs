//! Trajectory prediction with variational Bayesian Gaussian mixtures.
//!
//! Trajectories are cleaned with DBSCAN, cut into segments, windowed into
//! displacement feature vectors and fitted with a VB-GMM. Prediction
//! conditions the resulting Student-t mixture on the recent history.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod io;
pub mod linalg;
pub mod persist;
pub mod predict;
pub mod preprocess;
pub mod special;
pub mod trajectory;
pub mod vbgmm;

pub use error::{Error, Result};
