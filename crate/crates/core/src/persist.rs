//! JSON model documents. Floats are written in shortest round-trip form, so
//! save followed by load reproduces every number bit for bit.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predict::TrajectoryPredictor;
use crate::vbgmm::{ComponentPosterior, Hyperparameters, VbGmmModel};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperDoc {
    pub alpha0: f64,
    pub beta0: f64,
    pub m0: Vec<f64>,
    /// Row-major `D x D`.
    pub w0: Vec<f64>,
    pub v0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDoc {
    pub alpha: f64,
    pub beta: f64,
    pub m: Vec<f64>,
    /// Row-major `D x D`.
    pub w: Vec<f64>,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub version: u32,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "D")]
    pub d: usize,
    pub hyperparameters: HyperDoc,
    pub components: Vec<ComponentDoc>,
    pub elbo_trace: Vec<f64>,
    pub seed: u64,
    pub converged: bool,
    pub n_obs: usize,
    #[serde(rename = "H", default)]
    pub h: Option<usize>,
    #[serde(rename = "F", default)]
    pub f: Option<usize>,
    #[serde(default)]
    pub h_dim: Option<usize>,
    #[serde(default)]
    pub f_dim: Option<usize>,
    #[serde(default)]
    pub eta_paper_exact: bool,
    /// Validation score of the selected cell, when the model came from
    /// model selection.
    #[serde(default)]
    pub score: Option<f64>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::ModelParse(msg.into())
}

fn matrix(d: usize, data: &[f64], what: &str) -> Result<DMatrix<f64>> {
    if data.len() != d * d {
        return Err(parse_err(format!(
            "{what} has {} entries, expected {}",
            data.len(),
            d * d
        )));
    }
    Ok(DMatrix::from_row_slice(d, d, data))
}

fn vector(d: usize, data: &[f64], what: &str) -> Result<DVector<f64>> {
    if data.len() != d {
        return Err(parse_err(format!("{what} has {} entries, expected {d}", data.len())));
    }
    Ok(DVector::from_column_slice(data))
}

impl ModelDocument {
    pub fn from_model(model: &VbGmmModel) -> Self {
        let h = &model.hyper;
        Self {
            version: FORMAT_VERSION,
            k: model.k,
            d: model.d,
            hyperparameters: HyperDoc {
                alpha0: h.alpha0,
                beta0: h.beta0,
                m0: h.m0.as_slice().to_vec(),
                w0: row_major(&h.w0),
                v0: h.v0,
            },
            components: model
                .components
                .iter()
                .map(|c| ComponentDoc {
                    alpha: c.alpha,
                    beta: c.beta,
                    m: c.m.as_slice().to_vec(),
                    w: row_major(&c.w),
                    v: c.v,
                })
                .collect(),
            elbo_trace: model.elbo_trace.clone(),
            seed: model.seed,
            converged: model.converged,
            n_obs: model.n_obs,
            h: None,
            f: None,
            h_dim: None,
            f_dim: None,
            eta_paper_exact: false,
            score: None,
        }
    }

    pub fn from_predictor(p: &TrajectoryPredictor, score: Option<f64>) -> Self {
        Self {
            h: Some(p.history_len),
            f: Some(p.horizon),
            h_dim: Some(2 * p.history_len),
            f_dim: Some(2 * p.horizon),
            eta_paper_exact: p.eta_paper_exact,
            score,
            ..Self::from_model(&p.model)
        }
    }

    pub fn to_model(&self) -> Result<VbGmmModel> {
        if self.version != FORMAT_VERSION {
            return Err(parse_err(format!("unsupported version {}", self.version)));
        }
        let d = self.d;
        if self.components.len() != self.k {
            return Err(parse_err(format!(
                "K is {} but {} components are listed",
                self.k,
                self.components.len()
            )));
        }
        let h = &self.hyperparameters;
        let hyper = Hyperparameters::new(
            h.alpha0,
            h.beta0,
            vector(d, &h.m0, "m0")?,
            matrix(d, &h.w0, "w0")?,
            h.v0,
        )
        .map_err(|e| parse_err(e.to_string()))?;
        let components = self
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| {
                Ok(ComponentPosterior {
                    alpha: c.alpha,
                    beta: c.beta,
                    m: vector(d, &c.m, &format!("components[{i}].m"))?,
                    w: matrix(d, &c.w, &format!("components[{i}].w"))?,
                    v: c.v,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(VbGmmModel {
            k: self.k,
            d,
            hyper,
            components,
            elbo_trace: self.elbo_trace.clone(),
            converged: self.converged,
            seed: self.seed,
            n_obs: self.n_obs,
        })
    }

    pub fn to_predictor(&self) -> Result<TrajectoryPredictor> {
        let (Some(h), Some(f)) = (self.h, self.f) else {
            return Err(parse_err("model has no H/F window metadata"));
        };
        if self.h_dim.is_some_and(|v| v != 2 * h) || self.f_dim.is_some_and(|v| v != 2 * f) {
            return Err(parse_err("h_dim/f_dim disagree with H/F"));
        }
        TrajectoryPredictor::new(self.to_model()?, h, f, self.eta_paper_exact).map_err(|e| parse_err(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model document serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| parse_err(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
