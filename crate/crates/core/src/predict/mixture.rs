//! Student-t posterior-predictive mixture and its history-conditioned form.
//!
//! Each fitted component yields `St(x | m_k, eta_k, v_k + 1 - D)` with mixing
//! weight `alpha_k / sum_j alpha_j`. Splitting `x = [x_h; x_f]` and conditioning
//! on `x_h` gives another Student-t mixture whose component means are linear
//! regressions of the future block on the history block.

use nalgebra::{DMatrix, DVector};

use super::student_t::logpdf_parts;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, ln_det, spd_inverse, symmetrize};
use crate::vbgmm::VbGmmModel;

#[derive(Debug, Clone, PartialEq)]
pub struct StudentTComponent {
    pub weight: f64,
    pub mean: DVector<f64>,
    pub precision: DMatrix<f64>,
    pub dof: f64,
}

/// Block quantities of one component reused for every conditioning query.
#[derive(Debug, Clone)]
struct Blocks {
    /// Precision of the history marginal, `Sigma_hh^-1`.
    hist_precision: DMatrix<f64>,
    hist_ln_det: f64,
    /// Regression gain `Sigma_fh Sigma_hh^-1`.
    gain: DMatrix<f64>,
    /// Schur complement `Sigma_ff - Sigma_fh Sigma_hh^-1 Sigma_hf`.
    schur: DMatrix<f64>,
    schur_inv: DMatrix<f64>,
    schur_inv_ln_det: f64,
}

#[derive(Debug, Clone)]
pub struct PredictiveMixture {
    components: Vec<StudentTComponent>,
    d: usize,
    h_dim: usize,
    blocks: Vec<Blocks>,
}

impl PredictiveMixture {
    /// Builds a mixture, normalising the weights to sum to one.
    pub fn new(mut components: Vec<StudentTComponent>, h_dim: usize) -> Result<Self> {
        let d = components.first().map(|c| c.mean.len()).ok_or(Error::EmptyInput)?;
        if h_dim == 0 || h_dim >= d {
            return Err(Error::invalid("h_dim", format!("must lie in 1..{d}, got {h_dim}")));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if !(total > 0.0 && total.is_finite()) || components.iter().any(|c| c.weight < 0.0) {
            return Err(Error::invalid(
                "weight",
                "weights must be non-negative with a positive sum",
            ));
        }
        for (k, c) in components.iter_mut().enumerate() {
            if c.mean.len() != d || c.precision.shape() != (d, d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: c.mean.len(),
                });
            }
            if !(c.dof > 0.0) {
                return Err(Error::DofNotPositive {
                    component: k,
                    dof: c.dof,
                });
            }
            c.weight /= total;
        }
        let blocks = components
            .iter()
            .map(|c| Blocks::new(&c.precision, h_dim))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            components,
            d,
            h_dim,
            blocks,
        })
    }

    pub fn components(&self) -> &[StudentTComponent] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn h_dim(&self) -> usize {
        self.h_dim
    }

    pub fn f_dim(&self) -> usize {
        self.d - self.h_dim
    }

    /// Log density of a full `[x_h; x_f]` vector under the mixture.
    pub fn log_pdf(&self, x: &DVector<f64>) -> Result<f64> {
        let terms = self
            .components
            .iter()
            .map(|c| {
                let chol = cholesky(&c.precision, "component precision")?;
                let diff = x - &c.mean;
                let maha = diff.dot(&(&c.precision * &diff));
                Ok(c.weight.ln() + logpdf_parts(self.d, c.dof, ln_det(&chol), maha))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(log_sum_exp(&terms))
    }
}

impl Blocks {
    fn new(precision: &DMatrix<f64>, h: usize) -> Result<Self> {
        let d = precision.nrows();
        let f = d - h;
        let sigma = spd_inverse(precision, "component precision")?;
        let s_hh = sigma.view((0, 0), (h, h)).into_owned();
        let s_fh = sigma.view((h, 0), (f, h)).into_owned();
        let s_ff = sigma.view((h, h), (f, f)).into_owned();
        let hist_precision = spd_inverse(&s_hh, "history scale block")?;
        let hist_ln_det = ln_det(&cholesky(&hist_precision, "history precision")?);
        let gain = &s_fh * &hist_precision;
        let mut schur = s_ff - &gain * s_fh.transpose();
        symmetrize(&mut schur);
        let schur_inv = spd_inverse(&schur, "conditional scale")?;
        let schur_inv_ln_det = ln_det(&cholesky(&schur_inv, "conditional precision")?);
        Ok(Self {
            hist_precision,
            hist_ln_det,
            gain,
            schur,
            schur_inv,
            schur_inv_ln_det,
        })
    }
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Mixture over the future block given an observed history.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalPrediction {
    /// History-dependent mixing weights, summing to one.
    pub gating: Vec<f64>,
    pub cond_means: Vec<DVector<f64>>,
    pub cond_dofs: Vec<f64>,
    /// Conditional scale matrices (inverse precision) of the future block.
    pub cond_scales: Vec<DMatrix<f64>>,
    /// `sum_k gating_k * cond_means_k`.
    pub point: DVector<f64>,
    cond_precision_ln_dets: Vec<f64>,
    cond_precisions: Vec<DMatrix<f64>>,
}

impl ConditionalPrediction {
    /// Log density of `x_f` under the conditional mixture.
    pub fn log_density(&self, x_f: &DVector<f64>) -> Result<f64> {
        let f = self.point.len();
        if x_f.len() != f {
            return Err(Error::DimensionMismatch {
                expected: f,
                got: x_f.len(),
            });
        }
        let terms: Vec<f64> = (0..self.gating.len())
            .filter(|&k| self.gating[k] > 0.0)
            .map(|k| {
                let diff = x_f - &self.cond_means[k];
                let maha = diff.dot(&(&self.cond_precisions[k] * &diff));
                self.gating[k].ln() + logpdf_parts(f, self.cond_dofs[k], self.cond_precision_ln_dets[k], maha)
            })
            .collect();
        let v = log_sum_exp(&terms);
        if !v.is_finite() {
            return Err(Error::NumericalFailure("conditional log density is not finite".into()));
        }
        Ok(v)
    }
}

/// Turns a fitted model into its Student-t predictive mixture.
///
/// Component precision is `(v_k + 1 - D) beta_k / (1 + beta_k) * w_k`. With
/// `eta_paper_exact` the `beta_k` factor is dropped, giving
/// `(v_k + 1 - D) / (1 + beta_k) * w_k`.
pub fn to_predictive_mixture(model: &VbGmmModel, h_dim: usize, eta_paper_exact: bool) -> Result<PredictiveMixture> {
    let d = model.d as f64;
    let total: f64 = model.components.iter().map(|c| c.alpha).sum();
    let components = model
        .components
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let dof = c.v + 1.0 - d;
            if !(dof > 0.0) {
                return Err(Error::DofNotPositive { component: k, dof });
            }
            let scale = if eta_paper_exact {
                dof / (1.0 + c.beta)
            } else {
                dof * c.beta / (1.0 + c.beta)
            };
            Ok(StudentTComponent {
                weight: c.alpha / total,
                mean: c.m.clone(),
                precision: &c.w * scale,
                dof,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PredictiveMixture::new(components, h_dim)
}

/// Conditions the mixture on an observed history block.
pub fn condition(mix: &PredictiveMixture, x_h: &DVector<f64>) -> Result<ConditionalPrediction> {
    let h = mix.h_dim;
    if x_h.len() != h {
        return Err(Error::DimensionMismatch {
            expected: h,
            got: x_h.len(),
        });
    }
    if x_h.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("x_h", "must be finite"));
    }
    let f = mix.f_dim();
    let k = mix.components.len();
    let mut log_gate = Vec::with_capacity(k);
    let mut cond_means = Vec::with_capacity(k);
    let mut cond_dofs = Vec::with_capacity(k);
    let mut cond_scales = Vec::with_capacity(k);
    let mut cond_precisions = Vec::with_capacity(k);
    let mut cond_precision_ln_dets = Vec::with_capacity(k);

    for (c, b) in mix.components.iter().zip(&mix.blocks) {
        let m_h = c.mean.rows(0, h);
        let m_f = c.mean.rows(h, f);
        let diff = x_h - m_h;
        let delta = diff.dot(&(&b.hist_precision * &diff));
        log_gate.push(if c.weight > 0.0 {
            c.weight.ln() + logpdf_parts(h, c.dof, b.hist_ln_det, delta)
        } else {
            f64::NEG_INFINITY
        });
        cond_means.push(m_f + &b.gain * &diff);

        let dof = c.dof + h as f64;
        let factor = (c.dof + delta) / dof;
        cond_dofs.push(dof);
        cond_scales.push(&b.schur * factor);
        cond_precisions.push(&b.schur_inv / factor);
        cond_precision_ln_dets.push(b.schur_inv_ln_det - f as f64 * factor.ln());
    }

    let norm = log_sum_exp(&log_gate);
    if !norm.is_finite() {
        return Err(Error::NumericalFailure("gating weights underflowed".into()));
    }
    let gating: Vec<f64> = log_gate.iter().map(|g| (g - norm).exp()).collect();
    let mut point = DVector::zeros(f);
    for (g, m) in gating.iter().zip(&cond_means) {
        point.axpy(*g, m, 1.0);
    }
    Ok(ConditionalPrediction {
        gating,
        cond_means,
        cond_dofs,
        cond_scales,
        point,
        cond_precision_ln_dets,
        cond_precisions,
    })
}
