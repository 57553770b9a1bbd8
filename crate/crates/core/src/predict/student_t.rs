use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, ln_det};
use crate::special::ln_gamma_ratio;

/// Log density of a multivariate Student-t with location `mean`, precision
/// (inverse scale) matrix `precision` and `dof` degrees of freedom.
pub fn student_t_logpdf(x: &DVector<f64>, mean: &DVector<f64>, precision: &DMatrix<f64>, dof: f64) -> Result<f64> {
    let d = mean.len();
    if x.len() != d || precision.nrows() != d || precision.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    if !(dof > 0.0) {
        return Err(Error::NumericalFailure(format!(
            "degrees of freedom must be > 0, got {dof}"
        )));
    }
    let chol = cholesky(precision, "Student-t precision")?;
    let diff = x - mean;
    let maha = diff.dot(&(precision * &diff));
    let v = logpdf_parts(d, dof, ln_det(&chol), maha);
    if !v.is_finite() {
        return Err(Error::NumericalFailure("Student-t log density is not finite".into()));
    }
    Ok(v)
}

/// Log density from its ingredients: dimension, dof, `ln |precision|` and the
/// squared Mahalanobis distance under the precision.
pub(crate) fn logpdf_parts(d: usize, dof: f64, ln_det_precision: f64, maha: f64) -> f64 {
    let df = d as f64;
    ln_gamma_ratio(0.5 * dof, 0.5 * df) - 0.5 * df * (dof * PI).ln() + 0.5 * ln_det_precision
        - 0.5 * (dof + df) * (maha / dof).ln_1p()
}
