use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

const JITTER_RETRIES: usize = 3;

pub fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// Cholesky factor of a symmetrised copy of `a`.
///
/// On failure, `1e-9 * trace(a) / n` is added to the diagonal, up to three
/// times, before giving up.
pub fn cholesky(a: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    let mut m = a.clone();
    symmetrize(&mut m);
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure(format!("{what}: non-finite entries")));
    }
    let n = m.nrows().max(1) as f64;
    let jitter = {
        let j = 1e-9 * m.trace() / n;
        if j > 0.0 {
            j
        } else {
            1e-9
        }
    };
    for _ in 0..=JITTER_RETRIES {
        if let Some(c) = Cholesky::new(m.clone()) {
            return Ok(c);
        }
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
    }
    Err(Error::NumericalFailure(format!("{what}: not positive definite")))
}

pub fn ln_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

/// Inverse of a symmetric positive-definite matrix, returned symmetric.
pub fn spd_inverse(a: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let mut inv = cholesky(a, what)?.inverse();
    symmetrize(&mut inv);
    Ok(inv)
}

/// `(x - m)^T A (x - m)`.
pub fn quad_form(a: &DMatrix<f64>, x: &DVector<f64>, m: &DVector<f64>) -> f64 {
    let d = x - m;
    d.dot(&(a * &d))
}
