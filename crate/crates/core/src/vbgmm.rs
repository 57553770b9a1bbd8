//! Variational Bayesian Gaussian mixture with a Dirichlet prior on the mixing
//! weights and a Normal-Wishart prior on each component's mean and precision.
//!
//! Fitting alternates a responsibility update (E-step) with closed-form
//! posterior updates (M-step) and records the evidence lower bound after every
//! M-step. With exact coordinate-ascent updates the bound never decreases.

use std::f64::consts::{LN_2, PI};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, ln_det, quad_form, spd_inverse, symmetrize};
use crate::preprocess::kmeans;
use crate::special::{digamma, ln_gamma, ln_multigamma};

/// Below this effective count a component is treated as empty.
pub const EMPTY_COMPONENT: f64 = 1e-12;

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 200;

/// Prior `Dir(alpha0) x prod_k N(mu_k | m0, (beta0 Lambda_k)^-1) W(Lambda_k | w0, v0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters {
    pub alpha0: f64,
    pub beta0: f64,
    pub m0: DVector<f64>,
    /// Wishart scale matrix.
    pub w0: DMatrix<f64>,
    /// Wishart degrees of freedom.
    pub v0: f64,
}

/// Optional overrides applied on top of the data-driven default prior.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HyperOverrides {
    pub alpha0: Option<f64>,
    pub beta0: Option<f64>,
    pub v0: Option<f64>,
}

impl Hyperparameters {
    pub fn new(alpha0: f64, beta0: f64, m0: DVector<f64>, w0: DMatrix<f64>, v0: f64) -> Result<Self> {
        let d = m0.len();
        if d == 0 {
            return Err(Error::invalid("m0", "dimension must be >= 1"));
        }
        if !(alpha0 > 0.0 && alpha0.is_finite()) {
            return Err(Error::invalid("alpha0", format!("must be > 0, got {alpha0}")));
        }
        if !(beta0 > 0.0 && beta0.is_finite()) {
            return Err(Error::invalid("beta0", format!("must be > 0, got {beta0}")));
        }
        if !(v0 > d as f64 - 1.0 && v0.is_finite()) {
            return Err(Error::invalid("v0", format!("must exceed D - 1 = {}, got {v0}", d - 1)));
        }
        if w0.nrows() != d || w0.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: w0.nrows(),
            });
        }
        if m0.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("m0", "must be finite"));
        }
        if (&w0 - w0.transpose()).abs().max() > 1e-12 * w0.abs().max().max(1.0) {
            return Err(Error::invalid("w0", "must be symmetric"));
        }
        if nalgebra::Cholesky::new(w0.clone()).is_none() {
            return Err(Error::invalid("w0", "must be positive definite"));
        }
        Ok(Self {
            alpha0,
            beta0,
            m0,
            w0,
            v0,
        })
    }

    /// Weakly informative prior scaled to the data.
    ///
    /// `alpha0 = 1/K`, `beta0 = 1`, `m0` is the data mean, `v0 = D + 2`, and
    /// `w0 = cov^-1 / v0` so that the prior expected precision `v0 * w0` equals
    /// the inverse data covariance (ridged so constant data stays invertible).
    pub fn from_data(data: &DMatrix<f64>, k: usize, overrides: &HyperOverrides) -> Result<Self> {
        let (n, d) = data.shape();
        if n == 0 || d == 0 {
            return Err(Error::EmptyInput);
        }
        let mean = data.row_mean().transpose();
        let mut cov = DMatrix::zeros(d, d);
        for row in data.row_iter() {
            let diff = row.transpose() - &mean;
            cov += &diff * diff.transpose();
        }
        cov /= n as f64;
        let ridge = 1e-6 * cov.trace() / d as f64 + 1e-9;
        for i in 0..d {
            cov[(i, i)] += ridge;
        }
        let v0 = overrides.v0.unwrap_or(d as f64 + 2.0);
        let w0 = spd_inverse(&cov, "data covariance")? / v0;
        Self::new(
            overrides.alpha0.unwrap_or(1.0 / k.max(1) as f64),
            overrides.beta0.unwrap_or(1.0),
            mean,
            w0,
            v0,
        )
    }

    pub fn dim(&self) -> usize {
        self.m0.len()
    }
}

/// Expected component memberships, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    pub r: DMatrix<f64>,
}

impl Responsibilities {
    pub fn n(&self) -> usize {
        self.r.nrows()
    }

    pub fn k(&self) -> usize {
        self.r.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    pub nk: Vec<f64>,
    pub xbar: Vec<DVector<f64>>,
    pub s: Vec<DMatrix<f64>>,
}

/// Variational posterior of one component: `q(pi_k)` shares `alpha`,
/// `q(mu_k, Lambda_k) = N(m, (beta Lambda)^-1) W(w, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentPosterior {
    pub alpha: f64,
    pub beta: f64,
    pub m: DVector<f64>,
    pub w: DMatrix<f64>,
    pub v: f64,
}

impl ComponentPosterior {
    fn prior(hyper: &Hyperparameters) -> Self {
        Self {
            alpha: hyper.alpha0,
            beta: hyper.beta0,
            m: hyper.m0.clone(),
            w: hyper.w0.clone(),
            v: hyper.v0,
        }
    }

    /// Posterior mean of the precision, `v * w`.
    pub fn expected_precision(&self) -> DMatrix<f64> {
        &self.w * self.v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VbGmmModel {
    pub k: usize,
    pub d: usize,
    pub hyper: Hyperparameters,
    pub components: Vec<ComponentPosterior>,
    pub elbo_trace: Vec<f64>,
    pub converged: bool,
    pub seed: u64,
    /// Number of observations the model was fitted on.
    pub n_obs: usize,
}

impl VbGmmModel {
    pub fn elbo(&self) -> f64 {
        self.elbo_trace.last().copied().unwrap_or(f64::NEG_INFINITY)
    }

    /// Expected mixing weights `alpha_k / sum_j alpha_j`.
    pub fn weights(&self) -> Vec<f64> {
        let total: f64 = self.components.iter().map(|c| c.alpha).sum();
        self.components.iter().map(|c| c.alpha / total).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Relative ELBO change that counts as converged.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
        }
    }
}

/// Per-component expectations reused by the E-step and the bound.
struct Expectations {
    ln_pi: f64,
    ln_lambda: f64,
    chol_w: DMatrix<f64>,
    ln_det_w: f64,
}

fn expectations(components: &[ComponentPosterior]) -> Result<Vec<Expectations>> {
    let alpha_sum: f64 = components.iter().map(|c| c.alpha).sum();
    let psi_sum = digamma(alpha_sum);
    components
        .iter()
        .map(|c| {
            let d = c.m.len();
            let chol = cholesky(&c.w, "component scale matrix")?;
            let ln_det_w = ln_det(&chol);
            let ln_lambda =
                (1..=d).map(|i| digamma(0.5 * (c.v + 1.0 - i as f64))).sum::<f64>() + d as f64 * LN_2 + ln_det_w;
            Ok(Expectations {
                ln_pi: digamma(c.alpha) - psi_sum,
                ln_lambda,
                chol_w: chol.unpack(),
                ln_det_w,
            })
        })
        .collect()
}

/// `|L^T (x - m)|^2` for a lower Cholesky factor `L`, i.e. `(x-m)^T L L^T (x-m)`.
fn chol_quad(l: &DMatrix<f64>, x: &[f64], m: &DVector<f64>, buf: &mut [f64]) -> f64 {
    let d = m.len();
    for i in 0..d {
        buf[i] = x[i] - m[i];
    }
    let mut acc = 0.0;
    for j in 0..d {
        let mut s = 0.0;
        for i in j..d {
            s += l[(i, j)] * buf[i];
        }
        acc += s * s;
    }
    acc
}

fn check_data(data: &DMatrix<f64>, d: usize) -> Result<()> {
    if data.nrows() == 0 {
        return Err(Error::EmptyInput);
    }
    if data.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: data.ncols(),
        });
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("data", "entries must be finite"));
    }
    Ok(())
}

/// Hard one-hot responsibilities from a seeded k-means partition.
pub fn init_responsibilities(data: &DMatrix<f64>, k: usize, seed: u64) -> Result<Responsibilities> {
    let rows: Vec<Vec<f64>> = data.row_iter().map(|r| r.iter().copied().collect()).collect();
    let km = kmeans(&rows, k, seed, 100)?;
    let mut r = DMatrix::zeros(data.nrows(), k);
    for (n, &a) in km.assignments.iter().enumerate() {
        r[(n, a)] = 1.0;
    }
    Ok(Responsibilities { r })
}

/// Responsibility update.
///
/// ```text
/// ln rho_nk = E[ln pi_k] + E[ln |Lambda_k|]/2 - (D/2) ln 2pi
///             - (D/beta_k + v_k (x_n - m_k)^T w_k (x_n - m_k))/2
/// ```
/// normalised per row with log-sum-exp.
pub fn e_step(data: &DMatrix<f64>, components: &[ComponentPosterior]) -> Result<Responsibilities> {
    let k = components.len();
    let d = components.first().map(|c| c.m.len()).ok_or(Error::EmptyInput)?;
    check_data(data, d)?;
    let ex = expectations(components)?;
    let n = data.nrows();
    let df = d as f64;

    let mut r = DMatrix::zeros(n, k);
    let mut x = vec![0.0; d];
    let mut buf = vec![0.0; d];
    let mut ln_rho = vec![0.0; k];
    for row in 0..n {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = data[(row, i)];
        }
        for (j, (c, e)) in components.iter().zip(&ex).enumerate() {
            let maha = chol_quad(&e.chol_w, &x, &c.m, &mut buf);
            ln_rho[j] = e.ln_pi + 0.5 * e.ln_lambda - 0.5 * df * (2.0 * PI).ln() - 0.5 * (df / c.beta + c.v * maha);
        }
        let max = ln_rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() || ln_rho.iter().any(|v| v.is_nan()) {
            return Err(Error::NumericalFailure(format!(
                "non-finite log responsibility at row {row}"
            )));
        }
        let total: f64 = ln_rho.iter().map(|v| (v - max).exp()).sum();
        let log_norm = max + total.ln();
        for j in 0..k {
            r[(row, j)] = (ln_rho[j] - log_norm).exp();
        }
    }
    Ok(Responsibilities { r })
}

fn sufficient_stats(data: &DMatrix<f64>, r: &Responsibilities, hyper: &Hyperparameters) -> SufficientStats {
    let d = hyper.dim();
    let k = r.k();
    let mut nk = vec![0.0; k];
    let mut xbar = Vec::with_capacity(k);
    let mut s = Vec::with_capacity(k);
    #[allow(clippy::needless_range_loop)]
    for j in 0..k {
        let col = r.r.column(j);
        let n_j: f64 = col.iter().sum();
        if n_j < EMPTY_COMPONENT {
            xbar.push(hyper.m0.clone());
            s.push(DMatrix::zeros(d, d));
            continue;
        }
        let mean = data.tr_mul(&col) / n_j;
        let mut cov = DMatrix::zeros(d, d);
        for (row, &w) in data.row_iter().zip(col.iter()) {
            if w == 0.0 {
                continue;
            }
            let diff = row.transpose() - &mean;
            cov.ger(w, &diff, &diff, 1.0);
        }
        cov /= n_j;
        symmetrize(&mut cov);
        nk[j] = n_j;
        xbar.push(mean);
        s.push(cov);
    }
    SufficientStats { nk, xbar, s }
}

/// Closed-form posterior update given responsibilities.
pub fn m_step(
    data: &DMatrix<f64>,
    r: &Responsibilities,
    hyper: &Hyperparameters,
) -> Result<(SufficientStats, Vec<ComponentPosterior>)> {
    check_data(data, hyper.dim())?;
    if r.n() != data.nrows() {
        return Err(Error::DimensionMismatch {
            expected: data.nrows(),
            got: r.n(),
        });
    }
    let stats = sufficient_stats(data, r, hyper);
    let w0_inv = spd_inverse(&hyper.w0, "prior scale matrix")?;
    let mut components = Vec::with_capacity(r.k());
    for j in 0..r.k() {
        let n_j = stats.nk[j];
        if n_j == 0.0 {
            components.push(ComponentPosterior::prior(hyper));
            continue;
        }
        let beta = hyper.beta0 + n_j;
        let m = (&hyper.m0 * hyper.beta0 + &stats.xbar[j] * n_j) / beta;
        let dm = &stats.xbar[j] - &hyper.m0;
        let mut w_inv = &w0_inv + &stats.s[j] * n_j + (&dm * dm.transpose()) * (hyper.beta0 * n_j / beta);
        symmetrize(&mut w_inv);
        let w = spd_inverse(&w_inv, "posterior scale matrix")?;
        components.push(ComponentPosterior {
            alpha: hyper.alpha0 + n_j,
            beta,
            m,
            w,
            v: hyper.v0 + n_j,
        });
    }
    Ok((stats, components))
}

/// `ln B(W, v)`, the Wishart log normaliser.
fn ln_wishart_norm(ln_det_w: f64, v: f64, d: usize) -> f64 {
    -0.5 * v * ln_det_w - 0.5 * v * d as f64 * LN_2 - ln_multigamma(0.5 * v, d)
}

fn ln_dirichlet_norm(alphas: impl Iterator<Item = f64> + Clone) -> f64 {
    ln_gamma(alphas.clone().sum()) - alphas.map(ln_gamma).sum::<f64>()
}

/// Evidence lower bound for the current factorised posterior.
pub fn elbo(
    data: &DMatrix<f64>,
    r: &Responsibilities,
    hyper: &Hyperparameters,
    components: &[ComponentPosterior],
    stats: &SufficientStats,
) -> Result<f64> {
    let d = hyper.dim();
    check_data(data, d)?;
    let df = d as f64;
    let k = components.len();
    let ex = expectations(components)?;
    let w0_inv = spd_inverse(&hyper.w0, "prior scale matrix")?;
    let ln_det_w0 = ln_det(&cholesky(&hyper.w0, "prior scale matrix")?);
    let ln_2pi = (2.0 * PI).ln();

    let mut ln_p_x = 0.0;
    let mut ln_p_z = 0.0;
    let mut ln_p_mu_lambda = 0.0;
    let mut ln_q_mu_lambda = 0.0;
    let mut sum_ln_pi = 0.0;
    let mut sum_ln_lambda = 0.0;
    let mut ln_q_pi = 0.0;

    for j in 0..k {
        let c = &components[j];
        let e = &ex[j];
        let n_j = stats.nk[j];
        if n_j > 0.0 {
            let trace_sw = (&stats.s[j] * &c.w).trace();
            let maha = quad_form(&c.w, &stats.xbar[j], &c.m);
            ln_p_x += 0.5 * n_j * (e.ln_lambda - df / c.beta - c.v * trace_sw - c.v * maha - df * ln_2pi);
        }
        ln_p_z += n_j * e.ln_pi;
        sum_ln_pi += e.ln_pi;
        sum_ln_lambda += e.ln_lambda;
        ln_q_pi += (c.alpha - 1.0) * e.ln_pi;

        let maha0 = quad_form(&c.w, &c.m, &hyper.m0);
        ln_p_mu_lambda += 0.5
            * (df * (hyper.beta0 / (2.0 * PI)).ln() + e.ln_lambda
                - df * hyper.beta0 / c.beta
                - hyper.beta0 * c.v * maha0)
            - 0.5 * c.v * (&w0_inv * &c.w).trace();

        let entropy = -ln_wishart_norm(e.ln_det_w, c.v, d) - 0.5 * (c.v - df - 1.0) * e.ln_lambda + 0.5 * c.v * df;
        ln_q_mu_lambda += 0.5 * e.ln_lambda + 0.5 * df * (c.beta / (2.0 * PI)).ln() - 0.5 * df - entropy;
    }
    ln_p_mu_lambda += k as f64 * ln_wishart_norm(ln_det_w0, hyper.v0, d) + 0.5 * (hyper.v0 - df - 1.0) * sum_ln_lambda;

    let ln_p_pi = ln_dirichlet_norm(std::iter::repeat_n(hyper.alpha0, k)) + (hyper.alpha0 - 1.0) * sum_ln_pi;
    ln_q_pi += ln_dirichlet_norm(components.iter().map(|c| c.alpha));

    let ln_q_z: f64 = r.r.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum();

    let bound = ln_p_x + ln_p_z + ln_p_pi + ln_p_mu_lambda - ln_q_z - ln_q_pi - ln_q_mu_lambda;
    if !bound.is_finite() {
        return Err(Error::NumericalFailure("evidence lower bound is not finite".into()));
    }
    Ok(bound)
}

/// Fits a `k`-component variational mixture to the rows of `data`.
///
/// Starts from k-means responsibilities and alternates M- and E-steps until the
/// relative change of the bound drops below `opts.tol` or `opts.max_iter`
/// M-steps have run. Deterministic for a given seed.
pub fn fit(data: &DMatrix<f64>, k: usize, hyper: &Hyperparameters, opts: &FitOptions) -> Result<VbGmmModel> {
    check_data(data, hyper.dim())?;
    if k == 0 {
        return Err(Error::invalid("K", "must be >= 1"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tol", "must be > 0"));
    }
    if opts.max_iter == 0 {
        return Err(Error::invalid("max_iter", "must be >= 1"));
    }
    let mut r = init_responsibilities(data, k, opts.seed)?;
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut components;
    loop {
        let (stats, comps) = m_step(data, &r, hyper)?;
        let bound = elbo(data, &r, hyper, &comps, &stats)?;
        components = comps;
        let prev = trace.last().copied();
        trace.push(bound);
        if let Some(prev) = prev {
            if (bound - prev).abs() < opts.tol * bound.abs() {
                converged = true;
                break;
            }
        }
        if trace.len() >= opts.max_iter {
            break;
        }
        r = e_step(data, &components)?;
    }
    Ok(VbGmmModel {
        k,
        d: hyper.dim(),
        hyper: hyper.clone(),
        components,
        elbo_trace: trace,
        converged,
        seed: opts.seed,
        n_obs: data.nrows(),
    })
}

/// Number of components whose expected share of the data reaches `weight_floor`.
pub fn effective_components(model: &VbGmmModel, weight_floor: f64) -> usize {
    let n = model.n_obs.max(1) as f64;
    model
        .components
        .iter()
        .filter(|c| (c.alpha - model.hyper.alpha0) / n >= weight_floor)
        .count()
}

/// Stacks vectors as the rows of a matrix.
pub fn rows_to_matrix<V: AsRef<[f64]>>(rows: &[V]) -> Result<DMatrix<f64>> {
    let first = rows.first().ok_or(Error::EmptyInput)?;
    let d = first.as_ref().len();
    if let Some(bad) = rows.iter().find(|r| r.as_ref().len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: bad.as_ref().len(),
        });
    }
    Ok(DMatrix::from_fn(rows.len(), d, |i, j| rows[i].as_ref()[j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn blobs(centers: &[[f64; 2]], per: usize, spread: f64, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        for c in centers {
            for _ in 0..per {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                rows.push([c[0] + spread * a, c[1] + spread * b]);
            }
        }
        rows_to_matrix(&rows).unwrap()
    }

    fn unit_prior(d: usize) -> Hyperparameters {
        Hyperparameters::new(1.0, 1.0, DVector::zeros(d), DMatrix::identity(d, d), d as f64 + 1.0).unwrap()
    }

    #[test]
    fn hyperparameter_validation() {
        let m0 = DVector::zeros(2);
        let eye = DMatrix::identity(2, 2);
        assert!(Hyperparameters::new(0.0, 1.0, m0.clone(), eye.clone(), 3.0).is_err());
        assert!(Hyperparameters::new(1.0, -1.0, m0.clone(), eye.clone(), 3.0).is_err());
        assert!(Hyperparameters::new(1.0, 1.0, m0.clone(), eye.clone(), 1.0).is_err());
        let not_pd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(Hyperparameters::new(1.0, 1.0, m0.clone(), not_pd, 3.0).is_err());
        assert!(Hyperparameters::new(1.0, 1.0, m0, eye, 1.5).is_ok());
    }

    #[test]
    fn default_prior_matches_data_scale() {
        let data = blobs(&[[0.0, 0.0], [4.0, 1.0]], 30, 0.7, 3);
        let h = Hyperparameters::from_data(&data, 4, &HyperOverrides::default()).unwrap();
        assert_eq!(h.alpha0, 0.25);
        assert_eq!(h.v0, 4.0);
        assert!((h.m0[0] - data.column(0).mean()).abs() < 1e-12);
        // v0 * w0 is the (ridged) inverse covariance.
        let var0 = data.column(0).variance();
        let prec = (&h.w0 * h.v0).try_inverse().unwrap();
        assert!((prec[(0, 0)] - var0).abs() < 1e-4 * var0);
        let constant = DMatrix::from_element(5, 2, 3.0);
        assert!(Hyperparameters::from_data(&constant, 2, &HyperOverrides::default()).is_ok());
    }

    #[test]
    fn init_is_one_hot_by_blob() {
        let data = blobs(&[[0.0, 0.0], [50.0, 50.0]], 10, 0.5, 1);
        let r = init_responsibilities(&data, 2, 4).unwrap();
        let first = if r.r[(0, 0)] == 1.0 { 0 } else { 1 };
        for n in 0..20 {
            let expect = if n < 10 { first } else { 1 - first };
            assert_eq!(r.r[(n, expect)], 1.0);
            assert_eq!(r.r[(n, 1 - expect)], 0.0);
        }
        let r1 = init_responsibilities(&data, 1, 4).unwrap();
        assert!(r1.r.iter().all(|&v| v == 1.0));
        let small = data.rows(0, 5).into_owned();
        let rn = init_responsibilities(&small, 5, 4).unwrap();
        for j in 0..5 {
            assert_eq!(rn.r.column(j).sum(), 1.0);
            assert_eq!(rn.r.row(j).sum(), 1.0);
        }
        assert!(matches!(
            init_responsibilities(&small, 6, 0),
            Err(Error::KTooLarge { .. })
        ));
    }

    #[test]
    fn e_step_single_and_symmetric_components() {
        let data = blobs(&[[1.0, -1.0]], 7, 2.0, 9);
        let h = unit_prior(2);
        let r = Responsibilities {
            r: DMatrix::from_element(7, 1, 1.0),
        };
        let (_, comps) = m_step(&data, &r, &h).unwrap();
        let r1 = e_step(&data, &comps).unwrap();
        assert!(r1.r.iter().all(|&v| v == 1.0));
        let twins = vec![comps[0].clone(), comps[0].clone()];
        let r2 = e_step(&data, &twins).unwrap();
        assert!(r2.r.iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    // Straight-line evaluation of the responsibility formula, no log-sum-exp.
    fn direct_responsibilities(data: &DMatrix<f64>, comps: &[ComponentPosterior]) -> DMatrix<f64> {
        let d = data.ncols() as f64;
        let alpha_hat: f64 = comps.iter().map(|c| c.alpha).sum();
        let mut out = DMatrix::zeros(data.nrows(), comps.len());
        for n in 0..data.nrows() {
            let x = data.row(n).transpose();
            let rho: Vec<f64> = comps
                .iter()
                .map(|c| {
                    let ln_pi = statrs::function::gamma::digamma(c.alpha) - statrs::function::gamma::digamma(alpha_hat);
                    let ln_lambda: f64 = (1..=data.ncols())
                        .map(|i| statrs::function::gamma::digamma((c.v + 1.0 - i as f64) / 2.0))
                        .sum::<f64>()
                        + d * 2f64.ln()
                        + c.w.determinant().ln();
                    let diff = &x - &c.m;
                    let maha = (diff.transpose() * &c.w * &diff)[(0, 0)];
                    (ln_pi + 0.5 * ln_lambda - 0.5 * d * (2.0 * PI).ln() - 0.5 * (d / c.beta + c.v * maha)).exp()
                })
                .collect();
            let total: f64 = rho.iter().sum();
            for (k, v) in rho.iter().enumerate() {
                out[(n, k)] = v / total;
            }
        }
        out
    }

    #[test]
    fn e_step_matches_direct_formula() {
        let data = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.5, -0.5, 2.0]);
        let comps = vec![
            ComponentPosterior {
                alpha: 2.5,
                beta: 3.0,
                m: DVector::from_vec(vec![0.2, 0.1]),
                w: DMatrix::from_row_slice(2, 2, &[0.8, 0.1, 0.1, 0.5]),
                v: 4.0,
            },
            ComponentPosterior {
                alpha: 1.5,
                beta: 2.0,
                m: DVector::from_vec(vec![-0.3, 1.5]),
                w: DMatrix::from_row_slice(2, 2, &[0.4, -0.05, -0.05, 0.9]),
                v: 3.5,
            },
        ];
        let ours = e_step(&data, &comps).unwrap();
        let oracle = direct_responsibilities(&data, &comps);
        assert!((ours.r - oracle).abs().max() < 1e-12);
    }

    #[test]
    fn m_step_hand_fixture() {
        let data = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 2.0, 0.0]);
        let r = Responsibilities {
            r: DMatrix::from_element(2, 1, 1.0),
        };
        let h = Hyperparameters::new(1.0, 1.0, DVector::zeros(2), DMatrix::identity(2, 2), 2.0).unwrap();
        let (stats, comps) = m_step(&data, &r, &h).unwrap();
        assert_eq!(stats.nk, vec![2.0]);
        assert_eq!(stats.xbar[0].as_slice(), &[1.0, 0.0]);
        assert_eq!(stats.s[0], DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        let c = &comps[0];
        assert_eq!((c.alpha, c.beta, c.v), (3.0, 3.0, 4.0));
        assert!((c.m[0] - 2.0 / 3.0).abs() < 1e-12 && c.m[1].abs() < 1e-12);
        let w_inv = c.w.clone().try_inverse().unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[11.0 / 3.0, 0.0, 0.0, 1.0]);
        assert!((w_inv - expected).abs().max() < 1e-12);
    }

    #[test]
    fn empty_component_keeps_prior() {
        let data = blobs(&[[0.0, 0.0]], 6, 1.0, 2);
        let mut r = DMatrix::zeros(6, 2);
        r.column_mut(0).fill(1.0);
        let h = unit_prior(2);
        let (stats, comps) = m_step(&data, &Responsibilities { r }, &h).unwrap();
        assert_eq!(stats.nk[1], 0.0);
        assert_eq!(comps[1], ComponentPosterior::prior(&h));
    }

    #[test]
    fn duplicated_rows_with_halved_weights() {
        let data = blobs(&[[0.0, 0.0], [3.0, 3.0]], 5, 1.0, 5);
        let h = unit_prior(2);
        let r = init_responsibilities(&data, 2, 1).unwrap();
        let (_, a) = m_step(&data, &r, &h).unwrap();
        let doubled = DMatrix::from_fn(20, 2, |i, j| data[(i % 10, j)]);
        let r2 = DMatrix::from_fn(20, 2, |i, j| 0.5 * r.r[(i % 10, j)]);
        let (_, b) = m_step(&doubled, &Responsibilities { r: r2 }, &h).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.alpha - y.alpha).abs() < 1e-12);
            assert!((&x.m - &y.m).abs().max() < 1e-12);
            assert!((&x.w - &y.w).abs().max() < 1e-12);
        }
    }

    #[test]
    fn fit_is_deterministic_and_monotone() {
        let data = blobs(&[[0.0, 0.0], [5.0, 0.0], [0.0, 5.0]], 20, 0.8, 8);
        let h = Hyperparameters::from_data(&data, 4, &HyperOverrides::default()).unwrap();
        let opts = FitOptions {
            tol: 1e-10,
            max_iter: 300,
            seed: 3,
        };
        let a = fit(&data, 4, &h, &opts).unwrap();
        let b = fit(&data, 4, &h, &opts).unwrap();
        assert_eq!(a.elbo_trace, b.elbo_trace);
        for w in a.elbo_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-8);
        }
        assert!(a.converged);
    }

    #[test]
    fn extra_cycle_after_convergence_is_stationary() {
        let data = blobs(&[[0.0, 0.0], [6.0, 1.0]], 25, 1.0, 21);
        let h = Hyperparameters::from_data(&data, 2, &HyperOverrides::default()).unwrap();
        let model = fit(
            &data,
            2,
            &h,
            &FitOptions {
                tol: 1e-12,
                max_iter: 500,
                seed: 0,
            },
        )
        .unwrap();
        let r = e_step(&data, &model.components).unwrap();
        let (stats, comps) = m_step(&data, &r, &h).unwrap();
        let again = elbo(&data, &r, &h, &comps, &stats).unwrap();
        assert!((again - model.elbo()).abs() < 1e-8 * model.elbo().abs());
    }

    #[test]
    fn pruning_and_floor() {
        let data = blobs(&[[0.0, 0.0], [20.0, 0.0], [10.0, 17.0]], 60, 1.0, 12);
        let h = Hyperparameters::from_data(
            &data,
            8,
            &HyperOverrides {
                alpha0: Some(1e-3),
                ..Default::default()
            },
        )
        .unwrap();
        let model = fit(&data, 8, &h, &FitOptions::default()).unwrap();
        assert_eq!(effective_components(&model, 0.01), 3);
        assert_eq!(effective_components(&model, 0.0), 8);
        let one = fit(&data, 1, &h, &FitOptions::default()).unwrap();
        assert_eq!(effective_components(&one, 0.01), 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let data = blobs(&[[0.0, 0.0]], 3, 1.0, 0);
        let h = unit_prior(2);
        assert!(fit(&data, 4, &h, &FitOptions::default()).is_err());
        assert!(fit(&data, 0, &h, &FitOptions::default()).is_err());
        let bad_tol = FitOptions {
            tol: 0.0,
            ..Default::default()
        };
        assert!(fit(&data, 1, &h, &bad_tol).is_err());
        assert!(fit(&data, 1, &unit_prior(3), &FitOptions::default()).is_err());
    }
}
