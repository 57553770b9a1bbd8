//! Special functions used by the variational updates and Student-t densities.

use std::f64::consts::PI;

pub use statrs::function::gamma::ln_gamma;

/// Coefficients `B_2n / (2n)` of the asymptotic series, `n = 1..=10`.
const ASYMPTOTIC: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
    43867.0 / 14364.0,
    -174611.0 / 6600.0,
];

/// Digamma function for `x > 0`.
///
/// Shifts the argument up to at least 6 with `psi(x) = psi(x + 1) - 1/x` and
/// finishes with the asymptotic expansion. Returns NaN for `x <= 0`.
pub fn digamma(x: f64) -> f64 {
    if x.is_nan() || x <= 0.0 {
        return f64::NAN;
    }
    if x.is_infinite() {
        return f64::INFINITY;
    }
    let mut x = x;
    let mut shift = 0.0;
    while x < 6.0 {
        shift += 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    let mut series = 0.0;
    let mut pow = inv2;
    for c in ASYMPTOTIC {
        series += c * pow;
        pow *= inv2;
    }
    x.ln() - 0.5 / x - series - shift
}

/// `ln Gamma_D(a)`, the log multivariate gamma function.
pub fn ln_multigamma(a: f64, dim: usize) -> f64 {
    let d = dim as f64;
    let mut acc = 0.25 * d * (d - 1.0) * PI.ln();
    for i in 1..=dim {
        acc += ln_gamma(a + 0.5 * (1.0 - i as f64));
    }
    acc
}

/// `ln Γ(x + a) - ln Γ(x)` for `x > 0`, `x + a > 0`.
///
/// For large `x` the two log-gammas are huge and nearly equal, so the
/// difference is taken term by term from the Stirling series instead.
pub fn ln_gamma_ratio(x: f64, a: f64) -> f64 {
    if x < RATIO_SERIES_MIN || x + a < RATIO_SERIES_MIN {
        return ln_gamma(x + a) - ln_gamma(x);
    }
    let y = x + a;
    let tail = |z: f64| {
        let z2 = z * z;
        (1.0 / 12.0 - (1.0 / 360.0 - 1.0 / (1260.0 * z2)) / z2) / z
    };
    (x - 0.5) * (a / x).ln_1p() + a * y.ln() - a + (tail(y) - tail(x))
}

const RATIO_SERIES_MIN: f64 = 1e3;
