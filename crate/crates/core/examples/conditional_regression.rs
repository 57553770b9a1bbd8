//! Conditions a fitted mixture on a partial observation and reads off the
//! gating weights and the conditional means.
//!
//! The data are points on two lines, y = 2x and y = -x + 12, so knowing x
//! leaves two plausible values of y.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trajvgmm::predict::{condition, to_predictive_mixture};
use trajvgmm::vbgmm::{fit, rows_to_matrix, FitOptions, HyperOverrides, Hyperparameters};

fn main() -> trajvgmm::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rows: Vec<Vec<f64>> = (0..400)
        .map(|i| {
            let x: f64 = rng.random_range(0.0..8.0);
            let e: f64 = rng.random_range(-0.2..0.2);
            if i % 2 == 0 {
                vec![x, 2.0 * x + e]
            } else {
                vec![x + 20.0, -x + 12.0 + e]
            }
        })
        .collect();
    let data = rows_to_matrix(&rows)?;
    let hyper = Hyperparameters::from_data(&data, 2, &HyperOverrides::default())?;
    let model = fit(&data, 2, &hyper, &FitOptions::default())?;

    let mixture = to_predictive_mixture(&model, 1, false)?;
    for x in [3.0, 23.0, 12.0] {
        let pred = condition(&mixture, &DVector::from_element(1, x))?;
        let means: Vec<String> = pred.cond_means.iter().map(|m| format!("{:.3}", m[0])).collect();
        let gates: Vec<String> = pred.gating.iter().map(|g| format!("{g:.3}")).collect();
        println!(
            "x = {x:>4}: y_hat = {:.3}  gating [{}]  component means [{}]",
            pred.point[0],
            gates.join(", "),
            means.join(", ")
        );
    }
    Ok(())
}
