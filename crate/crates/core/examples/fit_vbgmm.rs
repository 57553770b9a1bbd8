//! Fits an over-specified mixture to three blobs. A small Dirichlet
//! concentration lets the surplus components die off.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use trajvgmm::vbgmm::{effective_components, fit, rows_to_matrix, FitOptions, HyperOverrides, Hyperparameters};

fn main() -> trajvgmm::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise = Normal::new(0.0, 0.5).unwrap();
    let centers = [[0.0, 0.0], [10.0, 0.0], [5.0, 9.0]];
    let rows: Vec<Vec<f64>> = (0..300)
        .map(|i| {
            let c = centers[i % 3];
            vec![c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)]
        })
        .collect();
    let data = rows_to_matrix(&rows)?;

    let k = 8;
    let overrides = HyperOverrides {
        alpha0: Some(1e-3),
        ..Default::default()
    };
    let hyper = Hyperparameters::from_data(&data, k, &overrides)?;
    let model = fit(&data, k, &hyper, &FitOptions::default())?;

    println!("iterations: {}  converged: {}", model.elbo_trace.len(), model.converged);
    println!("final ELBO: {:.4}", model.elbo());
    for (c, w) in model.components.iter().zip(model.weights()) {
        println!("  weight {:.4}  mean ({:>7.3}, {:>7.3})", w, c.m[0], c.m[1]);
    }
    println!("effective components: {}", effective_components(&model, 0.01));
    Ok(())
}
