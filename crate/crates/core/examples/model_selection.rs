//! Grid search over component count K and history length H, scored by
//! held-out conditional log density.

use trajvgmm::datagen::{generate, NoiseKind, Pattern, ScenarioSpec};
use trajvgmm::predict::{select_model, CandidateGrid};
use trajvgmm::trajectory::{split_dataset, TrajectorySegment};
use trajvgmm::vbgmm::{FitOptions, HyperOverrides};

fn main() -> trajvgmm::Result<()> {
    let spec = ScenarioSpec {
        n_objects: 40,
        pattern_set: Pattern::ALL.to_vec(),
        step_length: 10.0,
        noise_kind: NoiseKind::Gaussian,
        noise_scale: 1.0,
        impulse_prob: 0.0,
        seed: 21,
    };
    let segs: Vec<TrajectorySegment> = generate(&spec, 60)?.iter().map(TrajectorySegment::whole).collect();
    let (train, val) = split_dataset(&segs, 0.25, 1)?;

    let grid = CandidateGrid::new(vec![1, 2, 4, 6], vec![1, 3, 5], 3, HyperOverrides::default())?;
    let sel = select_model(&train, &val, &grid, &FitOptions::default(), false)?;
    for cell in &sel.table {
        match &cell.score {
            Ok(s) => println!("K={} H={}  score {s:.4}", cell.k, cell.h),
            Err(e) => println!("K={} H={}  failed: {e}", cell.k, cell.h),
        }
    }
    println!("selected K={} H={} (score {:.4})", sel.k, sel.h, sel.score);
    Ok(())
}
