//! Error and accuracy as a function of observable length, for the VGMM
//! predictor and the constant-velocity baseline.

use trajvgmm::datagen::{generate, NoiseKind, Pattern, ScenarioSpec};
use trajvgmm::eval::{sweep_observable_length, ConstantVelocity, SelectPerLength};
use trajvgmm::predict::CandidateGrid;
use trajvgmm::trajectory::{split_dataset, GridSpec, TrajectorySegment};
use trajvgmm::vbgmm::{FitOptions, HyperOverrides};

fn main() -> trajvgmm::Result<()> {
    let spec = ScenarioSpec {
        n_objects: 50,
        pattern_set: Pattern::ALL.to_vec(),
        step_length: 10.0,
        noise_kind: NoiseKind::StudentT,
        noise_scale: 2.0,
        impulse_prob: 0.0,
        seed: 8,
    };
    let segs: Vec<TrajectorySegment> = generate(&spec, 70)?.iter().map(TrajectorySegment::whole).collect();
    let (rest, test) = split_dataset(&segs, 0.2, 0)?;
    let (train, val) = split_dataset(&rest, 0.2, 1)?;

    let horizon = 5;
    let grid = GridSpec::new(0.0, 0.0, spec.step_length)?;
    let source = SelectPerLength {
        train: &train,
        validation: &val,
        candidates: CandidateGrid::new(vec![2, 4, 8], vec![1], horizon, HyperOverrides::default())?,
        opts: FitOptions::default(),
        eta_paper_exact: false,
    };
    let h_range = [1, 2, 4, 6, 8];

    println!("# vgmm");
    print!(
        "{}",
        sweep_observable_length(&source, &test, &h_range, horizon, &grid, 0)?.to_csv()
    );
    println!("# constant velocity");
    print!(
        "{}",
        sweep_observable_length(&ConstantVelocity, &test, &h_range, horizon, &grid, 0)?.to_csv()
    );
    Ok(())
}
