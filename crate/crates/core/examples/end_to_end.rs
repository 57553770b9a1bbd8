//! Generate, preprocess, train, save, reload and evaluate against the
//! constant-velocity baseline.

use trajvgmm::datagen::{generate, NoiseKind, Pattern, ScenarioSpec};
use trajvgmm::eval::{build_test_cases, evaluate, ConstantVelocity};
use trajvgmm::persist::ModelDocument;
use trajvgmm::predict::{select_model, CandidateGrid};
use trajvgmm::preprocess::{preprocess_all, DbscanParams};
use trajvgmm::trajectory::{split_dataset, GridSpec, TrajectorySegment};
use trajvgmm::vbgmm::{FitOptions, HyperOverrides};

fn main() -> trajvgmm::Result<()> {
    let spec = ScenarioSpec {
        n_objects: 60,
        pattern_set: Pattern::ALL.to_vec(),
        step_length: 10.0,
        noise_kind: NoiseKind::StudentT,
        noise_scale: 2.0,
        impulse_prob: 0.0,
        seed: 2024,
    };
    let trajs = generate(&spec, 80)?;
    let (train_trajs, test_trajs) = split_dataset(&trajs, 0.2, 0)?;

    let params = DbscanParams::new(3.0 * spec.step_length, 3)?;
    let segs = preprocess_all(&train_trajs, &params, &params);
    let (train, val) = split_dataset(&segs, 0.2, 1)?;
    println!("{} training segments, {} validation segments", train.len(), val.len());

    let grid = CandidateGrid::new(vec![1, 2, 4, 8], vec![2, 4, 6], 5, HyperOverrides::default())?;
    let sel = select_model(&train, &val, &grid, &FitOptions::default(), false)?;
    println!("selected K={} H={} score={:.4}", sel.k, sel.h, sel.score);

    let path = std::env::temp_dir().join("trajvgmm_end_to_end.json");
    ModelDocument::from_predictor(&sel.predictor, Some(sel.score)).save(&path)?;
    let predictor = ModelDocument::load(&path)?.to_predictor()?;
    println!("model written to {}", path.display());

    let test: Vec<TrajectorySegment> = test_trajs.iter().map(TrajectorySegment::whole).collect();
    let cases = build_test_cases(&test, predictor.history_len, predictor.horizon);
    let cells = GridSpec::new(0.0, 0.0, spec.step_length)?;
    let (e_model, a_model) = evaluate(&predictor, &cases, &cells)?;
    let (e_cv, a_cv) = evaluate(&ConstantVelocity, &cases, &cells)?;
    println!("{} test windows", cases.len());
    println!("vgmm               error {e_model:>8.3} m  accuracy {a_model:.3}");
    println!("constant velocity  error {e_cv:>8.3} m  accuracy {a_cv:.3}");
    Ok(())
}
