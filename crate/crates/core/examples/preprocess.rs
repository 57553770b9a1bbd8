//! Impulse-corrupted trajectories go through DBSCAN denoising and
//! gap-based segmentation.

use trajvgmm::datagen::{generate, NoiseKind, Pattern, ScenarioSpec};
use trajvgmm::preprocess::{dbscan, denoise, segment, DbscanParams, PointRole};

fn main() -> trajvgmm::Result<()> {
    let spec = ScenarioSpec {
        n_objects: 3,
        pattern_set: vec![Pattern::SCurve],
        step_length: 5.0,
        noise_kind: NoiseKind::Impulse,
        noise_scale: 3.0,
        impulse_prob: 0.08,
        seed: 3,
    };
    let params = DbscanParams::new(12.0, 3)?;
    for traj in generate(&spec, 120)? {
        let xy: Vec<[f64; 2]> = traj.points().iter().map(|p| p.xy()).collect();
        let labels = dbscan(&xy, &params);
        let count = |role| labels.iter().filter(|l| l.role == role).count();
        println!(
            "object {}: core={} edge={} noise={}",
            traj.object_id(),
            count(PointRole::Core),
            count(PointRole::Edge),
            count(PointRole::Noise)
        );

        let clean = denoise(&traj, &params)?;
        for seg in segment(&clean, &params)? {
            let p = seg.points();
            println!(
                "  segment {}: t={}..{} ({} points)",
                seg.index,
                p[0].timestamp,
                p[p.len() - 1].timestamp,
                p.len()
            );
        }
    }
    Ok(())
}
