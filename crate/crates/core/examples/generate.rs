//! Generates a small scenario and writes it as trajectory CSV to stdout.
//!
//!     cargo run --example generate > trajectories.csv

use trajvgmm::datagen::{generate, NoiseKind, Pattern, ScenarioSpec};
use trajvgmm::io::write_trajectories;

fn main() -> trajvgmm::Result<()> {
    let spec = ScenarioSpec {
        n_objects: 8,
        pattern_set: Pattern::ALL.to_vec(),
        step_length: 10.0,
        noise_kind: NoiseKind::Impulse,
        noise_scale: 2.0,
        impulse_prob: 0.05,
        seed: 42,
    };
    let trajs = generate(&spec, 50)?;
    for t in &trajs {
        let p = t.points();
        eprintln!(
            "object {:>2}: {} points, start ({:.1}, {:.1})",
            t.object_id(),
            p.len(),
            p[0].x,
            p[0].y
        );
    }
    write_trajectories(std::io::stdout().lock(), &trajs)
}
