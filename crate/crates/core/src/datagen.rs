//! Synthetic vehicle trajectories with Gaussian, heavy-tailed or impulsive
//! position noise.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{validate_trajectory, TrackPoint, Trajectory};

pub const TURN_RATE_DEG: f64 = 3.0;
pub const STUDENT_T_DOF: f64 = 3.0;
pub const IMPULSE_MAX_FACTOR: f64 = 20.0;
const SCURVE_AMPLITUDE_DEG: f64 = 30.0;
const SCURVE_PERIOD: f64 = 40.0;
/// Step vectors are rounded to this lattice so noiseless paths are exact.
const LATTICE: f64 = 1.0 / (1u64 << 24) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pattern {
    Straight,
    LeftTurn,
    RightTurn,
    SCurve,
}

impl Pattern {
    pub const ALL: [Pattern; 4] = [
        Pattern::Straight,
        Pattern::LeftTurn,
        Pattern::RightTurn,
        Pattern::SCurve,
    ];

    fn heading(self, initial: f64, step: usize) -> f64 {
        let t = step as f64;
        let turn = TURN_RATE_DEG.to_radians();
        match self {
            Pattern::Straight => initial,
            Pattern::LeftTurn => initial + t * turn,
            Pattern::RightTurn => initial - t * turn,
            Pattern::SCurve => initial + SCURVE_AMPLITUDE_DEG.to_radians() * (TAU * t / SCURVE_PERIOD).sin(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseKind {
    Gaussian,
    StudentT,
    /// Clean positions, except that with probability `impulse_prob` a point is
    /// displaced by up to `20 * noise_scale` in a uniform direction.
    Impulse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub n_objects: usize,
    pub pattern_set: Vec<Pattern>,
    pub step_length: f64,
    pub noise_kind: NoiseKind,
    pub noise_scale: f64,
    #[serde(default)]
    pub impulse_prob: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_objects == 0 {
            return Err(Error::invalid("n_objects", "must be >= 1"));
        }
        if self.pattern_set.is_empty() {
            return Err(Error::invalid("pattern_set", "must name at least one pattern"));
        }
        if !(self.step_length > 0.0 && self.step_length.is_finite()) {
            return Err(Error::invalid("step_length", "must be > 0"));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::invalid("noise_scale", "must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.impulse_prob) {
            return Err(Error::invalid("impulse_prob", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

fn quantize(v: f64) -> f64 {
    (v / LATTICE).round() * LATTICE
}

/// Generates one trajectory per object with unit-spaced timestamps.
///
/// Every random draw happens regardless of `noise_scale`, so two specs that
/// differ only in noise scale share their clean paths.
pub fn generate(spec: &ScenarioSpec, points_per_traj: usize) -> Result<Vec<Trajectory>> {
    spec.validate()?;
    if points_per_traj < 2 {
        return Err(Error::invalid("points_per_traj", "must be >= 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let student = StudentT::new(STUDENT_T_DOF).expect("positive dof");
    let mut out = Vec::with_capacity(spec.n_objects);
    for obj in 0..spec.n_objects {
        let pattern = spec.pattern_set[rng.random_range(0..spec.pattern_set.len())];
        let mut x = rng.random_range(0..1000) as f64;
        let mut y = rng.random_range(0..1000) as f64;
        let initial = rng.random_range(0.0..TAU);
        let id = obj.to_string();

        let mut points = Vec::with_capacity(points_per_traj);
        for t in 0..points_per_traj {
            let (nx, ny) = match spec.noise_kind {
                NoiseKind::Gaussian => {
                    let a: f64 = rng.sample(StandardNormal);
                    let b: f64 = rng.sample(StandardNormal);
                    (a * spec.noise_scale, b * spec.noise_scale)
                }
                NoiseKind::StudentT => (
                    student.sample(&mut rng) * spec.noise_scale,
                    student.sample(&mut rng) * spec.noise_scale,
                ),
                NoiseKind::Impulse => {
                    let hit = rng.random::<f64>() < spec.impulse_prob;
                    let angle = rng.random_range(0.0..2.0 * PI);
                    let mag = rng.random::<f64>() * IMPULSE_MAX_FACTOR * spec.noise_scale;
                    if hit {
                        (mag * angle.cos(), mag * angle.sin())
                    } else {
                        (0.0, 0.0)
                    }
                }
            };
            points.push(TrackPoint::new(id.clone(), t as f64, x + nx, y + ny));

            let heading = pattern.heading(initial, t);
            x += quantize(spec.step_length * heading.cos());
            y += quantize(spec.step_length * heading.sin());
        }
        out.push(validate_trajectory(points)?);
    }
    Ok(out)
}
