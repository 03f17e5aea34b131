//! Aiming (α) decisions replayed against the simulated terrain.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Position, SensorKind};
use crate::models::{alpha_decide, AlphaPolicy, ModelError};
use crate::rng::Rng;
use crate::synthgen::{Terrain, NEUTRAL_ANGLE};

/// Angle (degrees) that brings the sensed point closest to the nearest IED
/// along the scan axis.
pub fn optimal_angle(terrain: &Terrain, p: &Position) -> f64 {
    let reach = terrain.scan_step / 2.0;
    let nearest =
        terrain.ied_positions.iter().min_by(|a, b| p.distance(a).total_cmp(&p.distance(b))).copied().unwrap_or(*p);
    let shift = (nearest.x - p.x).clamp(-reach, reach);
    (shift / reach).acos().to_degrees()
}

/// Regression target for model-backed α policies: the optimal angle scaled
/// to [0,1].
pub fn alpha_target(terrain: &Terrain, p: &Position) -> f64 {
    (optimal_angle(terrain, p) / 180.0).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaReplay {
    /// Mean noise-free proximity of the re-aimed acquisitions.
    pub mean_proximity: f64,
    /// Same, for the neutral (straight down) angle.
    pub neutral_proximity: f64,
    /// Mean |chosen - optimal| angle in degrees.
    pub mean_angle_error: f64,
}

/// Lets `policy` choose a re-acquisition angle for every sample of `data`
/// from the agent's recorded features, then measures where it would look.
pub fn alpha_replay(
    terrain: &Terrain,
    data: &Dataset,
    sensor: SensorKind,
    policy: &AlphaPolicy,
    rng: &mut Rng,
) -> Result<AlphaReplay, ModelError> {
    let proximity_at =
        |p: &Position, angle: f64| terrain.proximity(terrain.nearest_ied_distance(&terrain.aimed_point(p, angle)));
    let (mut aimed, mut neutral, mut error) = (0.0, 0.0, 0.0);
    for s in data.samples() {
        let angle = alpha_decide(policy, s.feature(sensor), rng)?.clamp(0.0, 180.0);
        aimed += proximity_at(&s.position, angle);
        neutral += proximity_at(&s.position, NEUTRAL_ANGLE);
        error += (angle - optimal_angle(terrain, &s.position)).abs();
    }
    let n = data.len().max(1) as f64;
    Ok(AlphaReplay { mean_proximity: aimed / n, neutral_proximity: neutral / n, mean_angle_error: error / n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::default_terrain;

    #[test]
    fn optimal_angle_points_at_the_device() {
        let t = default_terrain();
        // IED at (550, 250)
        assert_eq!(optimal_angle(&t, &Position::new(550.0, 250.0)), 90.0);
        assert!(optimal_angle(&t, &Position::new(500.0, 250.0)).abs() < 1e-12);
        assert!((optimal_angle(&t, &Position::new(600.0, 250.0)) - 180.0).abs() < 1e-12);
        let p = Position::new(540.0, 250.0);
        let best = optimal_angle(&t, &p);
        assert!((t.aimed_point(&p, best).x - 550.0).abs() < 1e-9);
        assert!((0.0..=1.0).contains(&alpha_target(&t, &p)));
    }
}
