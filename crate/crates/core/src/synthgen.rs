//! Synthetic two-day acquisition campaign over the mock-IED test terrain.
//!
//! Each sensor sees a smooth proximity kernel around the nearest buried
//! device plus three per-sensor transforms of it. Day conditions act on the
//! readings in two ways: humidity scales the Gaussian noise, and for sensors
//! with a nonzero illumination sensitivity (the cameras by default) low light
//! biases the secondary channels.

use std::fs;
use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Condition, Dataset, DatasetError, FeatureVector, Header, Position, Sample, SensorKind};
use crate::rng::{self, Rng};

/// Number of channels every simulated sensor emits.
pub const FEATURE_DIM: usize = 4;

/// Illumination at which camera channels carry no bias (the dry morning).
pub const REFERENCE_ILLUMINATION: f64 = 0.9;

/// Angle used by the fixed-position acquisition protocol; aims straight down.
pub const NEUTRAL_ANGLE: f64 = 90.0;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("position ({x}, {y}) is outside the {width}x{height} terrain")]
    OutOfBounds { x: f64, y: f64, width: f64, height: f64 },
    #[error("angle {0} outside [0,180] degrees")]
    BadAngle(f64),
    #[error("samples_per_day = {requested} exceeds the {available} scan-grid positions")]
    TooManySamples { requested: usize, available: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("config file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Terrain {
    pub width: f64,
    pub height: f64,
    pub scan_step: f64,
    pub ied_positions: Vec<Position>,
    pub ied_radius: f64,
}

/// The 670 x 1100 mm test bed with three mock IEDs, scanned every 50 mm.
pub fn default_terrain() -> Terrain {
    Terrain {
        width: 670.0,
        height: 1100.0,
        scan_step: 50.0,
        ied_positions: vec![Position::new(550.0, 250.0), Position::new(350.0, 600.0), Position::new(500.0, 850.0)],
        ied_radius: 75.0,
    }
}

impl Terrain {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Config(m));
        if !(self.width > 0.0 && self.height > 0.0) {
            return bad(format!("terrain {}x{} must be positive", self.width, self.height));
        }
        if !(self.scan_step > 0.0 && self.scan_step <= self.width.min(self.height)) {
            return bad(format!("scan step {} does not fit the terrain", self.scan_step));
        }
        if !(self.ied_radius > 0.0) {
            return bad(format!("ied_radius {} must be positive", self.ied_radius));
        }
        for p in &self.ied_positions {
            if !self.contains(p) {
                return bad(format!("IED at ({}, {}) is outside the terrain", p.x, p.y));
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: &Position) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    fn axis(extent: f64, step: f64) -> impl Iterator<Item = f64> {
        let n = (extent / step).floor() as usize;
        (0..=n).map(move |i| i as f64 * step)
    }

    /// Scan positions, row-major in y then x, starting at the origin.
    pub fn grid(&self) -> Vec<Position> {
        Self::axis(self.height, self.scan_step)
            .flat_map(|y| Self::axis(self.width, self.scan_step).map(move |x| Position::new(x, y)))
            .collect()
    }

    pub fn nearest_ied_distance(&self, p: &Position) -> f64 {
        self.ied_positions.iter().map(|q| p.distance(q)).fold(f64::INFINITY, f64::min)
    }

    /// Ground truth: an IED lies within `ied_radius` of `p`.
    pub fn label_at(&self, p: &Position) -> bool {
        self.nearest_ied_distance(p) <= self.ied_radius
    }

    /// Proximity channel: Gaussian kernel with width `ied_radius / 2`.
    pub fn proximity(&self, distance: f64) -> f64 {
        let s = self.ied_radius / 2.0;
        (-(distance * distance) / (2.0 * s * s)).exp()
    }

    /// Point actually sensed when the servo is aimed at `angle` degrees:
    /// shifted along the scan axis by `cos(angle) * step / 2`.
    pub fn aimed_point(&self, p: &Position, angle: f64) -> Position {
        Position::new(p.x + angle.to_radians().cos() * self.scan_step / 2.0, p.y)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorModel {
    pub kind: SensorKind,
    pub noise_sigma: f64,
    pub illumination_sensitivity: f64,
    pub humidity_sensitivity: f64,
}

/// `(offset, gain, power)` for channels 1..3: `offset + gain * p^power`.
fn channel_transforms(kind: SensorKind) -> [(f64, f64, f64); 3] {
    match kind {
        SensorKind::Vs => [(0.15, 0.7, 0.5), (0.6, -0.5, 1.0), (0.2, 0.6, 2.0)],
        SensorKind::Ir => [(0.3, 0.6, 1.5), (0.1, 0.8, 0.7), (0.7, -0.4, 1.0)],
        SensorKind::Uv => [(0.2, 0.5, 1.0), (0.5, -0.3, 0.5), (0.1, 0.7, 3.0)],
        SensorKind::Tm => [(0.4, 0.5, 2.0), (0.25, 0.6, 1.0), (0.8, -0.7, 1.2)],
        SensorKind::Gp => [(0.1, 0.85, 0.8), (0.3, 0.6, 2.0), (0.65, -0.55, 0.5)],
    }
}

impl SensorModel {
    pub fn default_for(kind: SensorKind) -> Self {
        let (noise_sigma, illumination_sensitivity, humidity_sensitivity) = match kind {
            SensorKind::Vs => (0.24, 0.8, 1.0),
            SensorKind::Ir => (0.21, 0.0, 0.6),
            SensorKind::Uv => (0.27, 0.6, 0.8),
            SensorKind::Tm => (0.18, 0.0, 0.5),
            SensorKind::Gp => (0.15, 0.0, 0.3),
        };
        SensorModel { kind, noise_sigma, illumination_sensitivity, humidity_sensitivity }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(SynthError::Config(format!("{} noise_sigma {} must be >= 0", self.kind, self.noise_sigma)));
        }
        for (what, v) in [("illumination", self.illumination_sensitivity), ("humidity", self.humidity_sensitivity)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SynthError::Config(format!("{} {what} sensitivity {v} outside [0,1]", self.kind)));
            }
        }
        Ok(())
    }

    /// Noise-free response at `distance` from the nearest IED.
    pub fn base_response(&self, terrain: &Terrain, distance: f64, cond: &Condition) -> [f64; FEATURE_DIM] {
        let p = terrain.proximity(distance);
        let bias = self.illumination_sensitivity * (REFERENCE_ILLUMINATION - cond.illumination);
        let mut out = [p; FEATURE_DIM];
        for (slot, (offset, gain, power)) in out[1..].iter_mut().zip(channel_transforms(self.kind)) {
            *slot = offset + gain * p.powf(power) + bias;
        }
        out
    }

    /// Noise scale under `cond`.
    pub fn sigma(&self, cond: &Condition) -> f64 {
        self.noise_sigma * (1.0 + self.humidity_sensitivity * cond.humidity)
    }

    fn respond(&self, terrain: &Terrain, distance: f64, cond: &Condition, rng: &mut Rng) -> FeatureVector {
        let base = self.base_response(terrain, distance, cond);
        let sigma = self.sigma(cond);
        let values = base
            .iter()
            .map(|&b| {
                let noise = if sigma > 0.0 { Normal::new(0.0, sigma).expect("finite sigma").sample(rng) } else { 0.0 };
                (b + noise).clamp(0.0, 1.0)
            })
            .collect();
        FeatureVector(values)
    }
}

pub fn default_sensor_models() -> Vec<SensorModel> {
    SensorKind::ALL.into_iter().map(SensorModel::default_for).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub terrain: Terrain,
    pub samples_per_day: usize,
    pub day_conditions: [Condition; 2],
    pub sensor_models: Vec<SensorModel>,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            terrain: default_terrain(),
            samples_per_day: 100,
            day_conditions: [Condition::day_one(), Condition::day_two()],
            sensor_models: default_sensor_models(),
            seed: 42,
        }
    }
}

impl GenConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SynthError> {
        let text = fs::read_to_string(path)?;
        let cfg: GenConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        self.terrain.validate()?;
        if self.samples_per_day == 0 {
            return Err(SynthError::Config("samples_per_day must be positive".into()));
        }
        for (i, c) in self.day_conditions.iter().enumerate() {
            c.validate().map_err(SynthError::Config)?;
            if usize::from(c.day) != i + 1 {
                return Err(SynthError::Config(format!("day_conditions[{i}] must describe day {}", i + 1)));
            }
        }
        self.sensors().map(|_| ())
    }

    /// Sensor models in canonical order, one per kind.
    pub fn sensors(&self) -> Result<[&SensorModel; 5], SynthError> {
        let mut slots: [Option<&SensorModel>; 5] = [None; 5];
        for m in &self.sensor_models {
            m.validate()?;
            let slot = &mut slots[m.kind.index()];
            if slot.is_some() {
                return Err(SynthError::Config(format!("duplicate sensor model for {}", m.kind)));
            }
            *slot = Some(m);
        }
        if self.sensor_models.len() != 5 {
            return Err(SynthError::Config(format!("expected 5 sensor models, found {}", self.sensor_models.len())));
        }
        Ok(slots.map(|s| s.expect("all five kinds present")))
    }
}

/// Simulates one acquisition by all five agents at `position`.
pub fn acquire_sample(
    terrain: &Terrain,
    sensors: &[&SensorModel; 5],
    id: u64,
    position: Position,
    cond: &Condition,
    angle: f64,
    rng: &mut Rng,
) -> Result<Sample, SynthError> {
    if !terrain.contains(&position) {
        return Err(SynthError::OutOfBounds {
            x: position.x,
            y: position.y,
            width: terrain.width,
            height: terrain.height,
        });
    }
    if !(0.0..=180.0).contains(&angle) {
        return Err(SynthError::BadAngle(angle));
    }
    let sensed = terrain.aimed_point(&position, angle);
    let distance = terrain.nearest_ied_distance(&sensed);
    let features = std::array::from_fn(|k| sensors[k].respond(terrain, distance, cond, rng));
    Ok(Sample { id, position, condition: *cond, features, label: terrain.label_at(&position) })
}

/// Draws `samples_per_day` scan positions and acquires each of them once per
/// day. Day-1 samples get ids `0..n`, day-2 samples `n..2n`.
pub fn generate_dataset(cfg: &GenConfig) -> Result<Dataset, SynthError> {
    cfg.validate()?;
    let sensors = cfg.sensors()?;
    let grid = cfg.terrain.grid();
    if cfg.samples_per_day > grid.len() {
        return Err(SynthError::TooManySamples { requested: cfg.samples_per_day, available: grid.len() });
    }
    let mut rng = rng::seeded(cfg.seed);
    let mut picks = rand::seq::index::sample(&mut rng, grid.len(), cfg.samples_per_day).into_vec();
    picks.sort_unstable();

    let mut samples = Vec::with_capacity(2 * picks.len());
    for cond in &cfg.day_conditions {
        for &i in &picks {
            let id = samples.len() as u64;
            samples.push(acquire_sample(&cfg.terrain, &sensors, id, grid[i], cond, NEUTRAL_ANGLE, &mut rng)?);
        }
    }
    let header = Header::new([FEATURE_DIM; 5], cfg.terrain.width, cfg.terrain.height);
    Ok(Dataset::new(header, samples)?)
}

/// Uniform angle in [0,180]; used by the random aiming policy.
pub fn random_angle(rng: &mut Rng) -> f64 {
    rng.random_range(0.0..=180.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sensors(cfg: &GenConfig) -> [&SensorModel; 5] {
        cfg.sensors().unwrap()
    }

    #[test]
    fn default_terrain_matches_the_test_bed() {
        let t = default_terrain();
        t.validate().unwrap();
        assert_eq!((t.width, t.height, t.scan_step, t.ied_radius), (670.0, 1100.0, 50.0, 75.0));
        let ieds: Vec<(f64, f64)> = t.ied_positions.iter().map(|p| (p.x, p.y)).collect();
        assert_eq!(ieds, vec![(550.0, 250.0), (350.0, 600.0), (500.0, 850.0)]);
    }

    #[test]
    fn grid_has_322_positions() {
        let t = default_terrain();
        // 0..=650 step 50 along x, 0..=1100 along y
        let xs = (0..).map(|i| 50.0 * i as f64).take_while(|x| *x <= 670.0).count();
        let ys = (0..).map(|i| 50.0 * i as f64).take_while(|y| *y <= 1100.0).count();
        assert_eq!((xs, ys), (14, 23));
        assert_eq!(t.grid().len(), xs * ys);
    }

    #[test]
    fn acquisition_on_top_of_an_ied() {
        let cfg = GenConfig::default();
        let t = &cfg.terrain;
        let vs = SensorModel::default_for(SensorKind::Vs);
        let d = t.nearest_ied_distance(&t.aimed_point(&Position::new(550.0, 250.0), 90.0));
        assert!(vs.base_response(t, d, &Condition::day_one())[0] >= 0.9);
        let s = acquire_sample(
            t,
            &sensors(&cfg),
            0,
            Position::new(550.0, 250.0),
            &Condition::day_one(),
            90.0,
            &mut rng::seeded(1),
        )
        .unwrap();
        assert!(s.label);
    }

    #[test]
    fn far_corner_is_negative() {
        let cfg = GenConfig::default();
        let s = acquire_sample(
            &cfg.terrain,
            &sensors(&cfg),
            0,
            Position::new(0.0, 0.0),
            &Condition::day_two(),
            0.0,
            &mut rng::seeded(1),
        )
        .unwrap();
        assert!(!s.label);
    }

    #[test]
    fn acquisition_is_deterministic_and_bounded() {
        let cfg = GenConfig::default();
        let p = Position::new(350.0, 650.0);
        let a = acquire_sample(&cfg.terrain, &sensors(&cfg), 3, p, &Condition::day_two(), 30.0, &mut rng::seeded(9))
            .unwrap();
        let b = acquire_sample(&cfg.terrain, &sensors(&cfg), 3, p, &Condition::day_two(), 30.0, &mut rng::seeded(9))
            .unwrap();
        assert_eq!(a, b);
        assert!(a.features.iter().flat_map(|f| f.values()).all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn rejects_out_of_bounds_and_bad_angle() {
        let cfg = GenConfig::default();
        let s = sensors(&cfg);
        let c = Condition::day_one();
        let mut r = rng::seeded(0);
        assert!(matches!(
            acquire_sample(&cfg.terrain, &s, 0, Position::new(700.0, 0.0), &c, 90.0, &mut r),
            Err(SynthError::OutOfBounds { .. })
        ));
        assert!(matches!(
            acquire_sample(&cfg.terrain, &s, 0, Position::new(0.0, 0.0), &c, 181.0, &mut r),
            Err(SynthError::BadAngle(_))
        ));
    }

    #[test]
    fn aim_shifts_along_the_scan_axis() {
        let t = default_terrain();
        let p = Position::new(100.0, 100.0);
        assert!((t.aimed_point(&p, 0.0).x - 125.0).abs() < 1e-12);
        assert!((t.aimed_point(&p, 180.0).x - 75.0).abs() < 1e-12);
        assert!((t.aimed_point(&p, 90.0).x - 100.0).abs() < 1e-12);
    }

    #[test]
    fn too_many_samples_per_day() {
        let cfg = GenConfig { samples_per_day: 323, ..GenConfig::default() };
        assert!(matches!(generate_dataset(&cfg), Err(SynthError::TooManySamples { requested: 323, available: 322 })));
    }

    #[test]
    fn config_requires_one_model_per_kind() {
        let mut cfg = GenConfig::default();
        cfg.sensor_models[1].kind = SensorKind::Vs;
        assert!(cfg.validate().is_err());
        let mut cfg = GenConfig::default();
        cfg.sensor_models.pop();
        assert!(cfg.validate().is_err());
    }
}
