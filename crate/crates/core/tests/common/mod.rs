use cod2m::dataset::{Condition, Dataset, FeatureVector, Header, Position, Sample, TimeOfDay};
use cod2m::rng;
use rand::Rng as _;

/// Valid dataset with random dimensions, extents, conditions and features,
/// including exact 0 and 1 feature values.
pub fn random_dataset(rng: &mut rng::Rng) -> Dataset {
    let dims: [usize; 5] = std::array::from_fn(|_| rng.random_range(1..6));
    let (width, height) = (rng.random_range(1.0..2000.0), rng.random_range(1.0..2000.0));
    let n = rng.random_range(2..40);
    let unit = |rng: &mut rng::Rng| match rng.random_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.random::<f64>(),
    };
    let samples = (0..n)
        .map(|i| {
            let day = rng.random_range(1..=2u8);
            Sample {
                id: i as u64 * 3 + rng.random_range(0..3),
                position: Position::new(rng.random::<f64>() * width, rng.random::<f64>() * height),
                condition: Condition {
                    day,
                    illumination: unit(rng),
                    humidity: unit(rng),
                    time_of_day: if rng.random_bool(0.5) { TimeOfDay::Morning } else { TimeOfDay::Afternoon },
                },
                features: std::array::from_fn(|k| FeatureVector((0..dims[k]).map(|_| unit(rng)).collect())),
                label: i == 0 || (i > 1 && rng.random_bool(0.3)),
            }
        })
        .collect();
    Dataset::new(Header::new(dims, width, height), samples).unwrap()
}
