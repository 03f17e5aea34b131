use serde::{Deserialize, Serialize};

use super::{ann_forward, fuzzy_infer, FuzzySystem, ModelError, NetGenome};
use crate::dataset::FeatureVector;
use crate::rng::Rng;
use crate::synthgen::random_angle;

/// How an agent picks the servo angle of its next acquisition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum AlphaPolicy {
    FixedPoint(f64),
    Random,
    Ann(NetGenome),
    Fuzzy(FuzzySystem),
}

impl AlphaPolicy {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            AlphaPolicy::FixedPoint(a) if !(0.0..=180.0).contains(a) => {
                Err(ModelError::Invalid(format!("fixed angle {a} outside [0,180]")))
            }
            AlphaPolicy::FixedPoint(_) | AlphaPolicy::Random => Ok(()),
            AlphaPolicy::Ann(g) => g.validate(),
            AlphaPolicy::Fuzzy(f) => f.validate(),
        }
    }
}

/// Next acquisition angle in degrees, in [0,180]. Model-backed policies map
/// their [0,1] output linearly onto the angle range.
pub fn alpha_decide(policy: &AlphaPolicy, context: &FeatureVector, rng: &mut Rng) -> Result<f64, ModelError> {
    match policy {
        AlphaPolicy::FixedPoint(angle) => Ok(*angle),
        AlphaPolicy::Random => Ok(random_angle(rng)),
        AlphaPolicy::Ann(g) => Ok(180.0 * ann_forward(g, context.values())?),
        AlphaPolicy::Fuzzy(f) => Ok(180.0 * fuzzy_infer(f, context.values())?),
    }
}
