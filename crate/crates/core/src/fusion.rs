//! Cooperative decision layer: aggregation of the five local decisions,
//! quorum voting, binarization, and the system-level verdict.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::SensorKind;
use crate::models::{ann_forward, fuzzy_infer, FuzzySystem, ModelError, NetGenome};

/// Positive (IED) decisions are those at or above this value.
pub const DECISION_THRESHOLD: f64 = 0.5;

/// Positive votes needed out of five.
pub const QUORUM: usize = 3;

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("decision value {0} outside [0,1]")]
    OutOfRange(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The five local decisions, in canonical sensor order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaSet([f64; 5]);

impl BetaSet {
    pub fn new(values: [f64; 5]) -> Result<Self, FusionError> {
        match values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            Some(&v) => Err(FusionError::OutOfRange(v)),
            None => Ok(BetaSet(values)),
        }
    }

    pub fn values(&self) -> &[f64; 5] {
        &self.0
    }

    pub fn get(&self, kind: SensorKind) -> f64 {
        self.0[kind.index()]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AggKind {
    Max,
    Avg,
    Mdn,
}

pub fn aggregate(b: &BetaSet, kind: AggKind) -> f64 {
    let v = b.values();
    match kind {
        AggKind::Max => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        AggKind::Avg => v.iter().sum::<f64>() / 5.0,
        AggKind::Mdn => {
            let mut s = *v;
            s.sort_by(f64::total_cmp);
            s[2]
        }
    }
}

/// 1 when at least three agents decide positive, else 0.
pub fn vote(b: &BetaSet) -> f64 {
    let votes = b.values().iter().filter(|v| binarize(**v, DECISION_THRESHOLD)).count();
    if votes >= QUORUM {
        1.0
    } else {
        0.0
    }
}

pub fn binarize(v: f64, threshold: f64) -> bool {
    v >= threshold
}

/// Cooperative method an agent uses to turn B into its Ω.
#[derive(Clone, Debug, PartialEq)]
pub enum OmegaMethod {
    Ann(NetGenome),
    Fuzzy(FuzzySystem),
    Vote,
    Agg(AggKind),
}

pub fn omega(b: &BetaSet, method: &OmegaMethod) -> Result<f64, FusionError> {
    Ok(match method {
        OmegaMethod::Ann(g) => ann_forward(g, b.values())?,
        OmegaMethod::Fuzzy(f) => fuzzy_infer(f, b.values())?,
        OmegaMethod::Vote => vote(b),
        OmegaMethod::Agg(kind) => aggregate(b, *kind),
    })
}

/// Method symbols as they appear in configs and reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MethodSymbol {
    /// Evolved feed-forward network.
    N,
    /// Evolved fuzzy decision support system.
    F,
    /// Fixed aiming point.
    P,
    /// Random aiming.
    R,
    /// Quorum vote.
    V,
    /// Maximum of B.
    M,
    /// Mean of B.
    Bavg,
    /// Median of B.
    Bmdn,
}

impl MethodSymbol {
    pub const ALL: [MethodSymbol; 8] = [
        MethodSymbol::N,
        MethodSymbol::F,
        MethodSymbol::P,
        MethodSymbol::R,
        MethodSymbol::V,
        MethodSymbol::M,
        MethodSymbol::Bavg,
        MethodSymbol::Bmdn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodSymbol::N => "N",
            MethodSymbol::F => "F",
            MethodSymbol::P => "P",
            MethodSymbol::R => "R",
            MethodSymbol::V => "V",
            MethodSymbol::M => "M",
            MethodSymbol::Bavg => "Bavg",
            MethodSymbol::Bmdn => "Bmdn",
        }
    }

    pub fn aggregation(self) -> Option<AggKind> {
        match self {
            MethodSymbol::M => Some(AggKind::Max),
            MethodSymbol::Bavg => Some(AggKind::Avg),
            MethodSymbol::Bmdn => Some(AggKind::Mdn),
            _ => None,
        }
    }
}

impl fmt::Display for MethodSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodSymbol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MethodSymbol::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| format!("unknown method symbol `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemDecision {
    pub winner: SensorKind,
    pub value: f64,
    pub verdict: bool,
}

/// Picks the agent with the greatest Ω; ties go to the earlier sensor.
pub fn system_decision(omegas: &[f64; 5]) -> SystemDecision {
    let mut best = 0;
    for (i, &v) in omegas.iter().enumerate().skip(1) {
        if v > omegas[best] {
            best = i;
        }
    }
    let value = omegas[best];
    SystemDecision { winner: SensorKind::ALL[best], value, verdict: binarize(value, DECISION_THRESHOLD) }
}
