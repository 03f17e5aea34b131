//! The split-case study: per-agent method configurations, training,
//! evaluation on both splits, model selection and reporting.

mod evaluate;
mod replay;
mod report;
mod store;
mod study;
mod train;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DatasetError, SensorKind};
use crate::fusion::{FusionError, MethodSymbol};
use crate::fuzzyga::FgaError;
use crate::metrics::MetricsError;
use crate::models::ModelError;
use crate::neuroevo::NeatError;
use crate::synthgen::SynthError;

pub use evaluate::{evaluate, AgentEval, Evaluation, LevelMetrics};
pub use replay::{alpha_replay, alpha_target, optimal_angle, AlphaReplay};
pub use report::{read_results, report, summary_rows, write_results, SummaryRow};
pub use store::{load_models, save_models, MODELS_FORMAT};
pub use study::{
    run_study, run_unit, select_best, unit_seed, AgentResult, AucSummary, CaseResult, DataSource, Level, RocEntry,
    SplitMetrics, SplitName, StudyConfig, StudyResults, SystemRow, STUDY_FORMAT,
};
pub use train::{train_agents, OmegaModel, TrainedAgent, Training};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{symbol} is not a legal {slot} method")]
    IllegalSymbol { slot: &'static str, symbol: MethodSymbol },
    #[error("the {0} slot of the sweep is empty")]
    EmptySlot(&'static str),
    #[error("{0} set has a single class")]
    Degenerate(&'static str),
    #[error("no agent for sensor {0}")]
    MissingAgent(SensorKind),
    #[error("{sensor} model expects {expected} features, data has {got}")]
    FeatureDim { sensor: SensorKind, expected: usize, got: usize },
    #[error("validation sample {0} reached training")]
    Leak(u64),
    #[error("invalid study configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Neat(#[from] NeatError),
    #[error(transparent)]
    Fga(#[from] FgaError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Method choice of one agent for its three decisions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgentConfig {
    pub sensor: SensorKind,
    pub alpha: MethodSymbol,
    pub beta: MethodSymbol,
    pub omega: MethodSymbol,
}

pub const ALPHA_SYMBOLS: [MethodSymbol; 4] = [MethodSymbol::N, MethodSymbol::F, MethodSymbol::P, MethodSymbol::R];
pub const BETA_SYMBOLS: [MethodSymbol; 1] = [MethodSymbol::N];
pub const OMEGA_SYMBOLS: [MethodSymbol; 6] =
    [MethodSymbol::N, MethodSymbol::F, MethodSymbol::V, MethodSymbol::M, MethodSymbol::Bavg, MethodSymbol::Bmdn];

impl AgentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        check_slot("alpha", self.alpha, &ALPHA_SYMBOLS)?;
        check_slot("beta", self.beta, &BETA_SYMBOLS)?;
        check_slot("omega", self.omega, &OMEGA_SYMBOLS)
    }

    /// Short form `alpha/beta/omega`, e.g. `P/N/Bavg`.
    pub fn methods(&self) -> String {
        format!("{}/{}/{}", self.alpha, self.beta, self.omega)
    }
}

impl fmt::Display for AgentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.sensor, self.methods())
    }
}

fn check_slot(slot: &'static str, symbol: MethodSymbol, legal: &[MethodSymbol]) -> Result<(), ExperimentError> {
    if legal.contains(&symbol) {
        Ok(())
    } else {
        Err(ExperimentError::IllegalSymbol { slot, symbol })
    }
}

/// Allowed method symbols per decision slot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub alpha: Vec<MethodSymbol>,
    pub beta: Vec<MethodSymbol>,
    pub omega: Vec<MethodSymbol>,
}

impl Default for Sweep {
    /// Every legal combination: 4 x 1 x 6 = 24 configurations per agent.
    fn default() -> Self {
        Sweep { alpha: ALPHA_SYMBOLS.to_vec(), beta: BETA_SYMBOLS.to_vec(), omega: OMEGA_SYMBOLS.to_vec() }
    }
}

impl std::str::FromStr for Sweep {
    type Err = String;

    /// Parses `alpha/beta/omega`, each slot a comma list of symbols or `*`
    /// for every legal symbol, e.g. `P,R/N/*`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let slots: Vec<&str> = s.split('/').collect();
        let [alpha, beta, omega] = slots[..] else {
            return Err(format!("sweep `{s}` must have three slots alpha/beta/omega"));
        };
        let parse = |text: &str, legal: &[MethodSymbol]| -> Result<Vec<MethodSymbol>, String> {
            if text.trim() == "*" {
                return Ok(legal.to_vec());
            }
            text.split(',').filter(|t| !t.trim().is_empty()).map(str::parse).collect()
        };
        Ok(Sweep {
            alpha: parse(alpha, &ALPHA_SYMBOLS)?,
            beta: parse(beta, &BETA_SYMBOLS)?,
            omega: parse(omega, &OMEGA_SYMBOLS)?,
        })
    }
}

/// Cartesian product alpha x beta x omega for each sensor, in sweep order
/// (omega varies fastest). Returns one list per sensor, canonical order.
pub fn enumerate_configs(sweep: &Sweep) -> Result<[Vec<AgentConfig>; 5], ExperimentError> {
    for (slot, symbols) in [("alpha", &sweep.alpha), ("beta", &sweep.beta), ("omega", &sweep.omega)] {
        if symbols.is_empty() {
            return Err(ExperimentError::EmptySlot(slot));
        }
    }
    let configs = SensorKind::ALL.map(|sensor| {
        let mut list = Vec::new();
        for &alpha in &sweep.alpha {
            for &beta in &sweep.beta {
                for &omega in &sweep.omega {
                    list.push(AgentConfig { sensor, alpha, beta, omega });
                }
            }
        }
        list
    });
    for c in &configs[0] {
        c.validate()?;
    }
    Ok(configs)
}
