//! Trained agents on disk: one JSON document per model plus a manifest.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::train::{OmegaModel, TrainedAgent};
use super::{AgentConfig, ExperimentError};
use crate::models::{AlphaPolicy, FuzzySystem, NetGenome};

pub const MODELS_FORMAT: &str = "cod2m-models v1";

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum AlphaEntry {
    Fixed(f64),
    Random,
    Ann(String),
    Fuzzy(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentEntry {
    config: AgentConfig,
    beta: String,
    omega: Option<String>,
    alpha: AlphaEntry,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format: String,
    agents: Vec<AgentEntry>,
}

fn write_once(dir: &Path, name: &str, text: impl FnOnce() -> String) -> Result<(), ExperimentError> {
    let path = dir.join(name);
    if !path.exists() {
        fs::write(path, text())?;
    }
    Ok(())
}

/// Writes every model under `dir` (created if needed). Models shared by
/// several configurations are written once.
pub fn save_models(agents: &[TrainedAgent], dir: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir)?;
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json") {
            fs::remove_file(path)?;
        }
    }
    let mut entries = Vec::with_capacity(agents.len());
    for a in agents {
        let sensor = a.config.sensor;
        let beta = format!("beta_{sensor}.json");
        write_once(dir, &beta, || a.beta_model.to_json())?;
        let omega = match &a.omega_model {
            Some(OmegaModel::Ann(g)) => {
                let name = format!("omega_N_{sensor}.json");
                write_once(dir, &name, || g.to_json())?;
                Some(name)
            }
            Some(OmegaModel::Fuzzy(f)) => {
                let name = format!("omega_F_{sensor}.json");
                write_once(dir, &name, || f.to_json())?;
                Some(name)
            }
            None => None,
        };
        let alpha = match &a.alpha_policy {
            AlphaPolicy::FixedPoint(angle) => AlphaEntry::Fixed(*angle),
            AlphaPolicy::Random => AlphaEntry::Random,
            AlphaPolicy::Ann(g) => {
                let name = format!("alpha_N_{sensor}.json");
                write_once(dir, &name, || g.to_json())?;
                AlphaEntry::Ann(name)
            }
            AlphaPolicy::Fuzzy(f) => {
                let name = format!("alpha_F_{sensor}.json");
                write_once(dir, &name, || f.to_json())?;
                AlphaEntry::Fuzzy(name)
            }
        };
        entries.push(AgentEntry { config: a.config, beta, omega, alpha });
    }
    let manifest = Manifest { format: MODELS_FORMAT.into(), agents: entries };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

pub fn load_models(dir: &Path) -> Result<Vec<TrainedAgent>, ExperimentError> {
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    if manifest.format != MODELS_FORMAT {
        return Err(ExperimentError::Config(format!("expected `{MODELS_FORMAT}`, found `{}`", manifest.format)));
    }
    let read = |name: &str| fs::read_to_string(dir.join(name));
    manifest
        .agents
        .into_iter()
        .map(|e| {
            e.config.validate()?;
            let beta_model = NetGenome::from_json(&read(&e.beta)?)?;
            let omega_model = match (&e.omega, e.config.omega) {
                (Some(name), crate::fusion::MethodSymbol::N) => {
                    Some(OmegaModel::Ann(NetGenome::from_json(&read(name)?)?))
                }
                (Some(name), crate::fusion::MethodSymbol::F) => {
                    Some(OmegaModel::Fuzzy(FuzzySystem::from_json(&read(name)?)?))
                }
                (None, crate::fusion::MethodSymbol::N | crate::fusion::MethodSymbol::F) | (Some(_), _) => {
                    return Err(ExperimentError::Config(format!(
                        "{}: Ω model file does not match the method",
                        e.config
                    )));
                }
                (None, _) => None,
            };
            let alpha_policy = match e.alpha {
                AlphaEntry::Fixed(angle) => AlphaPolicy::FixedPoint(angle),
                AlphaEntry::Random => AlphaPolicy::Random,
                AlphaEntry::Ann(name) => AlphaPolicy::Ann(NetGenome::from_json(&read(&name)?)?),
                AlphaEntry::Fuzzy(name) => AlphaPolicy::Fuzzy(FuzzySystem::from_json(&read(&name)?)?),
            };
            alpha_policy.validate()?;
            Ok(TrainedAgent { config: e.config, beta_model, omega_model, alpha_policy })
        })
        .collect()
}
