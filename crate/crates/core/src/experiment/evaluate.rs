use serde::{Deserialize, Serialize};

use super::train::TrainedAgent;
use super::ExperimentError;
use crate::dataset::{Dataset, SensorKind};
use crate::fusion::{omega, system_decision, BetaSet, OmegaMethod, DECISION_THRESHOLD};
use crate::metrics;
use crate::models::CompiledNet;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelMetrics {
    pub acc: f64,
    pub rmse: f64,
    pub auc: f64,
}

impl LevelMetrics {
    pub fn of(scores: &[f64], labels: &[bool]) -> Result<Self, ExperimentError> {
        Ok(LevelMetrics {
            acc: metrics::accuracy(scores, labels, DECISION_THRESHOLD)?,
            rmse: metrics::rmse_labels(scores, labels)?,
            auc: metrics::roc_auc(scores, labels)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentEval {
    pub agent: usize,
    pub beta_scores: Vec<f64>,
    pub omega_scores: Vec<f64>,
    pub beta: LevelMetrics,
    pub omega: LevelMetrics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub ids: Vec<u64>,
    pub labels: Vec<bool>,
    /// One entry per agent, in input order.
    pub agents: Vec<AgentEval>,
    /// Accuracy of the system verdict when every sensor uses its j-th
    /// configuration.
    pub system_acc: Vec<f64>,
}

fn beta_scores(net: &CompiledNet, data: &Dataset, kind: SensorKind) -> Result<Vec<f64>, ExperimentError> {
    data.samples().iter().map(|s| Ok(net.eval(s.feature(kind).values())?)).collect()
}

/// Scores every agent on `data`: the five β values of each sample form B,
/// every agent turns B into its Ω, and the system verdict picks the most
/// confident agent.
pub fn evaluate(agents: &[TrainedAgent], data: &Dataset) -> Result<Evaluation, ExperimentError> {
    let labels = data.labels();
    let positives = data.positives();
    if positives == 0 || positives == data.len() {
        return Err(ExperimentError::Degenerate("evaluation"));
    }
    for a in agents {
        let dim = data.header().dim(a.config.sensor);
        if a.beta_model.input_count != dim {
            return Err(ExperimentError::FeatureDim {
                sensor: a.config.sensor,
                expected: a.beta_model.input_count,
                got: dim,
            });
        }
    }
    // B comes from the first agent of each sensor
    let mut team: Vec<Vec<f64>> = Vec::with_capacity(5);
    for kind in SensorKind::ALL {
        let rep = agents.iter().find(|a| a.config.sensor == kind).ok_or(ExperimentError::MissingAgent(kind))?;
        team.push(beta_scores(&rep.beta_model.compile()?, data, kind)?);
    }
    let sets: Vec<BetaSet> =
        (0..data.len()).map(|i| BetaSet::new(std::array::from_fn(|k| team[k][i]))).collect::<Result<_, _>>()?;

    let mut evals = Vec::with_capacity(agents.len());
    for (index, a) in agents.iter().enumerate() {
        let kind = a.config.sensor;
        let rep = agents.iter().find(|r| r.config.sensor == kind).expect("checked above");
        let beta = if rep.beta_model == a.beta_model {
            team[kind.index()].clone()
        } else {
            beta_scores(&a.beta_model.compile()?, data, kind)?
        };
        let omega_scores = match a.omega_method() {
            OmegaMethod::Ann(g) => {
                let net = g.compile()?;
                sets.iter().map(|b| Ok(net.eval(b.values())?)).collect::<Result<Vec<_>, ExperimentError>>()?
            }
            method => sets.iter().map(|b| omega(b, &method)).collect::<Result<Vec<_>, _>>()?,
        };
        evals.push(AgentEval {
            agent: index,
            beta: LevelMetrics::of(&beta, &labels)?,
            omega: LevelMetrics::of(&omega_scores, &labels)?,
            beta_scores: beta,
            omega_scores,
        });
    }

    let by_sensor: Vec<Vec<usize>> = SensorKind::ALL
        .iter()
        .map(|&k| (0..agents.len()).filter(|&i| agents[i].config.sensor == k).collect())
        .collect();
    let rounds = by_sensor.iter().map(Vec::len).min().unwrap_or(0);
    let system_acc = (0..rounds)
        .map(|j| {
            let correct = (0..data.len())
                .filter(|&i| {
                    let omegas = std::array::from_fn(|k| evals[by_sensor[k][j]].omega_scores[i]);
                    system_decision(&omegas).verdict == labels[i]
                })
                .count();
            correct as f64 / data.len() as f64
        })
        .collect();

    Ok(Evaluation { ids: data.samples().iter().map(|s| s.id).collect(), labels, agents: evals, system_acc })
}
