use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::replay::alpha_target;
use super::{AgentConfig, ExperimentError};
use crate::dataset::{Dataset, SensorKind};
use crate::fusion::{MethodSymbol, OmegaMethod};
use crate::fuzzyga::{self, FgaConfig};
use crate::models::{AlphaPolicy, FuzzySystem, NetGenome};
use crate::neuroevo::{self, NeatConfig};
use crate::rng::derive_seed;
use crate::synthgen::{Terrain, NEUTRAL_ANGLE};

/// Trained cooperative model of an agent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum OmegaModel {
    Ann(NetGenome),
    Fuzzy(FuzzySystem),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedAgent {
    pub config: AgentConfig,
    pub beta_model: NetGenome,
    /// Present exactly when the Ω method is N or F.
    pub omega_model: Option<OmegaModel>,
    pub alpha_policy: AlphaPolicy,
}

impl TrainedAgent {
    pub fn omega_method(&self) -> OmegaMethod {
        match (&self.omega_model, self.config.omega) {
            (Some(OmegaModel::Ann(g)), _) => OmegaMethod::Ann(g.clone()),
            (Some(OmegaModel::Fuzzy(f)), _) => OmegaMethod::Fuzzy(f.clone()),
            (None, MethodSymbol::V) => OmegaMethod::Vote,
            (None, symbol) => OmegaMethod::Agg(symbol.aggregation().expect("validated omega symbol")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Training {
    pub agents: Vec<TrainedAgent>,
    /// Ids of every sample any trainer looked at.
    pub seen_ids: BTreeSet<u64>,
    /// β of each sensor on the training set, as scored by the final fitness
    /// evaluation.
    pub beta_train_scores: [Vec<f64>; 5],
}

// Seed streams of the individual trainers.
const STREAM_BETA: u64 = 1;
const STREAM_OMEGA_ANN: u64 = 2;
const STREAM_OMEGA_FUZZY: u64 = 3;
const STREAM_ALPHA_ANN: u64 = 4;
const STREAM_ALPHA_FUZZY: u64 = 5;

type Rows = Vec<(Vec<f64>, f64)>;

fn net_scores(genome: &NetGenome, rows: &Rows) -> Result<Vec<f64>, ExperimentError> {
    let net = genome.compile()?;
    rows.iter().map(|(x, _)| Ok(net.eval(x)?)).collect()
}

enum Job {
    OmegaAnn(usize),
    OmegaFuzzy(usize),
    AlphaAnn(usize),
    AlphaFuzzy(usize),
}

enum Trained {
    Net(NetGenome),
    Fuzzy(FuzzySystem),
}

/// Trains every model the configurations need. One β network is evolved
/// per sensor and shared by all of that sensor's configurations; Ω and α
/// models are evolved once per sensor and method.
pub fn train_agents(
    train: &Dataset,
    configs: &[AgentConfig],
    neat: &NeatConfig,
    fga: &FgaConfig,
    seed: u64,
    terrain: &Terrain,
) -> Result<Training, ExperimentError> {
    for c in configs {
        c.validate()?;
    }
    let positives = train.positives();
    if positives == 0 || positives == train.len() {
        return Err(ExperimentError::Degenerate("training"));
    }
    let seen_ids: BTreeSet<u64> = train.samples().iter().map(|s| s.id).collect();
    let feature_rows = |kind: SensorKind, target: &dyn Fn(&crate::dataset::Sample) -> f64| -> Rows {
        train.samples().iter().map(|s| (s.feature(kind).values().to_vec(), target(s))).collect()
    };
    let neat_for = |stream: u64, k: usize| NeatConfig { seed: derive_seed(seed, &[stream, k as u64]), ..neat.clone() };
    let fga_for = |stream: u64, k: usize| FgaConfig { seed: derive_seed(seed, &[stream, k as u64]), ..fga.clone() };

    let betas: Vec<(NetGenome, Vec<f64>)> = SensorKind::ALL
        .par_iter()
        .map(|&kind| {
            let rows = feature_rows(kind, &|s| s.target());
            let dim = train.header().dim(kind);
            let genome = neuroevo::evolve(&rows, &neat_for(STREAM_BETA, kind.index()), dim)?;
            let scores = net_scores(&genome, &rows)?;
            Ok((genome, scores))
        })
        .collect::<Result<_, ExperimentError>>()?;

    // B vectors over the training set
    let omega_rows: Rows =
        (0..train.len()).map(|i| (betas.iter().map(|(_, s)| s[i]).collect(), train.samples()[i].target())).collect();

    let wants =
        |k: usize, pick: &dyn Fn(&AgentConfig) -> bool| configs.iter().any(|c| c.sensor.index() == k && pick(c));
    let mut jobs = Vec::new();
    for k in 0..5 {
        if wants(k, &|c| c.omega == MethodSymbol::N) {
            jobs.push(Job::OmegaAnn(k));
        }
        if wants(k, &|c| c.omega == MethodSymbol::F) {
            jobs.push(Job::OmegaFuzzy(k));
        }
        if wants(k, &|c| c.alpha == MethodSymbol::N) {
            jobs.push(Job::AlphaAnn(k));
        }
        if wants(k, &|c| c.alpha == MethodSymbol::F) {
            jobs.push(Job::AlphaFuzzy(k));
        }
    }
    let alpha_rows = |k: usize| feature_rows(SensorKind::ALL[k], &|s| alpha_target(terrain, &s.position));
    let trained: Vec<Trained> = jobs
        .par_iter()
        .map(|job| -> Result<Trained, ExperimentError> {
            Ok(match *job {
                Job::OmegaAnn(k) => Trained::Net(neuroevo::evolve(&omega_rows, &neat_for(STREAM_OMEGA_ANN, k), 5)?),
                Job::OmegaFuzzy(k) => Trained::Fuzzy(fuzzyga::evolve(&omega_rows, &fga_for(STREAM_OMEGA_FUZZY, k), 5)?),
                Job::AlphaAnn(k) => {
                    let dim = train.header().dim(SensorKind::ALL[k]);
                    Trained::Net(neuroevo::evolve(&alpha_rows(k), &neat_for(STREAM_ALPHA_ANN, k), dim)?)
                }
                Job::AlphaFuzzy(k) => {
                    let dim = train.header().dim(SensorKind::ALL[k]);
                    Trained::Fuzzy(fuzzyga::evolve(&alpha_rows(k), &fga_for(STREAM_ALPHA_FUZZY, k), dim)?)
                }
            })
        })
        .collect::<Result<_, _>>()?;

    let mut omega_ann: [Option<NetGenome>; 5] = Default::default();
    let mut omega_fuzzy: [Option<FuzzySystem>; 5] = Default::default();
    let mut alpha_ann: [Option<NetGenome>; 5] = Default::default();
    let mut alpha_fuzzy: [Option<FuzzySystem>; 5] = Default::default();
    for (job, model) in jobs.iter().zip(trained) {
        match (job, model) {
            (Job::OmegaAnn(k), Trained::Net(g)) => omega_ann[*k] = Some(g),
            (Job::OmegaFuzzy(k), Trained::Fuzzy(f)) => omega_fuzzy[*k] = Some(f),
            (Job::AlphaAnn(k), Trained::Net(g)) => alpha_ann[*k] = Some(g),
            (Job::AlphaFuzzy(k), Trained::Fuzzy(f)) => alpha_fuzzy[*k] = Some(f),
            _ => unreachable!("trainer kind follows the job kind"),
        }
    }

    let agents = configs
        .iter()
        .map(|c| {
            let k = c.sensor.index();
            let omega_model = match c.omega {
                MethodSymbol::N => omega_ann[k].clone().map(OmegaModel::Ann),
                MethodSymbol::F => omega_fuzzy[k].clone().map(OmegaModel::Fuzzy),
                _ => None,
            };
            let alpha_policy = match c.alpha {
                MethodSymbol::N => AlphaPolicy::Ann(alpha_ann[k].clone().expect("trained above")),
                MethodSymbol::F => AlphaPolicy::Fuzzy(alpha_fuzzy[k].clone().expect("trained above")),
                MethodSymbol::P => AlphaPolicy::FixedPoint(NEUTRAL_ANGLE),
                _ => AlphaPolicy::Random,
            };
            TrainedAgent { config: *c, beta_model: betas[k].0.clone(), omega_model, alpha_policy }
        })
        .collect();
    let mut beta_train_scores: [Vec<f64>; 5] = Default::default();
    for (k, (_, scores)) in betas.into_iter().enumerate() {
        beta_train_scores[k] = scores;
    }
    Ok(Training { agents, seen_ids, beta_train_scores })
}
