use std::cmp::Ordering;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::evaluate::{evaluate, Evaluation, LevelMetrics};
use super::replay::{alpha_replay, AlphaReplay};
use super::train::train_agents;
use super::{enumerate_configs, AgentConfig, ExperimentError, Sweep};
use crate::dataset::{split, Dataset, SensorKind, SplitCase, DEFAULT_C3_BOUNDARY};
use crate::fuzzyga::FgaConfig;
use crate::metrics::{roc, RocCurve};
use crate::neuroevo::NeatConfig;
use crate::rng::{self, derive_seed};
use crate::synthgen::{GenConfig, Terrain};

pub const STUDY_FORMAT: &str = "cod2m-study v1";

/// Where the study's samples come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// A dataset file in the canonical text format.
    Dataset(PathBuf),
    /// Generated on the fly.
    Synth(GenConfig),
}

pub(super) fn case_string(case: &SplitCase) -> String {
    match case {
        SplitCase::C3 { boundary } if *boundary != DEFAULT_C3_BOUNDARY => format!("C3@{boundary}"),
        other => other.name().to_string(),
    }
}

mod case_list {
    use super::*;

    pub fn serialize<S: Serializer>(cases: &[SplitCase], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(cases.iter().map(case_string))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<SplitCase>, D::Error> {
        let names = Vec::<String>::deserialize(d)?;
        names.iter().map(|n| n.parse().map_err(serde::de::Error::custom)).collect()
    }
}

mod case_one {
    use super::*;

    pub fn serialize<S: Serializer>(case: &SplitCase, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&case_string(case))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<SplitCase, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub data: DataSource,
    /// Terrain used for α targets and replay; defaults to the synthetic
    /// generator's terrain, or the standard test bed for dataset files.
    pub terrain: Option<Terrain>,
    #[serde(with = "case_list")]
    pub cases: Vec<SplitCase>,
    pub sweep: Sweep,
    /// Trainer settings; the seed fields are replaced per unit.
    pub neat: NeatConfig,
    pub fga: FgaConfig,
    pub seeds: Vec<u64>,
    pub output_dir: Option<PathBuf>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            data: DataSource::Synth(GenConfig::default()),
            terrain: None,
            cases: SplitCase::all().to_vec(),
            sweep: Sweep::default(),
            neat: NeatConfig { population_size: 50, generations: 30, ..NeatConfig::default() },
            fga: FgaConfig { population_size: 30, generations: 30, ..FgaConfig::default() },
            seeds: vec![1],
            output_dir: None,
        }
    }
}

impl StudyConfig {
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg: StudyConfig = serde_json::from_str(&text)?;
        // relative dataset paths are taken from the config file's directory
        if let (DataSource::Dataset(p), Some(dir)) = (&mut cfg.data, path.parent()) {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.cases.is_empty() {
            return Err(ExperimentError::Config("no split cases".into()));
        }
        if self.seeds.is_empty() {
            return Err(ExperimentError::Config("no seeds".into()));
        }
        enumerate_configs(&self.sweep)?;
        self.neat.validate()?;
        self.fga.validate()?;
        if let DataSource::Synth(g) = &self.data {
            g.validate()?;
        }
        Ok(())
    }

    pub fn terrain(&self) -> Terrain {
        match (&self.terrain, &self.data) {
            (Some(t), _) => t.clone(),
            (None, DataSource::Synth(g)) => g.terrain.clone(),
            (None, DataSource::Dataset(_)) => crate::synthgen::default_terrain(),
        }
    }

    /// Loads or generates the study dataset.
    pub fn dataset(&self) -> Result<Dataset, ExperimentError> {
        Ok(match &self.data {
            DataSource::Dataset(path) => crate::dataset::load_dataset(path)?,
            DataSource::Synth(g) => crate::synthgen::generate_dataset(g)?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Beta,
    Omega,
}

impl Level {
    pub fn name(self) -> &'static str {
        match self {
            Level::Beta => "beta",
            Level::Omega => "omega",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Validation,
}

impl SplitName {
    pub fn name(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Validation => "validation",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub beta: LevelMetrics,
    pub omega: LevelMetrics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentResult {
    pub config: AgentConfig,
    /// Position of the configuration in its sensor's sweep order.
    pub config_index: usize,
    pub train: SplitMetrics,
    pub validation: SplitMetrics,
    /// α replayed on the validation positions.
    pub alpha: AlphaReplay,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocEntry {
    /// `VS_beta`, `VS_omega` (the agent's best configuration),
    /// `best_omega` or `worst_omega`.
    pub tag: String,
    pub methods: String,
    pub split: SplitName,
    pub curve: RocCurve,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemRow {
    pub methods: String,
    pub train_acc: f64,
    pub validation_acc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    #[serde(with = "case_one")]
    pub case: SplitCase,
    pub seed: u64,
    pub train_ids: Vec<u64>,
    pub validation_ids: Vec<u64>,
    pub agents: Vec<AgentResult>,
    /// Index into `agents` of each sensor's best configuration.
    pub best_per_agent: Vec<usize>,
    pub best_omega: usize,
    pub worst_omega: usize,
    pub system: Vec<SystemRow>,
    pub roc: Vec<RocEntry>,
}

impl CaseResult {
    pub fn best(&self) -> &AgentResult {
        &self.agents[self.best_omega]
    }

    pub fn worst(&self) -> &AgentResult {
        &self.agents[self.worst_omega]
    }

    /// |train AUC - validation AUC| of the best Ω model.
    pub fn best_omega_gap(&self) -> f64 {
        let b = self.best();
        (b.train.omega.auc - b.validation.omega.auc).abs()
    }

    /// One β AUC per sensor (β is shared across configurations).
    pub fn beta_aucs(&self, split: SplitName) -> Vec<f64> {
        self.best_per_agent
            .iter()
            .map(|&i| {
                let m = &self.agents[i];
                match split {
                    SplitName::Train => m.train.beta.auc,
                    SplitName::Validation => m.validation.beta.auc,
                }
            })
            .collect()
    }

    pub fn omega_aucs(&self, split: SplitName) -> Vec<f64> {
        self.agents
            .iter()
            .map(|a| match split {
                SplitName::Train => a.train.omega.auc,
                SplitName::Validation => a.validation.omega.auc,
            })
            .collect()
    }
}

/// Box-plot summary of AUC values for one case, level and split, pooled
/// over seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AucSummary {
    #[serde(with = "case_one")]
    pub case: SplitCase,
    pub level: Level,
    pub split: SplitName,
    pub n: usize,
    pub mean: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl AucSummary {
    fn of(case: SplitCase, level: Level, split: SplitName, mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        let n = values.len();
        AucSummary {
            case,
            level,
            split,
            n,
            mean: values.iter().sum::<f64>() / n as f64,
            min: values[0],
            q1: quantile(&values, 0.25),
            median: quantile(&values, 0.5),
            q3: quantile(&values, 0.75),
            max: values[n - 1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyResults {
    pub format: String,
    pub cases: Vec<CaseResult>,
    pub auc_summary: Vec<AucSummary>,
}

impl StudyResults {
    pub fn summary(&self, case: &str, level: Level, split: SplitName) -> Option<&AucSummary> {
        self.auc_summary.iter().find(|s| s.case.name() == case && s.level == level && s.split == split)
    }
}

/// Ordering used for "best accuracy" selection: higher validation Ω ACC,
/// then lower validation Ω RMSE, then earlier sensor and configuration.
fn rank(a: &AgentResult, b: &AgentResult) -> Ordering {
    b.validation
        .omega
        .acc
        .total_cmp(&a.validation.omega.acc)
        .then(a.validation.omega.rmse.total_cmp(&b.validation.omega.rmse))
        .then(a.config.sensor.index().cmp(&b.config.sensor.index()))
        .then(a.config_index.cmp(&b.config_index))
}

/// Index of the best entry under the selection order; independent of the
/// order of `entries`.
pub fn select_best(entries: &[AgentResult]) -> Option<usize> {
    (0..entries.len()).min_by(|&i, &j| rank(&entries[i], &entries[j]))
}

fn select_worst(entries: &[AgentResult]) -> usize {
    (0..entries.len())
        .min_by(|&i, &j| {
            let (a, b) = (&entries[i], &entries[j]);
            a.validation
                .omega
                .auc
                .total_cmp(&b.validation.omega.auc)
                .then(a.config.sensor.index().cmp(&b.config.sensor.index()))
                .then(a.config_index.cmp(&b.config_index))
        })
        .expect("nonempty")
}

/// Trainer seed of one case x seed unit.
pub fn unit_seed(case: &SplitCase, seed: u64) -> u64 {
    let tag = match case {
        SplitCase::C1 => 1,
        SplitCase::C2 => 2,
        SplitCase::C3 { boundary } => 3 ^ boundary.to_bits().rotate_left(8),
    };
    derive_seed(seed, &[tag])
}

// Seed stream for α replay.
const STREAM_REPLAY: u64 = 6;

/// Trains and evaluates every configuration for one case and seed.
pub fn run_unit(
    dataset: &Dataset,
    terrain: &Terrain,
    case: SplitCase,
    seed: u64,
    cfg: &StudyConfig,
) -> Result<CaseResult, ExperimentError> {
    let (train, validation) = split(dataset, case)?;
    let per_sensor = enumerate_configs(&cfg.sweep)?;
    let configs: Vec<AgentConfig> = per_sensor.concat();
    let unit_seed = unit_seed(&case, seed);
    log::info!("{case} seed {seed}: training {} configurations on {} samples", configs.len(), train.len());
    let training = train_agents(&train, &configs, &cfg.neat, &cfg.fga, unit_seed, terrain)?;
    if let Some(leak) = validation.samples().iter().find(|s| training.seen_ids.contains(&s.id)) {
        return Err(ExperimentError::Leak(leak.id));
    }
    let on_train = evaluate(&training.agents, &train)?;
    let on_validation = evaluate(&training.agents, &validation)?;

    let per = per_sensor[0].len();
    let agents: Vec<AgentResult> = training
        .agents
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let mut rng = rng::seeded(derive_seed(unit_seed, &[STREAM_REPLAY, i as u64]));
            Ok(AgentResult {
                config: a.config,
                config_index: i % per,
                train: SplitMetrics { beta: on_train.agents[i].beta, omega: on_train.agents[i].omega },
                validation: SplitMetrics { beta: on_validation.agents[i].beta, omega: on_validation.agents[i].omega },
                alpha: alpha_replay(terrain, &validation, a.config.sensor, &a.alpha_policy, &mut rng)?,
            })
        })
        .collect::<Result<_, ExperimentError>>()?;

    let best_per_agent: Vec<usize> = SensorKind::ALL
        .iter()
        .map(|&k| {
            let offset = k.index() * per;
            offset + select_best(&agents[offset..offset + per]).expect("nonempty sweep")
        })
        .collect();
    let best_omega = select_best(&agents).expect("nonempty sweep");
    let worst_omega = select_worst(&agents);

    let curves = |eval: &Evaluation, split: SplitName| -> Result<Vec<RocEntry>, ExperimentError> {
        let mut out = Vec::new();
        for (k, &i) in best_per_agent.iter().enumerate() {
            let sensor = SensorKind::ALL[k];
            let methods = agents[i].config.methods();
            out.push(RocEntry {
                tag: format!("{sensor}_beta"),
                methods: methods.clone(),
                split,
                curve: roc(&eval.agents[i].beta_scores, &eval.labels)?,
            });
            out.push(RocEntry {
                tag: format!("{sensor}_omega"),
                methods,
                split,
                curve: roc(&eval.agents[i].omega_scores, &eval.labels)?,
            });
        }
        for (tag, i) in [("best_omega", best_omega), ("worst_omega", worst_omega)] {
            out.push(RocEntry {
                tag: tag.into(),
                methods: agents[i].config.to_string(),
                split,
                curve: roc(&eval.agents[i].omega_scores, &eval.labels)?,
            });
        }
        Ok(out)
    };
    let mut roc_entries = curves(&on_train, SplitName::Train)?;
    roc_entries.extend(curves(&on_validation, SplitName::Validation)?);

    let system = (0..on_train.system_acc.len())
        .map(|j| SystemRow {
            methods: per_sensor[0][j].methods(),
            train_acc: on_train.system_acc[j],
            validation_acc: on_validation.system_acc[j],
        })
        .collect();

    Ok(CaseResult {
        case,
        seed,
        train_ids: on_train.ids,
        validation_ids: on_validation.ids,
        agents,
        best_per_agent,
        best_omega,
        worst_omega,
        system,
        roc: roc_entries,
    })
}

/// Runs every case x seed unit (concurrently) and pools AUC distributions
/// per case. Results are ordered by case, then seed.
pub fn run_study(dataset: &Dataset, cfg: &StudyConfig) -> Result<StudyResults, ExperimentError> {
    cfg.validate()?;
    let terrain = cfg.terrain();
    let units: Vec<(SplitCase, u64)> = cfg.cases.iter().flat_map(|&c| cfg.seeds.iter().map(move |&s| (c, s))).collect();
    let cases: Vec<CaseResult> =
        units.par_iter().map(|&(case, seed)| run_unit(dataset, &terrain, case, seed, cfg)).collect::<Result<_, _>>()?;

    let mut auc_summary = Vec::new();
    for case in &cfg.cases {
        let of_case: Vec<&CaseResult> = cases.iter().filter(|r| r.case == *case).collect();
        for level in [Level::Beta, Level::Omega] {
            for split in [SplitName::Train, SplitName::Validation] {
                let values: Vec<f64> = of_case
                    .iter()
                    .flat_map(|r| match level {
                        Level::Beta => r.beta_aucs(split),
                        Level::Omega => r.omega_aucs(split),
                    })
                    .collect();
                auc_summary.push(AucSummary::of(*case, level, split, values));
            }
        }
    }
    Ok(StudyResults { format: STUDY_FORMAT.into(), cases, auc_summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::MethodSymbol;

    fn entry(sensor: usize, index: usize, acc: f64, rmse: f64) -> AgentResult {
        let m = LevelMetrics { acc, rmse, auc: 0.5 };
        AgentResult {
            config: AgentConfig {
                sensor: SensorKind::ALL[sensor],
                alpha: MethodSymbol::P,
                beta: MethodSymbol::N,
                omega: MethodSymbol::V,
            },
            config_index: index,
            train: SplitMetrics { beta: m, omega: m },
            validation: SplitMetrics { beta: m, omega: m },
            alpha: AlphaReplay { mean_proximity: 0.0, neutral_proximity: 0.0, mean_angle_error: 0.0 },
        }
    }

    #[test]
    fn selection_tie_breaks() {
        let list = vec![entry(0, 0, 0.8, 0.3), entry(0, 1, 0.9, 0.4), entry(1, 0, 0.9, 0.2), entry(2, 0, 0.9, 0.2)];
        assert_eq!(select_best(&list), Some(2));
        let mut rev = list.clone();
        rev.reverse();
        assert_eq!(rev[select_best(&rev).unwrap()], list[2]);
        assert_eq!(select_best(&[]), None);
    }

    #[test]
    fn quantiles_interpolate() {
        let s = AucSummary::of(SplitCase::C1, Level::Beta, SplitName::Train, vec![0.4, 0.1, 0.3, 0.2]);
        assert_eq!((s.min, s.max), (0.1, 0.4));
        assert!((s.median - 0.25).abs() < 1e-12);
        assert!((s.q1 - 0.175).abs() < 1e-12);
    }

    #[test]
    fn config_json_round_trip() {
        let cfg =
            StudyConfig { cases: vec![SplitCase::C1, SplitCase::C3 { boundary: 400.0 }], ..StudyConfig::default() };
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"C3@400\""));
        let back: StudyConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert!(serde_json::from_str::<StudyConfig>("{\"bogus\": 1}").is_err());
    }
}
