use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cod2m::dataset::{self, DatasetError, SplitCase};
use cod2m::experiment::{self, ExperimentError, StudyConfig, Sweep};
use cod2m::metrics::MetricsError;
use cod2m::synthgen::{self, GenConfig, SynthError};
use thiserror::Error;

#[derive(Parser)]
#[command(name = "cod2m", version, about = "Cooperative multi-agent IED detection study harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a two-day campaign and write the dataset file.
    Generate {
        /// Generator configuration (JSON); built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train every swept configuration on one case's training split.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        /// Study configuration supplying the sweep and trainer settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "C1")]
        case: SplitCase,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        sweep: Option<Sweep>,
        /// Models directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score saved models on a dataset.
    Evaluate {
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every case x seed unit and write results plus report tables.
    Study {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replaces every seed in the configuration.
        #[arg(long)]
        seed: Option<u64>,
        /// Concurrent study units; all cores by default.
        #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
        jobs: Option<u16>,
        /// Comma list, e.g. `C1,C3@400`.
        #[arg(long, value_delimiter = ',')]
        cases: Option<Vec<SplitCase>>,
        /// `alpha/beta/omega` symbol lists, e.g. `P/N/*`.
        #[arg(long)]
        sweep: Option<Sweep>,
    },
    /// Rewrite report tables from a results file.
    Report {
        /// `results.json` or the directory holding it.
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn metrics_io(e: &MetricsError) -> bool {
    matches!(e, MetricsError::Csv(c) if c.is_io_error())
}

impl CliError {
    fn exit_code(&self) -> u8 {
        let io = match self {
            CliError::Usage(_) => return 1,
            CliError::Io(_) | CliError::Pool(_) => true,
            CliError::Dataset(e) => matches!(e, DatasetError::Io(_)),
            CliError::Synth(e) => matches!(e, SynthError::Io(_)),
            CliError::Experiment(e) => match e {
                ExperimentError::Io(_)
                | ExperimentError::Dataset(DatasetError::Io(_))
                | ExperimentError::Synth(SynthError::Io(_)) => true,
                ExperimentError::Metrics(m) => metrics_io(m),
                _ => false,
            },
        };
        if io {
            3
        } else {
            2
        }
    }
}

fn study_config(path: Option<&Path>) -> Result<StudyConfig, CliError> {
    Ok(match path {
        Some(p) => StudyConfig::load(p)?,
        None => StudyConfig::default(),
    })
}

fn generate(config: Option<&Path>, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let mut cfg = match config {
        Some(p) => GenConfig::load(p)?,
        None => GenConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let data = synthgen::generate_dataset(&cfg)?;
    dataset::save_dataset(&data, out)?;
    log::info!("wrote {} samples to {}", data.len(), out.display());
    Ok(())
}

fn train(
    data_path: &Path,
    config: Option<&Path>,
    case: SplitCase,
    seed: Option<u64>,
    sweep: Option<Sweep>,
    out: &Path,
) -> Result<(), CliError> {
    let mut cfg = study_config(config)?;
    if let Some(s) = sweep {
        cfg.sweep = s;
    }
    cfg.validate()?;
    let seed = seed.unwrap_or(cfg.seeds[0]);
    let data = dataset::load_dataset(data_path)?;
    let (train, _) = dataset::split(&data, case)?;
    let configs = experiment::enumerate_configs(&cfg.sweep)?.concat();
    log::info!("{case} seed {seed}: training {} configurations on {} samples", configs.len(), train.len());
    let training = experiment::train_agents(
        &train,
        &configs,
        &cfg.neat,
        &cfg.fga,
        experiment::unit_seed(&case, seed),
        &cfg.terrain(),
    )?;
    experiment::save_models(&training.agents, out)?;
    Ok(())
}

fn evaluate(models: &Path, data_path: &Path, out: &Path) -> Result<(), CliError> {
    let agents = experiment::load_models(models)?;
    let data = dataset::load_dataset(data_path)?;
    let eval = experiment::evaluate(&agents, &data)?;
    fs::create_dir_all(out)?;

    let mut w = csv::Writer::from_path(out.join("metrics.csv")).map_err(csv_err)?;
    w.write_record(["agent", "methods", "level", "acc", "rmse", "auc"]).map_err(csv_err)?;
    for e in &eval.agents {
        let c = &agents[e.agent].config;
        for (level, m) in [("beta", &e.beta), ("omega", &e.omega)] {
            w.write_record([
                c.sensor.to_string(),
                c.methods(),
                level.into(),
                m.acc.to_string(),
                m.rmse.to_string(),
                m.auc.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out.join("scores.csv")).map_err(csv_err)?;
    w.write_record(["id", "label", "agent", "methods", "beta", "omega"]).map_err(csv_err)?;
    for e in &eval.agents {
        let c = &agents[e.agent].config;
        for (i, id) in eval.ids.iter().enumerate() {
            w.write_record([
                id.to_string(),
                u8::from(eval.labels[i]).to_string(),
                c.sensor.to_string(),
                c.methods(),
                e.beta_scores[i].to_string(),
                e.omega_scores[i].to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out.join("system.csv")).map_err(csv_err)?;
    w.write_record(["round", "acc"]).map_err(csv_err)?;
    for (j, acc) in eval.system_acc.iter().enumerate() {
        w.write_record([j.to_string(), acc.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Experiment(ExperimentError::Metrics(MetricsError::Csv(e)))
}

struct StudyArgs {
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    jobs: Option<u16>,
    cases: Option<Vec<SplitCase>>,
    sweep: Option<Sweep>,
}

fn study(args: StudyArgs) -> Result<(), CliError> {
    let mut cfg = study_config(args.config.as_deref())?;
    if let Some(s) = args.seed {
        cfg.seeds = vec![s];
        if let experiment::DataSource::Synth(g) = &mut cfg.data {
            g.seed = s;
        }
    }
    if let Some(c) = args.cases {
        cfg.cases = c;
    }
    if let Some(s) = args.sweep {
        cfg.sweep = s;
    }
    let out = args
        .out
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| CliError::Usage("study needs --out or an output_dir in the configuration".into()))?;
    cfg.validate()?;
    let data = cfg.dataset()?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.jobs {
        pool = pool.num_threads(n.into());
    }
    let results = pool.build()?.install(|| experiment::run_study(&data, &cfg))?;

    fs::create_dir_all(&out)?;
    experiment::write_results(&results, &out.join("results.json"))?;
    experiment::report(&results, &out)?;
    log::info!("wrote {} units to {}", results.cases.len(), out.display());
    Ok(())
}

fn report(results: &Path, out: &Path) -> Result<(), CliError> {
    let file = if results.is_dir() { results.join("results.json") } else { results.to_path_buf() };
    let results = experiment::read_results(&file)?;
    experiment::report(&results, out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { config, out, seed } => generate(config.as_deref(), &out, seed),
        Command::Train { dataset, config, case, seed, sweep, out } => {
            train(&dataset, config.as_deref(), case, seed, sweep, &out)
        }
        Command::Evaluate { models, dataset, out } => evaluate(&models, &dataset, &out),
        Command::Study { config, out, seed, jobs, cases, sweep } => {
            study(StudyArgs { config, out, seed, jobs, cases, sweep })
        }
        Command::Report { results, out } => report(&results, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COD2M_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
