use std::fs;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::study::{case_string, CaseResult, Level, SplitName, StudyResults, STUDY_FORMAT};
use super::ExperimentError;
use crate::dataset::SensorKind;
use crate::metrics::MetricsError;

/// One row of a per-case summary table. `best_*` flags mark the column's
/// best value (max for ACC and AUC, min for RMSE).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub agent: SensorKind,
    pub level: Level,
    pub methods: String,
    pub train_acc: f64,
    pub train_rmse: f64,
    pub train_auc: f64,
    pub validation_acc: f64,
    pub validation_rmse: f64,
    pub validation_auc: f64,
    pub best_train_acc: bool,
    pub best_train_rmse: bool,
    pub best_train_auc: bool,
    pub best_validation_acc: bool,
    pub best_validation_rmse: bool,
    pub best_validation_auc: bool,
}

/// β and best-Ω rows for each agent, flagged per column.
pub fn summary_rows(result: &CaseResult) -> Vec<SummaryRow> {
    let mut rows = Vec::with_capacity(10);
    for (k, &i) in result.best_per_agent.iter().enumerate() {
        let a = &result.agents[i];
        for level in [Level::Beta, Level::Omega] {
            let (t, v) = match level {
                Level::Beta => (a.train.beta, a.validation.beta),
                Level::Omega => (a.train.omega, a.validation.omega),
            };
            rows.push(SummaryRow {
                agent: SensorKind::ALL[k],
                level,
                methods: a.config.methods(),
                train_acc: t.acc,
                train_rmse: t.rmse,
                train_auc: t.auc,
                validation_acc: v.acc,
                validation_rmse: v.rmse,
                validation_auc: v.auc,
                best_train_acc: false,
                best_train_rmse: false,
                best_train_auc: false,
                best_validation_acc: false,
                best_validation_rmse: false,
                best_validation_auc: false,
            });
        }
    }
    type Column = (fn(&SummaryRow) -> f64, fn(&mut SummaryRow) -> &mut bool, bool);
    let columns: [Column; 6] = [
        (|r| r.train_acc, |r| &mut r.best_train_acc, true),
        (|r| r.train_rmse, |r| &mut r.best_train_rmse, false),
        (|r| r.train_auc, |r| &mut r.best_train_auc, true),
        (|r| r.validation_acc, |r| &mut r.best_validation_acc, true),
        (|r| r.validation_rmse, |r| &mut r.best_validation_rmse, false),
        (|r| r.validation_auc, |r| &mut r.best_validation_auc, true),
    ];
    for (get, flag, maximize) in columns {
        let values: Vec<f64> = rows.iter().map(get).collect();
        let best = if maximize {
            values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        } else {
            values.iter().copied().fold(f64::INFINITY, f64::min)
        };
        for (row, v) in rows.iter_mut().zip(values) {
            *flag(row) = v == best;
        }
    }
    rows
}

#[derive(Serialize)]
struct AucRow<'a> {
    seed: u64,
    agent: SensorKind,
    methods: &'a str,
    level: Level,
    split: SplitName,
    auc: f64,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<fs::File>>, ExperimentError> {
    Ok(csv::Writer::from_writer(BufWriter::new(fs::File::create(path)?)))
}

fn csv_err(e: csv::Error) -> ExperimentError {
    ExperimentError::Metrics(MetricsError::Csv(e))
}

/// Writes summary tables, ROC curves, AUC distributions and system
/// accuracies under `out_dir`.
pub fn report(results: &StudyResults, out_dir: &Path) -> Result<(), ExperimentError> {
    if results.cases.is_empty() {
        return Err(ExperimentError::Config("no results to report".into()));
    }
    fs::create_dir_all(out_dir)?;
    for r in &results.cases {
        let unit = format!("{}_s{}", case_string(&r.case), r.seed);

        let mut w = csv_writer(&out_dir.join(format!("summary_{unit}.csv")))?;
        for row in summary_rows(r) {
            w.serialize(row).map_err(csv_err)?;
        }
        w.flush()?;

        for entry in &r.roc {
            let path = out_dir.join(format!("roc_{unit}_{}_{}.csv", entry.tag, entry.split.name()));
            entry.curve.write_csv(BufWriter::new(fs::File::create(path)?))?;
        }

        let mut w = csv_writer(&out_dir.join(format!("system_{unit}.csv")))?;
        for row in &r.system {
            w.serialize(row).map_err(csv_err)?;
        }
        w.flush()?;
    }

    let mut cases: Vec<_> = results.cases.iter().map(|r| r.case).collect();
    cases.dedup();
    for case in cases {
        let mut w = csv_writer(&out_dir.join(format!("auc_{}.csv", case_string(&case))))?;
        for r in results.cases.iter().filter(|r| r.case == case) {
            for (k, &i) in r.best_per_agent.iter().enumerate() {
                let a = &r.agents[i];
                for (split, m) in [(SplitName::Train, &a.train), (SplitName::Validation, &a.validation)] {
                    let row = AucRow {
                        seed: r.seed,
                        agent: SensorKind::ALL[k],
                        methods: "-",
                        level: Level::Beta,
                        split,
                        auc: m.beta.auc,
                    };
                    w.serialize(row).map_err(csv_err)?;
                }
            }
            for a in &r.agents {
                let methods = a.config.methods();
                for (split, m) in [(SplitName::Train, &a.train), (SplitName::Validation, &a.validation)] {
                    let row = AucRow {
                        seed: r.seed,
                        agent: a.config.sensor,
                        methods: &methods,
                        level: Level::Omega,
                        split,
                        auc: m.omega.auc,
                    };
                    w.serialize(row).map_err(csv_err)?;
                }
            }
        }
        w.flush()?;
    }

    let mut w = csv_writer(&out_dir.join("auc_summary.csv"))?;
    w.write_record(["case", "level", "split", "n", "mean", "min", "q1", "median", "q3", "max"]).map_err(csv_err)?;
    for s in &results.auc_summary {
        w.write_record([
            case_string(&s.case),
            s.level.name().into(),
            s.split.name().into(),
            s.n.to_string(),
            s.mean.to_string(),
            s.min.to_string(),
            s.q1.to_string(),
            s.median.to_string(),
            s.q3.to_string(),
            s.max.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results(results: &StudyResults, path: &Path) -> Result<(), ExperimentError> {
    let mut text = serde_json::to_string_pretty(results)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<StudyResults, ExperimentError> {
    let results: StudyResults = serde_json::from_str(&fs::read_to_string(path)?)?;
    if results.format != STUDY_FORMAT {
        return Err(ExperimentError::Config(format!("expected `{STUDY_FORMAT}` results, found `{}`", results.format)));
    }
    Ok(results)
}
