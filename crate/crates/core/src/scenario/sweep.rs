use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use super::config::ScenarioConfig;
use super::report::{ComparisonReport, Status};
use super::run::{run_scenario, ScenarioRun};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("unknown sweep parameter `{0}`")]
    UnknownParam(String),
    #[error("no sweep values given")]
    NoValues,
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub const SUMMARY_HEADER: [&str; 11] = [
    "param",
    "value",
    "status",
    "exit_code",
    "dev_x",
    "dev_q0",
    "dev_a_re",
    "dev_a_im",
    "resid_max",
    "energy_drift",
    "error",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: String,
    pub value: f64,
    pub report: ComparisonReport,
}

impl SweepRow {
    fn fields(&self) -> [String; 11] {
        let num = |v: Option<f64>| v.map(|v| format!("{v:?}")).unwrap_or_default();
        let dev = self.report.deviations;
        [
            self.param.clone(),
            format!("{:?}", self.value),
            self.report.status.as_str().to_string(),
            self.report.exit_code().to_string(),
            num(dev.map(|d| d.x)),
            num(dev.map(|d| d.q0)),
            num(dev.map(|d| d.a_re)),
            num(dev.map(|d| d.a_im)),
            num(self.report.max_residual()),
            num(self.report.energy_drift),
            self.report.error.clone().unwrap_or_default(),
        ]
    }

    pub fn dir_name(&self) -> String {
        format!("{}={:?}", self.param, self.value)
    }
}

fn run_one(template: &ScenarioConfig, param: &str, value: f64) -> ScenarioRun {
    let mut cfg = template.clone();
    let base = cfg.name.clone().unwrap_or_else(|| "scenario".into());
    cfg.name = Some(format!("{base}[{param}={value:?}]"));
    match cfg.set_param(param, value) {
        Ok(()) => run_scenario(&cfg),
        Err(e) => {
            let mut report = ComparisonReport::new(cfg.name.as_deref().unwrap_or_default());
            report.fail(Status::ConfigError, e);
            ScenarioRun { report, rows: Vec::new() }
        }
    }
}

/// Runs the template once per value (in parallel). With `out_dir`, each run
/// writes into `<param>=<value>/` and a `summary.csv` lists every row.
pub fn sweep(
    template: &ScenarioConfig,
    param: &str,
    values: &[f64],
    out_dir: Option<&Path>,
) -> Result<Vec<SweepRow>, SweepError> {
    if !template.has_param(param) {
        return Err(SweepError::UnknownParam(param.to_string()));
    }
    if values.is_empty() {
        return Err(SweepError::NoValues);
    }
    let runs: Vec<ScenarioRun> = values
        .par_iter()
        .map(|&v| run_one(template, param, v))
        .collect();
    let rows: Vec<SweepRow> = values
        .iter()
        .zip(&runs)
        .map(|(&value, run)| SweepRow {
            param: param.to_string(),
            value,
            report: run.report.clone(),
        })
        .collect();

    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        for (row, run) in rows.iter().zip(&runs) {
            run.write(&dir.join(row.dir_name()))?;
        }
        fs::write(dir.join("summary.csv"), summary_csv(&rows))?;
    }
    Ok(rows)
}

pub fn summary_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER).expect("in-memory write");
    for row in rows {
        w.write_record(row.fields()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}
