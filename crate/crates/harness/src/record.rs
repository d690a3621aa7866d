//! Persisted results: JSON records and CSV summary tables.

use std::fs;
use std::path::Path;
use std::time::Duration;

use serde::Serialize;

use crate::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::error::Result;

/// One sample-level record, tagged for replay.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Record<T> {
    pub seed: u64,
    pub config_hash: String,
    #[serde(flatten)]
    pub data: T,
}

/// Full output of an experiment. Wall-clock timing is kept out of this
/// structure so that replays serialize to identical bytes.
#[derive(Clone, Debug, Serialize)]
pub struct RunResult<T, S> {
    pub schema_version: u32,
    pub experiment: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub records: Vec<Record<T>>,
    pub summary: Vec<S>,
    pub checks: Vec<Check>,
}

/// A derived invariant evaluated on the results.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, detail: detail.into() }
    }
}

impl<T: Serialize, S: Serialize> RunResult<T, S> {
    pub fn new(experiment: &str, config: &ExperimentConfig) -> Self {
        RunResult {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.to_string(),
            config_hash: config.hash(),
            config: config.clone(),
            records: Vec::new(),
            summary: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, seed: u64, data: T) {
        self.records.push(Record { seed, config_hash: self.config_hash.clone(), data });
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, passed, detail));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn summary_csv(&self) -> Result<String> {
        csv_string(&self.summary)
    }

    /// Write `<name>.json` and `<name>.csv` into `dir`.
    pub fn write(&self, dir: &Path, name: &str) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{name}.json")), self.to_json()?)?;
        fs::write(dir.join(format!("{name}.csv")), self.summary_csv()?)?;
        Ok(())
    }
}

pub fn csv_string<S: Serialize>(rows: &[S]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Timing sidecar, written next to the records but never inside them.
#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub experiment: String,
    pub config_hash: String,
    pub seconds: f64,
}

impl Timing {
    pub fn new(experiment: &str, config: &ExperimentConfig, elapsed: Duration) -> Self {
        Timing { experiment: experiment.into(), config_hash: config.hash(), seconds: elapsed.as_secs_f64() }
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{name}.timing.json")), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        n: u32,
        value: f64,
    }

    #[test]
    fn records_carry_seed_and_hash() {
        let cfg = ExperimentConfig::default();
        let mut r: RunResult<Row, Row> = RunResult::new("demo", &cfg);
        r.push(7, Row { n: 4, value: 0.5 });
        r.summary.push(Row { n: 4, value: 0.5 });
        let json: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(json["records"][0]["seed"], 7);
        assert_eq!(json["records"][0]["config_hash"], cfg.hash());
        assert_eq!(json["records"][0]["n"], 4);
        assert_eq!(r.summary_csv().unwrap(), "n,value\n4,0.5\n");
    }
}
