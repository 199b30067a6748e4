use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;

use droplet_core::calculus::FlowTrace;
use droplet_core::io::{write_csv, CsvRow};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Writes result files tagged with the configuration hash and a seed.
pub struct Output {
    dir: PathBuf,
    hash: String,
    echo: Value,
}

impl Output {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        fs::create_dir_all(&cfg.output)?;
        Ok(Self { dir: cfg.output.clone(), hash: cfg.hash(), echo: cfg.echo() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn create(&self, name: &str) -> Result<BufWriter<fs::File>, CliError> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        Ok(BufWriter::new(fs::File::create(path)?))
    }

    fn tags(&self, seed: u64) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("config_hash".into(), Value::String(self.hash.clone()));
        m.insert("seed".into(), Value::from(seed));
        m
    }

    /// Pretty JSON object with `config_hash`, `seed` and the configuration echo appended.
    pub fn json<T: Serialize>(&self, name: &str, body: &T, seed: u64) -> Result<(), CliError> {
        let mut obj = match serde_json::to_value(body)? {
            Value::Object(m) => m,
            other => Map::from_iter([("value".to_string(), other)]),
        };
        obj.extend(self.tags(seed));
        obj.insert("config".into(), self.echo.clone());
        let mut text = serde_json::to_string_pretty(&Value::Object(obj))?;
        text.push('\n');
        fs::write(self.path(name), text)?;
        Ok(())
    }

    /// CSV with constant `config_hash` and `seed` columns.
    pub fn csv<R: CsvRow>(&self, name: &str, rows: &[R], seed: u64) -> Result<(), CliError> {
        let extra = [("config_hash", self.hash.clone()), ("seed", seed.to_string())];
        write_csv(rows, self.create(name)?, &extra)?;
        Ok(())
    }

    /// CSV whose rows carry their own seed; only `config_hash` is appended.
    pub fn csv_hashed<R: CsvRow>(&self, name: &str, rows: &[R]) -> Result<(), CliError> {
        write_csv(rows, self.create(name)?, &[("config_hash", self.hash.clone())])?;
        Ok(())
    }

    /// JSON-lines and CSV files of one flow trace.
    pub fn trace(&self, stem: &str, trace: &FlowTrace, seed: u64) -> Result<(), CliError> {
        let mut extra = self.tags(seed);
        extra.insert("Q".into(), Value::from(trace.params.q));
        trace.write_jsonl(self.create(&format!("{stem}.jsonl"))?, &extra)?;
        self.csv(&format!("{stem}.csv"), &trace.iterates, seed)
    }
}
