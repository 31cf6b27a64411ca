use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fit::PowerLawFit;

/// Version of the serialized report layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedFit {
    pub name: String,
    pub fit: PowerLawFit,
}

/// One declared tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Largest truncation leakage seen in any trial.
    pub max_leakage: f64,
    /// Trials whose leakage exceeded the flag threshold.
    pub flagged_trials: u64,
    /// Flagged trials left out of fitted quantities.
    pub excluded_from_fits: u64,
}

impl Diagnostics {
    pub fn record_leakage(&mut self, leakage: f64, threshold: f64) -> bool {
        self.max_leakage = self.max_leakage.max(leakage);
        let flagged = leakage > threshold;
        if flagged {
            self.flagged_trials += 1;
        }
        flagged
    }
}

/// Outcome of one experiment. Contains nothing that depends on timing or
/// scheduling, so identical configuration and seed give identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: String,
    pub seed: u64,
    pub config: Value,
    pub tables: Vec<Table>,
    pub fits: Vec<NamedFit>,
    pub checks: Vec<Check>,
    pub diagnostics: Diagnostics,
    pub passed: bool,
}

impl ExperimentReport {
    pub fn new<C: Serialize>(experiment: &str, seed: u64, config: &C) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.into(),
            seed,
            config: serde_json::to_value(config).expect("config serializes"),
            tables: Vec::new(),
            fits: Vec::new(),
            checks: Vec::new(),
            diagnostics: Diagnostics::default(),
            passed: true,
        }
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.passed &= passed;
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail,
        });
    }

    pub fn fit(&mut self, name: &str, fit: PowerLawFit) {
        self.fits.push(NamedFit {
            name: name.into(),
            fit,
        });
    }

    pub fn check_named(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn table_named(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
        write_csv(&mut w, self).map_err(|e| Error::Config(e.to_string()))?;
        into_string(w)
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn write_csv(w: &mut csv::Writer<Vec<u8>>, r: &ExperimentReport) -> csv::Result<()> {
    w.write_record(["#report", &r.experiment])?;
    w.write_record(["schema_version", &r.schema_version.to_string()])?;
    w.write_record(["seed", &r.seed.to_string()])?;
    w.write_record(["passed", &r.passed.to_string()])?;
    w.write_record(["config", &r.config.to_string()])?;
    for t in &r.tables {
        w.write_record(["#table", &t.name])?;
        w.write_record(&t.columns)?;
        for row in &t.rows {
            w.write_record(row.iter().map(cell))?;
        }
    }
    w.write_record(["#fits"])?;
    w.write_record(["name", "slope", "intercept", "slope_se", "ci95_low", "ci95_high", "points"])?;
    for f in &r.fits {
        let nums = [f.fit.slope, f.fit.intercept, f.fit.slope_se, f.fit.ci95.0, f.fit.ci95.1];
        let mut rec = vec![f.name.clone()];
        rec.extend(nums.iter().map(|x| cell(&serde_json::json!(x))));
        rec.push(f.fit.points.to_string());
        w.write_record(rec)?;
    }
    w.write_record(["#checks"])?;
    w.write_record(["name", "passed", "detail"])?;
    for c in &r.checks {
        w.write_record([&c.name, &c.passed.to_string(), &c.detail])?;
    }
    w.write_record(["#diagnostics"])?;
    w.write_record(["max_leakage", "flagged_trials", "excluded_from_fits"])?;
    let d = &r.diagnostics;
    w.write_record([
        cell(&serde_json::json!(d.max_leakage)),
        d.flagged_trials.to_string(),
        d.excluded_from_fits.to_string(),
    ])?;
    Ok(())
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
}

/// Several reports serialized together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSet {
    pub schema_version: u32,
    pub seed: u64,
    pub passed: bool,
    pub reports: Vec<ExperimentReport>,
}

impl ReportSet {
    pub fn new(seed: u64, reports: Vec<ExperimentReport>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed,
            passed: reports.iter().all(|r| r.passed),
            reports,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.reports {
            out.push_str(&r.to_csv()?);
        }
        Ok(out)
    }
}
