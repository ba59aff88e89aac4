//! Experiment reports and their JSON / CSV forms.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::stats;

pub const SCHEMA_VERSION: u32 = 1;
pub const FAMILY_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Calibration {
    /// exact identity or closed form
    Exact,
    /// target taken from the asymptotic theory
    Theory,
    /// target computed here by an independent route
    Derived,
    /// threshold chosen from pilot runs, not from theory
    Calibrated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    /// passes when `p > threshold`
    PValue,
    /// passes when `|estimate - target| <= threshold * se`; the normal
    /// two-sided p-value joins the Holm family at level `2 Φ̄(threshold)`
    WithinSigma,
    /// passes when `|estimate - target| <= threshold`
    Tolerance,
    /// passes when `estimate < threshold`
    Below,
    /// passes when `estimate > threshold`
    Above,
    /// boolean check
    Check,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub name: String,
    pub kind: TestKind,
    pub estimate: f64,
    pub target: Option<f64>,
    pub se: Option<f64>,
    pub p_value: Option<f64>,
    pub p_adjusted: Option<f64>,
    pub threshold: f64,
    pub pass: bool,
    pub calibration: Calibration,
    pub detail: String,
}

impl TestResult {
    fn base(name: &str, kind: TestKind, estimate: f64, threshold: f64, pass: bool, calibration: Calibration) -> Self {
        TestResult {
            name: name.to_string(),
            kind,
            estimate,
            target: None,
            se: None,
            p_value: None,
            p_adjusted: None,
            threshold,
            pass,
            calibration,
            detail: String::new(),
        }
    }

    pub fn p_value(name: &str, statistic: f64, p: f64, alpha: f64, calibration: Calibration) -> Self {
        let mut t = Self::base(name, TestKind::PValue, statistic, alpha, p > alpha, calibration);
        t.p_value = Some(p);
        t
    }

    pub fn within_sigma(name: &str, estimate: f64, se: f64, target: f64, k: f64, calibration: Calibration) -> Self {
        let ok = stats::within_sigma(estimate, se, target, k);
        let mut t = Self::base(name, TestKind::WithinSigma, estimate, k, ok, calibration);
        t.target = Some(target);
        t.se = Some(se);
        t.p_value = Some(if se > 0.0 {
            stats::normal_two_sided((estimate - target) / se)
        } else if estimate == target {
            1.0
        } else {
            0.0
        });
        t
    }

    pub fn tolerance(name: &str, estimate: f64, target: f64, tol: f64, calibration: Calibration) -> Self {
        let ok = (estimate - target).abs() <= tol;
        let mut t = Self::base(name, TestKind::Tolerance, estimate, tol, ok, calibration);
        t.target = Some(target);
        t
    }

    pub fn below(name: &str, estimate: f64, bound: f64, calibration: Calibration) -> Self {
        Self::base(name, TestKind::Below, estimate, bound, estimate < bound, calibration)
    }

    pub fn above(name: &str, estimate: f64, bound: f64, calibration: Calibration) -> Self {
        Self::base(name, TestKind::Above, estimate, bound, estimate > bound, calibration)
    }

    pub fn check(name: &str, pass: bool, calibration: Calibration) -> Self {
        Self::base(name, TestKind::Check, pass as u8 as f64, 1.0, pass, calibration)
    }

    fn in_family(&self) -> bool {
        matches!(self.kind, TestKind::PValue | TestKind::WithinSigma)
    }

    /// Per-test significance level.
    pub fn level(&self) -> f64 {
        match self.kind {
            TestKind::WithinSigma => stats::normal_two_sided(self.threshold),
            _ => self.threshold,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub se: f64,
    pub median: f64,
    pub iqr: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        if finite.is_empty() {
            return Summary {
                count: 0,
                mean: f64::NAN,
                se: f64::NAN,
                median: f64::NAN,
                iqr: f64::NAN,
            };
        }
        let (mean, se) = stats::mean_se(&finite);
        Summary {
            count: finite.len(),
            mean,
            se,
            median: stats::median(&finite),
            iqr: stats::iqr(&finite),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatSeries {
    pub name: String,
    pub summary: Summary,
    /// one value per replica, in replica order
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub master: u64,
    /// stream labels used, each keyed by replica id
    pub streams: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub name: String,
    pub params: BTreeMap<String, Value>,
    pub seeds: Seeds,
    pub stats: Vec<StatSeries>,
    pub tests: Vec<TestResult>,
    pub multiple_testing: String,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl ExperimentReport {
    pub fn new(name: &str, seed: u64) -> Self {
        ExperimentReport {
            schema: SCHEMA_VERSION,
            name: name.to_string(),
            params: BTreeMap::new(),
            seeds: Seeds {
                master: seed,
                streams: Vec::new(),
            },
            stats: Vec::new(),
            tests: Vec::new(),
            multiple_testing: format!("holm, family alpha {FAMILY_ALPHA}"),
            notes: Vec::new(),
            pass: true,
        }
    }

    pub fn stream(&mut self, label: &str) {
        if !self.seeds.streams.iter().any(|s| s == label) {
            self.seeds.streams.push(label.to_string());
        }
    }

    pub fn add_stat(&mut self, name: &str, values: Vec<f64>) {
        self.stats.push(StatSeries {
            name: name.to_string(),
            summary: Summary::of(&values),
            values,
        });
    }

    pub fn add_test(&mut self, test: TestResult) {
        self.tests.push(test);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn test(&self, name: &str) -> Option<&TestResult> {
        self.tests.iter().find(|t| t.name == name)
    }

    pub fn stat(&self, name: &str) -> Option<&StatSeries> {
        self.stats.iter().find(|s| s.name == name)
    }

    /// Holm-adjust the p-value and within-sigma tests and recompute the
    /// overall verdict. Such a test passes when its adjusted p exceeds its
    /// level, capped at `FAMILY_ALPHA`; a differing raw verdict goes in
    /// `detail`.
    pub fn finalize(&mut self) {
        let idx: Vec<usize> = (0..self.tests.len())
            .filter(|&i| self.tests[i].in_family())
            .collect();
        let raw: Vec<f64> = idx.iter().map(|&i| self.tests[i].p_value.unwrap_or(0.0)).collect();
        let adj = stats::holm_adjust(&raw);
        for (&i, &a) in idx.iter().zip(&adj) {
            let t = &mut self.tests[i];
            let level = t.level();
            let raw_pass = t.p_value.unwrap_or(0.0) > level;
            t.p_adjusted = Some(a);
            t.pass = a > level.min(FAMILY_ALPHA);
            if raw_pass != t.pass && t.detail.is_empty() {
                t.detail = format!("unadjusted verdict {}", if raw_pass { "pass" } else { "fail" });
            }
        }
        self.pass = self.tests.iter().all(|t| t.pass);
    }

    /// Merge the tests and stats of `other` under the prefix `other.name`.
    pub fn absorb(&mut self, other: &ExperimentReport) {
        for (k, v) in &other.params {
            self.params.insert(format!("{}.{k}", other.name), v.clone());
        }
        for s in &other.seeds.streams {
            if s.starts_with(&format!("{}/", other.name)) {
                self.stream(s);
            } else {
                self.stream(&format!("{}/{s}", other.name));
            }
        }
        for s in &other.stats {
            let mut s = s.clone();
            s.name = format!("{}.{}", other.name, s.name);
            self.stats.push(s);
        }
        for t in &other.tests {
            let mut t = t.clone();
            t.name = format!("{}.{}", other.name, t.name);
            t.p_adjusted = None;
            self.tests.push(t);
        }
        for n in &other.notes {
            self.notes.push(format!("{}: {n}", other.name));
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn csv_row_count(&self) -> usize {
        self.stats.iter().map(|s| s.values.len()).sum()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["replica_id", "statistic", "value"])?;
        for s in &self.stats {
            for (i, v) in s.values.iter().enumerate() {
                out.write_record([i.to_string(), s.name.clone(), v.to_string()])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Format> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "both" => Ok(Format::Both),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

/// Write `<dir>/<name>.json` and/or `<dir>/<name>.csv`.
pub fn emit(report: &ExperimentReport, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if matches!(format, Format::Json | Format::Both) {
        let path = dir.join(format!("{}.json", report.name));
        fs::write(&path, report.to_json()?)?;
        written.push(path);
    }
    if matches!(format, Format::Csv | Format::Both) {
        let path = dir.join(format!("{}.csv", report.name));
        report.write_csv(fs::File::create(&path)?)?;
        written.push(path);
    }
    Ok(written)
}
