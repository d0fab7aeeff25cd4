//! Experiment reports and the files written for them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentId, OutputFormat};
use crate::error::Result;
use crate::stats::{KsResult, SummaryRecord};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_GATE_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_TRUNCATION: i32 = 3;

/// `results.csv` columns, fixed per experiment.
pub fn columns(id: ExperimentId) -> &'static [&'static str] {
    match id {
        ExperimentId::E1 => &[
            "experiment",
            "seed",
            "delta",
            "barrier",
            "replicates",
            "k",
            "exact",
            "mc_estimate",
            "stderr",
            "pass",
        ],
        ExperimentId::E2 => &[
            "experiment",
            "seed",
            "check",
            "delta",
            "sample_size",
            "value",
            "reference",
            "threshold",
            "pass",
        ],
        ExperimentId::E3 => &[
            "experiment",
            "seed",
            "check",
            "delta",
            "n",
            "sample_size",
            "mc_mean",
            "ci_half_width",
            "excursion_derived",
            "paper_display",
            "pass",
        ],
        ExperimentId::E4 => &[
            "experiment",
            "seed",
            "c",
            "alpha",
            "n",
            "t",
            "sample_size",
            "ks_statistic",
            "p_value",
            "threshold",
            "pass",
        ],
        ExperimentId::E5 => &[
            "experiment",
            "seed",
            "c",
            "alpha",
            "n",
            "sample_size",
            "ks_slope_law",
            "ks_summed_slope_law",
            "median_chord_deviation",
            "median_drift_part",
            "sd_noise_part",
            "pass",
        ],
        ExperimentId::E6 => &[
            "experiment",
            "seed",
            "source",
            "kappa",
            "c",
            "alpha",
            "n",
            "h",
            "eps",
            "sample_size",
            "median",
            "ks_vs_walk",
            "p_value",
            "pass",
        ],
        ExperimentId::E7 => &[
            "experiment",
            "seed",
            "check",
            "delta",
            "m",
            "sample_size",
            "value",
            "reference",
            "threshold",
            "pass",
        ],
        ExperimentId::E8 => &[
            "experiment",
            "seed",
            "c",
            "cap",
            "h",
            "eps",
            "sample_size",
            "mean_density",
            "stderr",
            "z_score",
            "pass",
        ],
        ExperimentId::E9 => &[
            "experiment",
            "seed",
            "c",
            "alpha",
            "n",
            "visit_cap",
            "sample_size",
            "below_cap",
            "mismatches_below_cap",
            "cap_exceeded",
            "diverged_after_cap",
            "pass",
        ],
        ExperimentId::E10 => &[
            "experiment",
            "seed",
            "kappa",
            "c",
            "horizon",
            "h",
            "eps",
            "sample_size",
            "median_slope",
            "ks_slope_law",
            "ks_summed_slope_law",
            "flat_local_time_fraction",
            "pass",
        ],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn render(&self, out: &mut String) {
        match self {
            Cell::Int(v) => write!(out, "{v}").unwrap(),
            // 17 significant digits round-trip every f64.
            Cell::Float(v) => write!(out, "{v:.16e}").unwrap(),
            Cell::Text(s) => out.push_str(s),
            Cell::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Cell::Empty => {}
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(id: ExperimentId) -> Self {
        Table {
            columns: columns(id),
            rows: Vec::new(),
        }
    }

    /// Appends a row. Panics if the width is wrong: a schema bug, not a runtime condition.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width does not match {:?}",
            self.columns
        );
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                cell.render(&mut out);
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
    Holds,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gate {
    pub name: String,
    pub value: f64,
    pub threshold: Option<f64>,
    pub comparison: Comparison,
    pub passed: bool,
}

impl Gate {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Gate {
            name: name.into(),
            value,
            threshold: Some(threshold),
            comparison: Comparison::AtMost,
            passed: value <= threshold,
        }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Gate {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            threshold: None,
            comparison: Comparison::Holds,
            passed: ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedKs {
    pub label: String,
    /// Name of the reference law or sample.
    pub against: String,
    #[serde(flatten)]
    pub result: KsResult,
}

/// Replicates that ran into the horizon cap or stopped with a bias bound
/// above the configured budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncation {
    pub replicates: u64,
    pub truncated: u64,
    pub max_bias_bound: f64,
    pub budget: f64,
    pub exceeded: bool,
}

impl Truncation {
    pub fn merge(self, other: Truncation) -> Truncation {
        Truncation {
            replicates: self.replicates + other.replicates,
            truncated: self.truncated + other.truncated,
            max_bias_bound: self.max_bias_bound.max(other.max_bias_bound),
            budget: self.budget,
            exceeded: self.exceeded || other.exceeded,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub experiment: ExperimentId,
    pub seed: u64,
    pub table: Table,
    pub gates: Vec<Gate>,
    pub records: Vec<SummaryRecord>,
    pub ks: Vec<NamedKs>,
    /// Named outcomes that are not numbers, such as the better drift factor.
    pub findings: BTreeMap<String, String>,
    pub notes: Vec<String>,
    pub truncation: Option<Truncation>,
    pub plots: Vec<PlotSeries>,
}

impl ExperimentReport {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        ExperimentReport {
            experiment: cfg.experiment,
            seed: cfg.seed,
            table: Table::new(cfg.experiment),
            gates: Vec::new(),
            records: Vec::new(),
            ks: Vec::new(),
            findings: BTreeMap::new(),
            notes: Vec::new(),
            truncation: None,
            plots: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }

    pub fn failed_gates(&self) -> Vec<&str> {
        self.gates
            .iter()
            .filter(|g| !g.passed)
            .map(|g| g.name.as_str())
            .collect()
    }

    pub fn truncation_exceeded(&self) -> bool {
        self.truncation.is_some_and(|t| t.exceeded)
    }

    /// Truncation beyond the budget outranks gate failures.
    pub fn exit_code(&self) -> i32 {
        if self.truncation_exceeded() {
            EXIT_TRUNCATION
        } else if self.passed() {
            EXIT_PASS
        } else {
            EXIT_GATE_FAILURE
        }
    }

    pub fn add_ks(&mut self, label: impl Into<String>, against: impl Into<String>, result: KsResult) {
        self.ks.push(NamedKs {
            label: label.into(),
            against: against.into(),
            result,
        });
    }

    pub fn add_plot(&mut self, name: impl Into<String>, points: Vec<(f64, f64)>) {
        self.plots.push(PlotSeries {
            name: name.into(),
            points,
        });
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "experiment": self.experiment,
            "seed": self.seed,
            "passed": self.passed(),
            "exit_code": self.exit_code(),
            "failed_gates": self.failed_gates(),
            "gates": self.gates,
            "records": self.records,
            "ks": self.ks,
            "findings": self.findings,
            "truncation": self.truncation,
            "notes": self.notes,
        })
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    rng: &'static str,
    created_unix: u64,
    config: &'a ExperimentConfig,
    files: Vec<String>,
}

/// Writes `results.csv`, `summary.json`, `plotdata/*.csv` (as selected by
/// `formats`) and always `manifest.json`. Returns the paths written.
pub fn write_report(cfg: &ExperimentConfig, report: &ExperimentReport) -> Result<Vec<PathBuf>> {
    let dir = &cfg.out;
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |path: PathBuf, contents: String| -> Result<()> {
        fs::write(&path, contents)?;
        written.push(path);
        Ok(())
    };
    if cfg.formats.contains(&OutputFormat::Csv) {
        put(dir.join("results.csv"), report.table.to_csv())?;
        if !report.plots.is_empty() {
            let plot_dir = dir.join("plotdata");
            fs::create_dir_all(&plot_dir)?;
            for series in &report.plots {
                put(plot_dir.join(format!("{}.csv", series.name)), plot_csv(&series.points))?;
            }
        }
    }
    if cfg.formats.contains(&OutputFormat::Json) {
        let mut text = serde_json::to_string_pretty(&report.summary_json())?;
        text.push('\n');
        put(dir.join("summary.json"), text)?;
    }
    let manifest_path = dir.join("manifest.json");
    let manifest = Manifest {
        tool: "rwm-lab",
        version: env!("CARGO_PKG_VERSION"),
        rng: "xoshiro256++ seeded by splitmix64(derive_seed(master, index))",
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        config: cfg,
        files: written.iter().map(|p| relative(dir, p)).collect(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&manifest_path, text)?;
    written.push(manifest_path);
    Ok(written)
}

fn relative(dir: &Path, p: &Path) -> String {
    p.strip_prefix(dir).unwrap_or(p).display().to_string()
}

fn plot_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("x,y\n");
    for (x, y) in points {
        writeln!(out, "{x:.16e},{y:.16e}").unwrap();
    }
    out
}
