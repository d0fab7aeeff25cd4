//! Experiment configuration: a strict JSON document plus command-line
//! overrides, resolved as `defaults < file < flags`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Result, RwmError};
use crate::limits::DriftVariant;
use crate::walk::SeriesScheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentId {
    E1,
    E2,
    E3,
    E4,
    E5,
    E6,
    E7,
    E8,
    E9,
    E10,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 10] = [
        ExperimentId::E1,
        ExperimentId::E2,
        ExperimentId::E3,
        ExperimentId::E4,
        ExperimentId::E5,
        ExperimentId::E6,
        ExperimentId::E7,
        ExperimentId::E8,
        ExperimentId::E9,
        ExperimentId::E10,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::E1 => "E1",
            ExperimentId::E2 => "E2",
            ExperimentId::E3 => "E3",
            ExperimentId::E4 => "E4",
            ExperimentId::E5 => "E5",
            ExperimentId::E6 => "E6",
            ExperimentId::E7 => "E7",
            ExperimentId::E8 => "E8",
            ExperimentId::E9 => "E9",
            ExperimentId::E10 => "E10",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = RwmError;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| RwmError::Config(format!("unknown experiment id {s:?}; expected E1..E10")))
    }
}

impl Serialize for ExperimentId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ExperimentId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaChoice {
    SqrtC,
    TwoSqrtC,
    Both,
}

impl KappaChoice {
    pub fn variants(self) -> Vec<DriftVariant> {
        match self {
            KappaChoice::SqrtC => vec![DriftVariant::SqrtC],
            KappaChoice::TwoSqrtC => vec![DriftVariant::TwoSqrtC],
            KappaChoice::Both => vec![DriftVariant::SqrtC, DriftVariant::TwoSqrtC],
        }
    }
}

impl FromStr for KappaChoice {
    type Err = RwmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqrt_c" => Ok(KappaChoice::SqrtC),
            "two_sqrt_c" => Ok(KappaChoice::TwoSqrtC),
            "both" => Ok(KappaChoice::Both),
            _ => Err(RwmError::Config(format!(
                "kappa must be one of sqrt_c, two_sqrt_c, both; got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Counts may be written as `10000` or `1e4` in JSON.
fn count<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<u64>, D::Error> {
    let v = Option::<f64>::deserialize(d)?;
    v.map(|x| {
        if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 {
            Ok(x as u64)
        } else {
            Err(serde::de::Error::custom(format!(
                "expected a non-negative integer, got {x}"
            )))
        }
    })
    .transpose()
}

fn counts<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<u64>>, D::Error> {
    let v = Option::<Vec<f64>>::deserialize(d)?;
    v.map(|xs| {
        xs.into_iter()
            .map(|x| {
                if x >= 1.0 && x.fract() == 0.0 && x <= u64::MAX as f64 {
                    Ok(x as u64)
                } else {
                    Err(serde::de::Error::custom(format!(
                        "expected a positive integer, got {x}"
                    )))
                }
            })
            .collect()
    })
    .transpose()
}

/// Every knob is optional here; unset knobs fall through to the next layer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub experiment: Option<ExperimentId>,
    #[serde(default, deserialize_with = "count")]
    pub seed: Option<u64>,
    #[serde(default, deserialize_with = "count")]
    pub workers: Option<u64>,
    pub out: Option<PathBuf>,
    pub formats: Option<Vec<OutputFormat>>,
    pub delta: Option<f64>,
    pub deltas: Option<Vec<f64>>,
    pub c: Option<f64>,
    pub alpha: Option<f64>,
    #[serde(default, deserialize_with = "count")]
    pub n: Option<u64>,
    #[serde(default, deserialize_with = "counts")]
    pub ns: Option<Vec<u64>>,
    #[serde(default, deserialize_with = "count")]
    pub replicates: Option<u64>,
    #[serde(default, deserialize_with = "count")]
    pub sde_replicates: Option<u64>,
    pub h: Option<f64>,
    pub eps: Option<f64>,
    pub cap: Option<f64>,
    pub kappa: Option<KappaChoice>,
    #[serde(default, deserialize_with = "count")]
    pub barrier: Option<u64>,
    #[serde(default, deserialize_with = "count")]
    pub horizon_cap: Option<u64>,
    pub bias_budget: Option<f64>,
    pub horizons: Option<Vec<f64>>,
    pub times: Option<Vec<f64>>,
    #[serde(default, deserialize_with = "count")]
    pub m: Option<u64>,
    #[serde(default, deserialize_with = "count")]
    pub kmax: Option<u64>,
    pub thresholds: Option<BTreeMap<String, f64>>,
}

impl ConfigOverrides {
    pub fn from_json(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Ok(ConfigOverrides::default());
        }
        serde_json::from_str(text).map_err(|e| RwmError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RwmError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// `self` overridden by every knob set in `top`. Threshold maps merge key-wise.
    pub fn merged_with(mut self, top: ConfigOverrides) -> Self {
        macro_rules! take {
            ($($f:ident),*) => {$( if top.$f.is_some() { self.$f = top.$f; } )*};
        }
        take!(
            experiment,
            seed,
            workers,
            out,
            formats,
            delta,
            deltas,
            c,
            alpha,
            n,
            ns,
            replicates,
            sde_replicates,
            h,
            eps,
            cap,
            kappa,
            barrier,
            horizon_cap,
            bias_budget,
            horizons,
            times,
            m,
            kmax
        );
        if let Some(t) = top.thresholds {
            self.thresholds.get_or_insert_with(BTreeMap::new).extend(t);
        }
        self
    }
}

/// A fully resolved and validated configuration.
///
/// Experiments read only the knobs they document; the rest keep their
/// defaults and are still echoed in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub seed: u64,
    /// 0 = one worker per core. Never changes results.
    pub workers: usize,
    pub out: PathBuf,
    pub formats: Vec<OutputFormat>,
    pub delta: f64,
    pub deltas: Vec<f64>,
    pub c: f64,
    pub alpha: f64,
    pub n: u64,
    pub ns: Vec<u64>,
    pub replicates: u64,
    pub sde_replicates: u64,
    pub h: f64,
    pub eps: f64,
    pub cap: f64,
    pub kappa: KappaChoice,
    /// 0 = choose the escape height from `bias_budget` at every zero.
    pub barrier: u64,
    pub horizon_cap: u64,
    pub bias_budget: f64,
    pub horizons: Vec<f64>,
    pub times: Vec<f64>,
    pub m: u64,
    pub kmax: u64,
    pub thresholds: BTreeMap<String, f64>,
}

pub const DEFAULT_SEED: u64 = 20_240_601;

/// Gate names and default values per experiment.
pub fn default_thresholds(id: ExperimentId) -> BTreeMap<String, f64> {
    let pairs: &[(&str, f64)] = match id {
        ExperimentId::E1 => &[("se_multiplier", 4.0)],
        ExperimentId::E2 => &[("exact_ks", 0.01), ("sampled_ks", 0.03), ("visit_rate_rel", 0.05)],
        ExperimentId::E3 => &[("ci_level", 0.95)],
        ExperimentId::E4 => &[("ks", 0.03)],
        ExperimentId::E5 => &[("ks", 0.05)],
        ExperimentId::E6 => &[("min_ks", 0.05)],
        ExperimentId::E7 => &[
            ("exact_identity", 1e-12),
            ("normalization_error", 1e-10),
            ("se_multiplier", 4.0),
            ("ci_level", 0.99),
        ],
        ExperimentId::E8 => &[("se_multiplier", 3.0)],
        ExperimentId::E9 => &[("max_mismatches", 0.0)],
        ExperimentId::E10 => &[("slope_ks", 0.1)],
    };
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

impl ExperimentConfig {
    pub fn defaults(id: ExperimentId) -> Self {
        let mut cfg = ExperimentConfig {
            experiment: id,
            seed: DEFAULT_SEED,
            workers: 0,
            out: PathBuf::from(format!("rwm-out/{id}")),
            formats: vec![OutputFormat::Csv, OutputFormat::Json],
            delta: 0.05,
            deltas: vec![0.05],
            c: 1.0,
            alpha: 1.0,
            n: 20_000,
            ns: vec![20_000],
            replicates: 5_000,
            sde_replicates: 5_000,
            h: 1e-3,
            eps: 0.02,
            cap: 2.0,
            kappa: KappaChoice::Both,
            barrier: 0,
            horizon_cap: 100_000_000,
            bias_budget: 1e-12,
            horizons: vec![1.0],
            times: vec![1.0],
            m: 12,
            kmax: 9,
            thresholds: default_thresholds(id),
        };
        match id {
            ExperimentId::E1 => {
                cfg.delta = 0.05;
                cfg.replicates = 200_000;
                cfg.barrier = 300;
                cfg.bias_budget = 1e-15;
            }
            ExperimentId::E2 => {
                cfg.delta = 1e-4;
                cfg.deltas = vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
                cfg.replicates = 5_000;
                cfg.n = 10_000;
                cfg.horizon_cap = 10_000_000_000;
            }
            ExperimentId::E3 => {
                cfg.deltas = vec![0.25, 0.1, 0.05];
                cfg.replicates = 100_000;
                cfg.sde_replicates = 2_000;
                cfg.alpha = 0.5;
                cfg.ns = vec![1_000, 10_000, 100_000];
            }
            ExperimentId::E4 => {
                cfg.alpha = 1.5;
                cfg.times = vec![0.5, 1.0];
            }
            ExperimentId::E5 => {
                cfg.alpha = 0.5;
                cfg.ns = vec![2_000, 20_000];
            }
            ExperimentId::E6 => {
                cfg.alpha = 1.0;
            }
            ExperimentId::E7 => {
                cfg.deltas = vec![0.05, 0.2];
                cfg.replicates = 1_000_000;
                cfg.sde_replicates = 100_000;
            }
            ExperimentId::E8 => {
                cfg.replicates = 50_000;
                cfg.cap = 2.0;
            }
            ExperimentId::E9 => {
                cfg.replicates = 2_000;
                cfg.cap = 1.0;
            }
            ExperimentId::E10 => {
                cfg.sde_replicates = 2_000;
                cfg.horizons = vec![5.0, 10.0];
            }
        }
        cfg
    }

    /// Applies `defaults(id) < overrides` and validates.
    pub fn resolve(overrides: ConfigOverrides) -> Result<Self> {
        let id = overrides
            .experiment
            .ok_or_else(|| RwmError::Config("missing experiment id (use --experiment E1..E10)".into()))?;
        let mut cfg = Self::defaults(id);
        macro_rules! set {
            ($($f:ident),*) => {$( if let Some(v) = overrides.$f { cfg.$f = v; } )*};
        }
        set!(
            seed,
            out,
            formats,
            c,
            alpha,
            h,
            eps,
            cap,
            kappa,
            horizon_cap,
            bias_budget,
            horizons,
            times,
            m,
            kmax,
            replicates,
            sde_replicates
        );
        if let Some(w) = overrides.workers {
            cfg.workers = w as usize;
        }
        if let Some(b) = overrides.barrier {
            cfg.barrier = b;
        }
        if let Some(d) = overrides.delta {
            cfg.delta = d;
        }
        if let Some(ds) = overrides.deltas {
            cfg.deltas = ds;
        }
        if let Some(n) = overrides.n {
            cfg.n = n;
        }
        if let Some(ns) = overrides.ns {
            cfg.ns = ns;
        }
        if let Some(t) = overrides.thresholds {
            for (k, v) in t {
                if !cfg.thresholds.contains_key(&k) {
                    let known: Vec<&str> = cfg.thresholds.keys().map(String::as_str).collect();
                    return Err(RwmError::Config(format!(
                        "unknown threshold {k:?} for {id}; known: {}",
                        known.join(", ")
                    )));
                }
                cfg.thresholds.insert(k, v);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn threshold(&self, key: &str) -> f64 {
        self.thresholds[key]
    }

    pub fn scheme(&self, n: u64) -> Result<SeriesScheme> {
        SeriesScheme::new(self.c, self.alpha, n)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(RwmError::Config(msg));
        let in_delta_range = |d: f64| d > 0.0 && d <= 0.5;
        if !in_delta_range(self.delta) {
            return bad("delta must lie in (0, 0.5]".into());
        }
        if self.deltas.is_empty() || !self.deltas.iter().all(|&d| in_delta_range(d)) {
            return bad("every entry of deltas must lie in (0, 0.5]".into());
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        for (name, v) in [("c", self.c), ("alpha", self.alpha), ("h", self.h), ("eps", self.eps)] {
            if !positive(v) {
                return bad(format!("{name} must be positive"));
            }
        }
        if !(self.cap >= 0.0 && self.cap.is_finite()) {
            return bad("cap must be non-negative".into());
        }
        if self.n == 0 || self.ns.is_empty() || self.ns.contains(&0) {
            return bad("n and ns must be positive".into());
        }
        if self.replicates < 2 || self.sde_replicates < 2 {
            return bad("replicates must be at least 2".into());
        }
        if !(self.bias_budget > 0.0 && self.bias_budget < 1.0) {
            return bad("bias_budget must lie in (0, 1)".into());
        }
        if self.barrier > i32::MAX as u64 {
            return bad("barrier too large".into());
        }
        if self.horizon_cap == 0 {
            return bad("horizon_cap must be positive".into());
        }
        if self.horizons.is_empty() || !self.horizons.iter().all(|&t| positive(t)) {
            return bad("horizons must be positive".into());
        }
        if self.times.is_empty() || !self.times.iter().all(|&t| t > 0.0 && t <= 1.0) {
            return bad("times must lie in (0, 1]".into());
        }
        if self.experiment == ExperimentId::E7 && !(1..=20).contains(&self.m) {
            return bad("m must lie in 1..=20 for path enumeration".into());
        }
        if self.m == 0 {
            return bad("m must be positive".into());
        }
        if self.kmax == 0 {
            return bad("kmax must be positive".into());
        }
        if self.formats.is_empty() {
            return bad("formats must not be empty".into());
        }
        for (k, v) in &self.thresholds {
            if !v.is_finite() || *v < 0.0 {
                return bad(format!("threshold {k} must be a non-negative number"));
            }
        }
        for key in ["ci_level"] {
            if let Some(&l) = self.thresholds.get(key) {
                if !(l > 0.0 && l < 1.0) {
                    return bad(format!("threshold {key} must lie in (0, 1)"));
                }
            }
        }
        let uses_scheme = matches!(
            self.experiment,
            ExperimentId::E3 | ExperimentId::E4 | ExperimentId::E5 | ExperimentId::E6 | ExperimentId::E9
        );
        if uses_scheme {
            for &n in self.ns.iter().chain(std::iter::once(&self.n)) {
                self.scheme(n)?.delta_n().map_err(|e| RwmError::Config(e.to_string()))?;
            }
        }
        Ok(())
    }
}
