use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::config::{ConfigOverrides, ExperimentId, KappaChoice, OutputFormat};

#[derive(Debug, Parser)]
#[command(
    name = "rwm-lab",
    version,
    about = "Random walk with modifications at zero: experiment runner"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment and write its report files.
    Run(Box<RunArgs>),
    /// Print the experiment registry.
    List,
}

/// Counts accept `10000` as well as `1e4`.
fn count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let x: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 {
        Ok(x as u64)
    } else {
        Err(format!("expected a non-negative integer, got {s}"))
    }
}

fn threshold(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got {s}"))?;
    let v: f64 = v.parse().map_err(|_| format!("threshold {k}: not a number: {v}"))?;
    Ok((k.to_string(), v))
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    #[arg(long, short = 'e')]
    pub experiment: Option<ExperimentId>,
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = count)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, value_parser = count)]
    pub workers: Option<u64>,
    #[arg(long, value_delimiter = ',', value_enum)]
    pub formats: Option<Vec<OutputFormatArg>>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_parser = count)]
    pub n: Option<u64>,
    #[arg(long, value_delimiter = ',', value_parser = count)]
    pub ns: Option<Vec<u64>>,
    #[arg(long, value_parser = count)]
    pub replicates: Option<u64>,
    #[arg(long, value_parser = count)]
    pub sde_replicates: Option<u64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub cap: Option<f64>,
    #[arg(long, value_enum)]
    pub kappa: Option<KappaArg>,
    /// Fixed escape height; 0 derives it from the bias budget.
    #[arg(long, value_parser = count)]
    pub barrier: Option<u64>,
    #[arg(long, value_parser = count)]
    pub horizon_cap: Option<u64>,
    #[arg(long)]
    pub bias_budget: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub horizons: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    #[arg(long, value_parser = count)]
    pub m: Option<u64>,
    #[arg(long, value_parser = count)]
    pub kmax: Option<u64>,
    /// Gate threshold override, `name=value`. Repeatable.
    #[arg(long = "threshold", value_parser = threshold)]
    pub thresholds: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum OutputFormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum KappaArg {
    SqrtC,
    TwoSqrtC,
    Both,
}

impl clap::ValueEnum for ExperimentId {
    fn value_variants<'a>() -> &'a [Self] {
        &ExperimentId::ALL
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.as_str()))
    }

    fn from_str(input: &str, _ignore_case: bool) -> Result<Self, String> {
        input.parse().map_err(|e: crate::RwmError| e.to_string())
    }
}

impl RunArgs {
    pub fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            experiment: self.experiment,
            seed: self.seed,
            workers: self.workers,
            out: self.out.clone(),
            formats: self.formats.as_ref().map(|f| {
                f.iter()
                    .map(|x| match x {
                        OutputFormatArg::Csv => OutputFormat::Csv,
                        OutputFormatArg::Json => OutputFormat::Json,
                    })
                    .collect()
            }),
            delta: self.delta,
            deltas: self.deltas.clone(),
            c: self.c,
            alpha: self.alpha,
            n: self.n,
            ns: self.ns.clone(),
            replicates: self.replicates,
            sde_replicates: self.sde_replicates,
            h: self.h,
            eps: self.eps,
            cap: self.cap,
            kappa: self.kappa.map(|k| match k {
                KappaArg::SqrtC => KappaChoice::SqrtC,
                KappaArg::TwoSqrtC => KappaChoice::TwoSqrtC,
                KappaArg::Both => KappaChoice::Both,
            }),
            barrier: self.barrier,
            horizon_cap: self.horizon_cap,
            bias_budget: self.bias_budget,
            horizons: self.horizons.clone(),
            times: self.times.clone(),
            m: self.m,
            kmax: self.kmax,
            thresholds: (!self.thresholds.is_empty())
                .then(|| self.thresholds.iter().cloned().collect::<BTreeMap<_, _>>()),
        }
    }
}
