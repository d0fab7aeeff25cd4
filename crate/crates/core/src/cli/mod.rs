//! The `rwm-lab` experiment runner.

pub mod args;
pub mod config;
pub mod experiments;
pub mod report;

use std::io::Write;

pub use args::{Cli, Command, RunArgs};
pub use config::{ConfigOverrides, ExperimentConfig, ExperimentId, KappaChoice, OutputFormat};
pub use experiments::{run_experiment, REGISTRY};
pub use report::{write_report, ExperimentReport};

use crate::error::Result;

/// File values first, then flags, then defaults for whatever is left.
pub fn resolve(args: &RunArgs) -> Result<ExperimentConfig> {
    let file = match &args.config {
        Some(path) => ConfigOverrides::from_file(path)?,
        None => ConfigOverrides::default(),
    };
    ExperimentConfig::resolve(file.merged_with(args.overrides()))
}

/// Runs a parsed command line and returns the process exit code.
pub fn execute(cli: Cli, out: &mut impl Write, err: &mut impl Write) -> i32 {
    match cli.command {
        Command::List => {
            for e in &REGISTRY {
                let _ = writeln!(out, "{:<4} {:<40} {}", e.id.as_str(), e.title, e.claim);
            }
            report::EXIT_PASS
        }
        Command::Run(args) => {
            let cfg = match resolve(&args) {
                Ok(cfg) => cfg,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    return report::EXIT_CONFIG;
                }
            };
            let report = match run_experiment(&cfg) {
                Ok(r) => r,
                Err(e @ crate::RwmError::Config(_)) | Err(e @ crate::RwmError::InvalidParameter { .. }) => {
                    let _ = writeln!(err, "error: {e}");
                    return report::EXIT_CONFIG;
                }
                Err(e @ crate::RwmError::TruncationExceeded { .. }) => {
                    let _ = writeln!(err, "truncation: {e}");
                    return report::EXIT_TRUNCATION;
                }
                Err(e) => {
                    let _ = writeln!(err, "error: {} failed: {e}", cfg.experiment);
                    return report::EXIT_GATE_FAILURE;
                }
            };
            if let Err(e) = write_report(&cfg, &report) {
                let _ = writeln!(err, "error: writing report to {}: {e}", cfg.out.display());
                return report::EXIT_GATE_FAILURE;
            }
            for g in &report.gates {
                let threshold = g.threshold.map_or(String::new(), |t| format!(" (threshold {t:e})"));
                let verdict = if g.passed { "pass" } else { "FAIL" };
                let _ = writeln!(out, "{verdict} {} = {:e}{threshold}", g.name, g.value);
            }
            for (k, v) in &report.findings {
                let _ = writeln!(out, "{k}: {v}");
            }
            let code = report.exit_code();
            if let Some(t) = report.truncation.filter(|t| t.exceeded) {
                let _ = writeln!(
                    err,
                    "truncation: {} of {} replicates hit the horizon cap, max bias bound {:e} (budget {:e})",
                    t.truncated, t.replicates, t.max_bias_bound, t.budget
                );
            }
            if code == report::EXIT_GATE_FAILURE {
                let _ = writeln!(err, "failed gates: {}", report.failed_gates().join(", "));
            }
            let _ = writeln!(out, "wrote {}", cfg.out.display());
            code
        }
    }
}
