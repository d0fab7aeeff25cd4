//! The experiment registry E1..E10.
//!
//! Every experiment draws its replicates from sub-streams of the master seed,
//! so a run is fully determined by its resolved configuration.

use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF};

use super::config::{ExperimentConfig, ExperimentId};
use super::report::{Cell, ExperimentReport, Gate, Truncation};
use crate::analytics::{
    expected_last_return, rayleigh_cdf, scaled_returns_ks, slope_limit_cdf, summed_slope_limit_cdf,
    summed_survival_limit_cdf, survival_table, LastReturnVariant,
};
use crate::error::{Result, RwmError};
use crate::grid::UniformGrid;
use crate::limits::{discrete_density, limit_density, sample_brownian_path, SdeConfig, SdeStepper};
use crate::mc::{derive_seed, run_replicates, standard_normal_cdf, SeedPlan, SimRng};
use crate::stats::{ecdf_points, ks_one_sample, ks_two_sample, mean_ci, median, SummaryRecord};
use crate::walk::{
    run_to_last_return, simulate_symmetric_path, transition_probabilities, EscapeRule, ModificationParams,
    ReturnStatistics, Trajectory, Walker,
};

pub struct ExperimentInfo {
    pub id: ExperimentId,
    pub title: &'static str,
    pub claim: &'static str,
}

pub const REGISTRY: [ExperimentInfo; 10] = [
    ExperimentInfo {
        id: ExperimentId::E1,
        title: "survival law",
        claim: "P(R >= k) = prod_{i<=k} (1 - 2 i delta) for the returns count R",
    },
    ExperimentInfo {
        id: ExperimentId::E2,
        title: "small-delta limit of the returns count",
        claim: "sqrt(delta) R converges to the law 1 - exp(-x^2/2); symmetric visit rate sqrt(2n/pi)",
    },
    ExperimentInfo {
        id: ExperimentId::E3,
        title: "last return",
        claim: "E T_last against both closed forms; E T_last / n -> 0 along delta_n = c n^-alpha",
    },
    ExperimentInfo {
        id: ExperimentId::E4,
        title: "alpha > 1",
        claim: "X_{nt} / sqrt(n) converges to Brownian motion",
    },
    ExperimentInfo {
        id: ExperimentId::E5,
        title: "alpha < 1",
        claim: "X_{nt} / n^{1-alpha/2} converges to the line 2 sqrt(c) eta t",
    },
    ExperimentInfo {
        id: ExperimentId::E6,
        title: "alpha = 1",
        claim: "X_{nt} / sqrt(n) converges to the local-time SDE; drift factor sqrt(c) vs 2 sqrt(c)",
    },
    ExperimentInfo {
        id: ExperimentId::E7,
        title: "discrete density",
        claim: "likelihood ratio against the symmetric walk: enumeration and importance sampling",
    },
    ExperimentInfo {
        id: ExperimentId::E8,
        title: "limit density",
        claim: "the capped Girsanov density has mean 1 under Wiener measure",
    },
    ExperimentInfo {
        id: ExperimentId::E9,
        title: "capped walk",
        claim: "capped and uncapped walks agree path by path while the cap is not reached",
    },
    ExperimentInfo {
        id: ExperimentId::E10,
        title: "long-horizon SDE slope",
        claim: "X(T) / T of the SDE against the law of 2 sqrt(c) eta",
    },
];

pub fn info(id: ExperimentId) -> &'static ExperimentInfo {
    REGISTRY.iter().find(|e| e.id == id).expect("registry covers every id")
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match cfg.experiment {
        ExperimentId::E1 => e1_survival(cfg),
        ExperimentId::E2 => e2_returns_limit(cfg),
        ExperimentId::E3 => e3_last_return(cfg),
        ExperimentId::E4 => e4_brownian(cfg),
        ExperimentId::E5 => e5_linear(cfg),
        ExperimentId::E6 => e6_critical(cfg),
        ExperimentId::E7 => e7_discrete_density(cfg),
        ExperimentId::E8 => e8_limit_density(cfg),
        ExperimentId::E9 => e9_capped(cfg),
        ExperimentId::E10 => e10_slope(cfg),
    }
}

/// Sub-stream masters live far from the replicate indices of the master seed.
const STREAM_BASE: u64 = 1 << 40;

fn replicate<T, F>(cfg: &ExperimentConfig, stream: u64, count: u64, task: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut SimRng) -> Result<T> + Sync + Send,
{
    let plan = SeedPlan::new(derive_seed(cfg.seed, STREAM_BASE + stream), count as usize);
    run_replicates(count as usize, &plan, cfg.workers, |i, seed| {
        task(i, &mut SimRng::from_seed(seed))
    })
    .into_all()
}

fn row(cfg: &ExperimentConfig, cells: Vec<Cell>) -> Vec<Cell> {
    let mut out = vec![Cell::from(cfg.experiment.as_str()), Cell::from(cfg.seed)];
    out.extend(cells);
    out
}

fn escape_rule(cfg: &ExperimentConfig) -> EscapeRule {
    if cfg.barrier > 0 {
        EscapeRule::Barrier(cfg.barrier as u32)
    } else {
        EscapeRule::BiasBudget(cfg.bias_budget)
    }
}

/// Runs to the last return; horizon-cap hits are counted, not fatal.
fn last_returns(
    cfg: &ExperimentConfig,
    stream: u64,
    params: &ModificationParams,
    count: u64,
) -> Result<(Vec<ReturnStatistics>, Truncation)> {
    let rule = escape_rule(cfg);
    let outcomes = replicate(cfg, stream, count, |_, rng| {
        match run_to_last_return(params, rule, cfg.horizon_cap, rng) {
            Ok(stats) => Ok(Some(stats)),
            Err(RwmError::Truncated { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    })?;
    let truncated = outcomes.iter().filter(|o| o.is_none()).count() as u64;
    let runs: Vec<ReturnStatistics> = outcomes.into_iter().flatten().collect();
    let max_bias_bound = runs.iter().map(|r| r.truncation_bias_bound).fold(0.0, f64::max);
    let truncation = Truncation {
        replicates: count,
        truncated,
        max_bias_bound,
        budget: cfg.bias_budget,
        exceeded: truncated > 0 || max_bias_bound > cfg.bias_budget,
    };
    if runs.len() < 2 && truncated > 0 {
        return Err(RwmError::TruncationExceeded {
            truncated,
            replicates: count,
        });
    }
    if runs.len() < 2 {
        return Err(RwmError::TooFewSamples {
            required: 2,
            got: runs.len(),
        });
    }
    Ok((runs, truncation))
}

fn merge_truncation(report: &mut ExperimentReport, t: Truncation) {
    report.truncation = Some(match report.truncation {
        Some(prev) => prev.merge(t),
        None => t,
    });
}

/// At most `max_points` points of the empirical distribution function.
fn ecdf_series(samples: &[f64], max_points: usize) -> Vec<(f64, f64)> {
    let pts = ecdf_points(samples);
    let stride = pts.len().div_ceil(max_points).max(1);
    let mut out: Vec<_> = pts.iter().step_by(stride).copied().collect();
    if let Some(&last) = pts.last() {
        if out.last() != Some(&last) {
            out.push(last);
        }
    }
    out
}

fn curve<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, points: usize) -> Vec<(f64, f64)> {
    (0..points)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            (x, f(x))
        })
        .collect()
}

fn range(samples: &[f64]) -> (f64, f64) {
    samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    })
}

fn sample_sd(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn e1_survival(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(cfg);
    let params = ModificationParams::new(cfg.delta)?;
    let (runs, trunc) = last_returns(cfg, 1, &params, cfg.replicates)?;
    merge_truncation(&mut rep, trunc);
    let counts: Vec<u64> = runs.iter().map(|r| r.returns_count as u64).collect();
    let used = counts.len() as f64;
    let exact = survival_table(cfg.kmax, cfg.delta);
    let mult = cfg.threshold("se_multiplier");
    let mut mc_series = Vec::new();
    for k in 1..=cfg.kmax {
        let p = exact[k as usize];
        let mc = counts.iter().filter(|&&r| r >= k).count() as f64 / used;
        let se = (p * (1.0 - p) / used).sqrt();
        let gate = Gate::at_most(format!("survival_k{k}"), (mc - p).abs(), mult * se);
        rep.table.push(row(
            cfg,
            vec![
                cfg.delta.into(),
                Cell::from((cfg.barrier > 0).then_some(cfg.barrier)),
                Cell::from(counts.len()),
                k.into(),
                p.into(),
                mc.into(),
                se.into(),
                gate.passed.into(),
            ],
        ));
        rep.gates.push(gate);
        mc_series.push((k as f64, mc));
    }
    let r: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    rep.records
        .push(mean_ci("returns_count", &r, 0.95)?.with("max_bias_bound", trunc.max_bias_bound));
    rep.add_plot("survival_mc", mc_series);
    rep.add_plot(
        "survival_exact",
        exact.iter().enumerate().skip(1).map(|(k, &p)| (k as f64, p)).collect(),
    );
    Ok(rep)
}

fn e2_returns_limit(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(cfg);
    let exact_thr = cfg.threshold("exact_ks");
    let dmin = cfg.deltas.iter().copied().fold(f64::INFINITY, f64::min);
    for &d in &cfg.deltas {
        let ks_r = scaled_returns_ks(d, rayleigh_cdf);
        let ks_s = scaled_returns_ks(d, summed_survival_limit_cdf);
        let gated = d == dmin;
        rep.table.push(row(
            cfg,
            vec![
                "exact_ks_rayleigh".into(),
                d.into(),
                Cell::Empty,
                ks_r.into(),
                Cell::Empty,
                Cell::from(gated.then_some(exact_thr)),
                Cell::from(gated.then_some(ks_r <= exact_thr)),
            ],
        ));
        rep.table.push(row(
            cfg,
            vec![
                "exact_ks_summed_law".into(),
                d.into(),
                Cell::Empty,
                ks_s.into(),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
            ],
        ));
        if gated {
            rep.gates.push(Gate::at_most("exact_ks", ks_r, exact_thr));
        }
    }

    let params = ModificationParams::new(cfg.delta)?;
    let (runs, trunc) = last_returns(cfg, 1, &params, cfg.replicates)?;
    merge_truncation(&mut rep, trunc);
    let scale = cfg.delta.sqrt();
    let x: Vec<f64> = runs.iter().map(|r| scale * r.returns_count as f64).collect();
    let ks_r = ks_one_sample(&x, rayleigh_cdf)?;
    let ks_s = ks_one_sample(&x, summed_survival_limit_cdf)?;
    let thr = cfg.threshold("sampled_ks");
    rep.table.push(row(
        cfg,
        vec![
            "sampled_ks_rayleigh".into(),
            cfg.delta.into(),
            x.len().into(),
            ks_r.statistic.into(),
            Cell::Empty,
            thr.into(),
            (ks_r.statistic <= thr).into(),
        ],
    ));
    rep.table.push(row(
        cfg,
        vec![
            "sampled_ks_summed_law".into(),
            cfg.delta.into(),
            x.len().into(),
            ks_s.statistic.into(),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
        ],
    ));
    rep.gates.push(Gate::at_most("sampled_ks", ks_r.statistic, thr));
    rep.add_ks("scaled_returns", "1 - exp(-x^2/2)", ks_r);
    rep.add_ks("scaled_returns", "1 - exp(-x^2)", ks_s);
    let (_, hi) = range(&x);
    rep.add_plot("scaled_returns_ecdf", ecdf_series(&x, 1000));
    rep.add_plot("rayleigh_cdf", curve(rayleigh_cdf, 0.0, hi.max(1.0), 200));
    rep.add_plot(
        "summed_law_cdf",
        curve(summed_survival_limit_cdf, 0.0, hi.max(1.0), 200),
    );

    // Visits of the symmetric walk: E R_n ~ sqrt(2n/pi).
    let n = cfg.n;
    let visits = replicate(cfg, 2, cfg.replicates, |_, rng| {
        let (mut x, mut r) = (0i64, 0u64);
        for _ in 0..n {
            x += if rng.uniform() < 0.5 { 1 } else { -1 };
            r += u64::from(x == 0);
        }
        Ok(r as f64)
    })?;
    let reference = (2.0 * n as f64 / std::f64::consts::PI).sqrt();
    // E R_n = sum_{k <= n/2} C(2k, k) 4^-k, exactly.
    let mut u = 1.0;
    let mut exact = 0.0;
    for k in 1..=n / 2 {
        u *= (2 * k - 1) as f64 / (2 * k) as f64;
        exact += u;
    }
    let rec = mean_ci("symmetric_returns", &visits, 0.95)?
        .with("asymptotic", reference)
        .with("exact", exact);
    let rel = (rec.mean - reference).abs() / reference;
    let rel_thr = cfg.threshold("visit_rate_rel");
    rep.table.push(row(
        cfg,
        vec![
            "visit_rate".into(),
            Cell::Empty,
            visits.len().into(),
            rec.mean.into(),
            reference.into(),
            rel_thr.into(),
            (rel <= rel_thr).into(),
        ],
    ));
    rep.gates.push(Gate::at_most("visit_rate_rel", rel, rel_thr));
    rep.records.push(rec);
    rep.notes.push(format!(
        "sqrt(delta) R is compared with 1 - exp(-x^2/2) (gated) and with 1 - exp(-x^2), the limit of the \
         survival product; exact distances at delta = {dmin:e}: {:.4} and {:.4}",
        scaled_returns_ks(dmin, rayleigh_cdf),
        scaled_returns_ks(dmin, summed_survival_limit_cdf)
    ));
    Ok(rep)
}

fn e3_last_return(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(cfg);
    let level = cfg.threshold("ci_level");
    let (mut z_exc, mut z_disp) = (0.0, 0.0);
    let z = |mean: f64, value: f64, se: f64| {
        if se > 0.0 {
            (mean - value).abs() / se
        } else if mean == value {
            0.0
        } else {
            f64::INFINITY
        }
    };
    for (i, &d) in cfg.deltas.iter().enumerate() {
        let params = ModificationParams::new(d)?;
        let (runs, trunc) = last_returns(cfg, 10 + i as u64, &params, cfg.replicates)?;
        merge_truncation(&mut rep, trunc);
        let t: Vec<f64> = runs.iter().map(|r| r.last_return as f64).collect();
        let exc = expected_last_return(d, LastReturnVariant::ExcursionDerived);
        let disp = expected_last_return(d, LastReturnVariant::PaperDisplay);
        let rec = mean_ci(&format!("last_return_delta_{d}"), &t, level)?
            .with("excursion_derived", exc)
            .with("paper_display", disp);
        let se = rec.standard_error();
        z_exc += z(rec.mean, exc, se);
        z_disp += z(rec.mean, disp, se);
        let pass = rec.contains(exc);
        rep.table.push(row(
            cfg,
            vec![
                "last_return".into(),
                d.into(),
                Cell::Empty,
                t.len().into(),
                rec.mean.into(),
                rec.ci_half_width.into(),
                exc.into(),
                disp.into(),
                pass.into(),
            ],
        ));
        rep.gates.push(Gate::holds(format!("last_return_ci_delta_{d}"), pass));
        rep.records.push(rec);
    }
    let winner = if z_exc <= z_disp {
        "excursion_derived"
    } else {
        "paper_display"
    };
    rep.findings.insert("last_return_variant".into(), winner.into());
    rep.notes.push(format!(
        "summed |z| over deltas: excursion_derived {z_exc:.2}, paper_display {z_disp:.2}; closer: {winner}"
    ));

    let mut ratios = Vec::new();
    for (j, &n) in cfg.ns.iter().enumerate() {
        let scheme = cfg.scheme(n)?;
        let d = scheme.delta_n()?;
        let (runs, trunc) = last_returns(cfg, 20 + j as u64, &scheme.params()?, cfg.sde_replicates)?;
        merge_truncation(&mut rep, trunc);
        let t: Vec<f64> = runs.iter().map(|r| r.last_return as f64 / n as f64).collect();
        let rec = mean_ci(&format!("last_return_over_n_{n}"), &t, level)?;
        rep.table.push(row(
            cfg,
            vec![
                "last_return_over_n".into(),
                d.into(),
                n.into(),
                t.len().into(),
                rec.mean.into(),
                rec.ci_half_width.into(),
                (expected_last_return(d, LastReturnVariant::ExcursionDerived) / n as f64).into(),
                (expected_last_return(d, LastReturnVariant::PaperDisplay) / n as f64).into(),
                Cell::Empty,
            ],
        ));
        ratios.push((n as f64, rec.mean));
        rep.records.push(rec);
    }
    let decreasing = ratios.windows(2).all(|w| w[1].1 < w[0].1);
    rep.gates.push(Gate::holds("last_return_over_n_decreasing", decreasing));
    rep.add_plot("last_return_over_n", ratios);
    Ok(rep)
}

fn e4_brownian(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(cfg);
    let scheme = cfg.scheme(cfg.n)?;
    let params = scheme.params()?;
    let scale = scheme.space_scale();
    let n = cfg.n;
    let marks: Vec<u64> = cfg.times.iter().map(|t| (n as f64 * t).floor() as u64).collect();
    let samples = replicate(cfg, 1, cfg.replicates, |_, rng| {
        let mut walker = Walker::new(params)?;
        let mut out = vec![0.0; marks.len()];
        for step in 1..=n {
            walker.step(rng);
            for (j, &k) in marks.iter().enumerate() {
                if k == step {
                    out[j] = walker.position() as f64 / scale;
                }
            }
        }
        Ok(out)
    })?;
    let thr = cfg.threshold("ks");
    for (j, &t) in cfg.times.iter().enumerate() {
        let x: Vec<f64> = samples.iter().map(|s| s[j]).collect();
        let sd = t.sqrt();
        let ks = ks_one_sample(&x, |v| standard_normal_cdf(v / sd))?;
        let gate = Gate::at_most(format!("ks_t{t}"), ks.statistic, thr);
        rep.table.push(row(
            cfg,
            vec![
                cfg.c.into(),
                cfg.alpha.into(),
                n.into(),
                t.into(),
                x.len().into(),
                ks.statistic.into(),
                ks.p_value.into(),
                thr.into(),
                gate.passed.into(),
            ],
        ));
        rep.gates.push(gate);
        rep.add_ks(format!("walk_t{t}"), format!("N(0, {t})"), ks);
        rep.records
            .push(mean_ci(&format!("scaled_position_t{t}"), &x, 0.95)?.with("variance", sample_sd(&x).powi(2)));
        rep.add_plot(format!("walk_t{t}_ecdf"), ecdf_series(&x, 1000));
        rep.add_plot(
            format!("normal_t{t}_cdf"),
            curve(|v| standard_normal_cdf(v / sd), -4.0 * sd, 4.0 * sd, 200),
        );
    }
    Ok(rep)
}

struct LinearRun {
    terminal: f64,
    chord: f64,
    drift: f64,
    noise: f64,
    bundle: Option<Vec<(f64, f64)>>,
}

const BUNDLE_PATHS: usize = 5;
const BUNDLE_POINTS: usize = 200;

fn e5_linear(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(cfg);
    let thr = cfg.threshold("ks");
    let last = cfg.ns.len() - 1;
    let mut chords = Vec::new();
    for (j, &n) in cfg.ns.iter().enumerate() {
        let scheme = cfg.scheme(n)?;
        let params = scheme.params()?;
        let scale = scheme.space_scale();
        let keep = j == last;
        let runs = replicate(cfg, 1 + j as u64, cfg.replicates, |i, rng| {
            let mut walker = Walker::new(params)?;
            let mut pos = Vec::with_capacity(n as usize + 1);
            pos.push(0i32);
            // Compensator of the martingale decomposition: sum of p - q.
            let mut drift = 0.0;
            for _ in 0..n {
                let (p, q) = walker.probabilities();
                drift += p - q;
                walker.step(rng);
                pos.push(walker.position());
            }
            let xn = f64::from(pos[n as usize]);
            let nf = n as f64;
            // Y(t) - t Y(1) is piecewise linear, so its sup sits on a grid point.
            let chord = pos
                .iter()
                .enumerate()
                .map(|(k, &x)| (f64::from(x) - k as f64 / nf * xn).abs())
                .fold(0.0, f64::max)
                / scale;
            let bundle = (keep && i < BUNDLE_PATHS).then(|| {
                let stride = (n as usize).div_ceil(BUNDLE_POINTS).max(1);
                (0..=n as usize)
                    .step_by(stride)
                    .chain(std::iter::once(n as usize))
                    .map(|k| (k as f64 / nf, f64::from(pos[k]) / scale))
                    .collect::<Vec<_>>()
            });
            Ok(LinearRun {
                terminal: xn / scale,
                chord,
                drift: drift / scale,
                noise: (xn - drift) / scale,
                bundle,
            })
        })?;
        let terminal: Vec<f64> = runs.iter().map(|r| r.terminal).collect();
        let chord: Vec<f64> = runs.iter().map(|r| r.chord).collect();
        let drift: Vec<f64> = runs.iter().map(|r| r.drift).collect();
        let noise: Vec<f64> = runs.iter().map(|r| r.noise).collect();
        let ks = ks_one_sample(&terminal, |x| slope_limit_cdf(x, cfg.c))?;
        let ks_summed = ks_one_sample(&terminal, |x| summed_slope_limit_cdf(x, cfg.c))?;
        let med_chord = median(&chord)?;
        let pass = keep.then_some(ks.statistic <= thr);
        rep.table.push(row(
            cfg,
            vec![
                cfg.c.into(),
                cfg.alpha.into(),
                n.into(),
                runs.len().into(),
                ks.statistic.into(),
                ks_summed.statistic.into(),
                med_chord.into(),
                median(&drift)?.into(),
                sample_sd(&noise).into(),
                pass.into(),
            ],
        ));
        rep.add_ks(format!("terminal_n{n}"), "1 - exp(-x^2/(8c))", ks);
        rep.add_ks(format!("terminal_n{n}"), "1 - exp(-x^2/(4c))", ks_summed);
        chords.push((n as f64, med_chord));
        if keep {
            rep.gates.push(Gate::at_most("ks", ks.statistic, thr));
            let (_, hi) = range(&terminal);
            rep.add_plot(format!("terminal_n{n}_ecdf"), ecdf_series(&terminal, 1000));
            rep.add_plot(
                "slope_law_cdf",
                curve(|x| slope_limit_cdf(x, cfg.c), 0.0, hi.max(1.0), 200),
            );
            rep.add_plot(
                "summed_slope_law_cdf",
                curve(|x| summed_slope_limit_cdf(x, cfg.c), 0.0, hi.max(1.0), 200),
            );
            for (i, r) in runs.iter().enumerate() {
                if let Some(b) = &r.bundle {
                    rep.add_plot(format!("path_{i}"), b.clone());
                }
            }
        }
    }
    let decreasing = chords.windows(2).all(|w| w[1].1 < w[0].1);
    rep.gates.push(Gate::holds("chord_deviation_decreasing", decreasing));
    rep.add_plot("median_chord_deviation", chords);
    Ok(rep)
}

fn sde_terminal(cfg: &ExperimentConfig, stream: u64, sde: SdeConfig) -> Result<Vec<f64>> {
    let steps = sde.grid()?.steps;
    replicate(cfg, stream, cfg.sde_replicates, |_, rng| {
        let mut s = SdeStepper::new(&sde)?;
        for _ in 0..steps {
            s.step(rng);
        }
        Ok(s.value())
    })
}

fn e6_critical(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(cfg);
    let scheme = cfg.scheme(cfg.n)?;
    let params = scheme.params()?;
    let scale = scheme.space_scale();
    let n = cfg.n;
    let walk = replicate(cfg, 1, cfg.replicates, |_, rng| {
        let mut walker = Walker::new(params)?;
        for _ in 0..n {
            walker.step(rng);
        }
        Ok(f64::from(walker.position()) / scale)
    })?;
    rep.table.push(row(
        cfg,
        vec![
            "walk".into(),
            Cell::Empty,
            cfg.c.into(),
            cfg.alpha.into(),
            n.into(),
            Cell::Empty,
            Cell::Empty,
            walk.len().into(),
            median(&walk)?.into(),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
        ],
    ));
    rep.add_plot("walk_ecdf", ecdf_series(&walk, 1000));
    let thr = cfg.threshold("min_ks");
    let mut best: Option<(&'static str, f64)> = None;
    for (i, variant) in cfg.kappa.variants().into_iter().enumerate() {
        let sde = SdeConfig::new(cfg.c, variant, cfg.h, cfg.eps, 1.0);
        let x = sde_terminal(cfg, 10 + i as u64, sde)?;
        let ks = ks_two_sample(&walk, &x)?;
        let label = variant.label();
        rep.table.push(row(
            cfg,
            vec![
                "sde".into(),
                label.into(),
                cfg.c.into(),
                cfg.alpha.into(),
                Cell::Empty,
                cfg.h.into(),
                cfg.eps.into(),
                x.len().into(),
                median(&x)?.into(),
                ks.statistic.into(),
                ks.p_value.into(),
                (ks.statistic <= thr).into(),
            ],
        ));
        rep.add_ks(format!("sde_{label}"), "walk", ks);
        rep.add_plot(format!("sde_{label}_ecdf"), ecdf_series(&x, 1000));
        if best.is_none_or(|(_, d)| ks.statistic < d) {
            best = Some((label, ks.statistic));
        }
    }
    let (label, d) = best.expect("at least one drift variant");
    rep.findings.insert("best_kappa".into(), label.into());
    rep.gates.push(Gate::at_most("min_ks", d, thr));
    Ok(rep)
}

/// Calls `f(path, probability)` for each of the `2^m` paths of length `m`
/// started at 0; bit `k` of the index set means step `k` goes up.
fn enumerate_paths<F: FnMut(&Trajectory, f64)>(m: u64, params: &ModificationParams, mut f: F) -> Result<()> {
    for mask in 0u64..(1 << m) {
        let mut positions = Vec::with_capacity(m as usize + 1);
        let mut x = 0i32;
        positions.push(x);
        for k in 0..m {
            x += if mask >> k & 1 == 1 { 1 } else { -1 };
            positions.push(x);
        }
        let traj = Trajectory::from_positions(positions)?;
        let prob: f64 = traj
            .increments()
            .enumerate()
            .map(|(k, xi)| {
                let (p, q) = transition_probabilities(traj.visits[k], params);
                if xi > 0 {
                    p
                } else {
                    q
                }
            })
            .product();
        f(&traj, prob);
    }
    Ok(())
}

const IS_STEPS: u64 = 10;

/// Probability that exact sampling keeps every path count within
/// `mult` binomial standard errors of its expectation.
fn per_path_gate_pass_probability(probs: &[f64], total: u64, mult: f64) -> Result<f64> {
    let n = total as f64;
    let mut log_pass = 0.0;
    for &p in probs {
        if p <= 0.0 || p >= 1.0 {
            continue;
        }
        let reach = mult * (p * (1.0 - p) / n).sqrt();
        let lo = ((p - reach) * n).ceil().max(0.0) as u64;
        let hi = ((p + reach) * n).floor() as u64;
        let b = Binomial::new(p, total).map_err(|e| RwmError::invalid("p", e.to_string()))?;
        let below = if lo > 0 { b.cdf(lo - 1) } else { 0.0 };
        log_pass += (b.cdf(hi) - below).ln();
    }
    Ok(log_pass.exp())
}

/// Pearson goodness of fit, cells pooled in order of probability until each
/// pooled cell expects at least 5 observations.
fn pooled_chi_square_pvalue(probs: &[f64], counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let n = total as f64;
    if probs.iter().zip(counts).any(|(&p, &c)| p == 0.0 && c > 0) {
        return 0.0;
    }
    let mut order: Vec<usize> = (0..probs.len()).filter(|&i| probs[i] > 0.0).collect();
    order.sort_by(|&a, &b| probs[a].total_cmp(&probs[b]));
    let (mut stat, mut cells) = (0.0, 0usize);
    let (mut e, mut o) = (0.0, 0.0);
    for i in order {
        e += probs[i] * n;
        o += counts[i] as f64;
        if e >= 5.0 {
            stat += (o - e).powi(2) / e;
            cells += 1;
            e = 0.0;
            o = 0.0;
        }
    }
    if e > 0.0 {
        stat += (o - e).powi(2) / e;
        cells += 1;
    }
    match ChiSquared::new((cells.max(2) - 1) as f64) {
        Ok(chi) => chi.sf(stat),
        Err(_) => f64::NAN,
    }
}

#[allow(clippy::too_many_arguments)]
fn e7_row(
    rep: &mut ExperimentReport,
    cfg: &ExperimentConfig,
    delta: f64,
    name: &str,
    size: Option<u64>,
    value: f64,
    reference: Option<f64>,
    thr: Option<f64>,
    pass: Option<bool>,
) {
    rep.table.push(row(
        cfg,
        vec![
            name.into(),
            delta.into(),
            cfg.m.into(),
            size.into(),
            value.into(),
            reference.into(),
            thr.into(),
            pass.into(),
        ],
    ));
}

fn e7_discrete_density(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(cfg);
    let m = cfg.m;
    let weight = 0.5f64.powi(m as i32);
    let id_thr = cfg.threshold("exact_identity");
    let norm_thr = cfg.threshold("normalization_error");
    let mult = cfg.threshold("se_multiplier");
    let level = cfg.threshold("ci_level");
    for (i, &d) in cfg.deltas.iter().enumerate() {
        let params = ModificationParams::new(d)?;
        let mut probs = Vec::with_capacity(1 << m);
        let (mut max_err, mut rho_sum) = (0.0f64, 0.0);
        enumerate_paths(m, &params, |traj, prob| {
            let rho = discrete_density(traj, &params);
            max_err = max_err.max((prob - rho * weight).abs());
            rho_sum += rho * weight;
            probs.push(prob);
        })?;
        let norm_err = (rho_sum - 1.0).abs();
        e7_row(
            &mut rep,
            cfg,
            d,
            "exact_identity",
            None,
            max_err,
            None,
            Some(id_thr),
            Some(max_err <= id_thr),
        );
        e7_row(
            &mut rep,
            cfg,
            d,
            "normalization_error",
            None,
            norm_err,
            None,
            Some(norm_thr),
            Some(norm_err <= norm_thr),
        );

        let masks = replicate(cfg, 10 + i as u64, cfg.replicates, |_, rng| {
            let mut walker = Walker::new(params)?;
            let mut mask = 0usize;
            for k in 0..m {
                if walker.step(rng) > 0 {
                    mask |= 1 << k;
                }
            }
            Ok(mask)
        })?;
        let mut counts = vec![0u64; 1 << m];
        for &mask in &masks {
            counts[mask] += 1;
        }
        let total = masks.len() as f64;
        let (mut max_z, mut outside) = (0.0f64, 0u64);
        for (&c, &p) in counts.iter().zip(&probs) {
            let freq = c as f64 / total;
            let z = if p == 0.0 {
                if c > 0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            } else {
                (freq - p).abs() / (p * (1.0 - p) / total).sqrt()
            };
            max_z = max_z.max(z);
            outside += u64::from(z > mult);
        }
        e7_row(
            &mut rep,
            cfg,
            d,
            "path_frequency_max_z",
            Some(masks.len() as u64),
            max_z,
            Some(outside as f64),
            Some(mult),
            Some(outside == 0),
        );
        // Calibration of the per-path gate: paths with expected count far below
        // one fail it whenever they are seen at all.
        let pass_prob = per_path_gate_pass_probability(&probs, masks.len() as u64, mult)?;
        e7_row(
            &mut rep,
            cfg,
            d,
            "path_frequency_gate_pass_probability",
            Some(masks.len() as u64),
            pass_prob,
            None,
            None,
            None,
        );
        let chi2 = pooled_chi_square_pvalue(&probs, &counts);
        e7_row(
            &mut rep,
            cfg,
            d,
            "path_frequency_chi2_pvalue",
            Some(masks.len() as u64),
            chi2,
            None,
            None,
            None,
        );
        rep.records.push(SummaryRecord {
            label: format!("path_frequencies_delta_{d}"),
            sample_size: masks.len(),
            mean: max_z,
            ci_half_width: 0.0,
            level: 0.95,
            extra: [
                ("gate_pass_probability".to_string(), pass_prob),
                ("chi2_pvalue".to_string(), chi2),
                ("paths_outside".to_string(), outside as f64),
            ]
            .into(),
        });

        // Importance sampling: E_walk f(X) = E_sym f(X) rho.
        let mut exact_mean = 0.0;
        let mut exact_zero = 0.0;
        enumerate_paths(IS_STEPS, &params, |traj, prob| {
            exact_mean += prob * f64::from(traj.end());
            exact_zero += prob * f64::from(u8::from(traj.end() == 0));
        })?;
        let walk = replicate(cfg, 20 + i as u64, cfg.replicates, |_, rng| {
            let mut walker = Walker::new(params)?;
            for _ in 0..IS_STEPS {
                walker.step(rng);
            }
            Ok(walker.position())
        })?;
        let sym = replicate(cfg, 30 + i as u64, cfg.replicates, |_, rng| {
            let traj = simulate_symmetric_path(IS_STEPS as usize, rng);
            Ok((traj.end(), discrete_density(&traj, &params)))
        })?;
        type Statistic = fn(i32) -> f64;
        let cases: [(&str, f64, Statistic); 2] = [
            ("importance_sampling_mean", exact_mean, |x| f64::from(x)),
            ("importance_sampling_zero", exact_zero, |x| f64::from(u8::from(x == 0))),
        ];
        for (name, exact, f) in cases {
            let a: Vec<f64> = walk.iter().map(|&x| f(x)).collect();
            let b: Vec<f64> = sym.iter().map(|&(x, rho)| f(x) * rho).collect();
            let ra = mean_ci(&format!("{name}_walk_delta_{d}"), &a, level)?.with("exact", exact);
            let rb = mean_ci(&format!("{name}_weighted_delta_{d}"), &b, level)?.with("exact", exact);
            let gap = (ra.mean - rb.mean).abs();
            let reach = ra.ci_half_width + rb.ci_half_width;
            e7_row(
                &mut rep,
                cfg,
                d,
                name,
                Some(a.len() as u64),
                gap,
                Some(reach),
                None,
                Some(gap <= reach),
            );
            rep.gates.push(Gate::holds(format!("{name}_delta_{d}"), gap <= reach));
            rep.records.push(ra);
            rep.records.push(rb);
        }
        rep.gates
            .push(Gate::at_most(format!("exact_identity_delta_{d}"), max_err, id_thr));
        rep.gates.push(Gate::at_most(
            format!("normalization_error_delta_{d}"),
            norm_err,
            norm_thr,
        ));
        rep.gates
            .push(Gate::at_most(format!("path_frequency_max_z_delta_{d}"), max_z, mult));
    }
    Ok(rep)
}

fn e8_limit_density(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(cfg);
    let grid = UniformGrid::with_spacing(1.0, cfg.h)?;
    let rho = replicate(cfg, 1, cfg.replicates, |_, rng| {
        let w = sample_brownian_path(&grid, rng);
        Ok(limit_density(&w, cfg.c, cfg.cap, cfg.eps))
    })?;
    let rec: SummaryRecord = mean_ci("limit_density", &rho, 0.95)?;
    let se = rec.standard_error();
    let z = (rec.mean - 1.0) / se;
    let mult = cfg.threshold("se_multiplier");
    let gate = Gate::at_most("normalization_z", z.abs(), mult);
    rep.table.push(row(
        cfg,
        vec![
            cfg.c.into(),
            cfg.cap.into(),
            cfg.h.into(),
            cfg.eps.into(),
            rho.len().into(),
            rec.mean.into(),
            se.into(),
            z.into(),
            gate.passed.into(),
        ],
    ));
    rep.gates.push(gate);
    rep.records.push(rec);
    Ok(rep)
}

struct CoupledRun {
    visits: u32,
    differ: bool,
    uncapped: f64,
    capped: f64,
}

fn e9_capped(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(cfg);
    let scheme = cfg.scheme(cfg.n)?;
    let params = scheme.params()?;
    let d = scheme.delta_n()?;
    let visit_cap = (cfg.cap / d.sqrt()).floor();
    if visit_cap < 1.0 || visit_cap > u32::MAX as f64 {
        return Err(RwmError::Config(format!(
            "cap {} gives visit cap {visit_cap} at delta {d:e}; need at least 1",
            cfg.cap
        )));
    }
    let visit_cap = visit_cap as u32;
    let capped = params.with_cap(visit_cap)?;
    let scale = scheme.space_scale();
    let n = cfg.n;
    let runs = replicate(cfg, 1, cfg.replicates, |_, rng| {
        // Same stream for both walks: they take identical steps while the
        // cap has no effect.
        let mut rng_capped = rng.clone();
        let mut a = Walker::new(params)?;
        let mut b = Walker::new(capped)?;
        let mut differ = false;
        for _ in 0..n {
            a.step(rng);
            b.step(&mut rng_capped);
            differ |= a.position() != b.position();
        }
        Ok(CoupledRun {
            visits: a.visits(),
            differ,
            uncapped: f64::from(a.position()) / scale,
            capped: f64::from(b.position()) / scale,
        })
    })?;
    let below = runs.iter().filter(|r| r.visits < visit_cap).count();
    let mismatches = runs.iter().filter(|r| r.visits < visit_cap && r.differ).count();
    let exceeded = runs.iter().filter(|r| r.visits > visit_cap).count();
    let diverged = runs.iter().filter(|r| r.visits > visit_cap && r.differ).count();
    let thr = cfg.threshold("max_mismatches");
    let gate = Gate::at_most("mismatches_below_cap", mismatches as f64, thr);
    rep.table.push(row(
        cfg,
        vec![
            cfg.c.into(),
            cfg.alpha.into(),
            n.into(),
            visit_cap.into(),
            runs.len().into(),
            below.into(),
            mismatches.into(),
            exceeded.into(),
            diverged.into(),
            gate.passed.into(),
        ],
    ));
    rep.gates.push(gate);
    let a: Vec<f64> = runs.iter().map(|r| r.uncapped).collect();
    let b: Vec<f64> = runs.iter().map(|r| r.capped).collect();
    rep.add_ks("terminal_capped", "terminal_uncapped", ks_two_sample(&a, &b)?);
    Ok(rep)
}

struct SlopeRun {
    values: Vec<f64>,
    flat: Vec<bool>,
}

fn e10_slope(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(cfg);
    let tmax = cfg.horizons.iter().copied().fold(0.0, f64::max);
    let thr = cfg.threshold("slope_ks");
    let mut best: Option<(&'static str, f64)> = None;
    for (i, variant) in cfg.kappa.variants().into_iter().enumerate() {
        let sde = SdeConfig::new(cfg.c, variant, cfg.h, cfg.eps, tmax);
        let grid = sde.grid()?;
        let h = grid.spacing();
        let marks: Vec<usize> = cfg.horizons.iter().map(|t| (t / h).round() as usize).collect();
        let runs = replicate(cfg, 1 + i as u64, cfg.sde_replicates, |_, rng| {
            let mut s = SdeStepper::new(&sde)?;
            let mut values = vec![0.0; marks.len()];
            let mut half_l = vec![0.0; marks.len()];
            let mut flat = vec![false; marks.len()];
            for step in 1..=grid.steps {
                s.step(rng);
                for (j, &k) in marks.iter().enumerate() {
                    if step == k / 2 {
                        half_l[j] = s.local_time();
                    }
                    if step == k {
                        values[j] = s.value();
                        flat[j] = s.local_time() == half_l[j];
                    }
                }
            }
            Ok(SlopeRun { values, flat })
        })?;
        let label = variant.label();
        let mut medians = Vec::new();
        for (j, &t) in cfg.horizons.iter().enumerate() {
            let slopes: Vec<f64> = runs.iter().map(|r| r.values[j] / t).collect();
            let flat = runs.iter().filter(|r| r.flat[j]).count() as f64 / runs.len() as f64;
            let ks = ks_one_sample(&slopes, |x| slope_limit_cdf(x, cfg.c))?;
            let ks_summed = ks_one_sample(&slopes, |x| summed_slope_limit_cdf(x, cfg.c))?;
            let med = median(&slopes)?;
            let at_max = t == tmax;
            rep.table.push(row(
                cfg,
                vec![
                    label.into(),
                    cfg.c.into(),
                    t.into(),
                    h.into(),
                    cfg.eps.into(),
                    slopes.len().into(),
                    med.into(),
                    ks.statistic.into(),
                    ks_summed.statistic.into(),
                    flat.into(),
                    at_max.then_some(ks.statistic <= thr).into(),
                ],
            ));
            rep.add_ks(format!("slope_{label}_T{t}"), "1 - exp(-x^2/(8c))", ks);
            rep.add_ks(format!("slope_{label}_T{t}"), "1 - exp(-x^2/(4c))", ks_summed);
            medians.push(med);
            if at_max {
                rep.add_plot(format!("slope_{label}_ecdf"), ecdf_series(&slopes, 1000));
                if best.is_none_or(|(_, d)| ks.statistic < d) {
                    best = Some((label, ks.statistic));
                }
            }
        }
        let increasing = medians.windows(2).all(|w| w[1] > w[0]);
        rep.gates
            .push(Gate::holds(format!("median_slope_increasing_{label}"), increasing));
    }
    let (label, d) = best.expect("at least one drift variant");
    rep.findings.insert("best_kappa".into(), label.into());
    rep.gates.push(Gate::at_most("slope_ks", d, thr));
    Ok(rep)
}
