//! Exact simulation of the nearest-neighbour walk whose up-probability grows by
//! `delta` with every visit to 0.
//!
//! Visit convention: `visits[k]` counts the zeros among `X_0..=X_k`, so a walk
//! started at 0 has `visits[0] = 1` and its very first step is already biased.
//! `ModificationParams::first_step_symmetric` switches to the alternative
//! reading where the time-0 visit is not counted.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RwmError};
use crate::grid::{GridPath, ScaledPath, UniformGrid};
use crate::mc::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModificationParams {
    /// Bias added to the up-probability per visit to 0, in `(0, 1/2]`.
    pub delta: f64,
    /// Visit count after which the bias stops growing.
    pub visit_cap: Option<u32>,
    pub start: i32,
    /// Do not count the time-0 visit when the walk starts at 0.
    pub first_step_symmetric: bool,
}

impl ModificationParams {
    pub fn new(delta: f64) -> Result<Self> {
        let params = ModificationParams {
            delta,
            visit_cap: None,
            start: 0,
            first_step_symmetric: false,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_cap(mut self, cap: u32) -> Result<Self> {
        self.visit_cap = Some(cap);
        self.validate()?;
        Ok(self)
    }

    pub fn with_start(mut self, start: i32) -> Self {
        self.start = start;
        self
    }

    pub fn with_first_step_symmetric(mut self, on: bool) -> Self {
        self.first_step_symmetric = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return Err(RwmError::invalid("delta", "must lie in (0, 0.5]"));
        }
        if self.visit_cap == Some(0) {
            return Err(RwmError::invalid("visit_cap", "must be at least 1"));
        }
        Ok(())
    }

    /// Visit count that drives the bias: time-0 adjustment, then the cap.
    #[inline]
    pub fn effective_visits(&self, visits: u32) -> u32 {
        let v = if self.first_step_symmetric && self.start == 0 {
            visits.saturating_sub(1)
        } else {
            visits
        };
        match self.visit_cap {
            Some(cap) => v.min(cap),
            None => v,
        }
    }
}

/// Triangular-array scheme `delta_n = c * n^(-alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesScheme {
    pub c: f64,
    pub alpha: f64,
    pub n: u64,
}

impl SeriesScheme {
    pub fn new(c: f64, alpha: f64, n: u64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(RwmError::invalid("c", "must be positive"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(RwmError::invalid("alpha", "must be positive"));
        }
        if n == 0 {
            return Err(RwmError::invalid("n", "must be positive"));
        }
        Ok(SeriesScheme { c, alpha, n })
    }

    pub fn delta_n(&self) -> Result<f64> {
        let d = self.c * (self.n as f64).powf(-self.alpha);
        if !(d > 0.0 && d <= 0.5) {
            return Err(RwmError::invalid(
                "delta",
                format!("must lie in (0, 0.5]; c * n^-alpha = {d}"),
            ));
        }
        Ok(d)
    }

    /// Space scaling exponent: 1/2 for alpha >= 1, 1 - alpha/2 below.
    pub fn space_exponent(&self) -> f64 {
        if self.alpha >= 1.0 {
            0.5
        } else {
            1.0 - self.alpha / 2.0
        }
    }

    pub fn space_scale(&self) -> f64 {
        (self.n as f64).powf(self.space_exponent())
    }

    pub fn params(&self) -> Result<ModificationParams> {
        ModificationParams::new(self.delta_n()?)
    }
}

/// `(p, q)`: probabilities of the up and down step after `visits` visits to 0.
#[inline]
pub fn transition_probabilities(visits: u32, params: &ModificationParams) -> (f64, f64) {
    let v = params.effective_visits(visits);
    let p = (0.5 + v as f64 * params.delta).min(1.0);
    (p, 1.0 - p)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub positions: Vec<i32>,
    pub visits: Vec<u32>,
}

impl Trajectory {
    /// Builds a trajectory from positions, computing the visit counter.
    pub fn from_positions(positions: Vec<i32>) -> Result<Self> {
        if positions.is_empty() {
            return Err(RwmError::EmptySample);
        }
        if positions.windows(2).any(|w| (w[1] - w[0]).abs() != 1) {
            return Err(RwmError::invalid("positions", "steps must be +1 or -1"));
        }
        let mut count = 0u32;
        let visits = positions
            .iter()
            .map(|&x| {
                count += u32::from(x == 0);
                count
            })
            .collect();
        Ok(Trajectory { positions, visits })
    }

    pub fn start(&self) -> i32 {
        self.positions[0]
    }

    pub fn steps(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn end(&self) -> i32 {
        *self.positions.last().expect("non-empty")
    }

    /// Step increments `xi_{k+1} = X_{k+1} - X_k`.
    pub fn increments(&self) -> impl Iterator<Item = i32> + '_ {
        self.positions.windows(2).map(|w| w[1] - w[0])
    }
}

/// Incremental state of one walk. `simulate_path` is a thin loop over this.
#[derive(Debug, Clone)]
pub struct Walker {
    params: ModificationParams,
    position: i32,
    visits: u32,
    time: u64,
}

impl Walker {
    pub fn new(params: ModificationParams) -> Result<Self> {
        params.validate()?;
        Ok(Walker {
            params,
            position: params.start,
            visits: u32::from(params.start == 0),
            time: 0,
        })
    }

    #[inline]
    pub fn position(&self) -> i32 {
        self.position
    }

    #[inline]
    pub fn visits(&self) -> u32 {
        self.visits
    }

    #[inline]
    pub fn time(&self) -> u64 {
        self.time
    }

    #[inline]
    pub fn probabilities(&self) -> (f64, f64) {
        transition_probabilities(self.visits, &self.params)
    }

    /// One step: a single uniform draw compared against `p`. Returns the increment.
    #[inline]
    pub fn step(&mut self, rng: &mut SimRng) -> i32 {
        let (p, _) = self.probabilities();
        let xi = if rng.uniform() < p { 1 } else { -1 };
        self.position += xi;
        self.time += 1;
        if self.position == 0 {
            self.visits += 1;
        }
        xi
    }
}

pub fn simulate_path(params: &ModificationParams, steps: usize, rng: &mut SimRng) -> Result<Trajectory> {
    if steps == 0 {
        return Err(RwmError::invalid("steps", "must be at least 1"));
    }
    let mut walker = Walker::new(*params)?;
    let mut positions = Vec::with_capacity(steps + 1);
    let mut visits = Vec::with_capacity(steps + 1);
    positions.push(walker.position());
    visits.push(walker.visits());
    for _ in 0..steps {
        walker.step(rng);
        positions.push(walker.position());
        visits.push(walker.visits());
    }
    Ok(Trajectory { positions, visits })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnStatistics {
    /// `T_0 = 0 < T_1 < ...`: times at which the walk sits at 0.
    pub return_times: Vec<u64>,
    /// `tau_k = T_{k+1} - T_k`.
    pub excursions: Vec<u64>,
    /// Visits to 0 strictly after time 0.
    pub returns_count: u32,
    pub last_return: u64,
    /// Probability that the walk would have returned to 0 again after the
    /// observation stopped. 1 when nothing better is known.
    pub truncation_bias_bound: f64,
    /// Steps simulated or observed.
    pub steps: u64,
}

impl ReturnStatistics {
    fn from_return_times(return_times: Vec<u64>, steps: u64, bound: f64) -> Self {
        let excursions = return_times.windows(2).map(|w| w[1] - w[0]).collect();
        let last_return = *return_times.last().unwrap_or(&0);
        ReturnStatistics {
            returns_count: return_times.len().saturating_sub(1) as u32,
            return_times,
            excursions,
            last_return,
            truncation_bias_bound: bound,
            steps,
        }
    }
}

/// When a run to the last return may stop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscapeRule {
    /// Stop at a fixed height.
    Barrier(u32),
    /// Stop at the first height `b` with `(q/p)^b <= budget` for the current `p`.
    BiasBudget(f64),
}

impl EscapeRule {
    /// Height at which the walk with up-probability `p > 1/2` may stop.
    pub fn height(&self, p: f64) -> i32 {
        match *self {
            EscapeRule::Barrier(b) => b.min(i32::MAX as u32) as i32,
            EscapeRule::BiasBudget(budget) => escape_height(p, budget),
        }
    }
}

/// Smallest `b >= 1` with `(q/p)^b <= budget`.
pub fn escape_height(p: f64, budget: f64) -> i32 {
    let ratio = (1.0 - p) / p;
    if ratio <= 0.0 {
        return 1;
    }
    let b = (budget.ln() / ratio.ln()).ceil();
    if b.is_finite() {
        (b as i64).clamp(1, i32::MAX as i64) as i32
    } else {
        i32::MAX
    }
}

/// Runs the walk until it can be declared escaped.
///
/// The up-probability only changes at zeros, so once the walk stands at
/// `barrier` with `p > 1/2` the chance of ever coming back is the
/// gambler's-ruin value `(q/p)^barrier`; that number is reported as the
/// truncation bias bound. With `p = 1` and `X >= 0` the walk can never return
/// and the bound is 0.
pub fn simulate_to_last_return(
    params: &ModificationParams,
    barrier: u32,
    horizon_cap: u64,
    rng: &mut SimRng,
) -> Result<ReturnStatistics> {
    if barrier == 0 {
        return Err(RwmError::invalid("barrier", "must be at least 1"));
    }
    run_to_last_return(params, EscapeRule::Barrier(barrier), horizon_cap, rng)
}

/// [`simulate_to_last_return`] with an explicit escape rule.
pub fn run_to_last_return(
    params: &ModificationParams,
    rule: EscapeRule,
    horizon_cap: u64,
    rng: &mut SimRng,
) -> Result<ReturnStatistics> {
    match rule {
        EscapeRule::Barrier(0) => return Err(RwmError::invalid("barrier", "must be at least 1")),
        EscapeRule::BiasBudget(b) if !(b > 0.0 && b < 1.0) => {
            return Err(RwmError::invalid("bias_budget", "must lie in (0, 1)"))
        }
        _ => {}
    }
    if params.start != 0 {
        return Err(RwmError::NonZeroStart(params.start));
    }
    let mut walker = Walker::new(*params)?;
    let mut return_times = vec![0u64];
    // p only changes at zeros, so the escape height is recomputed there.
    let mut height = i32::MAX;
    let mut height_for = f64::NAN;
    loop {
        let (p, q) = walker.probabilities();
        if p >= 1.0 && walker.position() >= 0 {
            return Ok(ReturnStatistics::from_return_times(return_times, walker.time(), 0.0));
        }
        if p > 0.5 {
            if p != height_for {
                height = rule.height(p);
                height_for = p;
            }
            if walker.position() >= height {
                let bound = (q / p).powi(height);
                return Ok(ReturnStatistics::from_return_times(return_times, walker.time(), bound));
            }
        }
        if walker.time() >= horizon_cap {
            let partial = ReturnStatistics::from_return_times(return_times, walker.time(), 1.0);
            return Err(RwmError::Truncated {
                horizon_cap,
                partial: Box::new(partial),
            });
        }
        walker.step(rng);
        if walker.position() == 0 {
            return_times.push(walker.time());
        }
    }
}

/// Path of the symmetric walk started at 0.
pub fn simulate_symmetric_path(steps: usize, rng: &mut SimRng) -> Trajectory {
    let mut positions = Vec::with_capacity(steps + 1);
    let mut visits = Vec::with_capacity(steps + 1);
    let (mut x, mut v) = (0i32, 1u32);
    positions.push(x);
    visits.push(v);
    for _ in 0..steps {
        x += if rng.uniform() < 0.5 { 1 } else { -1 };
        v += u32::from(x == 0);
        positions.push(x);
        visits.push(v);
    }
    Trajectory { positions, visits }
}

/// Zero-visit structure of an observed path started at 0.
///
/// The bias bound is 1: nothing is known about the walk past the window.
pub fn return_statistics(traj: &Trajectory) -> Result<ReturnStatistics> {
    if traj.start() != 0 {
        return Err(RwmError::NonZeroStart(traj.start()));
    }
    let return_times = traj
        .positions
        .iter()
        .enumerate()
        .filter(|(_, &x)| x == 0)
        .map(|(t, _)| t as u64)
        .collect();
    Ok(ReturnStatistics::from_return_times(
        return_times,
        traj.steps() as u64,
        1.0,
    ))
}

/// One excursion from 0 of the walk with constant up-probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Excursion {
    /// `None` when the walk escaped above the barrier.
    pub return_time: Option<u64>,
}

/// First return time to 0 of a constant-`p` walk, with the same barrier rule as
/// [`simulate_to_last_return`]: reaching `barrier` counts as never returning.
pub fn simulate_excursion(p: f64, barrier: u32, horizon_cap: u64, rng: &mut SimRng) -> Result<Excursion> {
    if !(0.5..=1.0).contains(&p) || p == 0.5 {
        return Err(RwmError::invalid("p", "must lie in (0.5, 1]"));
    }
    let barrier = barrier.min(i32::MAX as u32) as i32;
    let mut x = 0i32;
    let mut t = 0u64;
    loop {
        if t >= horizon_cap {
            return Err(RwmError::Truncated {
                horizon_cap,
                partial: Box::new(ReturnStatistics::from_return_times(vec![0], t, 1.0)),
            });
        }
        x += if rng.uniform() < p { 1 } else { -1 };
        t += 1;
        if x == 0 {
            return Ok(Excursion { return_time: Some(t) });
        }
        if x >= barrier || (p >= 1.0 && x > 0) {
            return Ok(Excursion { return_time: None });
        }
    }
}

/// Linearly interpolated walk rescaled by `n` in time and `n^beta` in space.
pub fn scaled_path(traj: &Trajectory, scheme: &SeriesScheme, grid: &UniformGrid) -> Result<ScaledPath> {
    let n = scheme.n as f64;
    let needed = n * grid.horizon;
    let available = traj.steps();
    if needed > available as f64 {
        return Err(RwmError::GridExceedsTrajectory {
            required: needed,
            available,
        });
    }
    let scale = scheme.space_scale();
    let values = (0..=grid.steps)
        .map(|j| {
            let s = n * grid.time(j);
            let k = (s.floor() as usize).min(available);
            let frac = s - k as f64;
            let x = traj.positions[k] as f64;
            let v = if frac > 0.0 && k < available {
                x + (traj.positions[k + 1] as f64 - x) * frac
            } else {
                x
            };
            v / scale
        })
        .collect();
    Ok(GridPath { grid: *grid, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn params(delta: f64) -> ModificationParams {
        ModificationParams::new(delta).unwrap()
    }

    fn assert_path_invariants(traj: &Trajectory) {
        for w in traj.positions.windows(2) {
            assert_eq!((w[1] - w[0]).abs(), 1);
        }
        assert_eq!(traj.visits[0], u32::from(traj.positions[0] == 0));
        for k in 0..traj.steps() {
            let inc = traj.visits[k + 1] - traj.visits[k];
            assert_eq!(inc, u32::from(traj.positions[k + 1] == 0));
        }
    }

    #[test]
    fn probabilities_examples() {
        let p = params(0.1);
        let (a, b) = transition_probabilities(0, &p);
        assert_abs_diff_eq!(a, 0.5);
        assert_abs_diff_eq!(b, 0.5);
        let (a, b) = transition_probabilities(1, &p);
        assert_abs_diff_eq!(a, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(b, 0.4, epsilon = 1e-15);
        assert_eq!(transition_probabilities(6, &p), (1.0, 0.0));
        let capped = p.with_cap(3).unwrap();
        let (a, b) = transition_probabilities(9, &capped);
        assert_abs_diff_eq!(a, 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(b, 0.2, epsilon = 1e-15);
    }

    #[test]
    fn first_step_symmetric_flag_shifts_count() {
        let p = params(0.1).with_first_step_symmetric(true);
        assert_eq!(transition_probabilities(1, &p), (0.5, 0.5));
        let (a, _) = transition_probabilities(2, &p);
        assert_abs_diff_eq!(a, 0.6, epsilon = 1e-15);
        // Not applied when the walk does not start at 0.
        let q = p.with_start(3);
        let (a, _) = transition_probabilities(1, &q);
        assert_abs_diff_eq!(a, 0.6, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ModificationParams::new(0.0).is_err());
        assert!(ModificationParams::new(0.7).is_err());
        assert!(ModificationParams::new(f64::NAN).is_err());
        assert!(params(0.1).with_cap(0).is_err());
        assert!(SeriesScheme::new(1.0, 0.5, 1).unwrap().delta_n().is_err());
        assert!(SeriesScheme::new(-1.0, 0.5, 10).is_err());
    }

    #[test]
    fn scheme_exponents() {
        let s = SeriesScheme::new(1.0, 1.5, 10_000).unwrap();
        assert_abs_diff_eq!(s.space_exponent(), 0.5);
        assert_abs_diff_eq!(s.delta_n().unwrap(), 1e-6, epsilon = 1e-18);
        let s = SeriesScheme::new(1.0, 0.5, 10_000).unwrap();
        assert_abs_diff_eq!(s.space_exponent(), 0.75);
        assert_abs_diff_eq!(s.delta_n().unwrap(), 0.01, epsilon = 1e-15);
    }

    #[test]
    fn full_bias_forces_first_step_up() {
        for seed in 0..50 {
            let mut rng = SimRng::from_seed(seed);
            let t = simulate_path(&params(0.5), 5, &mut rng).unwrap();
            assert_eq!(t.positions[1], 1);
            assert_path_invariants(&t);
        }
    }

    #[test]
    fn near_symmetric_walk_has_small_mean_step() {
        let steps = 1_000_000;
        let mut rng = SimRng::from_seed(2024);
        let t = simulate_path(&params(1e-9), steps, &mut rng).unwrap();
        assert_path_invariants(&t);
        let bias = t.end() as f64 / steps as f64;
        assert!(bias.abs() <= 4.0 / (steps as f64).sqrt(), "bias {bias}");
    }

    #[test]
    fn conditional_up_frequency_while_one_visit() {
        // Steps taken while nu = 1 must go up with probability 0.75.
        let p = params(0.25);
        let (mut ups, mut total) = (0u64, 0u64);
        for seed in 0..20_000 {
            let mut rng = SimRng::from_seed(seed);
            let t = simulate_path(&p, 20, &mut rng).unwrap();
            for (k, xi) in t.increments().enumerate() {
                if t.visits[k] == 1 {
                    total += 1;
                    ups += u64::from(xi == 1);
                }
            }
        }
        let freq = ups as f64 / total as f64;
        let se = (0.75 * 0.25 / total as f64).sqrt();
        assert!((freq - 0.75).abs() < 4.0 * se, "freq {freq} total {total}");
    }

    #[test]
    fn deterministic_given_seed() {
        let p = params(0.05).with_cap(4).unwrap();
        let a = simulate_path(&p, 1000, &mut SimRng::from_seed(9)).unwrap();
        let b = simulate_path(&p, 1000, &mut SimRng::from_seed(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_steps_rejected() {
        assert!(simulate_path(&params(0.1), 0, &mut SimRng::from_seed(1)).is_err());
    }

    #[test]
    fn return_statistics_examples() {
        let t = Trajectory::from_positions(vec![0, 1, 0, 1, 2]).unwrap();
        let r = return_statistics(&t).unwrap();
        assert_eq!(r.return_times, vec![0, 2]);
        assert_eq!(r.excursions, vec![2]);
        assert_eq!(r.returns_count, 1);
        assert_eq!(r.last_return, 2);

        let t = Trajectory::from_positions(vec![0, 1, 2, 3]).unwrap();
        let r = return_statistics(&t).unwrap();
        assert_eq!(r.return_times, vec![0]);
        assert_eq!(r.returns_count, 0);
        assert_eq!(r.last_return, 0);

        let t = Trajectory::from_positions(vec![1, 2]).unwrap();
        assert!(matches!(return_statistics(&t), Err(RwmError::NonZeroStart(1))));
        assert!(Trajectory::from_positions(vec![0, 2]).is_err());
    }

    #[test]
    fn symmetric_return_count_rate() {
        // E[returns in m steps] ~ sqrt(2m/pi) for the symmetric walk; a
        // negligible delta keeps the walk symmetric to 1e-12 over 1e4 steps.
        let m = 10_000;
        let p = params(1e-15);
        let reps = 2000;
        let total: u64 = (0..reps)
            .map(|s| {
                let t = simulate_path(&p, m, &mut SimRng::from_seed(s)).unwrap();
                return_statistics(&t).unwrap().returns_count as u64
            })
            .sum();
        let mean = total as f64 / reps as f64;
        let target = (2.0 * m as f64 / std::f64::consts::PI).sqrt();
        assert!((mean - target).abs() < 0.05 * target, "mean {mean} target {target}");
    }

    #[test]
    fn last_return_with_full_bias_is_immediate() {
        let r = simulate_to_last_return(&params(0.5), 10, 1000, &mut SimRng::from_seed(1)).unwrap();
        assert_eq!(r.last_return, 0);
        assert_eq!(r.returns_count, 0);
        assert_eq!(r.truncation_bias_bound, 0.0);
    }

    #[test]
    fn gamblers_ruin_bound_value() {
        // p = 0.75 is active from the start with delta = 0.25; escape can only
        // happen at nu = 1 since the next return sets p = 1.
        let p = params(0.25);
        for seed in 0..200 {
            let r = simulate_to_last_return(&p, 20, 1_000_000, &mut SimRng::from_seed(seed)).unwrap();
            if r.returns_count == 0 {
                assert_abs_diff_eq!(r.truncation_bias_bound, (1.0f64 / 3.0).powi(20), epsilon = 1e-22);
                assert_abs_diff_eq!(r.truncation_bias_bound, 2.8680e-10, epsilon = 1e-13);
            } else {
                assert_eq!(r.truncation_bias_bound, 0.0);
            }
        }
    }

    #[test]
    fn mean_last_return_quarter_delta() {
        let p = params(0.25);
        let reps = 100_000;
        let xs: Vec<f64> = (0..reps)
            .map(|s| {
                simulate_to_last_return(&p, 40, 1_000_000, &mut SimRng::from_seed(s))
                    .unwrap()
                    .last_return as f64
            })
            .collect();
        let mean = xs.iter().sum::<f64>() / reps as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        assert!((mean - 1.5).abs() < 4.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn escape_heights() {
        assert_eq!(escape_height(1.0, 1e-12), 1);
        // (1/3)^b <= 1e-6 first at b = 13.
        assert_eq!(escape_height(0.75, 1e-6), 13);
        assert!((1.0f64 / 3.0).powi(12) > 1e-6);
        assert_eq!(EscapeRule::Barrier(7).height(0.6), 7);
    }

    #[test]
    fn budget_rule_respects_budget() {
        let p = params(0.01);
        for seed in 0..200 {
            let r = run_to_last_return(
                &p,
                EscapeRule::BiasBudget(1e-9),
                10_000_000,
                &mut SimRng::from_seed(seed),
            )
            .unwrap();
            assert!(r.truncation_bias_bound <= 1e-9);
        }
        assert!(run_to_last_return(&p, EscapeRule::BiasBudget(0.0), 10, &mut SimRng::from_seed(0)).is_err());
    }

    #[test]
    fn doubling_the_barrier_moves_the_mean_within_the_bound() {
        // Same seeds, barrier b and 2b: replicates agree unless the walk came
        // back from height b, which happens with probability <= bound.
        let p = params(0.1);
        let (b, cap) = (60u32, 10_000_000u64);
        let reps = 20_000;
        let (mut s1, mut s2, mut max_bound) = (0.0, 0.0, 0.0f64);
        for seed in 0..reps {
            let a = simulate_to_last_return(&p, b, cap, &mut SimRng::from_seed(seed)).unwrap();
            let c = simulate_to_last_return(&p, 2 * b, cap, &mut SimRng::from_seed(seed)).unwrap();
            s1 += a.last_return as f64;
            s2 += c.last_return as f64;
            max_bound = max_bound.max(a.truncation_bias_bound);
        }
        let diff = (s1 - s2).abs() / reps as f64;
        assert!(diff <= max_bound * cap as f64, "diff {diff} bound {max_bound}");
    }

    #[test]
    fn symmetric_path_invariants() {
        let t = simulate_symmetric_path(500, &mut SimRng::from_seed(12));
        assert_path_invariants(&t);
        assert_eq!(t.start(), 0);
    }

    #[test]
    fn horizon_cap_truncation_carries_partial() {
        let p = params(1e-6);
        let err = simulate_to_last_return(&p, 1_000_000, 50, &mut SimRng::from_seed(3)).unwrap_err();
        match err {
            RwmError::Truncated { horizon_cap, partial } => {
                assert_eq!(horizon_cap, 50);
                assert_eq!(partial.steps, 50);
                assert_eq!(partial.truncation_bias_bound, 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn scaled_path_examples() {
        let t = Trajectory::from_positions(vec![0, 1, 2, 1, 0]).unwrap();
        // alpha >= 1 gives beta = 1/2; n = 4 so the scale is 2.
        let scheme = SeriesScheme::new(0.1, 1.0, 4).unwrap();
        let grid = UniformGrid::new(1.0, 8).unwrap();
        let s = scaled_path(&t, &scheme, &grid).unwrap();
        assert_abs_diff_eq!(s.values[4], 1.0); // t = 0.5
        assert_abs_diff_eq!(s.values[3], 0.75); // t = 0.375
        assert_abs_diff_eq!(s.values[0], 0.0);
        let long = UniformGrid::new(2.0, 8).unwrap();
        assert!(matches!(
            scaled_path(&t, &scheme, &long),
            Err(RwmError::GridExceedsTrajectory { .. })
        ));
    }

    proptest! {
        #[test]
        fn simulated_paths_satisfy_invariants(
            delta in 1e-4f64..0.5,
            cap in proptest::option::of(1u32..20),
            steps in 1usize..400,
            seed in any::<u64>(),
        ) {
            let mut p = params(delta);
            p.visit_cap = cap;
            let t = simulate_path(&p, steps, &mut SimRng::from_seed(seed)).unwrap();
            prop_assert_eq!(t.positions.len(), steps + 1);
            assert_path_invariants(&t);
            let r = return_statistics(&t).unwrap();
            prop_assert_eq!(r.returns_count + 1, *t.visits.last().unwrap());
            for &tk in &r.return_times {
                prop_assert_eq!(t.positions[tk as usize], 0);
            }
        }

        #[test]
        fn probabilities_are_a_distribution(visits in 0u32..10_000, delta in 1e-6f64..0.5) {
            let (p, q) = transition_probabilities(visits, &params(delta));
            prop_assert!((0.5..=1.0).contains(&p));
            prop_assert!((p + q - 1.0).abs() < 1e-15);
        }
    }
}
