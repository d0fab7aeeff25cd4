//! Samplers for the scaling limits and the path-space densities.
//!
//! Local time at 0 is always the symmetric band estimator
//! `(1/2 eps) * time spent in [-eps, eps]`, evaluated at left grid points.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RwmError};
use crate::grid::{GridPath, UniformGrid};
use crate::mc::SimRng;
use crate::walk::{ModificationParams, Trajectory};

pub fn sample_brownian_path(grid: &UniformGrid, rng: &mut SimRng) -> GridPath {
    let sd = grid.spacing().sqrt();
    let mut values = Vec::with_capacity(grid.len());
    let mut w = 0.0;
    values.push(w);
    for _ in 0..grid.steps {
        w += sd * rng.standard_normal();
        values.push(w);
    }
    GridPath { grid: *grid, values }
}

/// Inverse distribution function of `eta`: `sqrt(-2 ln(1 - u))`.
///
/// `1 - U` and `U` have the same law, so [`sample_rayleigh`] uses
/// `sqrt(-2 ln U)` directly.
pub fn rayleigh_quantile(u: f64) -> f64 {
    (-2.0 * (-u).ln_1p()).sqrt()
}

pub fn sample_rayleigh(rng: &mut SimRng) -> f64 {
    (-2.0 * rng.uniform_open().ln()).sqrt()
}

/// The path `t -> 2 sqrt(c) eta t`.
pub fn linear_limit_path(c: f64, eta: f64, grid: &UniformGrid) -> Result<GridPath> {
    if eta < 0.0 || eta.is_nan() {
        return Err(RwmError::invalid("eta", "must be non-negative"));
    }
    if c.is_nan() || c <= 0.0 {
        return Err(RwmError::invalid("c", "must be positive"));
    }
    let slope = 2.0 * c.sqrt() * eta;
    let values = (0..=grid.steps).map(|j| slope * grid.time(j)).collect();
    Ok(GridPath { grid: *grid, values })
}

/// Which multiple of the local time drives the SDE drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftVariant {
    /// `kappa = sqrt(c)`.
    SqrtC,
    /// `kappa = 2 sqrt(c)`.
    TwoSqrtC,
}

impl DriftVariant {
    pub fn factor(self, c: f64) -> f64 {
        match self {
            DriftVariant::SqrtC => c.sqrt(),
            DriftVariant::TwoSqrtC => 2.0 * c.sqrt(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DriftVariant::SqrtC => "sqrt_c",
            DriftVariant::TwoSqrtC => "two_sqrt_c",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    pub c: f64,
    /// Cap `M` on the local time inside the drift. `None` is uncapped.
    pub cap: Option<f64>,
    /// `kappa` in `dX = kappa * min(l, M) dt + dW`.
    pub drift_factor: f64,
    pub time_step: f64,
    /// Half-width `eps` of the local-time band.
    pub band: f64,
    pub horizon: f64,
}

impl SdeConfig {
    pub fn new(c: f64, variant: DriftVariant, time_step: f64, band: f64, horizon: f64) -> Self {
        SdeConfig {
            c,
            cap: None,
            drift_factor: variant.factor(c),
            time_step,
            band,
            horizon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.c) {
            return Err(RwmError::invalid("c", "must be positive"));
        }
        if !(self.drift_factor >= 0.0 && self.drift_factor.is_finite()) {
            return Err(RwmError::invalid("drift_factor", "must be non-negative"));
        }
        if !positive(self.time_step) {
            return Err(RwmError::invalid("h", "must be positive"));
        }
        if !positive(self.band) {
            return Err(RwmError::invalid("eps", "must be positive"));
        }
        if !positive(self.horizon) {
            return Err(RwmError::invalid("horizon", "must be positive"));
        }
        if let Some(m) = self.cap {
            if m.is_nan() || m < 0.0 {
                return Err(RwmError::invalid("cap", "must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<UniformGrid> {
        UniformGrid::with_spacing(self.horizon, self.time_step)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdePath {
    pub grid: UniformGrid,
    pub values: Vec<f64>,
    pub local_time: Vec<f64>,
}

/// Euler stepping of `dX = kappa min(l, M) dt + dW` with the band local time.
#[derive(Debug, Clone)]
pub struct SdeStepper {
    kappa: f64,
    cap: f64,
    h: f64,
    sqrt_h: f64,
    band: f64,
    occupation_weight: f64,
    x: f64,
    l: f64,
}

impl SdeStepper {
    pub fn new(config: &SdeConfig) -> Result<Self> {
        config.validate()?;
        let h = config.grid()?.spacing();
        Ok(SdeStepper {
            kappa: config.drift_factor,
            cap: config.cap.unwrap_or(f64::INFINITY),
            h,
            sqrt_h: h.sqrt(),
            band: config.band,
            occupation_weight: h / (2.0 * config.band),
            x: 0.0,
            l: 0.0,
        })
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.x
    }

    #[inline]
    pub fn local_time(&self) -> f64 {
        self.l
    }

    /// Advances one step with the given standard normal draw.
    #[inline]
    pub fn advance(&mut self, gaussian: f64) {
        let x = self.x;
        let drift = if self.kappa == 0.0 {
            0.0
        } else {
            self.kappa * self.l.min(self.cap) * self.h
        };
        self.x = x + drift + self.sqrt_h * gaussian;
        if x.abs() <= self.band {
            self.l += self.occupation_weight;
        }
    }

    #[inline]
    pub fn step(&mut self, rng: &mut SimRng) {
        self.advance(rng.standard_normal());
    }
}

pub fn integrate_local_time_sde(config: &SdeConfig, rng: &mut SimRng) -> Result<SdePath> {
    let grid = config.grid()?;
    let mut stepper = SdeStepper::new(config)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut local_time = Vec::with_capacity(grid.len());
    values.push(stepper.value());
    local_time.push(stepper.local_time());
    for _ in 0..grid.steps {
        stepper.step(rng);
        values.push(stepper.value());
        local_time.push(stepper.local_time());
    }
    Ok(SdePath {
        grid,
        values,
        local_time,
    })
}

/// `(1/2 eps) * sum_{t_j < t} h 1{|X(t_j)| <= eps}`.
pub fn band_local_time(path: &GridPath, eps: f64, t: f64) -> f64 {
    let h = path.grid.spacing();
    let inside = path
        .values
        .iter()
        .enumerate()
        .take_while(|(j, _)| path.grid.time(*j) < t)
        .filter(|(_, x)| x.abs() <= eps)
        .count();
    inside as f64 * h / (2.0 * eps)
}

/// Likelihood ratio of the modified walk against the symmetric walk on one path:
/// `prod_k (1 + min(2 nu'_k delta, 1) xi_{k+1})`.
///
/// A probability-zero path under the modified walk gives 0.
pub fn discrete_density(traj: &Trajectory, params: &ModificationParams) -> f64 {
    let mut rho = 1.0;
    for (k, xi) in traj.increments().enumerate() {
        let v = params.effective_visits(traj.visits[k]);
        let bias = (2.0 * v as f64 * params.delta).min(1.0);
        rho *= 1.0 + bias * xi as f64;
        if rho == 0.0 {
            return 0.0;
        }
    }
    rho
}

/// Left-point discretization of the Girsanov exponent
/// `int 2 min(sqrt(c) l, M) dW - int 2 min(sqrt(c) l, M)^2 dt`.
pub fn log_limit_density(w: &GridPath, c: f64, cap: f64, band: f64) -> f64 {
    let h = w.grid.spacing();
    let sqrt_c = c.sqrt();
    let weight = h / (2.0 * band);
    let mut l = 0.0;
    let mut exponent = 0.0;
    for pair in w.values.windows(2) {
        let theta = (sqrt_c * l).min(cap);
        exponent += 2.0 * theta * (pair[1] - pair[0]) - 2.0 * theta * theta * h;
        if pair[0].abs() <= band {
            l += weight;
        }
    }
    exponent
}

pub fn limit_density(w: &GridPath, c: f64, cap: f64, band: f64) -> f64 {
    log_limit_density(w, c, cap, band).exp()
}
