use serde::{Deserialize, Serialize};

use crate::error::{Result, RwmError};

/// `steps + 1` equally spaced times `0, h, 2h, ..., horizon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub horizon: f64,
    pub steps: usize,
}

impl UniformGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(RwmError::invalid("horizon", "must be positive and finite"));
        }
        if steps == 0 {
            return Err(RwmError::invalid("steps", "must be at least 1"));
        }
        Ok(UniformGrid { horizon, steps })
    }

    /// Grid with spacing `h` up to `horizon`, rounding the step count.
    pub fn with_spacing(horizon: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(RwmError::invalid("time_step", "must be positive and finite"));
        }
        Self::new(horizon, ((horizon / h).round() as usize).max(1))
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    #[inline]
    pub fn time(&self, j: usize) -> f64 {
        if j == self.steps {
            self.horizon
        } else {
            j as f64 * self.spacing()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|j| self.time(j)).collect()
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// A real-valued path sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPath {
    pub grid: UniformGrid,
    pub values: Vec<f64>,
}

/// A rescaled walk path.
pub type ScaledPath = GridPath;

impl GridPath {
    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("grid paths are never empty")
    }

    /// Linear interpolation at time `t` (clamped to the grid).
    pub fn at(&self, t: f64) -> f64 {
        let h = self.grid.spacing();
        let x = (t / h).clamp(0.0, self.grid.steps as f64);
        let j = (x.floor() as usize).min(self.grid.steps);
        if j == self.grid.steps {
            return self.values[j];
        }
        let frac = x - j as f64;
        self.values[j] + (self.values[j + 1] - self.values[j]) * frac
    }
}
