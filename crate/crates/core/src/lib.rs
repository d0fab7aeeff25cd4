//! Random walk with modifications at zero.
//!
//! The walk moves by ±1; after its `k`-th visit to 0 the up-probability is
//! `min(1/2 + k*delta, 1)`. This crate simulates it exactly, evaluates the
//! closed-form laws of its return structure, samples the continuum objects
//! that describe its rescaled paths, and runs the experiment registry exposed
//! by the `rwm-lab` binary.

pub mod analytics;
pub mod cli;
pub mod error;
pub mod grid;
pub mod limits;
pub mod mc;
pub mod stats;
pub mod walk;

pub use error::{Result, RwmError};
pub use grid::{GridPath, ScaledPath, UniformGrid};
pub use mc::{derive_seed, run_replicates, SeedPlan, SimRng};
pub use walk::{ModificationParams, ReturnStatistics, SeriesScheme, Trajectory};
