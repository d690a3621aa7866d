//! Experiments over the sticky random Kakeya model: slab moments, lower and
//! upper volume bounds, resistance growth, counting diagnostics and the
//! independence audit, with replayable JSON and CSV output.

pub mod audit;
pub mod bounds;
pub mod config;
pub mod counting;
pub mod error;
pub mod measure;
pub mod model;
pub mod moments;
pub mod points;
pub mod record;
pub mod simulate;
pub mod stats;
pub mod verify;

pub use config::{CurveChoice, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use record::{Record, RunResult, Timing};
