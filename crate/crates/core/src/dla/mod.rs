//! The DLA chain: repeated attachment at boundary vertices drawn from
//! harmonic measure from infinity.

mod aggregate;
mod record;
mod sampler;

pub use aggregate::{Aggregate, Checkpoint};
pub use record::{JsonlSink, NullSink, RecordSink, StepRecord, VecSink};
pub use sampler::{sample_attachment, tree_attachment_law};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, GraphError};

#[derive(Debug, Error)]
pub enum DlaError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("no walk hit the aggregate in {0} launches")]
    Sampling(u64),
    #[error("walk exceeded the step cap of {0}")]
    StepBudget(u64),
    #[error("invalid launch configuration: {0}")]
    Config(String),
    #[error("invalid aggregate: {0}")]
    Aggregate(String),
    #[error("internal inconsistency: {0}")]
    Internal(String),
    #[error("record sink: {0}")]
    Io(#[from] std::io::Error),
}

/// Launch protocol. Walks start uniformly on the sphere of radius
/// `R = ceil(launch_factor * rad) + launch_offset` about the root and are
/// relaunched when they reach norm `ceil(escape_factor * R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaunchConfig {
    pub launch_factor: f64,
    pub launch_offset: u64,
    pub escape_factor: f64,
    pub max_retries: u64,
    pub step_cap: u64,
}

impl Default for LaunchConfig {
    fn default() -> Self {
        LaunchConfig {
            launch_factor: 2.0,
            launch_offset: 5,
            escape_factor: 4.0,
            max_retries: 100_000,
            step_cap: 1_000_000_000,
        }
    }
}

impl LaunchConfig {
    pub fn validate(&self) -> Result<(), DlaError> {
        if !(self.launch_factor >= 2.0 && self.launch_factor.is_finite()) {
            return Err(DlaError::Config(format!("launch_factor must be >= 2, got {}", self.launch_factor)));
        }
        if self.launch_offset < 2 {
            return Err(DlaError::Config(format!("launch_offset must be >= 2, got {}", self.launch_offset)));
        }
        if !(self.escape_factor > self.launch_factor && self.escape_factor.is_finite()) {
            return Err(DlaError::Config(format!(
                "escape_factor must exceed launch_factor {}, got {}",
                self.launch_factor, self.escape_factor
            )));
        }
        if self.max_retries == 0 {
            return Err(DlaError::Config("max_retries must be positive".into()));
        }
        if self.step_cap == 0 {
            return Err(DlaError::Config("step_cap must be positive".into()));
        }
        Ok(())
    }

    /// Launch radius for an aggregate of radius `rad`.
    pub fn launch_radius(&self, rad: u64) -> u64 {
        (self.launch_factor * rad as f64).ceil() as u64 + self.launch_offset
    }

    /// Norm at which a walk launched at radius `r` is discarded.
    pub fn escape_radius(&self, r: u64) -> u64 {
        ((self.escape_factor * r as f64).ceil() as u64).max(r + 1)
    }
}

/// Aggregate started from the root alone.
pub fn init_aggregate(g: &Graph) -> Aggregate {
    Aggregate::singleton(g)
}

/// Runs `n` attachment steps, emitting one record per step.
///
/// On error the aggregate keeps every completed step and the sink is flushed.
pub fn grow<R: Rng + ?Sized>(
    g: &Graph,
    agg: &mut Aggregate,
    n: u64,
    cfg: &LaunchConfig,
    rng: &mut R,
    sink: &mut dyn RecordSink,
) -> Result<(), DlaError> {
    cfg.validate()?;
    if n == 0 {
        return Err(DlaError::Config("particle count must be at least 1".into()));
    }
    let res = (|| -> Result<(), DlaError> {
        for _ in 0..n {
            let v = sample_attachment(g, agg, cfg, rng)?;
            agg.attach(g, v.clone())?;
            sink.record(&StepRecord { t: agg.t(), rad: agg.radius(), v })?;
        }
        Ok(())
    })();
    let flushed = sink.flush();
    res?;
    flushed?;
    Ok(())
}
