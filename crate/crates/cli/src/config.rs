//! Run configuration: a flat `key = value` file, overridden by flags.

use std::fmt;
use std::str::FromStr;

use dla_core::dla::LaunchConfig;
use dla_core::potential::SolverConfig;
use dla_core::Family;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub graph: String,
    pub particles: u64,
    pub seed: Option<u64>,
    pub launch: LaunchConfig,
    pub solver: SolverConfig,
    pub out: Option<String>,
    pub checkpoint: Option<String>,
    /// Steps between checkpoints; 0 writes only the final one.
    pub checkpoint_every: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            graph: "z3".into(),
            particles: 1000,
            seed: None,
            launch: LaunchConfig::default(),
            solver: SolverConfig::default(),
            out: None,
            checkpoint: None,
            checkpoint_every: 0,
        }
    }
}

/// Keys in serialization order.
pub const KEYS: &[&str] = &[
    "graph",
    "particles",
    "seed",
    "launch_factor",
    "launch_offset",
    "escape_factor",
    "max_retries",
    "step_cap",
    "box_radius",
    "refine_factor",
    "rel_tol",
    "max_refinements",
    "residual_tol",
    "max_vertices",
    "out",
    "checkpoint",
    "checkpoint_every",
];

/// Keys that do not affect results and so stay out of the config hash.
const UNHASHED: &[&str] = &["out", "checkpoint", "checkpoint_every"];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| CliError::Config(format!("invalid value {value:?} for key {key}")))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        match key {
            "graph" => {
                v.parse::<Family>().map_err(|e| CliError::Config(format!("invalid value for key graph: {e}")))?;
                self.graph = v.to_string();
            }
            "particles" => self.particles = parse(key, v)?,
            "seed" => self.seed = Some(parse(key, v)?),
            "launch_factor" => self.launch.launch_factor = parse(key, v)?,
            "launch_offset" => self.launch.launch_offset = parse(key, v)?,
            "escape_factor" => self.launch.escape_factor = parse(key, v)?,
            "max_retries" => self.launch.max_retries = parse(key, v)?,
            "step_cap" => self.launch.step_cap = parse(key, v)?,
            "box_radius" => self.solver.box_radius = parse(key, v)?,
            "refine_factor" => self.solver.refine_factor = parse(key, v)?,
            "rel_tol" => self.solver.rel_tol = parse(key, v)?,
            "max_refinements" => self.solver.max_refinements = parse(key, v)?,
            "residual_tol" => self.solver.residual_tol = parse(key, v)?,
            "max_vertices" => self.solver.max_vertices = parse(key, v)?,
            "out" => self.out = Some(v.to_string()),
            "checkpoint" => self.checkpoint = Some(v.to_string()),
            "checkpoint_every" => self.checkpoint_every = parse(key, v)?,
            _ => return Err(CliError::Config(format!("unknown config key {key}"))),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "graph" => self.graph.clone(),
            "particles" => self.particles.to_string(),
            "seed" => self.seed?.to_string(),
            "launch_factor" => self.launch.launch_factor.to_string(),
            "launch_offset" => self.launch.launch_offset.to_string(),
            "escape_factor" => self.launch.escape_factor.to_string(),
            "max_retries" => self.launch.max_retries.to_string(),
            "step_cap" => self.launch.step_cap.to_string(),
            "box_radius" => self.solver.box_radius.to_string(),
            "refine_factor" => self.solver.refine_factor.to_string(),
            "rel_tol" => self.solver.rel_tol.to_string(),
            "max_refinements" => self.solver.max_refinements.to_string(),
            "residual_tol" => self.solver.residual_tol.to_string(),
            "max_vertices" => self.solver.max_vertices.to_string(),
            "out" => self.out.clone()?,
            "checkpoint" => self.checkpoint.clone()?,
            "checkpoint_every" => self.checkpoint_every.to_string(),
            _ => return None,
        })
    }

    /// Applies a config file on top of `self`. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn apply_file(&mut self, text: &str) -> Result<(), CliError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("config line {}: expected key = value", i + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.seed.is_none() {
            return Err(CliError::Config("missing required key seed".into()));
        }
        if self.particles == 0 {
            return Err(CliError::Config("key particles must be at least 1".into()));
        }
        self.launch.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.solver.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn family(&self) -> Result<Family, CliError> {
        self.graph.parse().map_err(|e| CliError::Config(format!("invalid value for key graph: {e}")))
    }

    /// SHA-256 of the serialized config without the unhashed keys.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for k in KEYS.iter().filter(|k| !UNHASHED.contains(k)) {
            if let Some(v) = self.get(k) {
                h.update(format!("{k} = {v}\n"));
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in KEYS {
            if let Some(v) = self.get(k) {
                writeln!(f, "{k} = {v}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for RunConfig {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut c = RunConfig::default();
        c.apply_file(s)?;
        Ok(c)
    }
}
