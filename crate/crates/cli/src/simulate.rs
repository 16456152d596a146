use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};

use dla_core::dla::{grow, Aggregate, Checkpoint, JsonlSink};
use dla_core::growth::RunHeader;
use dla_core::rng::{self, RngState};
use dla_core::Graph;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{write_atomic, write_json};

#[derive(clap::Args)]
pub struct Args {
    /// `key = value` config file; flags take precedence over it.
    #[arg(long)]
    config: Option<String>,
    /// Continue the run saved in this checkpoint.
    #[arg(long)]
    resume: Option<String>,
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    particles: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    launch_factor: Option<f64>,
    #[arg(long)]
    launch_offset: Option<u64>,
    #[arg(long)]
    escape_factor: Option<f64>,
    #[arg(long)]
    max_retries: Option<u64>,
    #[arg(long)]
    step_cap: Option<u64>,
    /// Run file (JSON Lines).
    #[arg(long)]
    out: Option<String>,
    /// Checkpoint file, `<out>.ckpt` by default.
    #[arg(long)]
    checkpoint: Option<String>,
    #[arg(long)]
    checkpoint_every: Option<u64>,
    /// Also write a JSON summary here.
    #[arg(long)]
    json: Option<String>,
}

impl Args {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        let mut push = |k: &'static str, x: Option<String>| {
            if let Some(x) = x {
                v.push((k, x));
            }
        };
        push("graph", self.graph.clone());
        push("particles", self.particles.map(|x| x.to_string()));
        push("seed", self.seed.map(|x| x.to_string()));
        push("launch_factor", self.launch_factor.map(|x| x.to_string()));
        push("launch_offset", self.launch_offset.map(|x| x.to_string()));
        push("escape_factor", self.escape_factor.map(|x| x.to_string()));
        push("max_retries", self.max_retries.map(|x| x.to_string()));
        push("step_cap", self.step_cap.map(|x| x.to_string()));
        push("out", self.out.clone());
        push("checkpoint", self.checkpoint.clone());
        push("checkpoint_every", self.checkpoint_every.map(|x| x.to_string()));
        v
    }
}

/// On-disk checkpoint: the run config and the chain state.
#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: String,
    config: String,
    config_hash: String,
    state: Checkpoint,
}

#[derive(Serialize)]
struct Summary {
    family: String,
    seed: u64,
    config_hash: String,
    particles: u64,
    radius: u64,
    members: usize,
    boundary: usize,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let mut cfg = RunConfig::default();
    let resumed: Option<CheckpointFile> = match &args.resume {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            let ck: CheckpointFile =
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("checkpoint {path}: {e}")))?;
            cfg = ck.config.parse()?;
            Some(ck)
        }
        None => {
            if let Some(path) = &args.config {
                cfg.apply_file(&fs::read_to_string(path)?)?;
            }
            None
        }
    };
    for (k, v) in args.overrides() {
        cfg.set(k, &v)?;
    }
    cfg.validate()?;
    let seed = cfg.seed.expect("validated");
    let out = cfg.out.clone().ok_or_else(|| CliError::Config("missing required key out".into()))?;
    let ck_path = cfg.checkpoint.clone().unwrap_or_else(|| format!("{out}.ckpt"));
    let family = cfg.family()?;
    let g = Graph::build(&family)?;
    let hash = cfg.hash();

    let header =
        RunHeader { version: env!("CARGO_PKG_VERSION").into(), family: family.tag(), seed, config_hash: hash.clone() };
    let (mut agg, mut rng) = match &resumed {
        Some(ck) => {
            if ck.state.config != cfg.launch {
                return Err(CliError::Config("launch settings differ from the checkpoint".into()));
            }
            let agg = Aggregate::restore(&g, &ck.state)?;
            truncate_run(&out, agg.t(), &header)?;
            (agg, ck.state.rng.restore())
        }
        None => {
            let mut f = BufWriter::new(File::create(&out)?);
            header.write_line(&mut f)?;
            f.flush()?;
            (dla_core::dla::init_aggregate(&g), rng::stream(seed, 0))
        }
    };
    if agg.t() > cfg.particles {
        return Err(CliError::Config(format!("checkpoint already has {} particles", agg.t())));
    }

    let save = |agg: &Aggregate, rng: &rng::SimRng| -> Result<(), CliError> {
        let file = CheckpointFile {
            version: env!("CARGO_PKG_VERSION").into(),
            config: cfg.to_string(),
            config_hash: hash.clone(),
            state: agg.checkpoint(&g, &cfg.launch, RngState::capture(seed, rng)),
        };
        let text = serde_json::to_vec(&file).map_err(|e| CliError::Io(e.to_string()))?;
        write_atomic(&ck_path, &text)
    };

    let file = OpenOptions::new().append(true).open(&out)?;
    let mut sink = JsonlSink::new(BufWriter::new(file));
    while agg.t() < cfg.particles {
        let left = cfg.particles - agg.t();
        let chunk = if cfg.checkpoint_every > 0 { left.min(cfg.checkpoint_every) } else { left };
        let res = grow(&g, &mut agg, chunk, &cfg.launch, &mut rng, &mut sink);
        save(&agg, &rng)?;
        res?;
    }

    let summary = Summary {
        family: family.tag(),
        seed,
        config_hash: hash,
        particles: agg.t(),
        radius: agg.radius(),
        members: agg.len(),
        boundary: agg.boundary_len(),
    };
    println!(
        "{}: {} particles, radius {}, boundary {}, config {}",
        summary.family,
        summary.particles,
        summary.radius,
        summary.boundary,
        &summary.config_hash[..16]
    );
    if let Some(path) = &args.json {
        write_json(path, &summary)?;
    }
    Ok(())
}

/// Drops records after step `t` from a run file and replaces its header.
fn truncate_run(path: &str, t: u64, header: &RunHeader) -> Result<(), CliError> {
    let reader = BufReader::new(File::open(path)?);
    let mut kept = Vec::new();
    header.write_line(&mut kept)?;
    for line in reader.lines() {
        let line = line?;
        if line.starts_with("{\"header\"") {
            continue;
        }
        let rec: dla_core::dla::StepRecord =
            serde_json::from_str(&line).map_err(|e| CliError::Config(format!("run file {path}: {e}")))?;
        if rec.t > t {
            break;
        }
        kept.extend_from_slice(line.as_bytes());
        kept.push(b'\n');
    }
    write_atomic(path, &kept)
}
