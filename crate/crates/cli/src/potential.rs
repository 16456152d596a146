use clap::Subcommand;
use dla_core::potential::{
    capacity_sandwich_check, green_mc, heat_kernel_diag, launch_law, solve_escape, SolverConfig,
};
use dla_core::{rng, Family, Graph};
use serde::Serialize;

use crate::error::CliError;
use crate::output::{parse_set, parse_vertex, write_json};

#[derive(clap::Args)]
pub struct Args {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    graph: String,
    #[arg(long)]
    json: Option<String>,
}

#[derive(clap::Args)]
struct Solver {
    #[arg(long)]
    box_radius: Option<u32>,
    #[arg(long)]
    refine_factor: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    max_refinements: Option<u32>,
}

impl Solver {
    fn config(&self) -> SolverConfig {
        let mut c = SolverConfig::default();
        if let Some(b) = self.box_radius {
            c.box_radius = b;
        }
        if let Some(x) = self.refine_factor {
            c.refine_factor = x;
        }
        if let Some(x) = self.rel_tol {
            c.rel_tol = x;
        }
        if let Some(x) = self.max_refinements {
            c.max_refinements = x;
        }
        c
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Capacity, escape probabilities and harmonic measure of a set.
    Cap {
        #[command(flatten)]
        common: Common,
        /// `root` or `;`-separated vertices such as `0,0,0;1,0,0`.
        #[arg(long)]
        set: String,
        #[command(flatten)]
        solver: Solver,
    },
    /// Two-sided capacity estimate through the Green function.
    Sandwich {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        set: String,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[command(flatten)]
        solver: Solver,
    },
    /// Exact return probabilities `p_t(v, v)`.
    Heat {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "root")]
        vertex: String,
        #[arg(long)]
        t_max: u32,
        #[arg(long)]
        lazy: bool,
    },
    /// Monte Carlo Green function `g(x, y)`.
    Green {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "root")]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long, default_value_t = 10_000)]
        walks: u64,
        #[arg(long, default_value_t = 1_000_000)]
        cutoff: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Exact law of the first boundary vertex hit from a uniform launch sphere.
    Launch {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        set: String,
        #[arg(long)]
        radius: u64,
        #[arg(long)]
        escape: u64,
    },
}

fn graph(c: &Common) -> Result<Graph, CliError> {
    let f: Family = c.graph.parse().map_err(|e| CliError::Config(format!("invalid value for --graph: {e}")))?;
    Ok(Graph::build(&f)?)
}

fn emit<T: Serialize>(json: &Option<String>, value: &T) -> Result<(), CliError> {
    match json {
        Some(p) => write_json(p, value),
        None => Ok(()),
    }
}

pub fn run(args: Args) -> Result<(), CliError> {
    match args.command {
        Cmd::Cap { common, set, solver } => {
            let g = graph(&common)?;
            let a = parse_set(&g, &set)?;
            let r = solve_escape(&g, &a, &solver.config())?;
            println!("capacity   {:.9}", r.capacity);
            println!(
                "converged  {} (relative change {:.3e}, boxes {:?})",
                r.converged, r.achieved_rel_delta, r.box_radii
            );
            println!("{:<24} {:>12} {:>12} {:>12}", "vertex", "escape", "equilibrium", "harmonic");
            for i in 0..r.set.len() {
                println!(
                    "{:<24} {:>12.9} {:>12.9} {:>12.9}",
                    r.set[i].to_string(),
                    r.escape_prob[i],
                    r.equilibrium[i],
                    r.harmonic[i]
                );
            }
            emit(&common.json, &r)
        }
        Cmd::Sandwich { common, set, tol, solver } => {
            let g = graph(&common)?;
            let a = parse_set(&g, &set)?;
            let r = capacity_sandwich_check(&g, &a, &solver.config(), tol)?;
            println!("lower {:.9}  middle {:.9}  upper {:.9}  holds {}", r.lower, r.middle, r.upper, r.holds);
            emit(&common.json, &r)
        }
        Cmd::Heat { common, vertex, t_max, lazy } => {
            let g = graph(&common)?;
            let v = parse_vertex(&g, &vertex)?;
            let p = heat_kernel_diag(&g, &v, t_max, lazy)?;
            for (t, x) in p.iter().enumerate() {
                println!("{t} {x:.17e}");
            }
            emit(&common.json, &p)
        }
        Cmd::Green { common, x, y, walks, cutoff, seed } => {
            let g = graph(&common)?;
            let x = parse_vertex(&g, &x)?;
            let y = parse_vertex(&g, &y)?;
            let mut r = rng::stream(seed, 0);
            let est = green_mc(&g, &x, &y, walks, cutoff, &mut r)?;
            println!("g = {:.6} +- {:.6} ({} walks, cutoff {})", est.mean, est.stderr, est.n_walks, est.cutoff);
            emit(&common.json, &est)
        }
        Cmd::Launch { common, set, radius, escape } => {
            let g = graph(&common)?;
            let a = parse_set(&g, &set)?;
            let law = launch_law(&g, &a, radius, escape, SolverConfig::default().max_vertices)?;
            println!("hit probability {:.9}", law.hit_prob);
            for (v, p) in law.targets.iter().zip(&law.probs) {
                println!("{:<24} {:.9}", v.to_string(), p);
            }
            emit(&common.json, &law)
        }
    }
}
