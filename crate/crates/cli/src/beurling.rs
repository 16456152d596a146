use dla_core::beurling::beurling_report;
use dla_core::bounds::PhiSpec;
use dla_core::potential::SolverConfig;
use dla_core::{Family, Graph};

use crate::error::CliError;
use crate::output::write_json;

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    graph: String,
    /// Largest set size; defaults to 8 on trees, 7 on lattices, 6 elsewhere.
    #[arg(long)]
    max_size: Option<usize>,
    /// Volume Beurling function, e.g. `volume-power:1:0.3333333333333333:0`.
    #[arg(long, default_value = "volume-power:1:0.3333333333333333:0")]
    phi_volume: String,
    /// Radius Beurling function, e.g. `radius-power:1:1`.
    #[arg(long, default_value = "radius-power:1:1")]
    phi_radius: String,
    #[arg(long)]
    box_radius: Option<u32>,
    #[arg(long)]
    refine_factor: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    max_refinements: Option<u32>,
    #[arg(long)]
    json: Option<String>,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let family: Family = args.graph.parse().map_err(|e| CliError::Config(format!("invalid value for --graph: {e}")))?;
    let g = Graph::build(&family)?;
    let max_size = args.max_size.unwrap_or(match family {
        Family::RegularTree { .. } => 8,
        Family::Lattice { .. } => 7,
        _ => 6,
    });
    let phi_v: PhiSpec = args.phi_volume.parse().map_err(|e| CliError::Config(format!("invalid --phi-volume: {e}")))?;
    let phi_r: PhiSpec = args.phi_radius.parse().map_err(|e| CliError::Config(format!("invalid --phi-radius: {e}")))?;
    let mut cfg = SolverConfig::default();
    if let Some(b) = args.box_radius {
        cfg.box_radius = b;
    }
    if let Some(x) = args.refine_factor {
        cfg.refine_factor = x;
    }
    if let Some(x) = args.rel_tol {
        cfg.rel_tol = x;
    }
    if let Some(x) = args.max_refinements {
        cfg.max_refinements = x;
    }
    let report = beurling_report(&g, max_size, &phi_v, &phi_r, &cfg)?;
    println!("{report}");
    if let Some(path) = &args.json {
        write_json(path, &report)?;
    }
    Ok(())
}
