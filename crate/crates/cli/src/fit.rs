use std::fs::File;
use std::io::{BufReader, BufWriter, Write};

use dla_core::bounds::{envelope, EnvelopeTag};
use dla_core::growth::{self, envelope_ratio, fit_exponent, EnvelopeRatio, Fit, GrowthRecord};
use serde::Serialize;

use crate::error::CliError;
use crate::output::write_json;

#[derive(clap::Args)]
pub struct Args {
    /// Run file written by `simulate`.
    #[arg(long = "in")]
    input: String,
    /// Fit window `t_min:t_max`.
    #[arg(long)]
    window: String,
    /// Envelope class; defaults to the run's graph family.
    #[arg(long)]
    envelope: Option<String>,
    /// Replace the envelope's power of `t`.
    #[arg(long)]
    envelope_power: Option<f64>,
    /// Start of the envelope ratio scan; defaults to the window start.
    #[arg(long)]
    t_min: Option<u64>,
    /// Append a summary row (with header if the file is new).
    #[arg(long)]
    csv: Option<String>,
    /// Two-column `t rad` data file.
    #[arg(long)]
    gnuplot: Option<String>,
    #[arg(long)]
    json: Option<String>,
}

#[derive(Serialize)]
struct Report {
    family: String,
    seed: u64,
    config_hash: String,
    window: (u64, u64),
    fit: Fit,
    envelope: String,
    envelope_power: f64,
    envelope_log_power: f64,
    ratio: EnvelopeRatio,
}

fn parse_window(s: &str) -> Result<(u64, u64), CliError> {
    let bad = || CliError::Config(format!("invalid value {s:?} for --window, expected t_min:t_max"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let a = a.trim().parse().map_err(|_| bad())?;
    let b = b.trim().parse().map_err(|_| bad())?;
    if a >= b {
        return Err(bad());
    }
    Ok((a, b))
}

pub fn run(args: Args) -> Result<(), CliError> {
    let (t0, t1) = parse_window(&args.window)?;
    let rec = GrowthRecord::read_jsonl(BufReader::new(File::open(&args.input)?))?;
    let fit = fit_exponent(&rec, t0, t1)?;
    let tag_text = match &args.envelope {
        Some(t) => t.clone(),
        None if !rec.family.is_empty() => rec.family.clone(),
        None => return Err(CliError::Config("run file has no family; pass --envelope".into())),
    };
    let tag: EnvelopeTag = tag_text.parse()?;
    let mut env = envelope(tag)?;
    if let Some(p) = args.envelope_power {
        if !(p.is_finite() && p >= 0.0) {
            return Err(CliError::Config(format!("invalid value {p} for --envelope-power")));
        }
        env.power = p;
        env.formula = format!("t^{p}");
        if env.log_power != 0.0 {
            env.formula = format!("t^{p} (log t)^{}", env.log_power);
        }
    }
    let mut window = rec.clone();
    window.entries.retain(|e| e.0 <= t1);
    let ratio = envelope_ratio(&window, &env, args.t_min.unwrap_or(t0).max(2))?;

    println!("run        {} seed {} config {}", rec.family, rec.seed, short(&rec.config_hash));
    println!("window     [{t0}, {t1}] ({} geometric points)", fit.points);
    println!("alpha_hat  {:.6} +- {:.6}", fit.slope, fit.stderr);
    println!("envelope   {}", env.formula);
    println!("sup ratio  {:.6} at t = {}", ratio.sup_ratio, ratio.argmax_t);
    println!("trend      {:.6} +- {:.6}", ratio.trend, ratio.trend_stderr);

    if let Some(path) = &args.csv {
        let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        if fresh {
            writeln!(f, "{}", growth::CSV_HEADER)?;
        }
        writeln!(f, "{}", growth::csv_row(&rec, &fit, &ratio))?;
    }
    if let Some(path) = &args.gnuplot {
        let mut w = BufWriter::new(File::create(path)?);
        growth::write_two_column(&mut w, &window.points())?;
        w.flush()?;
    }
    if let Some(path) = &args.json {
        let report = Report {
            family: rec.family.clone(),
            seed: rec.seed,
            config_hash: rec.config_hash.clone(),
            window: (t0, t1),
            fit,
            envelope: env.formula.clone(),
            envelope_power: env.power,
            envelope_log_power: env.log_power,
            ratio,
        };
        write_json(path, &report)?;
    }
    Ok(())
}

fn short(h: &str) -> &str {
    &h[..h.len().min(16)]
}
