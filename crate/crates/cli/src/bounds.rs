use dla_core::bounds::{
    carpet3_beta, carpet_d, envelope, fill_in_order_bound, i_phi, ld_tail_bound, EnvelopeSpec, EnvelopeTag, FillBound,
    PhiSpec,
};
use serde::Serialize;

use crate::error::CliError;
use crate::output::write_json;

#[derive(clap::Args)]
pub struct Args {
    /// Envelope class or graph family, e.g. `z3`, `tree3`, `carpet3`, `z3-volume`.
    #[arg(long)]
    family: Option<String>,
    /// Beurling function for `--i-phi` and `--fill`.
    #[arg(long)]
    phi: Option<String>,
    /// Print `I_phi(s, t)`.
    #[arg(long)]
    i_phi: bool,
    /// Print the filled-in-order bound for `(s, t, n)`.
    #[arg(long)]
    fill: bool,
    /// Maximal degree for `--fill`.
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long)]
    s: Option<u64>,
    #[arg(long)]
    t: Option<u64>,
    #[arg(long)]
    n: Option<u64>,
    /// Radius of `A_s`, for radius-kind Beurling functions.
    #[arg(long)]
    rad_s: Option<u64>,
    /// Mean for the Bernoulli tail bound.
    #[arg(long)]
    eb: Option<f64>,
    /// Multiple of the mean for the Bernoulli tail bound.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    json: Option<String>,
}

#[derive(Serialize, Default)]
struct Report {
    envelope: Option<EnvelopeSpec>,
    beta: Option<f64>,
    i_phi: Option<f64>,
    fill: Option<FillBound>,
    ld_tail: Option<f64>,
}

fn need<T>(x: Option<T>, name: &str) -> Result<T, CliError> {
    x.ok_or_else(|| CliError::Config(format!("missing required flag --{name}")))
}

pub fn run(args: Args) -> Result<(), CliError> {
    let mut report = Report::default();
    let mut any = false;
    if let Some(f) = &args.family {
        any = true;
        let tag: EnvelopeTag = f.parse()?;
        let env = envelope(tag)?;
        println!("class      {}", env.condition);
        println!("envelope   {}", env.formula);
        println!("power      {}", env.power);
        println!("log power  {}", env.log_power);
        if let EnvelopeTag::Carpet { n } = tag {
            println!("d({n})       {}", carpet_d(n)?);
            if n == 3 {
                let beta = carpet3_beta();
                println!("beta       {beta}");
                report.beta = Some(beta);
            }
        }
        report.envelope = Some(env);
    }
    let phi = || -> Result<PhiSpec, CliError> { Ok(need(args.phi.as_ref(), "phi")?.parse()?) };
    if args.i_phi {
        any = true;
        let v = i_phi(&phi()?, need(args.s, "s")?, need(args.t, "t")?)?;
        println!("I_phi      {v}");
        report.i_phi = Some(v);
    }
    if args.fill {
        any = true;
        let b = fill_in_order_bound(
            need(args.degree, "degree")?,
            &phi()?,
            need(args.s, "s")?,
            need(args.t, "t")?,
            need(args.n, "n")?,
            args.rad_s,
        )?;
        println!(
            "fill bound {} (clamped {}{})",
            b.raw,
            b.clamped,
            if b.flagged { ", small-argument log convention" } else { "" }
        );
        report.fill = Some(b);
    }
    if args.eb.is_some() || args.c.is_some() {
        any = true;
        let v = ld_tail_bound(need(args.eb, "eb")?, need(args.c, "c")?)?;
        println!("tail bound {v}");
        report.ld_tail = Some(v);
    }
    if !any {
        return Err(CliError::Config("nothing to evaluate; pass --family, --i-phi, --fill or --eb/--c".into()));
    }
    if let Some(path) = &args.json {
        write_json(path, &report)?;
    }
    Ok(())
}
