//! Analysis of DLA run records: first-passage times, growth exponent fits
//! and envelope ratios.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::EnvelopeSpec;
use crate::dla::StepRecord;

/// Spacing of the geometric grid used by fits.
pub const GEOMETRIC_RATIO: f64 = 1.05;
/// Fewest grid points a fit accepts.
pub const MIN_FIT_POINTS: usize = 20;

#[derive(Debug, Error)]
pub enum GrowthError {
    #[error("{0}")]
    Domain(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Provenance line at the top of every run file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunHeader {
    pub version: String,
    pub family: String,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: RunHeader,
}

impl RunHeader {
    pub fn write_line<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        serde_json::to_writer(&mut out, &HeaderLine { header: self.clone() })?;
        out.write_all(b"\n")
    }
}

/// Radius trajectory of one run. `entries[0]` is `(0, rad(A_0))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRecord {
    pub entries: Vec<(u64, u64)>,
    pub seed: u64,
    pub family: String,
    pub config_hash: String,
}

impl GrowthRecord {
    /// Record from a radius trajectory, checked for the DLA invariants.
    pub fn new(
        entries: Vec<(u64, u64)>,
        seed: u64,
        family: &str,
        config_hash: &str,
    ) -> Result<GrowthRecord, GrowthError> {
        for w in entries.windows(2) {
            let ((t0, r0), (t1, r1)) = (w[0], w[1]);
            if t1 <= t0 {
                return Err(GrowthError::Domain(format!("t must increase strictly, got {t0} then {t1}")));
            }
            if r1 < r0 || r1 - r0 > t1 - t0 {
                return Err(GrowthError::Domain(format!("radius jumps from {r0} to {r1} between t = {t0} and {t1}")));
            }
        }
        Ok(GrowthRecord { entries, seed, family: family.into(), config_hash: config_hash.into() })
    }

    /// Reads a run file: an optional header line followed by step records.
    /// The initial radius is taken to be 0.
    pub fn read_jsonl<R: BufRead>(input: R) -> Result<GrowthRecord, GrowthError> {
        let mut header: Option<RunHeader> = None;
        let mut entries = vec![(0u64, 0u64)];
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parse = |msg: serde_json::Error| GrowthError::Parse { line: i + 1, msg: msg.to_string() };
            if line.starts_with("{\"header\"") {
                let h: HeaderLine = serde_json::from_str(&line).map_err(parse)?;
                header = Some(h.header);
                continue;
            }
            let rec: StepRecord = serde_json::from_str(&line).map_err(parse)?;
            entries.push((rec.t, rec.rad));
        }
        let h = header.unwrap_or(RunHeader {
            version: String::new(),
            family: String::new(),
            seed: 0,
            config_hash: String::new(),
        });
        GrowthRecord::new(entries, h.seed, &h.family, &h.config_hash)
    }

    /// `rad(A_t)` for the last recorded time not after `t`.
    pub fn rad_at(&self, t: u64) -> Option<u64> {
        let i = self.entries.partition_point(|e| e.0 <= t);
        (i > 0).then(|| self.entries[i - 1].1)
    }

    pub fn last_t(&self) -> u64 {
        self.entries.last().map_or(0, |e| e.0)
    }

    /// `(t, rad)` pairs as floats, for fitting and plotting.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.entries.iter().map(|&(t, r)| (t as f64, r as f64)).collect()
    }
}

/// First time the radius reaches `r`.
pub fn first_passage(rec: &GrowthRecord, r: u64) -> Option<u64> {
    rec.entries.iter().find(|e| e.1 >= r).map(|e| e.0)
}

/// Least-squares line fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub stderr: f64,
    pub points: usize,
}

/// Integer times `t_min <= t <= t_max` spaced by [`GEOMETRIC_RATIO`].
pub fn geometric_grid(t_min: u64, t_max: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut x = t_min.max(1) as f64;
    while x <= t_max as f64 {
        let t = x.round() as u64;
        if out.last() != Some(&t) && t <= t_max {
            out.push(t);
        }
        x *= GEOMETRIC_RATIO;
    }
    out
}

/// Slope of `y` against `x` with its standard error.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Fit {
    let n = xs.len() as f64;
    // shifting by the first sample keeps constant data exactly constant
    let (x0, y0) = (xs[0], ys[0]);
    let xs: Vec<f64> = xs.iter().map(|x| x - x0).collect();
    let ys: Vec<f64> = ys.iter().map(|y| y - y0).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    let stderr = if xs.len() > 2 { (ssr / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    Fit { slope, stderr, points: xs.len() }
}

/// Log-log slope of `f` on the geometric grid over `[t_min, t_max]`.
pub fn fit_exponent_fn(f: impl Fn(u64) -> f64, t_min: u64, t_max: u64) -> Result<Fit, GrowthError> {
    if t_min < 1 || t_max <= t_min {
        return Err(GrowthError::Domain(format!("bad window [{t_min}, {t_max}]")));
    }
    let grid = geometric_grid(t_min, t_max);
    if grid.len() < MIN_FIT_POINTS {
        return Err(GrowthError::Domain(format!(
            "window [{t_min}, {t_max}] has {} grid points, need {MIN_FIT_POINTS}",
            grid.len()
        )));
    }
    let mut xs = Vec::with_capacity(grid.len());
    let mut ys = Vec::with_capacity(grid.len());
    for t in grid {
        let v = f(t);
        if !(v > 0.0 && v.is_finite()) {
            return Err(GrowthError::Domain(format!("value {v} at t = {t} has no logarithm")));
        }
        xs.push((t as f64).ln());
        ys.push(v.ln());
    }
    Ok(least_squares(&xs, &ys))
}

/// Growth exponent of a run over `[t_min, t_max]`.
pub fn fit_exponent(rec: &GrowthRecord, t_min: u64, t_max: u64) -> Result<Fit, GrowthError> {
    if t_max > rec.last_t() {
        return Err(GrowthError::Domain(format!("window ends at {t_max} but the run stops at {}", rec.last_t())));
    }
    fit_exponent_fn(|t| rec.rad_at(t).unwrap_or(0) as f64, t_min, t_max)
}

/// Finite-time check of `limsup rad / f < infinity`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRatio {
    pub sup_ratio: f64,
    pub argmax_t: u64,
    /// Log-log slope of `rad / f` against `t` on the geometric grid.
    pub trend: f64,
    pub trend_stderr: f64,
}

/// Sup of `y(t) / f(t)` over the samples with `t >= t_min`, and the trend of
/// the log ratio on the geometric grid from `t_min` to the last sample.
pub fn envelope_ratio_points(
    points: &[(u64, f64)],
    env: &EnvelopeSpec,
    t_min: u64,
) -> Result<EnvelopeRatio, GrowthError> {
    if t_min < 2 {
        return Err(GrowthError::Domain(format!("t_min must be at least 2, got {t_min}")));
    }
    let mut sup = f64::NEG_INFINITY;
    let mut arg = 0;
    for &(t, y) in points.iter().filter(|p| p.0 >= t_min) {
        let r = y / env.eval(t as f64);
        if r > sup {
            sup = r;
            arg = t;
        }
    }
    let last = points.last().map_or(0, |p| p.0);
    if arg == 0 || last <= t_min {
        return Err(GrowthError::Domain(format!("no samples after t_min = {t_min}")));
    }
    let at = |t: u64| {
        let i = points.partition_point(|p| p.0 <= t);
        points[i - 1].1
    };
    let grid = geometric_grid(t_min, last);
    let xs: Vec<f64> = grid.iter().map(|&t| (t as f64).ln()).collect();
    let ys: Vec<f64> = grid.iter().map(|&t| (at(t) / env.eval(t as f64)).ln()).collect();
    let fit = if grid.len() >= 2 {
        least_squares(&xs, &ys)
    } else {
        Fit { slope: 0.0, stderr: f64::NAN, points: grid.len() }
    };
    Ok(EnvelopeRatio { sup_ratio: sup, argmax_t: arg, trend: fit.slope, trend_stderr: fit.stderr })
}

pub fn envelope_ratio(rec: &GrowthRecord, env: &EnvelopeSpec, t_min: u64) -> Result<EnvelopeRatio, GrowthError> {
    let pts: Vec<(u64, f64)> = rec.entries.iter().map(|&(t, r)| (t, r as f64)).collect();
    envelope_ratio_points(&pts, env, t_min)
}

/// Header of the CSV summary.
pub const CSV_HEADER: &str = "family,seed,alpha_hat,stderr,sup_ratio,trend";

/// One CSV summary row.
pub fn csv_row(rec: &GrowthRecord, fit: &Fit, ratio: &EnvelopeRatio) -> String {
    format!("{},{},{},{},{},{}", rec.family, rec.seed, fit.slope, fit.stderr, ratio.sup_ratio, ratio.trend)
}

/// Two whitespace-separated columns, one sample per line.
pub fn write_two_column<W: Write>(mut out: W, points: &[(f64, f64)]) -> std::io::Result<()> {
    for (x, y) in points {
        writeln!(out, "{x} {y}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{envelope, EnvelopeTag};

    fn sqrt_record(t_max: u64) -> GrowthRecord {
        let entries = (0..=t_max).map(|t| (t, (t as f64).sqrt().floor() as u64)).collect();
        GrowthRecord::new(entries, 1, "synthetic", "").unwrap()
    }

    #[test]
    fn first_passage_examples() {
        let rec = sqrt_record(10_000);
        assert_eq!(first_passage(&rec, 0), Some(0));
        assert_eq!(first_passage(&rec, 1), Some(1));
        for r in 0..=100 {
            assert_eq!(first_passage(&rec, r), Some(r * r));
        }
        assert_eq!(first_passage(&rec, 101), None);
    }

    #[test]
    fn passage_duality() {
        let rec = sqrt_record(2000);
        for r in 0..50 {
            for s in (0..2000).step_by(37) {
                let tau = first_passage(&rec, r);
                assert_eq!(tau.is_some_and(|x| x <= s), rec.rad_at(s).unwrap() >= r);
            }
        }
    }

    #[test]
    fn exact_power_laws() {
        let f = fit_exponent_fn(|t| (t as f64).sqrt(), 1000, 100_000).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-12);
        let f = fit_exponent_fn(|_| 7.0, 1000, 100_000).unwrap();
        assert_eq!(f.slope, 0.0);
        let f = fit_exponent_fn(|t| (t as f64 * (t as f64).ln()).sqrt(), 1000, 100_000).unwrap();
        assert!(f.slope > 0.5 && f.slope < 0.58, "{f:?}");
    }

    #[test]
    fn degenerate_windows_are_rejected() {
        assert!(fit_exponent_fn(|t| t as f64, 100, 110).is_err());
        assert!(fit_exponent_fn(|t| t as f64, 0, 1000).is_err());
        assert!(fit_exponent_fn(|_| 0.0, 100, 10_000).is_err());
        assert!(fit_exponent(&sqrt_record(100), 10, 1000).is_err());
    }

    #[test]
    fn record_fit_on_floor_sqrt() {
        let f = fit_exponent(&sqrt_record(100_000), 1000, 100_000).unwrap();
        assert!((f.slope - 0.5).abs() < 5e-3, "{f:?}");
    }

    #[test]
    fn envelope_ratio_examples() {
        let env = envelope(EnvelopeTag::Lattice { d: 3 }).unwrap();
        let pts: Vec<(u64, f64)> = (2..5000).map(|t| (t, env.eval(t as f64))).collect();
        let r = envelope_ratio_points(&pts, &env, 2).unwrap();
        assert!((r.sup_ratio - 1.0).abs() < 1e-12);
        assert!(r.trend.abs() < 1e-12);

        let tree = envelope(EnvelopeTag::RegularTree { k: 3 }).unwrap();
        let pts: Vec<(u64, f64)> = (2..5000).map(|t| (t, t as f64)).collect();
        assert!(envelope_ratio_points(&pts, &tree, 2).unwrap().trend > 0.5);
        assert!(envelope_ratio_points(&pts, &tree, 1).is_err());
    }

    #[test]
    fn scaling_the_envelope_scales_the_sup_only() {
        let env = envelope(EnvelopeTag::Lattice { d: 3 }).unwrap();
        let rec = sqrt_record(20_000);
        let a = envelope_ratio(&rec, &env, 100).unwrap();
        // 4 f(t) = f(t) * 4, folded into the power law as t^0.5 (log t)^0.5 * 4
        let pts: Vec<(u64, f64)> = rec.entries.iter().map(|&(t, r)| (t, r as f64 / 4.0)).collect();
        let b = envelope_ratio_points(&pts, &env, 100).unwrap();
        assert_eq!(a.argmax_t, b.argmax_t);
        assert!((a.sup_ratio / 4.0 - b.sup_ratio).abs() < 1e-15 * a.sup_ratio);
        assert!((a.trend - b.trend).abs() < 1e-12);
    }

    #[test]
    fn jsonl_round_trip() {
        let mut buf = Vec::new();
        let h = RunHeader { version: "1".into(), family: "z3".into(), seed: 9, config_hash: "ab".into() };
        h.write_line(&mut buf).unwrap();
        for (t, rad) in [(1u64, 1u64), (2, 1), (3, 2)] {
            let rec = StepRecord { t, rad, v: crate::graph::VertexId::new(&[rad as i32, 0, 0]) };
            serde_json::to_writer(&mut buf, &rec).unwrap();
            buf.push(b'\n');
        }
        let rec = GrowthRecord::read_jsonl(&buf[..]).unwrap();
        assert_eq!(rec.entries, vec![(0, 0), (1, 1), (2, 1), (3, 2)]);
        assert_eq!((rec.seed, rec.family.as_str(), rec.config_hash.as_str()), (9, "z3", "ab"));
        assert!(GrowthRecord::read_jsonl(&b"{\"t\":1,\"rad\":3,\"v\":[0]}\n"[..]).is_err());
    }
}
