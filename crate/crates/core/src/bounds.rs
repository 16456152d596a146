//! Evaluable growth bounds: Beurling functions, the Bernoulli large-deviation
//! tail, filled-in-order probability bounds and the envelope table.

use std::f64::consts::E;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Family;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("{0}")]
    Domain(String),
    #[error("numerical check failed: {0}")]
    Numeric(String),
}

fn domain<T>(msg: impl Into<String>) -> Result<T, BoundsError> {
    Err(BoundsError::Domain(msg.into()))
}

/// A Beurling function.
///
/// Volume kinds are functions of `|A|`, radius kinds of `rad(A)`.
/// `VolumePower` is `C (log s)^beta s^-alpha`, `VolumeInverse` is
/// `C (log s)^beta / s`, `RadiusPower` is `C r^-alpha` and `RadiusLogOverR`
/// is `C log(r) / r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum PhiSpec {
    VolumePower { c: f64, alpha: f64, beta: f64 },
    VolumeInverse { c: f64, beta: f64 },
    RadiusPower { c: f64, alpha: f64 },
    RadiusLogOverR { c: f64 },
}

/// A value of a Beurling function. `flagged` marks evaluations below 3
/// where `log(x)` was replaced by `log(x + 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiValue {
    pub value: f64,
    pub flagged: bool,
}

impl PhiSpec {
    pub fn validate(&self) -> Result<(), BoundsError> {
        let (c, beta) = match *self {
            PhiSpec::VolumePower { c, alpha, beta } => {
                if !(alpha > 0.0 && alpha <= 1.0) {
                    return domain(format!("alpha must be in (0, 1], got {alpha}"));
                }
                (c, beta)
            }
            PhiSpec::VolumeInverse { c, beta } => (c, beta),
            PhiSpec::RadiusPower { c, alpha } => {
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return domain(format!("alpha must be positive, got {alpha}"));
                }
                (c, 0.0)
            }
            PhiSpec::RadiusLogOverR { c } => (c, 0.0),
        };
        if !(c > 0.0 && c.is_finite()) {
            return domain(format!("C must be positive, got {c}"));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return domain(format!("beta must be non-negative, got {beta}"));
        }
        Ok(())
    }

    pub fn is_volume(&self) -> bool {
        matches!(self, PhiSpec::VolumePower { .. } | PhiSpec::VolumeInverse { .. })
    }

    pub fn constant(&self) -> f64 {
        match *self {
            PhiSpec::VolumePower { c, .. }
            | PhiSpec::VolumeInverse { c, .. }
            | PhiSpec::RadiusPower { c, .. }
            | PhiSpec::RadiusLogOverR { c } => c,
        }
    }

    /// The same shape with `C = 1`.
    pub fn unit(&self) -> PhiSpec {
        match *self {
            PhiSpec::VolumePower { alpha, beta, .. } => PhiSpec::VolumePower { c: 1.0, alpha, beta },
            PhiSpec::VolumeInverse { beta, .. } => PhiSpec::VolumeInverse { c: 1.0, beta },
            PhiSpec::RadiusPower { alpha, .. } => PhiSpec::RadiusPower { c: 1.0, alpha },
            PhiSpec::RadiusLogOverR { .. } => PhiSpec::RadiusLogOverR { c: 1.0 },
        }
    }

    pub fn eval(&self, x: f64) -> PhiValue {
        let log_term = |power: f64| -> (f64, bool) {
            if power == 0.0 {
                (1.0, false)
            } else if x < 3.0 {
                ((x + 2.0).ln().powf(power), true)
            } else {
                (x.ln().powf(power), false)
            }
        };
        let (value, flagged) = match *self {
            PhiSpec::VolumePower { c, alpha, beta } => {
                let (l, f) = log_term(beta);
                (c * l * x.powf(-alpha), f)
            }
            PhiSpec::VolumeInverse { c, beta } => {
                let (l, f) = log_term(beta);
                (c * l / x, f)
            }
            PhiSpec::RadiusPower { c, alpha } => (c * x.powf(-alpha), false),
            PhiSpec::RadiusLogOverR { c } => {
                let (l, f) = log_term(1.0);
                (c * l / x, f)
            }
        };
        PhiValue { value, flagged }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).value
    }

    /// Whether `phi` is non-increasing on the integer grid `from..=to`.
    pub fn non_increasing_on(&self, from: u64, to: u64) -> bool {
        (from..to).all(|s| self.value((s + 1) as f64) <= self.value(s as f64) * (1.0 + 1e-12))
    }
}

impl fmt::Display for PhiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PhiSpec::VolumePower { c, alpha, beta } => write!(f, "volume-power:{c}:{alpha}:{beta}"),
            PhiSpec::VolumeInverse { c, beta } => write!(f, "volume-inverse:{c}:{beta}"),
            PhiSpec::RadiusPower { c, alpha } => write!(f, "radius-power:{c}:{alpha}"),
            PhiSpec::RadiusLogOverR { c } => write!(f, "radius-log:{c}"),
        }
    }
}

impl FromStr for PhiSpec {
    type Err = BoundsError;

    /// Parses the [`Display`](fmt::Display) form, e.g. `volume-power:1:0.3333:0`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |i: usize| -> Result<f64, BoundsError> {
            parts
                .get(i)
                .and_then(|p| p.parse::<f64>().ok())
                .ok_or_else(|| BoundsError::Domain(format!("bad phi spec {s:?}")))
        };
        let arity = |n: usize| if parts.len() == n + 1 { Ok(()) } else { domain(format!("bad phi spec {s:?}")) };
        let phi = match parts[0] {
            "volume-power" => {
                arity(3)?;
                PhiSpec::VolumePower { c: num(1)?, alpha: num(2)?, beta: num(3)? }
            }
            "volume-inverse" => {
                arity(2)?;
                PhiSpec::VolumeInverse { c: num(1)?, beta: num(2)? }
            }
            "radius-power" => {
                arity(2)?;
                PhiSpec::RadiusPower { c: num(1)?, alpha: num(2)? }
            }
            "radius-log" => {
                arity(1)?;
                PhiSpec::RadiusLogOverR { c: num(1)? }
            }
            _ => return domain(format!("unknown phi kind in {s:?}")),
        };
        phi.validate()?;
        Ok(phi)
    }
}

/// `I_phi(s, t) = sum_{j=0}^{t-1} phi(s + j)` for a volume-kind `phi`.
pub fn i_phi(phi: &PhiSpec, s: u64, t: u64) -> Result<f64, BoundsError> {
    if !phi.is_volume() {
        return domain("I_phi is defined for volume-kind Beurling functions only");
    }
    if s < 1 || t < 1 {
        return domain(format!("I_phi needs s >= 1 and t >= 1, got s = {s}, t = {t}"));
    }
    Ok((0..t).map(|j| phi.value((s + j) as f64)).sum())
}

/// `exp(-EB C log(C/e))`, a bound on `P[B >= C E B]` for a sum `B` of
/// independent Bernoulli variables with mean `EB`.
pub fn ld_tail_bound(eb: f64, c: f64) -> Result<f64, BoundsError> {
    if c.is_nan() || c <= 1.0 {
        return domain(format!("C must exceed 1, got {c}"));
    }
    if eb.is_nan() || eb < 0.0 {
        return domain(format!("EB must be non-negative, got {eb}"));
    }
    Ok((-eb * c * (c / E).ln()).exp())
}

/// Exact `P[sum Bernoulli(p_i) >= m]` by dynamic programming over the law of
/// the partial sums.
pub fn poisson_binomial_tail(ps: &[f64], m: u64) -> Result<f64, BoundsError> {
    if let Some(p) = ps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return domain(format!("probability {p} is outside [0, 1]"));
    }
    if m == 0 {
        return Ok(1.0);
    }
    if m as usize > ps.len() {
        return Ok(0.0);
    }
    let mut dist = vec![0.0f64; ps.len() + 1];
    dist[0] = 1.0;
    for (i, &p) in ps.iter().enumerate() {
        for k in (0..=i + 1).rev() {
            let stay = dist[k] * (1.0 - p);
            let up = if k > 0 { dist[k - 1] * p } else { 0.0 };
            dist[k] = stay + up;
        }
    }
    Ok(dist[m as usize..].iter().sum())
}

/// A probability bound reported both raw and clamped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FillBound {
    pub raw: f64,
    pub clamped: f64,
    /// Set when `phi` was evaluated below 3 with the `log(x + 2)` convention.
    pub flagged: bool,
}

/// Bound on `P[rad(A_{s+t}) >= rad(A_s) + n | A_s]` for DLA started from a
/// single vertex on a graph of maximal degree `D`.
///
/// For a volume-kind `phi` this is `s exp(n log((D e / n) I_phi(s, t)))`,
/// for a radius-kind `phi` it is `s exp(n log((D e / n) phi(rad_s) t))`.
pub fn fill_in_order_bound(
    d: u32,
    phi: &PhiSpec,
    s: u64,
    t: u64,
    n: u64,
    rad_s: Option<u64>,
) -> Result<FillBound, BoundsError> {
    phi.validate()?;
    if t == 0 || n == 0 || s < n {
        return domain(format!("need t > 0 and s >= n > 0, got s = {s}, t = {t}, n = {n}"));
    }
    if d == 0 {
        return domain("degree bound D must be positive");
    }
    let (mass, flagged) = match (phi.is_volume(), rad_s) {
        (true, None) => {
            let flagged = phi.eval(s as f64).flagged;
            (i_phi(phi, s, t)?, flagged)
        }
        (false, Some(r)) => {
            let v = phi.eval(r as f64);
            (v.value * t as f64, v.flagged)
        }
        (true, Some(_)) => return domain("rad_s must not be given for a volume-kind phi"),
        (false, None) => return domain("rad_s is required for a radius-kind phi"),
    };
    let nf = n as f64;
    let log_raw = (s as f64).ln() + nf * (d as f64 * E / nf * mass).ln();
    let raw = log_raw.exp();
    Ok(FillBound { raw, clamped: raw.clamp(0.0, 1.0), flagged })
}

/// Spectral exponent of the `n`-dimensional pre-Sierpinski carpet,
/// `log(3^n - 1) / (log(3^n - 1) - log(3^(n-1) - 1))`.
///
/// The value is cross-checked against the rearrangement
/// `log(3^n - 1) = n log 3 + log1p(-3^-n)`, which avoids the subtraction.
pub fn carpet_d(n: usize) -> Result<f64, BoundsError> {
    if n < 2 {
        return domain(format!("carpet dimension must be at least 2, got {n}"));
    }
    let direct = {
        let a = (3f64.powi(n as i32) - 1.0).ln();
        let b = (3f64.powi(n as i32 - 1) - 1.0).ln();
        a / (a - b)
    };
    let stable = {
        let l3 = 3f64.ln();
        let a = n as f64 * l3 + (-(3f64.powi(-(n as i32)))).ln_1p();
        let diff = l3 + (-(3f64.powi(-(n as i32)))).ln_1p() - (-(3f64.powi(1 - n as i32))).ln_1p();
        a / diff
    };
    if (direct - stable).abs() > 1e-12 * stable.abs() {
        return Err(BoundsError::Numeric(format!("d({n}) disagrees: {direct} vs {stable}")));
    }
    Ok(stable)
}

/// `(log2(13) - 2) / 3`, the growth exponent for the three-dimensional carpet.
pub fn carpet3_beta() -> f64 {
    (13f64.log2() - 2.0) / 3.0
}

/// Graph classes indexing the envelope table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class")]
pub enum EnvelopeTag {
    Lattice {
        d: usize,
    },
    /// The volume-route bound `t^{2/3}` for three-dimensional lattices.
    Lattice3Volume,
    RegularTree {
        k: usize,
    },
    NonAmenable,
    PinchedExponential,
    SuperPolynomial {
        eps: f64,
    },
    Carpet {
        n: usize,
    },
    Percolation {
        d: usize,
    },
}

impl EnvelopeTag {
    pub fn for_family(f: &Family) -> EnvelopeTag {
        match *f {
            Family::Lattice { d } => EnvelopeTag::Lattice { d },
            Family::RegularTree { k } => EnvelopeTag::RegularTree { k },
            Family::Carpet { n } => EnvelopeTag::Carpet { n },
            Family::Percolation { d, .. } => EnvelopeTag::Percolation { d },
        }
    }
}

impl FromStr for EnvelopeTag {
    type Err = BoundsError;

    /// Accepts graph family strings (`z3`, `tree3`, `carpet3`, `perc:...`) and
    /// the class names `z3-volume`, `nonamenable`, `pinched`,
    /// `superpoly:<eps>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        match t {
            "z3-volume" => return Ok(EnvelopeTag::Lattice3Volume),
            "nonamenable" => return Ok(EnvelopeTag::NonAmenable),
            "pinched" | "exponential" => return Ok(EnvelopeTag::PinchedExponential),
            _ => {}
        }
        if let Some(eps) = t.strip_prefix("superpoly:") {
            let eps: f64 = eps.parse().map_err(|_| BoundsError::Domain(format!("bad epsilon in {s:?}")))?;
            return Ok(EnvelopeTag::SuperPolynomial { eps });
        }
        let family: Family = t.parse().map_err(|_| BoundsError::Domain(format!("unknown envelope tag {s:?}")))?;
        Ok(EnvelopeTag::for_family(&family))
    }
}

/// An envelope `f(t) = t^power (log t)^log_power`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSpec {
    pub tag: EnvelopeTag,
    pub power: f64,
    pub log_power: f64,
    /// Human-readable formula.
    pub formula: String,
    /// Graph condition of the table row.
    pub condition: String,
    /// Carpet spectral exponent, when relevant.
    pub d_n: Option<f64>,
}

impl EnvelopeSpec {
    pub fn eval(&self, t: f64) -> f64 {
        let log = if self.log_power == 0.0 { 1.0 } else { t.ln().powf(self.log_power) };
        t.powf(self.power) * log
    }
}

/// The envelope `f` with `limsup rad(A_t) / f(t) < infinity` for DLA on the
/// given class of graphs.
pub fn envelope(tag: EnvelopeTag) -> Result<EnvelopeSpec, BoundsError> {
    let spec = |power: f64, log_power: f64, formula: String, condition: &str, d_n: Option<f64>| EnvelopeSpec {
        tag,
        power,
        log_power,
        formula,
        condition: condition.to_string(),
        d_n,
    };
    let lattice = |d: usize, condition: &str| -> Result<EnvelopeSpec, BoundsError> {
        match d {
            0..=2 => domain(format!("dimension {d} is recurrent; no envelope")),
            3 => Ok(spec(0.5, 0.5, "sqrt(t log t)".into(), condition, None)),
            _ => Ok(spec(2.0 / d as f64, 0.0, format!("t^(2/{d})"), condition, None)),
        }
    };
    match tag {
        EnvelopeTag::Lattice { d } => lattice(d, "transitive, polynomial growth"),
        EnvelopeTag::Percolation { d } => lattice(d, "supercritical percolation cluster"),
        EnvelopeTag::Lattice3Volume => Ok(spec(2.0 / 3.0, 0.0, "t^(2/3)".into(), "cubic growth, volume route", None)),
        EnvelopeTag::RegularTree { k } if k >= 3 => Ok(spec(0.0, 1.0, "log t".into(), "non-amenable", None)),
        EnvelopeTag::RegularTree { k } => domain(format!("tree of degree {k} is recurrent; no envelope")),
        EnvelopeTag::NonAmenable => Ok(spec(0.0, 1.0, "log t".into(), "non-amenable", None)),
        EnvelopeTag::PinchedExponential => Ok(spec(0.0, 4.0, "(log t)^4".into(), "pinched exponential growth", None)),
        EnvelopeTag::SuperPolynomial { eps } if eps > 0.0 => {
            Ok(spec(eps, 0.0, format!("t^{eps}"), "transitive, super-polynomial growth", None))
        }
        EnvelopeTag::SuperPolynomial { eps } => domain(format!("epsilon must be positive, got {eps}")),
        EnvelopeTag::Carpet { n } => {
            let d_n = carpet_d(n)?;
            match n {
                2 => domain("the planar carpet is recurrent; no envelope"),
                3 => Ok(spec(carpet3_beta(), 0.0, "t^((log2(13) - 2)/3)".into(), "3-dimensional carpet", Some(d_n))),
                4 => Ok(spec(0.5, 0.0, "t^(1/2)".into(), "4-dimensional carpet", Some(d_n))),
                _ => Ok(spec(
                    2.0 / (d_n - 2.0),
                    1.0,
                    format!("t^(2/(d({n}) - 2)) log t"),
                    "carpet of dimension >= 5",
                    Some(d_n),
                )),
            }
        }
    }
}
