use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use super::PotentialError;
use crate::graph::{l1_dist, Graph, VertexId};
use crate::rng;

/// Jumps shorter than this are taken one step at a time.
const MIN_JUMP: u64 = 8;
/// Walks per independent random stream in parallel estimators.
const CHUNK: u64 = 256;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum WalkKind {
    Hit(VertexId),
    Escaped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkOutcome {
    pub kind: WalkKind,
    pub steps: u64,
}

/// Moves `x` by the displacement of an `n`-step simple random walk on `Z^d`.
///
/// The step counts per axis are multinomial, and each axis then moves by
/// `2 Bin(n_i, 1/2) - n_i`, which is the exact law of the endpoint.
pub(crate) fn lattice_jump<R: Rng + ?Sized>(x: &mut [i32], n: u64, rng: &mut R) {
    let d = x.len();
    let mut left = n;
    for (i, c) in x.iter_mut().enumerate() {
        let ni = if i + 1 == d {
            left
        } else {
            Binomial::new(left, 1.0 / (d - i) as f64).expect("valid binomial").sample(rng)
        };
        left -= ni;
        let up = Binomial::new(ni, 0.5).expect("valid binomial").sample(rng);
        *c += (2 * up as i64 - ni as i64) as i32;
    }
}

/// Simple random walk from `start` until it enters `target` or first reaches
/// escape norm strictly above `escape_radius`.
///
/// The escape norm is the graph distance from the root on lattices and
/// trees, and the ambient L1 norm on carpets and percolation clusters.
/// On the full lattice long stretches far from `target` are sampled as one
/// exact multi-step jump.
pub fn run_walk<R: Rng + ?Sized>(
    g: &Graph,
    start: &VertexId,
    target: &FxHashSet<VertexId>,
    escape_radius: u64,
    step_cap: u64,
    rng: &mut R,
) -> Result<WalkOutcome, PotentialError> {
    g.check(start)?;
    if g.escape_norm(start.as_slice()) >= escape_radius && !target.contains(start) {
        return Err(PotentialError::Domain(format!("start {start} is not inside the escape radius {escape_radius}")));
    }
    let mut x = start.clone();
    let mut steps = 0u64;
    let full = g.is_full_lattice();
    loop {
        if target.contains(&x) {
            return Ok(WalkOutcome { kind: WalkKind::Hit(x), steps });
        }
        let norm = g.escape_norm(x.as_slice());
        if norm > escape_radius || g.on_frontier(x.as_slice()) {
            return Ok(WalkOutcome { kind: WalkKind::Escaped, steps });
        }
        if steps >= step_cap {
            return Err(PotentialError::StepBudget(step_cap));
        }
        if full {
            let to_target = target.iter().map(|t| l1_dist(t.as_slice(), x.as_slice())).min().unwrap_or(u64::MAX);
            let n = (to_target - 1).min(escape_radius + 1 - norm).min(step_cap - steps);
            if n >= MIN_JUMP {
                lattice_jump(x.coords_mut(), n, rng);
                steps += n;
                continue;
            }
        }
        g.step_random(&mut x, rng);
        steps += 1;
    }
}

/// Monte Carlo Green function value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_walks: u64,
    pub cutoff: u64,
}

/// Estimates `g(x, y)`, the expected number of visits to `y` at times
/// `0..=cutoff` of a walk from `x`.
///
/// Truncation only removes visits, so the estimator is biased low.
pub fn green_mc<R: Rng + ?Sized>(
    g: &Graph,
    x: &VertexId,
    y: &VertexId,
    n_walks: u64,
    cutoff: u64,
    rng: &mut R,
) -> Result<GreenEstimate, PotentialError> {
    Ok(green_mc_multi(g, x, std::slice::from_ref(y), n_walks, cutoff, rng)?[0])
}

/// [`green_mc`] for several targets, sharing the same walks.
///
/// Walks are split into fixed chunks, each driven by its own stream derived
/// from one draw of `rng`, so the result does not depend on the number of
/// worker threads.
pub fn green_mc_multi<R: Rng + ?Sized>(
    g: &Graph,
    x: &VertexId,
    ys: &[VertexId],
    n_walks: u64,
    cutoff: u64,
    rng: &mut R,
) -> Result<Vec<GreenEstimate>, PotentialError> {
    if n_walks == 0 || cutoff == 0 {
        return Err(PotentialError::Domain("green_mc needs n_walks >= 1 and cutoff >= 1".into()));
    }
    g.check(x)?;
    for y in ys {
        g.check(y)?;
    }
    let base = rng.random::<u64>();
    let chunks = n_walks.div_ceil(CHUNK);
    let sums: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng::stream(base, c);
            let walks = CHUNK.min(n_walks - c * CHUNK);
            let mut s = vec![0.0; ys.len()];
            let mut s2 = vec![0.0; ys.len()];
            let mut visits = vec![0u64; ys.len()];
            for _ in 0..walks {
                visits.iter_mut().for_each(|v| *v = 0);
                count_visits(g, x, ys, cutoff, &mut visits, &mut r);
                for (j, &v) in visits.iter().enumerate() {
                    s[j] += v as f64;
                    s2[j] += (v * v) as f64;
                }
            }
            (s, s2)
        })
        .collect();
    let n = n_walks as f64;
    Ok((0..ys.len())
        .map(|j| {
            let s: f64 = sums.iter().map(|c| c.0[j]).sum();
            let s2: f64 = sums.iter().map(|c| c.1[j]).sum();
            let mean = s / n;
            let var = if n_walks > 1 { ((s2 - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
            GreenEstimate { mean, stderr: (var / n).sqrt(), n_walks, cutoff }
        })
        .collect())
}

fn count_visits<R: Rng + ?Sized>(
    g: &Graph,
    x: &VertexId,
    ys: &[VertexId],
    cutoff: u64,
    visits: &mut [u64],
    rng: &mut R,
) {
    let mut pos = x.clone();
    let mut t = 0u64;
    let full = g.is_full_lattice();
    loop {
        let mut nearest = u64::MAX;
        for (j, y) in ys.iter().enumerate() {
            if pos == *y {
                visits[j] += 1;
            }
            if full {
                nearest = nearest.min(l1_dist(y.as_slice(), pos.as_slice()));
            }
        }
        if t >= cutoff {
            return;
        }
        if full && nearest > MIN_JUMP {
            let n = (nearest - 1).min(cutoff - t);
            lattice_jump(pos.coords_mut(), n, rng);
            t += n;
            continue;
        }
        g.step_random(&mut pos, rng);
        t += 1;
    }
}
