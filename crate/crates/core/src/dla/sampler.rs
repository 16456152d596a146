use rand::seq::index;
use rand::Rng;

use super::{Aggregate, DlaError, LaunchConfig};
use smallvec::SmallVec;

use crate::graph::{digit_one_mask, Family, Graph, VertexId};
use crate::potential::lattice_jump;

/// Jumps shorter than this are taken one step at a time.
const MIN_JUMP: u64 = 8;

/// Draws the next attachment vertex of `agg` under the launch protocol.
///
/// On the full lattice walks start exactly uniformly on the L1 sphere and
/// cross empty space in exact multi-step jumps. On regular trees the law of
/// the protocol is available in closed form and is sampled directly. On
/// carpets and percolation clusters the launch point is uniform on the
/// ambient L1 sphere restricted to the graph.
pub fn sample_attachment<R: Rng + ?Sized>(
    g: &Graph,
    agg: &Aggregate,
    cfg: &LaunchConfig,
    rng: &mut R,
) -> Result<VertexId, DlaError> {
    if agg.boundary_len() == 0 {
        return Err(DlaError::Aggregate("aggregate has no boundary".into()));
    }
    let r = cfg.launch_radius(agg.radius());
    let e = cfg.escape_radius(r);
    if let Family::RegularTree { k } = *g.family() {
        return Ok(sample_tree(agg, k, r, e, rng));
    }
    for _ in 0..cfg.max_retries {
        let start = launch_point(g, r, rng)?;
        let hit = if matches!(g.family(), Family::Carpet { .. }) {
            carpet_walk(agg, start, e, cfg.step_cap, rng)?
        } else {
            walk_to_boundary(g, agg, start, e, cfg.step_cap, rng)?
        };
        if let Some(v) = hit {
            return Ok(v);
        }
    }
    Err(DlaError::Sampling(cfg.max_retries))
}

/// Walks from `x` until it enters the boundary (`Some`) or reaches norm
/// `e` or a frontier (`None`).
fn walk_to_boundary<R: Rng + ?Sized>(
    g: &Graph,
    agg: &Aggregate,
    mut x: VertexId,
    e: u64,
    step_cap: u64,
    rng: &mut R,
) -> Result<Option<VertexId>, DlaError> {
    let full = g.is_full_lattice();
    let hit = agg.hit_norm();
    let boundary = agg.boundary_set();
    let mut steps = 0u64;
    loop {
        let n = g.escape_norm(x.as_slice());
        if n <= hit && boundary.contains(&x) {
            return Ok(Some(x));
        }
        if n >= e || g.on_frontier(x.as_slice()) {
            return Ok(None);
        }
        if steps >= step_cap {
            return Err(DlaError::StepBudget(step_cap));
        }
        if full && n > hit {
            // the jumped path stays strictly outside the hit zone and inside the shell
            let len = (n - hit - 1).min(e - n).min(step_cap - steps);
            if len >= MIN_JUMP {
                lattice_jump(x.coords_mut(), len, rng);
                steps += len;
                continue;
            }
        }
        g.step_random(&mut x, rng);
        steps += 1;
    }
}

/// [`walk_to_boundary`] on a carpet, with membership tracked through
/// per-coordinate digit masks. Draws the same random numbers as the
/// generic step.
fn carpet_walk<R: Rng + ?Sized>(
    agg: &Aggregate,
    mut x: VertexId,
    e: u64,
    step_cap: u64,
    rng: &mut R,
) -> Result<Option<VertexId>, DlaError> {
    let hit = agg.hit_norm();
    let boundary = agg.boundary_set();
    let n = x.len();
    let mut masks: SmallVec<[u32; 8]> = x.as_slice().iter().map(|&c| digit_one_mask(c as u32)).collect();
    let mut norm: u64 = x.as_slice().iter().map(|&c| c as u64).sum();
    let mut steps = 0u64;
    loop {
        if norm <= hit && boundary.contains(&x) {
            return Ok(Some(x));
        }
        if norm >= e {
            return Ok(None);
        }
        if steps >= step_cap {
            return Err(DlaError::StepBudget(step_cap));
        }
        let coords = x.coords_mut();
        loop {
            let r = rng.random_range(0..2 * n);
            let i = r / 2;
            let c = if r % 2 == 0 { coords[i] - 1 } else { coords[i] + 1 };
            if c < 0 {
                continue;
            }
            let m = digit_one_mask(c as u32);
            let others = masks.iter().enumerate().filter(|&(j, _)| j != i).fold(u32::MAX, |a, (_, &b)| a & b);
            if others & m == 0 {
                norm = if c < coords[i] { norm - 1 } else { norm + 1 };
                coords[i] = c;
                masks[i] = m;
                break;
            }
        }
        steps += 1;
    }
}

/// Uniform launch point at norm `r`.
fn launch_point<R: Rng + ?Sized>(g: &Graph, r: u64, rng: &mut R) -> Result<VertexId, DlaError> {
    match *g.family() {
        Family::Lattice { d } => Ok(uniform_l1_sphere(d, r, rng)),
        Family::Carpet { .. } => {
            let d = g.dim().unwrap_or(2);
            loop {
                let v = uniform_orthant_sphere(d, r, rng);
                if g.contains(v.as_slice()) {
                    return Ok(v);
                }
            }
        }
        Family::Percolation { .. } => {
            let c = g.cluster().expect("percolation graph has a cluster");
            let mut rr = (r as usize).min(c.max_norm());
            while c.sphere(rr).is_empty() {
                rr -= 1;
            }
            let s = c.sphere(rr);
            Ok(c.coords(s[rng.random_range(0..s.len())] as usize))
        }
        Family::RegularTree { .. } => unreachable!("trees are sampled in closed form"),
    }
}

/// Uniform point of `{x in Z^d : |x|_1 = r}`, `r >= 1`.
///
/// The number of nonzero coordinates `j` has weight
/// `2^j C(d, j) C(r-1, j-1)`; given `j`, the support, a composition of `r`
/// into `j` positive parts, and the signs are uniform.
pub(crate) fn uniform_l1_sphere<R: Rng + ?Sized>(d: usize, r: u64, rng: &mut R) -> VertexId {
    let mut x = VertexId::origin(d);
    if r == 0 {
        return x;
    }
    let jmax = d.min(r as usize);
    let mut w = Vec::with_capacity(jmax);
    let mut log_binom_d = 0.0f64;
    let mut log_binom_r = 0.0f64;
    for j in 1..=jmax {
        // C(d, j) and C(r-1, j-1), in logs
        log_binom_d += ((d - j + 1) as f64).ln() - (j as f64).ln();
        if j > 1 {
            log_binom_r += ((r as usize - j + 1) as f64).ln() - ((j - 1) as f64).ln();
        }
        w.push(j as f64 * std::f64::consts::LN_2 + log_binom_d + log_binom_r);
    }
    let top = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = w.iter().map(|l| (l - top).exp()).sum();
    let mut u = rng.random::<f64>() * total;
    let mut j = jmax;
    for (i, l) in w.iter().enumerate() {
        u -= (l - top).exp();
        if u < 0.0 {
            j = i + 1;
            break;
        }
    }
    let axes = index::sample(rng, d, j).into_vec();
    let mut cuts: Vec<u64> = index::sample(rng, r as usize - 1, j - 1).into_iter().map(|c| c as u64 + 1).collect();
    cuts.sort_unstable();
    cuts.push(r);
    let coords = x.coords_mut();
    let mut prev = 0;
    for (a, c) in axes.into_iter().zip(cuts) {
        let part = (c - prev) as i32;
        prev = c;
        coords[a] = if rng.random::<bool>() { part } else { -part };
    }
    x
}

/// Uniform point of `{x in N^d : |x|_1 = r}` by stars and bars.
fn uniform_orthant_sphere<R: Rng + ?Sized>(d: usize, r: u64, rng: &mut R) -> VertexId {
    let slots = r as usize + d - 1;
    let mut bars = index::sample(rng, slots, d - 1).into_vec();
    bars.sort_unstable();
    bars.push(slots);
    let mut x = VertexId::origin(d);
    let coords = x.coords_mut();
    let mut prev = 0usize;
    for (i, b) in bars.into_iter().enumerate() {
        coords[i] = (b - prev) as i32;
        prev = b + 1;
    }
    x
}

/// Weight of a depth-`m` boundary vertex of a tree aggregate under the
/// launch protocol with launch depth `r` and escape depth `e`.
///
/// Below a boundary vertex `b` there is no other vertex of `A + dA`, so a
/// walk from the sphere at depth `r` under `b` is a gambler's ruin with
/// ratio `q = 1/(k-1)`: it reaches `b` before depth `e` with probability
/// `(q^(r-m) - q^(e-m)) / (1 - q^(e-m))`. Summing over the
/// `(k-1)^(r-m)` launch points under `b` leaves `1 / (1 - q^(e-m))` up to a
/// factor that does not depend on `b`.
fn tree_weight(k: usize, m: usize, e: u64) -> f64 {
    let q = 1.0 / (k as f64 - 1.0);
    1.0 / (1.0 - q.powi((e as usize - m) as i32))
}

fn sample_tree<R: Rng + ?Sized>(agg: &Aggregate, k: usize, _r: u64, e: u64, rng: &mut R) -> VertexId {
    let buckets = &agg.tree.as_ref().expect("tree aggregates keep depth buckets").buckets;
    let weights: Vec<f64> = buckets.iter().enumerate().map(|(m, b)| b.len() as f64 * tree_weight(k, m, e)).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut depth = weights.iter().rposition(|&w| w > 0.0).expect("nonempty boundary");
    for (m, w) in weights.iter().enumerate() {
        if *w > 0.0 && u < *w {
            depth = m;
            break;
        }
        u -= w;
    }
    let b = &buckets[depth];
    b[rng.random_range(0..b.len())].clone()
}

/// Exact attachment law of the launch protocol on a regular tree, in
/// canonical boundary order.
pub fn tree_attachment_law(g: &Graph, agg: &Aggregate, cfg: &LaunchConfig) -> Result<Vec<(VertexId, f64)>, DlaError> {
    let Family::RegularTree { k } = *g.family() else {
        return Err(DlaError::Aggregate("closed-form attachment law needs a regular tree".into()));
    };
    let e = cfg.escape_radius(cfg.launch_radius(agg.radius()));
    let b = agg.boundary_sorted();
    let w: Vec<f64> = b.iter().map(|v| tree_weight(k, v.len(), e)).collect();
    let total: f64 = w.iter().sum();
    Ok(b.into_iter().zip(w).map(|(v, x)| (v, x / total)).collect())
}
