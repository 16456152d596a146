use super::PotentialError;
use crate::graph::{BallIndex, Graph, VertexId};

/// Default cap on the number of vertices indexed by [`heat_kernel_diag`].
pub const DEFAULT_HEAT_BUDGET: usize = 20_000_000;

/// Exact return probabilities `p_t(o, o)` for `t = 0..=t_max`.
///
/// With `lazy` the walk stays put with probability 1/2 at each step.
pub fn heat_kernel_diag(g: &Graph, o: &VertexId, t_max: u32, lazy: bool) -> Result<Vec<f64>, PotentialError> {
    heat_kernel_diag_with_budget(g, o, t_max, lazy, DEFAULT_HEAT_BUDGET)
}

/// [`heat_kernel_diag`] with an explicit vertex budget.
///
/// The distribution of `X_s` is pushed exactly for `s <= ceil(t_max / 2)`
/// on the ball of that radius, and reversibility gives
/// `p_{2s}(o,o) = sum_v p_s(o,v)^2 deg(o)/deg(v)` and
/// `p_{2s+1}(o,o) = sum_v p_s(o,v) p_{s+1}(o,v) deg(o)/deg(v)`.
pub fn heat_kernel_diag_with_budget(
    g: &Graph,
    o: &VertexId,
    t_max: u32,
    lazy: bool,
    max_vertices: usize,
) -> Result<Vec<f64>, PotentialError> {
    let half = t_max.div_ceil(2);
    let ball = BallIndex::build(g, std::slice::from_ref(o), half, max_vertices)?;
    let n = ball.len();
    let deg_o = ball.degree(0) as f64;
    // ball vertices are in BFS order, so those within distance s form a prefix
    let mut reach = vec![0usize; half as usize + 1];
    for i in 0..n {
        reach[ball.dist(i) as usize] = i + 1;
    }

    let mut cur = vec![0.0f64; n];
    cur[0] = 1.0;
    let mut next = vec![0.0f64; n];
    let mut out = vec![0.0f64; t_max as usize + 1];
    let pair = |a: &[f64], b: &[f64], len: usize| -> f64 {
        (0..len).map(|i| a[i] * b[i] * deg_o / ball.degree(i) as f64).sum()
    };
    for s in 0..=half as usize {
        let live = reach[s];
        if 2 * s <= t_max as usize {
            out[2 * s] = pair(&cur, &cur, live);
        }
        if s == half as usize {
            break;
        }
        let grow = reach[s + 1];
        next[..grow].iter_mut().for_each(|x| *x = 0.0);
        for i in 0..live {
            let m = cur[i];
            if m == 0.0 {
                continue;
            }
            let deg = ball.degree(i) as f64;
            let (stay, share) = if lazy { (0.5 * m, 0.5 * m / deg) } else { (0.0, m / deg) };
            next[i] += stay;
            // every neighbor of a vertex at distance < half lies in the ball
            for &j in ball.neighbors(i) {
                next[j as usize] += share;
            }
        }
        let total: f64 = next[..grow].iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(PotentialError::Solver(format!("heat kernel mass drifted to {total} at step {}", s + 1)));
        }
        if 2 * s < t_max as usize {
            out[2 * s + 1] = pair(&cur, &next, grow);
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(out)
}
