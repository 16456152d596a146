use serde::{Deserialize, Serialize};

use super::linalg::Laplacian;
use super::PotentialError;
use crate::graph::{BallIndex, Family, Graph, VertexId};

/// Exact hitting law of the launch protocol on a lattice-like graph.
///
/// A walk starts uniformly on `{v : |v| = launch_radius}` (ambient L1 norm),
/// is discarded once `|v| >= escape_radius`, and `probs[i]` is the chance
/// that it first enters `targets` at `targets[i]`, given that it does so.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaunchLaw {
    pub targets: Vec<VertexId>,
    pub probs: Vec<f64>,
    /// Unconditional probability of hitting the targets before the shell.
    pub hit_prob: f64,
}

impl LaunchLaw {
    pub fn prob_of(&self, v: &VertexId) -> f64 {
        self.targets.binary_search(v).map_or(0.0, |i| self.probs[i])
    }

    pub fn total_variation(&self, other: &LaunchLaw) -> f64 {
        let mut keys: Vec<&VertexId> = self.targets.iter().chain(&other.targets).collect();
        keys.sort();
        keys.dedup();
        0.5 * keys.iter().map(|v| (self.prob_of(v) - other.prob_of(v)).abs()).sum::<f64>()
    }
}

/// Computes [`LaunchLaw`] with one adjoint solve: if `L z = mu` for the
/// launch law `mu` and the Laplacian `L` of the killed region, the expected
/// number of visits to `v` is `deg(v) z(v)`, so the hitting mass at `b` is
/// the sum of `z` over the neighbors of `b`.
pub fn launch_law(
    g: &Graph,
    targets: &[VertexId],
    launch_radius: u64,
    escape_radius: u64,
    max_vertices: usize,
) -> Result<LaunchLaw, PotentialError> {
    if matches!(g.family(), Family::RegularTree { .. }) {
        return Err(PotentialError::Domain("launch_law is for lattice-like graphs; trees have a closed form".into()));
    }
    if launch_radius >= escape_radius {
        return Err(PotentialError::Domain("the launch sphere must lie inside the escape shell".into()));
    }
    let mut set = targets.to_vec();
    set.sort();
    set.dedup();
    for v in &set {
        g.check(v)?;
        if g.escape_norm(v.as_slice()) >= launch_radius {
            return Err(PotentialError::Domain(format!("target {v} is not inside the launch sphere")));
        }
    }
    let mut sources = set.clone();
    if !sources.contains(g.root()) {
        sources.push(g.root().clone());
    }
    let inside = |v: &VertexId| g.escape_norm(v.as_slice()) < escape_radius && !g.on_frontier(v.as_slice());
    let ball = BallIndex::build_filtered(g, &sources, u32::MAX, max_vertices, inside)?;

    let n_set = set.len();
    let mut local = vec![u32::MAX; ball.len()];
    let mut count = 0u32;
    for i in n_set..ball.len() {
        if inside(ball.vertex(i)) && !set.contains(ball.vertex(i)) {
            local[i] = count;
            count += 1;
        }
    }
    let mut diag = Vec::with_capacity(count as usize);
    let mut offsets = vec![0u32];
    let mut adj = Vec::new();
    let mut mu = Vec::with_capacity(count as usize);
    for i in 0..ball.len() {
        if local[i] == u32::MAX {
            continue;
        }
        diag.push(ball.degree(i) as f64);
        adj.extend(ball.neighbors(i).iter().map(|&j| local[j as usize]).filter(|&l| l != u32::MAX));
        offsets.push(adj.len() as u32);
        mu.push(if g.escape_norm(ball.vertex(i).as_slice()) == launch_radius { 1.0 } else { 0.0 });
    }
    let sphere: f64 = mu.iter().sum();
    if sphere == 0.0 {
        return Err(PotentialError::Domain(format!("no vertex at norm {launch_radius}")));
    }
    mu.iter_mut().for_each(|m| *m /= sphere);
    let lap = Laplacian { diag, offsets, adj };
    let z = lap.solve(&mu, 1e-13)?;
    let hits: Vec<f64> = (0..n_set)
        .map(|b| {
            ball.neighbors(b)
                .iter()
                .filter(|&&j| local[j as usize] != u32::MAX)
                .map(|&j| z[local[j as usize] as usize])
                .sum()
        })
        .collect();
    let hit_prob: f64 = hits.iter().sum();
    let probs = hits.iter().map(|h| h / hit_prob).collect();
    Ok(LaunchLaw { targets: set, probs, hit_prob })
}
