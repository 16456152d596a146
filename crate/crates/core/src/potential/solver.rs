use serde::{Deserialize, Serialize};

use super::linalg::Laplacian;
use super::PotentialError;
use crate::graph::{BallIndex, Family, Graph, VertexId};

/// Truncation of "infinity" for the exact solver.
///
/// A solve for the set `A` works on the neighborhood of `A` of radius
/// `box_radius - rad(A)`, whose outer shell is absorbing. The box radius is
/// multiplied by `refine_factor` until two successive capacity estimates
/// agree to `rel_tol`, at most `max_refinements` times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub box_radius: u32,
    pub refine_factor: f64,
    pub rel_tol: f64,
    pub max_refinements: u32,
    /// Relative residual at which each linear solve stops.
    pub residual_tol: f64,
    /// Largest neighborhood a single solve may index.
    pub max_vertices: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            box_radius: 12,
            refine_factor: 1.5,
            rel_tol: 1e-3,
            max_refinements: 5,
            residual_tol: 1e-11,
            max_vertices: 30_000_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), PotentialError> {
        let bad = |m: &str| Err(PotentialError::Domain(format!("invalid solver config: {m}")));
        if self.refine_factor.is_nan() || self.refine_factor <= 1.0 {
            return bad("refine_factor must exceed 1");
        }
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 {
            return bad("rel_tol must be positive");
        }
        if self.residual_tol.is_nan() || self.residual_tol <= 0.0 {
            return bad("residual_tol must be positive");
        }
        if self.box_radius < 2 {
            return bad("box_radius must be at least 2");
        }
        Ok(())
    }
}

/// Escape probabilities, equilibrium measure, capacity and harmonic measure
/// of a finite set, listed in the order of `set` (sorted, deduplicated).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSolveResult {
    pub set: Vec<VertexId>,
    pub escape_prob: Vec<f64>,
    pub equilibrium: Vec<f64>,
    pub capacity: f64,
    pub harmonic: Vec<f64>,
    pub converged: bool,
    /// Relative change of the capacity between the last two estimates;
    /// infinite when only one box was solved.
    pub achieved_rel_delta: f64,
    /// Box radii used, coarsest first.
    pub box_radii: Vec<u32>,
    /// Capacity on the finest box without extrapolation.
    pub raw_capacity: f64,
}

impl PotentialSolveResult {
    pub fn index_of(&self, v: &VertexId) -> Option<usize> {
        self.set.binary_search(v).ok()
    }

    pub fn harmonic_of(&self, v: &VertexId) -> f64 {
        self.index_of(v).map_or(0.0, |i| self.harmonic[i])
    }

    pub fn escape_of(&self, v: &VertexId) -> f64 {
        self.index_of(v).map_or(0.0, |i| self.escape_prob[i])
    }

    pub fn equilibrium_of(&self, v: &VertexId) -> f64 {
        self.index_of(v).map_or(0.0, |i| self.equilibrium[i])
    }

    /// Largest harmonic-measure atom.
    pub fn max_harmonic(&self) -> f64 {
        self.harmonic.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Role {
    Set,
    Interior,
    Shell,
}

/// One truncated problem: the neighborhood of `A`, with roles assigned.
struct BoxProblem {
    ball: BallIndex,
    role: Vec<Role>,
    n_set: usize,
}

impl BoxProblem {
    fn build(g: &Graph, set: &[VertexId], rho: u32, max_vertices: usize) -> Result<BoxProblem, PotentialError> {
        let ball = BallIndex::build(g, set, rho, max_vertices)?;
        let role = (0..ball.len())
            .map(|i| {
                if i < set.len() {
                    Role::Set
                } else if ball.dist(i) >= rho || g.on_frontier(ball.vertex(i).as_slice()) {
                    Role::Shell
                } else {
                    Role::Interior
                }
            })
            .collect();
        Ok(BoxProblem { ball, role, n_set: set.len() })
    }

    /// Laplacian over the vertices accepted by `keep`, with the local index map.
    fn laplacian(&self, keep: impl Fn(Role) -> bool) -> (Laplacian, Vec<u32>) {
        let mut local = vec![u32::MAX; self.ball.len()];
        let mut count = 0u32;
        for i in 0..self.ball.len() {
            if keep(self.role[i]) {
                local[i] = count;
                count += 1;
            }
        }
        let mut diag = Vec::with_capacity(count as usize);
        let mut offsets = Vec::with_capacity(count as usize + 1);
        offsets.push(0u32);
        let mut adj = Vec::new();
        for i in 0..self.ball.len() {
            if local[i] == u32::MAX {
                continue;
            }
            diag.push(self.ball.degree(i) as f64);
            adj.extend(self.ball.neighbors(i).iter().map(|&j| local[j as usize]).filter(|&l| l != u32::MAX));
            offsets.push(adj.len() as u32);
        }
        (Laplacian { diag, offsets, adj }, local)
    }

    /// `P_x[T_A^+ > exit time]` for each `x` in `A`, with `shell_value` the
    /// probability assigned to walks that reach the shell.
    fn escape(&self, shell_value: f64, tol: f64) -> Result<Vec<f64>, PotentialError> {
        let (lap, local) = self.laplacian(|r| r == Role::Interior);
        let mut b = vec![0.0; lap.len()];
        for i in 0..self.ball.len() {
            if local[i] != u32::MAX {
                let shell = self.ball.neighbors(i).iter().filter(|&&j| self.role[j as usize] == Role::Shell).count();
                b[local[i] as usize] = shell as f64 * shell_value;
            }
        }
        let u = lap.solve(&b, tol)?;
        Ok((0..self.n_set)
            .map(|x| {
                let s: f64 = self
                    .ball
                    .neighbors(x)
                    .iter()
                    .map(|&j| match self.role[j as usize] {
                        Role::Set => 0.0,
                        Role::Shell => shell_value,
                        Role::Interior => u[local[j as usize] as usize],
                    })
                    .sum();
                (s / self.ball.degree(x) as f64).clamp(0.0, 1.0)
            })
            .collect())
    }

    /// Green function of the walk killed at the shell, `g[x][y]` for `x, y` in `A`.
    fn green(&self, tol: f64) -> Result<Vec<Vec<f64>>, PotentialError> {
        let (lap, local) = self.laplacian(|r| r != Role::Shell);
        let mut g = vec![vec![0.0; self.n_set]; self.n_set];
        for y in 0..self.n_set {
            let mut b = vec![0.0; lap.len()];
            b[local[y] as usize] = self.ball.degree(y) as f64;
            let col = lap.solve(&b, tol)?;
            for (x, row) in g.iter_mut().enumerate() {
                row[y] = col[local[x] as usize];
            }
        }
        Ok(g)
    }
}

fn canonical_set(g: &Graph, a: &[VertexId]) -> Result<Vec<VertexId>, PotentialError> {
    let mut set = a.to_vec();
    set.sort();
    set.dedup();
    for v in &set {
        g.check(v)?;
    }
    Ok(set)
}

fn set_radius(g: &Graph, set: &[VertexId]) -> Result<u64, PotentialError> {
    let mut r = 0;
    for v in set {
        r = r.max(g.dist_from_root(v)?);
    }
    Ok(r)
}

fn first_rho(box_radius: u32, rad: u64) -> Result<u32, PotentialError> {
    let rho = box_radius as i64 - rad as i64;
    if rho < 2 {
        return Err(PotentialError::Domain(format!(
            "box_radius {box_radius} must be at least the set radius {rad} plus 2"
        )));
    }
    Ok(rho as u32)
}

/// Exponent `p` with capacity error `~ rho^-p` on a box of radius `rho`,
/// i.e. the decay exponent of the Green function. `None` where no
/// power-law extrapolation applies.
fn extrapolation_order(g: &Graph) -> Option<f64> {
    match *g.family() {
        Family::Lattice { d } | Family::Percolation { d, .. } if d >= 3 => Some(d as f64 - 2.0),
        Family::Carpet { n } => {
            let df = ((3f64).powi(n as i32) - 1.0).ln() / 3f64.ln();
            let ds = crate::bounds::carpet_d(n).ok()?;
            Some(df * (1.0 - 2.0 / ds))
        }
        _ => None,
    }
}

/// On a tree the distance to a connected set moves like a biased walk, so the
/// escape probability from distance `rho` is exactly `1 - (k-1)^-rho`.
fn exact_tree_shell(g: &Graph, set: &[VertexId], rho: u32) -> Option<f64> {
    let Family::RegularTree { k } = *g.family() else { return None };
    if k < 3 || !is_connected(g, set) {
        return None;
    }
    Some(1.0 - ((k - 1) as f64).powi(-(rho as i32)))
}

pub(crate) fn is_connected(g: &Graph, set: &[VertexId]) -> bool {
    if set.is_empty() {
        return true;
    }
    let mut seen = vec![false; set.len()];
    seen[0] = true;
    let mut stack = vec![0usize];
    let mut buf = Vec::new();
    while let Some(i) = stack.pop() {
        buf.clear();
        g.push_neighbors(set[i].as_slice(), &mut buf);
        for w in &buf {
            if let Ok(j) = set.binary_search(w) {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn finish(
    g: &Graph,
    set: Vec<VertexId>,
    escape: Vec<f64>,
    converged: bool,
    delta: f64,
    box_radii: Vec<u32>,
    raw_capacity: f64,
) -> PotentialSolveResult {
    let equilibrium: Vec<f64> = set.iter().zip(&escape).map(|(v, e)| g.degree(v.as_slice()) as f64 * e).collect();
    let capacity: f64 = equilibrium.iter().sum();
    let harmonic = equilibrium.iter().map(|e| if capacity > 0.0 { e / capacity } else { 0.0 }).collect();
    PotentialSolveResult {
        set,
        escape_prob: escape,
        equilibrium,
        capacity,
        harmonic,
        converged,
        achieved_rel_delta: delta,
        box_radii,
        raw_capacity,
    }
}

fn capacity_of(g: &Graph, set: &[VertexId], escape: &[f64]) -> f64 {
    set.iter().zip(escape).map(|(v, e)| g.degree(v.as_slice()) as f64 * e).sum()
}

fn rel_change(new: f64, old: f64) -> f64 {
    if new == old {
        0.0
    } else {
        (new - old).abs() / new.abs().max(old.abs())
    }
}

/// Escape probabilities `P_x[T_A^+ = infinity]` for `x` in `A` and the derived
/// equilibrium measure, capacity and harmonic measure.
///
/// Each box gives `u(v) = P_v[reach the shell before A]` by a linear solve and
/// `P_x[T_A^+ > exit] = sum_{w ~ x} u(w) / deg(x)`. On lattices, percolation
/// clusters and carpets consecutive boxes are combined by Richardson
/// extrapolation in `rho^-p`, `p` the Green decay exponent. On regular trees
/// with connected `A` the shell value is exact and one box suffices.
pub fn solve_escape(g: &Graph, a: &[VertexId], cfg: &SolverConfig) -> Result<PotentialSolveResult, PotentialError> {
    cfg.validate()?;
    let set = canonical_set(g, a)?;
    if set.is_empty() {
        return Ok(finish(g, set, Vec::new(), true, 0.0, Vec::new(), 0.0));
    }
    let rad = set_radius(g, &set)?;
    let rho0 = first_rho(cfg.box_radius, rad)?;

    if let Some(shell) = exact_tree_shell(g, &set, rho0) {
        let problem = BoxProblem::build(g, &set, rho0, cfg.max_vertices)?;
        let esc = problem.escape(shell, cfg.residual_tol)?;
        let raw = capacity_of(g, &set, &esc);
        return Ok(finish(g, set, esc, true, 0.0, vec![cfg.box_radius], raw));
    }

    let order = extrapolation_order(g);
    let mut radii = Vec::new();
    let mut rhos: Vec<f64> = Vec::new();
    let mut raws: Vec<Vec<f64>> = Vec::new();
    let mut estimates: Vec<Vec<f64>> = Vec::new();
    let mut radius = cfg.box_radius;
    let mut delta = f64::INFINITY;
    let mut converged = false;
    for k in 0..=cfg.max_refinements as usize {
        if k > 0 {
            radius = ((radius as f64 * cfg.refine_factor).ceil() as u32).max(radius + 1);
        }
        let rho = radius - rad as u32;
        let problem = BoxProblem::build(g, &set, rho, cfg.max_vertices)?;
        let esc = problem.escape(1.0, cfg.residual_tol)?;
        radii.push(radius);
        rhos.push(rho as f64);
        let estimate = match (order, raws.last()) {
            (Some(p), Some(prev)) => {
                let (w1, w0) = (rhos[k].powf(p), rhos[k - 1].powf(p));
                esc.iter().zip(prev).map(|(e1, e0)| ((w1 * e1 - w0 * e0) / (w1 - w0)).clamp(0.0, 1.0)).collect()
            }
            _ => esc.clone(),
        };
        raws.push(esc);
        estimates.push(estimate);
        let cap = capacity_of(g, &set, &estimates[k]);
        let reference = match order {
            Some(_) if k >= 2 => Some(capacity_of(g, &set, &estimates[k - 1])),
            Some(_) if k == 1 => Some(capacity_of(g, &set, &raws[1])),
            None if k >= 1 => Some(capacity_of(g, &set, &estimates[k - 1])),
            _ => None,
        };
        if let Some(prev) = reference {
            delta = rel_change(cap, prev);
            if delta < cfg.rel_tol && (order.is_none() || k >= 2) {
                converged = true;
                break;
            }
        }
    }
    let raw = capacity_of(g, &set, raws.last().expect("at least one box"));
    let esc = estimates.pop().expect("at least one box");
    Ok(finish(g, set, esc, converged, delta, radii, raw))
}

/// Green function on a single truncated box together with that box's
/// capacity, the two ingredients of the capacity sandwich.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxGreen {
    pub set: Vec<VertexId>,
    pub box_radius: u32,
    /// `green[i][j] = g(set[i], set[j])` for the walk killed at the shell.
    pub green: Vec<Vec<f64>>,
    pub escape_prob: Vec<f64>,
    pub capacity: f64,
}

pub fn box_green(g: &Graph, a: &[VertexId], cfg: &SolverConfig) -> Result<BoxGreen, PotentialError> {
    cfg.validate()?;
    let set = canonical_set(g, a)?;
    if set.is_empty() {
        return Err(PotentialError::Domain("the set must be nonempty".into()));
    }
    let rho = first_rho(cfg.box_radius, set_radius(g, &set)?)?;
    let problem = BoxProblem::build(g, &set, rho, cfg.max_vertices)?;
    let escape_prob = problem.escape(1.0, cfg.residual_tol)?;
    let green = problem.green(cfg.residual_tol)?;
    let capacity = capacity_of(g, &set, &escape_prob);
    Ok(BoxGreen { set, box_radius: cfg.box_radius, green, escape_prob, capacity })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub lower: f64,
    pub middle: f64,
    pub upper: f64,
    pub holds: bool,
    pub tolerance: f64,
}

/// Compares `inf_x sum_y g(x,y)`, `sum_x deg(x) / cap(A)` and
/// `sup_x sum_y g(x,y)` over `x, y` in `A`, all computed on one box.
///
/// On the box the three quantities obey the sandwich exactly: the middle one
/// is the harmonic-measure average of the row sums. `tol` is relative to the
/// middle value.
pub fn capacity_sandwich_check(
    g: &Graph,
    a: &[VertexId],
    cfg: &SolverConfig,
    tol: f64,
) -> Result<SandwichReport, PotentialError> {
    let bg = box_green(g, a, cfg)?;
    let sums: Vec<f64> = bg.green.iter().map(|row| row.iter().sum()).collect();
    let lower = sums.iter().copied().fold(f64::INFINITY, f64::min);
    let upper = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total_deg: f64 = bg.set.iter().map(|v| g.degree(v.as_slice()) as f64).sum();
    let middle = total_deg / bg.capacity;
    let tolerance = tol * middle.abs();
    let holds = lower <= middle + tolerance && middle <= upper + tolerance;
    Ok(SandwichReport { lower, middle, upper, holds, tolerance })
}

/// Checks `cap(A) >= lambda * sum_{x in A} deg(x)` on a regular tree, within
/// the solver tolerance.
pub fn spectral_capacity_check(
    g: &Graph,
    a: &[VertexId],
    lambda: f64,
    cfg: &SolverConfig,
) -> Result<bool, PotentialError> {
    if !matches!(g.family(), Family::RegularTree { k } if *k >= 3) {
        return Err(PotentialError::Domain(format!(
            "spectral capacity bound needs a regular tree of degree >= 3, got {}",
            g.family()
        )));
    }
    if a.is_empty() {
        return Ok(true);
    }
    let res = solve_escape(g, a, cfg)?;
    let total_deg: f64 = res.set.iter().map(|v| g.degree(v.as_slice()) as f64).sum();
    Ok(res.capacity * (1.0 + cfg.rel_tol) >= lambda * total_deg)
}
