use std::collections::VecDeque;

use rand::Rng;

use super::{Family, Graph, GraphError, VertexId};
use crate::rng;

const MAX_ATTEMPTS: u32 = 64;

/// Numerical estimates of the site percolation threshold on `Z^d`.
/// Above the table the lower bound `1/(2d-1)` is used.
pub fn site_percolation_threshold(d: usize) -> Option<f64> {
    match d {
        0..=2 => None,
        3 => Some(0.311_607_7),
        4 => Some(0.196_886_1),
        5 => Some(0.140_796_6),
        6 => Some(0.109_017),
        7 => Some(0.088_951_1),
        _ => Some(1.0 / (2 * d - 1) as f64),
    }
}

/// Origin cluster of site percolation in `[-b, b]^d`, stored densely.
pub(crate) struct Cluster {
    d: usize,
    b: i32,
    side: usize,
    /// Graph distance from the origin inside the cluster, `u32::MAX` outside.
    root_dist: Vec<u32>,
    /// Cluster sites grouped by ambient L1 norm.
    by_norm: Vec<Vec<u32>>,
    size: usize,
}

impl Cluster {
    pub(crate) fn dim(&self) -> usize {
        self.d
    }

    pub(crate) fn size(&self) -> usize {
        self.size
    }

    fn index(&self, v: &[i32]) -> Option<usize> {
        if v.len() != self.d {
            return None;
        }
        let mut idx = 0usize;
        for &c in v.iter().rev() {
            if c < -self.b || c > self.b {
                return None;
            }
            idx = idx * self.side + (c + self.b) as usize;
        }
        Some(idx)
    }

    pub(crate) fn coords(&self, mut idx: usize) -> VertexId {
        let mut c = Vec::with_capacity(self.d);
        for _ in 0..self.d {
            c.push((idx % self.side) as i32 - self.b);
            idx /= self.side;
        }
        VertexId::from(c)
    }

    pub(crate) fn contains(&self, v: &[i32]) -> bool {
        self.index(v).is_some_and(|i| self.root_dist[i] != u32::MAX)
    }

    pub(crate) fn root_dist(&self, v: &[i32]) -> Option<u32> {
        self.index(v).map(|i| self.root_dist[i]).filter(|&d| d != u32::MAX)
    }

    pub(crate) fn on_frontier(&self, v: &[i32]) -> bool {
        v.iter().any(|&c| c.abs() == self.b)
    }

    /// Cluster sites with ambient L1 norm exactly `r`.
    pub(crate) fn sphere(&self, r: usize) -> &[u32] {
        self.by_norm.get(r).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub(crate) fn max_norm(&self) -> usize {
        self.by_norm.len().saturating_sub(1)
    }
}

/// Samples i.i.d. site percolation on `[-box_radius, box_radius]^d` and returns
/// the open cluster of the origin, resampling until that cluster reaches the
/// box boundary.
pub fn build_percolation_cluster(d: usize, p: f64, box_radius: i32, seed: u64) -> Result<Graph, GraphError> {
    build_with_attempts(d, p, box_radius, seed, MAX_ATTEMPTS)
}

fn build_with_attempts(d: usize, p: f64, box_radius: i32, seed: u64, max_attempts: u32) -> Result<Graph, GraphError> {
    if d < 3 {
        return Err(GraphError::Invalid(format!("percolation needs d >= 3, got {d}")));
    }
    if box_radius < 1 {
        return Err(GraphError::Invalid(format!("box radius must be >= 1, got {box_radius}")));
    }
    let pc = site_percolation_threshold(d).unwrap_or(0.0);
    if !(p > pc && p <= 1.0) {
        return Err(GraphError::Invalid(format!("p = {p} is not in (p_c, 1] with p_c ~ {pc}")));
    }
    let side = (2 * box_radius + 1) as usize;
    let total = side
        .checked_pow(d as u32)
        .filter(|&n| n <= 200_000_000)
        .ok_or_else(|| GraphError::Resource(format!("box of side {side} in dimension {d} is too large")))?;

    let family = Family::Percolation { d, p, box_radius, seed };
    let mut shell = Cluster { d, b: box_radius, side, root_dist: Vec::new(), by_norm: Vec::new(), size: 0 };
    let origin = shell.index(&vec![0; d]).expect("origin inside box");
    let mut open = vec![false; total];
    for attempt in 0..max_attempts {
        let mut rng = rng::stream(seed, attempt as u64);
        for o in open.iter_mut() {
            *o = rng.random::<f64>() < p;
        }
        if !open[origin] {
            continue;
        }
        let mut dist = vec![u32::MAX; total];
        dist[origin] = 0;
        let mut queue = VecDeque::from([origin]);
        let mut touches = false;
        let mut stride = 1usize;
        let strides: Vec<usize> = (0..d)
            .map(|_| {
                let s = stride;
                stride *= side;
                s
            })
            .collect();
        while let Some(i) = queue.pop_front() {
            for &s in &strides {
                let coord = (i / s) % side;
                if coord == 0 || coord == side - 1 {
                    touches = true;
                }
                if coord > 0 && open[i - s] && dist[i - s] == u32::MAX {
                    dist[i - s] = dist[i] + 1;
                    queue.push_back(i - s);
                }
                if coord + 1 < side && open[i + s] && dist[i + s] == u32::MAX {
                    dist[i + s] = dist[i] + 1;
                    queue.push_back(i + s);
                }
            }
        }
        if !touches {
            continue;
        }
        shell.root_dist = dist;
        let mut by_norm: Vec<Vec<u32>> = vec![Vec::new(); d * box_radius as usize + 1];
        let mut size = 0;
        for (i, &dd) in shell.root_dist.iter().enumerate() {
            if dd != u32::MAX {
                let n = super::l1_norm(shell.coords(i).as_slice()) as usize;
                by_norm[n].push(i as u32);
                size += 1;
            }
        }
        while by_norm.last().is_some_and(|v| v.is_empty()) {
            by_norm.pop();
        }
        shell.by_norm = by_norm;
        shell.size = size;
        return Ok(Graph::from_cluster(family, shell));
    }
    Err(GraphError::Construction {
        attempts: max_attempts,
        reason: format!("origin cluster never reached the boundary of the radius-{box_radius} box at p = {p}"),
    })
}
