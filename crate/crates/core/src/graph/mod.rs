//! Rooted bounded-degree graphs exposed through a neighbor oracle.
//!
//! Four families are supported: the lattice `Z^d`, the `k`-regular tree,
//! the `n`-dimensional pre-Sierpinski carpet and the origin cluster of
//! site percolation in a box. Vertices of every family are integer vectors
//! ([`VertexId`]): lattice coordinates, or reduced words for the tree.

mod ball;
mod carpet;
mod family;
mod percolation;

use std::borrow::Borrow;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Mutex;

use rand::Rng;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

pub use ball::BallIndex;
pub use carpet::is_in_carpet;
pub use family::Family;
pub use percolation::{build_percolation_cluster, site_percolation_threshold};

pub(crate) use carpet::digit_one_mask;
use carpet::RootBfs;
use percolation::Cluster;

pub(crate) type Coords = SmallVec<[i32; 4]>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("vertex {0} is not in the graph")]
    NotInGraph(String),
    #[error("cannot parse graph family {0:?}: {1}")]
    Parse(String, String),
    #[error("invalid graph parameters: {0}")]
    Invalid(String),
    #[error("percolation construction failed after {attempts} attempts: {reason}")]
    Construction { attempts: u32, reason: String },
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("internal error: {0}")]
    Internal(String),
}

/// Canonical vertex identity.
///
/// Lattice-like families store coordinates; the tree stores a reduced word
/// over `{0..k-1}` (no letter repeated twice in a row), the empty word
/// being the root. Ordering is lexicographic on the integer vector.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(Coords);

impl VertexId {
    pub fn new(coords: &[i32]) -> Self {
        VertexId(SmallVec::from_slice(coords))
    }

    pub fn origin(dim: usize) -> Self {
        VertexId(SmallVec::from_elem(0, dim))
    }

    pub fn as_slice(&self) -> &[i32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn coords_mut(&mut self) -> &mut Coords {
        &mut self.0
    }
}

impl Hash for VertexId {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.as_slice().hash(state)
    }
}

impl Borrow<[i32]> for VertexId {
    fn borrow(&self) -> &[i32] {
        &self.0
    }
}

impl From<Vec<i32>> for VertexId {
    fn from(v: Vec<i32>) -> Self {
        VertexId(SmallVec::from_vec(v))
    }
}

impl fmt::Debug for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

pub(crate) enum Inner {
    Lattice,
    Tree,
    Carpet(Mutex<RootBfs>),
    Percolation(Cluster),
}

/// An immutable rooted graph. Safe to share between threads.
pub struct Graph {
    family: Family,
    root: VertexId,
    max_degree: usize,
    inner: Inner,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("family", &self.family)
            .field("root", &self.root)
            .field("max_degree", &self.max_degree)
            .finish()
    }
}

impl Graph {
    pub fn lattice(d: usize) -> Result<Graph, GraphError> {
        if d == 0 {
            return Err(GraphError::Invalid("lattice dimension must be at least 1".into()));
        }
        Ok(Graph { family: Family::Lattice { d }, root: VertexId::origin(d), max_degree: 2 * d, inner: Inner::Lattice })
    }

    pub fn regular_tree(k: usize) -> Result<Graph, GraphError> {
        if k < 2 {
            return Err(GraphError::Invalid("tree degree must be at least 2".into()));
        }
        Ok(Graph { family: Family::RegularTree { k }, root: VertexId::new(&[]), max_degree: k, inner: Inner::Tree })
    }

    pub fn carpet(n: usize) -> Result<Graph, GraphError> {
        if n < 2 {
            return Err(GraphError::Invalid("carpet dimension must be at least 2".into()));
        }
        let root = VertexId::origin(n);
        Ok(Graph {
            family: Family::Carpet { n },
            max_degree: 2 * n,
            inner: Inner::Carpet(Mutex::new(RootBfs::new(root.clone()))),
            root,
        })
    }

    pub(crate) fn from_cluster(family: Family, cluster: Cluster) -> Graph {
        let d = cluster.dim();
        Graph { family, root: VertexId::origin(d), max_degree: 2 * d, inner: Inner::Percolation(cluster) }
    }

    /// Builds a graph from its family description.
    pub fn build(family: &Family) -> Result<Graph, GraphError> {
        match *family {
            Family::Lattice { d } => Graph::lattice(d),
            Family::RegularTree { k } => Graph::regular_tree(k),
            Family::Carpet { n } => Graph::carpet(n),
            Family::Percolation { d, p, box_radius, seed } => build_percolation_cluster(d, p, box_radius, seed),
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn root(&self) -> &VertexId {
        &self.root
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Ambient coordinate dimension, `None` for the tree.
    pub fn dim(&self) -> Option<usize> {
        match self.family {
            Family::Lattice { d } | Family::Percolation { d, .. } => Some(d),
            Family::Carpet { n } => Some(n),
            Family::RegularTree { .. } => None,
        }
    }

    /// True for the full lattice, where exact multi-step jumps are available.
    pub fn is_full_lattice(&self) -> bool {
        matches!(self.family, Family::Lattice { .. })
    }

    /// Number of vertices in the graph if it is finite.
    pub fn vertex_count(&self) -> Option<usize> {
        match &self.inner {
            Inner::Percolation(c) => Some(c.size()),
            _ => None,
        }
    }

    pub fn contains(&self, v: &[i32]) -> bool {
        match (&self.family, &self.inner) {
            (Family::Lattice { d }, _) => v.len() == *d,
            (Family::RegularTree { k }, _) => {
                let k = *k as i32;
                v.iter().all(|&a| (0..k).contains(&a)) && v.windows(2).all(|w| w[0] != w[1])
            }
            (Family::Carpet { n }, _) => v.len() == *n && is_in_carpet(*n, v),
            (_, Inner::Percolation(c)) => c.contains(v),
            _ => false,
        }
    }

    pub fn check(&self, v: &VertexId) -> Result<(), GraphError> {
        if self.contains(v.as_slice()) {
            Ok(())
        } else {
            Err(GraphError::NotInGraph(v.to_string()))
        }
    }

    /// All neighbors of `v`, in a fixed canonical order.
    pub fn neighbors(&self, v: &VertexId) -> Result<Vec<VertexId>, GraphError> {
        self.check(v)?;
        let mut out = Vec::with_capacity(self.max_degree);
        self.push_neighbors(v.as_slice(), &mut out);
        Ok(out)
    }

    /// Appends the neighbors of `v` (assumed to be in the graph) to `out`.
    pub(crate) fn push_neighbors(&self, v: &[i32], out: &mut Vec<VertexId>) {
        match self.family {
            Family::RegularTree { k } => {
                if let Some((&last, head)) = v.split_last() {
                    out.push(VertexId::new(head));
                    for a in 0..k as i32 {
                        if a != last {
                            let mut w = VertexId::new(v);
                            w.0.push(a);
                            out.push(w);
                        }
                    }
                } else {
                    for a in 0..k as i32 {
                        out.push(VertexId::new(&[a]));
                    }
                }
            }
            _ => {
                let full = self.is_full_lattice();
                let mut w = VertexId::new(v);
                for i in 0..v.len() {
                    for delta in [-1, 1] {
                        w.0[i] = v[i] + delta;
                        if full || self.contains(&w.0) {
                            out.push(w.clone());
                        }
                    }
                    w.0[i] = v[i];
                }
            }
        }
    }

    pub fn degree(&self, v: &[i32]) -> usize {
        match self.family {
            Family::Lattice { d } => 2 * d,
            Family::RegularTree { k } => k,
            _ => {
                let mut w: Coords = SmallVec::from_slice(v);
                let mut deg = 0;
                for i in 0..v.len() {
                    for delta in [-1, 1] {
                        w[i] = v[i] + delta;
                        if self.contains(&w) {
                            deg += 1;
                        }
                    }
                    w[i] = v[i];
                }
                deg
            }
        }
    }

    /// Moves `v` to a uniformly chosen neighbor.
    pub(crate) fn step_random<R: Rng + ?Sized>(&self, v: &mut VertexId, rng: &mut R) {
        match self.family {
            Family::Lattice { d } => {
                let r = rng.random_range(0..2 * d);
                v.0[r / 2] += if r % 2 == 0 { -1 } else { 1 };
            }
            Family::RegularTree { k } => {
                let a = rng.random_range(0..k) as i32;
                if v.0.last() == Some(&a) {
                    v.0.pop();
                } else {
                    v.0.push(a);
                }
            }
            _ => {
                // rejection over the 2n directions is uniform over the valid ones
                let n = v.0.len();
                loop {
                    let r = rng.random_range(0..2 * n);
                    let delta = if r % 2 == 0 { -1 } else { 1 };
                    v.0[r / 2] += delta;
                    if self.contains(&v.0) {
                        return;
                    }
                    v.0[r / 2] -= delta;
                }
            }
        }
    }

    /// Graph-metric distance.
    pub fn dist(&self, u: &VertexId, v: &VertexId) -> Result<u64, GraphError> {
        self.check(u)?;
        self.check(v)?;
        match self.family {
            Family::Lattice { .. } => Ok(l1_dist(u.as_slice(), v.as_slice())),
            Family::RegularTree { .. } => {
                let (a, b) = (u.as_slice(), v.as_slice());
                let common = a.iter().zip(b).take_while(|(x, y)| x == y).count();
                Ok((a.len() + b.len() - 2 * common) as u64)
            }
            _ => {
                if u == &self.root {
                    return self.dist_from_root(v);
                }
                if v == &self.root {
                    return self.dist_from_root(u);
                }
                self.bfs_dist(u, v)
            }
        }
    }

    fn bfs_dist(&self, u: &VertexId, v: &VertexId) -> Result<u64, GraphError> {
        if u == v {
            return Ok(0);
        }
        let mut seen: FxHashSet<VertexId> = FxHashSet::default();
        seen.insert(u.clone());
        let mut frontier = vec![u.clone()];
        let mut next = Vec::new();
        let mut buf = Vec::new();
        let mut depth = 0u64;
        while !frontier.is_empty() {
            depth += 1;
            for x in &frontier {
                buf.clear();
                self.push_neighbors(x.as_slice(), &mut buf);
                for w in buf.drain(..) {
                    if &w == v {
                        return Ok(depth);
                    }
                    if seen.insert(w.clone()) {
                        next.push(w);
                    }
                }
            }
            std::mem::swap(&mut frontier, &mut next);
            next.clear();
        }
        Err(GraphError::Internal(format!("{u} and {v} are disconnected")))
    }

    /// `|v| = dist(v, root)`.
    pub fn dist_from_root(&self, v: &VertexId) -> Result<u64, GraphError> {
        self.check(v)?;
        Ok(match &self.inner {
            Inner::Lattice => l1_norm(v.as_slice()),
            Inner::Tree => v.len() as u64,
            Inner::Carpet(bfs) => {
                let mut bfs = bfs.lock().unwrap_or_else(|e| e.into_inner());
                bfs.dist_to(self, v) as u64
            }
            Inner::Percolation(c) => {
                c.root_dist(v.as_slice()).ok_or_else(|| GraphError::NotInGraph(v.to_string()))? as u64
            }
        })
    }

    /// Norm used for launch spheres and escape shells: the graph distance
    /// on the lattice and the tree, the ambient L1 norm on subgraphs of
    /// the lattice (never larger than the graph distance there).
    pub fn escape_norm(&self, v: &[i32]) -> u64 {
        match self.family {
            Family::RegularTree { .. } => v.len() as u64,
            _ => l1_norm(v),
        }
    }

    /// True on the faces of a percolation box, where walks are treated as
    /// having escaped to infinity.
    pub fn on_frontier(&self, v: &[i32]) -> bool {
        match &self.inner {
            Inner::Percolation(c) => c.on_frontier(v),
            _ => false,
        }
    }

    /// Number of vertices within distance `r` of `v`.
    pub fn ball_size(&self, v: &VertexId, r: u64) -> Result<u64, GraphError> {
        self.check(v)?;
        match self.family {
            Family::Lattice { d } => Ok(lattice_ball_size(d as u64, r)),
            Family::RegularTree { k } => Ok(tree_ball_size(k as u64, r)),
            _ => {
                let ball = BallIndex::build(self, std::slice::from_ref(v), r as u32, usize::MAX)?;
                Ok(ball.len() as u64)
            }
        }
    }

    /// Analytic bottom of the spectrum of `I - P` where known (regular trees).
    pub fn spectral_bottom(&self) -> Option<f64> {
        match self.family {
            Family::RegularTree { k } if k >= 3 => {
                let k = k as f64;
                Some(1.0 - 2.0 * (k - 1.0).sqrt() / k)
            }
            _ => None,
        }
    }

    pub(crate) fn cluster(&self) -> Option<&Cluster> {
        match &self.inner {
            Inner::Percolation(c) => Some(c),
            _ => None,
        }
    }
}

pub(crate) fn l1_norm(v: &[i32]) -> u64 {
    v.iter().map(|c| c.unsigned_abs() as u64).sum()
}

pub(crate) fn l1_dist(u: &[i32], v: &[i32]) -> u64 {
    u.iter().zip(v).map(|(a, b)| (a - b).unsigned_abs() as u64).sum()
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Vertices of `Z^d` within L1 distance `r` of a point.
pub fn lattice_ball_size(d: u64, r: u64) -> u64 {
    (0..=d.min(r)).map(|k| (1u64 << k) * binomial(d, k) * binomial(r, k)).sum()
}

/// Vertices of the `k`-regular tree within distance `r` of a vertex.
pub fn tree_ball_size(k: u64, r: u64) -> u64 {
    let mut total = 1u64;
    let mut sphere = 1u64;
    for i in 1..=r {
        sphere = if i == 1 { k } else { sphere.saturating_mul(k - 1) };
        total = total.saturating_add(sphere);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(c: &[i32]) -> VertexId {
        VertexId::new(c)
    }

    #[test]
    fn lattice_origin_has_unit_neighbors() {
        let g = Graph::lattice(3).unwrap();
        let mut nb = g.neighbors(g.root()).unwrap();
        nb.sort();
        let mut expected =
            vec![v(&[-1, 0, 0]), v(&[1, 0, 0]), v(&[0, -1, 0]), v(&[0, 1, 0]), v(&[0, 0, -1]), v(&[0, 0, 1])];
        expected.sort();
        assert_eq!(nb, expected);
    }

    #[test]
    fn tree_root_has_k_children() {
        let g = Graph::regular_tree(3).unwrap();
        let nb = g.neighbors(g.root()).unwrap();
        assert_eq!(nb, vec![v(&[0]), v(&[1]), v(&[2])]);
        let nb = g.neighbors(&v(&[1])).unwrap();
        assert_eq!(nb, vec![v(&[]), v(&[1, 0]), v(&[1, 2])]);
    }

    #[test]
    fn tree_rejects_unreduced_words() {
        let g = Graph::regular_tree(3).unwrap();
        assert!(g.neighbors(&v(&[1, 1])).is_err());
        assert!(g.neighbors(&v(&[3])).is_err());
    }

    #[test]
    fn carpet_removed_cell_is_an_error() {
        let g = Graph::carpet(2).unwrap();
        assert!(matches!(g.neighbors(&v(&[1, 1])), Err(GraphError::NotInGraph(_))));
        assert_eq!(g.neighbors(&v(&[1, 0])).unwrap(), vec![v(&[0, 0]), v(&[2, 0])]);
    }

    #[test]
    fn distances() {
        let z3 = Graph::lattice(3).unwrap();
        assert_eq!(z3.dist(&v(&[0, 0, 0]), &v(&[1, 2, 0])).unwrap(), 3);
        let t = Graph::regular_tree(3).unwrap();
        assert_eq!(t.dist(t.root(), &v(&[0, 1])).unwrap(), 2);
        assert_eq!(t.dist(&v(&[0, 1]), &v(&[0, 2, 1])).unwrap(), 3);
        let c = Graph::carpet(2).unwrap();
        // the removed centre forces a detour
        assert_eq!(c.dist(&v(&[1, 0]), &v(&[1, 2])).unwrap(), 4);
        assert_eq!(c.dist_from_root(&v(&[2, 2])).unwrap(), 4);
    }

    #[test]
    fn ball_sizes() {
        let z3 = Graph::lattice(3).unwrap();
        assert_eq!(z3.ball_size(z3.root(), 1).unwrap(), 7);
        assert_eq!(z3.ball_size(z3.root(), 2).unwrap(), 25);
        let t = Graph::regular_tree(3).unwrap();
        assert_eq!(t.ball_size(t.root(), 2).unwrap(), 10);
    }

    #[test]
    fn degrees_are_exact_on_homogeneous_families() {
        let z4 = Graph::lattice(4).unwrap();
        assert_eq!(z4.degree(&[3, -1, 0, 2]), 8);
        let t = Graph::regular_tree(5).unwrap();
        assert_eq!(t.degree(&[]), 5);
        assert_eq!(t.neighbors(&v(&[4, 0])).unwrap().len(), 5);
    }

    fn arb_vertex(family: usize) -> impl Strategy<Value = VertexId> {
        match family {
            0 => prop::collection::vec(-6i32..6, 3).prop_map(VertexId::from).boxed(),
            1 => prop::collection::vec(0i32..3, 0..7)
                .prop_map(|mut w| {
                    w.dedup();
                    VertexId::from(w)
                })
                .boxed(),
            _ => prop::collection::vec(0i32..30, 3)
                .prop_filter("in carpet", |c| is_in_carpet(3, c))
                .prop_map(VertexId::from)
                .boxed(),
        }
    }

    fn graph_for(family: usize) -> Graph {
        match family {
            0 => Graph::lattice(3).unwrap(),
            1 => Graph::regular_tree(3).unwrap(),
            _ => Graph::carpet(3).unwrap(),
        }
    }

    proptest! {
        #[test]
        fn adjacency_is_symmetric_and_simple((family, x) in (0usize..3).prop_flat_map(|f| (Just(f), arb_vertex(f)))) {
            let g = graph_for(family);
            let nb = g.neighbors(&x).unwrap();
            prop_assert_eq!(nb.len(), g.degree(x.as_slice()));
            prop_assert!(!nb.contains(&x));
            let set: FxHashSet<_> = nb.iter().cloned().collect();
            prop_assert_eq!(set.len(), nb.len());
            for y in &nb {
                prop_assert!(g.neighbors(y).unwrap().contains(&x));
            }
        }

        #[test]
        fn lattice_triangle_inequality(a in prop::collection::vec(-5i32..5, 3), b in prop::collection::vec(-5i32..5, 3), c in prop::collection::vec(-5i32..5, 3)) {
            let g = Graph::lattice(3).unwrap();
            let (a, b, c) = (VertexId::from(a), VertexId::from(b), VertexId::from(c));
            prop_assert!(g.dist(&a, &c).unwrap() <= g.dist(&a, &b).unwrap() + g.dist(&b, &c).unwrap());
        }

        #[test]
        fn carpet_triangle_inequality(a in prop::collection::vec(0i32..12, 2), b in prop::collection::vec(0i32..12, 2), c in prop::collection::vec(0i32..12, 2)) {
            prop_assume!(is_in_carpet(2, &a) && is_in_carpet(2, &b) && is_in_carpet(2, &c));
            let g = Graph::carpet(2).unwrap();
            let (a, b, c) = (VertexId::from(a), VertexId::from(b), VertexId::from(c));
            prop_assert!(g.dist(&a, &c).unwrap() <= g.dist(&a, &b).unwrap() + g.dist(&b, &c).unwrap());
        }

        #[test]
        fn tree_triangle_inequality(a in prop::collection::vec(0i32..3, 0..6), b in prop::collection::vec(0i32..3, 0..6), c in prop::collection::vec(0i32..3, 0..6)) {
            let g = Graph::regular_tree(3).unwrap();
            let red = |mut w: Vec<i32>| { w.dedup(); VertexId::from(w) };
            let (a, b, c) = (red(a), red(b), red(c));
            prop_assert!(g.dist(&a, &c).unwrap() <= g.dist(&a, &b).unwrap() + g.dist(&b, &c).unwrap());
        }
    }
}
