use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use super::{DlaError, LaunchConfig};
use crate::graph::{Family, Graph, VertexId};
use crate::rng::RngState;

/// Boundary vertices of a tree aggregate grouped by depth, for the
/// closed-form attachment sampler.
#[derive(Debug, Clone, Default)]
pub(crate) struct DepthBuckets {
    pub(crate) buckets: Vec<Vec<VertexId>>,
    pos: FxHashMap<VertexId, usize>,
}

impl DepthBuckets {
    fn insert(&mut self, v: VertexId) {
        let m = v.len();
        if self.buckets.len() <= m {
            self.buckets.resize_with(m + 1, Vec::new);
        }
        self.pos.insert(v.clone(), self.buckets[m].len());
        self.buckets[m].push(v);
    }

    fn remove(&mut self, v: &VertexId) {
        let Some(i) = self.pos.remove(v) else { return };
        let bucket = &mut self.buckets[v.len()];
        bucket.swap_remove(i);
        if let Some(moved) = bucket.get(i) {
            self.pos.insert(moved.clone(), i);
        }
    }
}

/// A finite connected vertex set containing the root, with its outer
/// vertex boundary maintained incrementally.
#[derive(Debug, Clone)]
pub struct Aggregate {
    root: VertexId,
    members: FxHashSet<VertexId>,
    order: Vec<VertexId>,
    initial: usize,
    boundary: FxHashSet<VertexId>,
    radius: u64,
    t: u64,
    hit_norm: u64,
    pub(crate) tree: Option<DepthBuckets>,
}

impl Aggregate {
    pub(crate) fn singleton(g: &Graph) -> Aggregate {
        let mut agg = Aggregate {
            root: g.root().clone(),
            members: FxHashSet::default(),
            order: Vec::new(),
            initial: 1,
            boundary: FxHashSet::default(),
            radius: 0,
            t: 0,
            hit_norm: 0,
            tree: matches!(g.family(), Family::RegularTree { .. }).then(DepthBuckets::default),
        };
        agg.insert(g, g.root().clone());
        agg
    }

    /// Frozen aggregate from an explicit vertex list, which must be
    /// connected and contain the root. The list order is kept as history.
    pub fn from_members(g: &Graph, members: &[VertexId]) -> Result<Aggregate, DlaError> {
        let mut seen = FxHashSet::default();
        for v in members {
            g.check(v)?;
            if !seen.insert(v.clone()) {
                return Err(DlaError::Aggregate(format!("{v} listed twice")));
            }
        }
        if !seen.contains(g.root()) {
            return Err(DlaError::Aggregate("members must contain the root".into()));
        }
        let mut agg = Aggregate::singleton(g);
        // attach in breadth-first order from the root so every step is adjacent
        let mut pending: Vec<VertexId> = members.iter().filter(|v| *v != g.root()).cloned().collect();
        let mut order = vec![g.root().clone()];
        while !pending.is_empty() {
            let before = pending.len();
            let mut rest = Vec::new();
            for v in pending {
                if agg.boundary.contains(&v) {
                    agg.radius = agg.radius.max(g.dist_from_root(&v)?);
                    agg.insert(g, v.clone());
                    order.push(v);
                } else {
                    rest.push(v);
                }
            }
            if rest.len() == before {
                return Err(DlaError::Aggregate("members are not connected".into()));
            }
            pending = rest;
        }
        agg.order = order;
        agg.initial = agg.order.len();
        agg.t = 0;
        Ok(agg)
    }

    pub fn root(&self) -> &VertexId {
        &self.root
    }

    /// Particles added since the initial set.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn radius(&self) -> u64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: &VertexId) -> bool {
        self.members.contains(v)
    }

    pub fn in_boundary(&self, v: &VertexId) -> bool {
        self.boundary.contains(v)
    }

    pub fn boundary_len(&self) -> usize {
        self.boundary.len()
    }

    /// Members in canonical order.
    pub fn members_sorted(&self) -> Vec<VertexId> {
        let mut m: Vec<_> = self.members.iter().cloned().collect();
        m.sort();
        m
    }

    /// Boundary in canonical order.
    pub fn boundary_sorted(&self) -> Vec<VertexId> {
        let mut b: Vec<_> = self.boundary.iter().cloned().collect();
        b.sort();
        b
    }

    /// Members in the order they joined.
    pub fn history(&self) -> &[VertexId] {
        &self.order
    }

    /// Size of the initial set.
    pub fn initial_len(&self) -> usize {
        self.initial
    }

    /// Upper bound on the escape norm of every boundary vertex.
    pub(crate) fn hit_norm(&self) -> u64 {
        self.hit_norm
    }

    pub(crate) fn boundary_set(&self) -> &FxHashSet<VertexId> {
        &self.boundary
    }

    fn insert(&mut self, g: &Graph, v: VertexId) {
        self.boundary.remove(&v);
        if let Some(tb) = &mut self.tree {
            tb.remove(&v);
        }
        let mut nb = Vec::with_capacity(g.max_degree());
        g.push_neighbors(v.as_slice(), &mut nb);
        for w in nb {
            if !self.members.contains(&w) && !self.boundary.contains(&w) {
                self.hit_norm = self.hit_norm.max(g.escape_norm(w.as_slice()));
                if let Some(tb) = &mut self.tree {
                    tb.insert(w.clone());
                }
                self.boundary.insert(w);
            }
        }
        self.members.insert(v.clone());
        self.order.push(v);
    }

    /// Adds a boundary vertex. At every power-of-two step the boundary is
    /// recomputed from scratch and compared with the maintained one.
    pub fn attach(&mut self, g: &Graph, v: VertexId) -> Result<(), DlaError> {
        if !self.boundary.contains(&v) {
            return Err(DlaError::Internal(format!("{v} is not on the boundary")));
        }
        let d = g.dist_from_root(&v)?;
        self.insert(g, v);
        self.radius = self.radius.max(d);
        self.t += 1;
        if self.t.is_power_of_two() {
            self.audit(g)?;
        }
        Ok(())
    }

    /// Checks the maintained boundary against a full recomputation.
    pub fn audit(&self, g: &Graph) -> Result<(), DlaError> {
        let mut fresh = FxHashSet::default();
        let mut nb = Vec::with_capacity(g.max_degree());
        for v in &self.members {
            nb.clear();
            g.push_neighbors(v.as_slice(), &mut nb);
            for w in nb.drain(..) {
                if !self.members.contains(&w) {
                    fresh.insert(w);
                }
            }
        }
        if fresh != self.boundary {
            return Err(DlaError::Internal(format!(
                "boundary audit failed at t = {}: {} maintained vs {} recomputed",
                self.t,
                self.boundary.len(),
                fresh.len()
            )));
        }
        if let Some(tb) = &self.tree {
            let n: usize = tb.buckets.iter().map(Vec::len).sum();
            if n != fresh.len() {
                return Err(DlaError::Internal(format!("depth buckets hold {n} of {} boundary vertices", fresh.len())));
            }
        }
        Ok(())
    }

    pub fn checkpoint(&self, g: &Graph, config: &LaunchConfig, rng: RngState) -> Checkpoint {
        Checkpoint {
            family: g.family().clone(),
            config: *config,
            rng,
            initial: self.initial,
            members: self.order.clone(),
        }
    }

    /// Rebuilds the aggregate recorded in `ck`, replaying attachments in
    /// their original order so internal state matches the saved run.
    pub fn restore(g: &Graph, ck: &Checkpoint) -> Result<Aggregate, DlaError> {
        if ck.family != *g.family() {
            return Err(DlaError::Aggregate(format!("checkpoint is for {}, not {}", ck.family, g.family())));
        }
        if ck.initial == 0 || ck.initial > ck.members.len() {
            return Err(DlaError::Aggregate("checkpoint initial size out of range".into()));
        }
        let mut agg = Aggregate::from_members(g, &ck.members[..ck.initial])?;
        if agg.order[..] != ck.members[..ck.initial] {
            return Err(DlaError::Aggregate("checkpoint initial set is not in attachment order".into()));
        }
        for v in &ck.members[ck.initial..] {
            if !agg.boundary.contains(v) {
                return Err(DlaError::Aggregate(format!("checkpoint member {v} is not adjacent to its predecessors")));
            }
            agg.attach(g, v.clone())?;
        }
        Ok(agg)
    }
}

/// Saved state of a run: enough to continue it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub family: Family,
    pub config: LaunchConfig,
    pub rng: RngState,
    pub initial: usize,
    /// Members in attachment order.
    pub members: Vec<VertexId>,
}

impl Checkpoint {
    pub fn t(&self) -> u64 {
        (self.members.len() - self.initial) as u64
    }

    pub fn seed(&self) -> u64 {
        self.rng.seed
    }
}
