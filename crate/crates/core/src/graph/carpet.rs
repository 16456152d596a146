use rustc_hash::FxHashMap;

use super::{Graph, VertexId};

/// Membership in the `n`-dimensional pre-Sierpinski carpet (first orthant).
///
/// A unit cell is removed iff some base-3 digit position carries digit 1 in
/// every coordinate.
pub fn is_in_carpet(n: usize, coords: &[i32]) -> bool {
    if coords.len() != n || coords.iter().any(|&c| c < 0) {
        return false;
    }
    let mut c: smallvec::SmallVec<[u32; 8]> = coords.iter().map(|&x| x as u32).collect();
    while c.iter().any(|&x| x != 0) {
        if c.iter().all(|&x| x % 3 == 1) {
            return false;
        }
        for x in c.iter_mut() {
            *x /= 3;
        }
    }
    true
}

/// Bit `p` is set iff the base-3 digit of `c` at position `p` is 1. A point
/// lies outside the carpet iff the masks of all its coordinates share a bit.
pub(crate) fn digit_one_mask(mut c: u32) -> u32 {
    let mut m = 0;
    let mut bit = 1;
    while c != 0 {
        if c % 3 == 1 {
            m |= bit;
        }
        c /= 3;
        bit <<= 1;
    }
    m
}

/// Breadth-first distances from the root, grown one layer at a time on demand.
pub(crate) struct RootBfs {
    dist: FxHashMap<VertexId, u32>,
    frontier: Vec<VertexId>,
    depth: u32,
}

impl RootBfs {
    pub(crate) fn new(root: VertexId) -> Self {
        let mut dist = FxHashMap::default();
        dist.insert(root.clone(), 0);
        RootBfs { dist, frontier: vec![root], depth: 0 }
    }

    pub(crate) fn dist_to(&mut self, g: &Graph, v: &VertexId) -> u32 {
        let mut buf = Vec::new();
        loop {
            if let Some(&d) = self.dist.get(v) {
                return d;
            }
            let mut next = Vec::new();
            for x in &self.frontier {
                buf.clear();
                g.push_neighbors(x.as_slice(), &mut buf);
                for w in buf.drain(..) {
                    if !self.dist.contains_key(&w) {
                        self.dist.insert(w.clone(), self.depth + 1);
                        next.push(w);
                    }
                }
            }
            self.depth += 1;
            self.frontier = next;
        }
    }
}
