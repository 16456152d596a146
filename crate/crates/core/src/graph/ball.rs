use rustc_hash::FxHashMap;

use super::{Graph, GraphError, VertexId};

/// Breadth-first indexing of the `radius`-neighborhood of a source set, with
/// compressed adjacency restricted to the neighborhood.
///
/// Vertices are numbered in BFS order (sources first, in the order given),
/// so the layout is deterministic. `degree` is the degree in the full graph.
pub struct BallIndex {
    vertices: Vec<VertexId>,
    dist: Vec<u32>,
    degree: Vec<u32>,
    offsets: Vec<u32>,
    adj: Vec<u32>,
    index: FxHashMap<VertexId, u32>,
    radius: u32,
}

impl BallIndex {
    pub fn build(g: &Graph, sources: &[VertexId], radius: u32, max_vertices: usize) -> Result<BallIndex, GraphError> {
        Self::build_filtered(g, sources, radius, max_vertices, |_| true)
    }

    /// Like [`BallIndex::build`], but vertices failing `expand` are indexed
    /// without exploring past them. Their neighbor lists only contain
    /// vertices that were indexed anyway.
    pub fn build_filtered(
        g: &Graph,
        sources: &[VertexId],
        radius: u32,
        max_vertices: usize,
        expand: impl Fn(&VertexId) -> bool,
    ) -> Result<BallIndex, GraphError> {
        let mut index: FxHashMap<VertexId, u32> = FxHashMap::default();
        let mut vertices = Vec::new();
        let mut dist = Vec::new();
        for s in sources {
            g.check(s)?;
            if !index.contains_key(s) {
                index.insert(s.clone(), vertices.len() as u32);
                vertices.push(s.clone());
                dist.push(0);
            }
        }
        let mut degree = Vec::new();
        let mut offsets = vec![0u32];
        let mut adj: Vec<u32> = Vec::new();
        let mut buf = Vec::with_capacity(g.max_degree());
        let mut head = 0;
        while head < vertices.len() {
            let dv = dist[head];
            let grow = dv < radius && expand(&vertices[head]);
            buf.clear();
            g.push_neighbors(vertices[head].as_slice(), &mut buf);
            degree.push(buf.len() as u32);
            for w in buf.drain(..) {
                if let Some(&j) = index.get(&w) {
                    adj.push(j);
                } else if grow {
                    if vertices.len() >= max_vertices {
                        return Err(GraphError::Resource(format!(
                            "neighborhood of radius {radius} exceeds {max_vertices} vertices"
                        )));
                    }
                    let j = vertices.len() as u32;
                    index.insert(w.clone(), j);
                    vertices.push(w);
                    dist.push(dv + 1);
                    adj.push(j);
                }
            }
            offsets.push(adj.len() as u32);
            head += 1;
        }
        Ok(BallIndex { vertices, dist, degree, offsets, adj, index, radius })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn vertex(&self, i: usize) -> &VertexId {
        &self.vertices[i]
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    /// Distance from the source set.
    pub fn dist(&self, i: usize) -> u32 {
        self.dist[i]
    }

    pub fn degree(&self, i: usize) -> u32 {
        self.degree[i]
    }

    pub fn index_of(&self, v: &[i32]) -> Option<usize> {
        self.index.get(v).map(|&i| i as usize)
    }

    /// Neighbors of vertex `i` that lie inside the ball.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adj[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }
}
