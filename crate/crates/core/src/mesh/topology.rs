use std::collections::BTreeMap;

/// Two faces `(vx, vy, a)` and `(vx, vy, b)` meeting along edge `(vx, vy)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgePair {
    pub vx: usize,
    pub vy: usize,
    pub a: usize,
    pub b: usize,
}

/// Connectivity derived once from a face list. Faces never change during
/// optimization, so the regularizers reuse one topology across iterations.
#[derive(Debug, Clone)]
pub struct MeshTopology {
    num_vertices: usize,
    num_faces: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    pairs: Vec<EdgePair>,
}

impl MeshTopology {
    pub fn new(num_vertices: usize, faces: &[[usize; 3]]) -> Self {
        // edge (lo, hi) -> opposite vertices of incident faces, in face order
        let mut incident: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for f in faces {
            for k in 0..3 {
                let (p, q, opp) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
                incident.entry((p.min(q), p.max(q))).or_default().push(opp);
            }
        }
        let mut neighbors = vec![Vec::new(); num_vertices];
        let mut edges = Vec::with_capacity(incident.len());
        let mut pairs = Vec::new();
        for (&(vx, vy), opposite) in &incident {
            edges.push((vx, vy));
            neighbors[vx].push(vy);
            neighbors[vy].push(vx);
            for i in 0..opposite.len() {
                for j in i + 1..opposite.len() {
                    pairs.push(EdgePair {
                        vx,
                        vy,
                        a: opposite[i],
                        b: opposite[j],
                    });
                }
            }
        }
        for n in &mut neighbors {
            n.sort_unstable();
        }
        Self {
            num_vertices,
            num_faces: faces.len(),
            edges,
            neighbors,
            pairs,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_faces(&self) -> usize {
        self.num_faces
    }

    /// Undirected edges `(lo, hi)`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted one-ring of a vertex.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    /// Pairs of faces sharing an edge.
    pub fn edge_pairs(&self) -> &[EdgePair] {
        &self.pairs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_triangle_strip() {
        let t = MeshTopology::new(4, &[[0, 1, 2], [2, 1, 3]]);
        assert_eq!(t.edges().len(), 5);
        assert_eq!(t.neighbors(1), &[0, 2, 3]);
        assert_eq!(t.edge_pairs(), &[EdgePair { vx: 1, vy: 2, a: 0, b: 3 }]);
    }
}
