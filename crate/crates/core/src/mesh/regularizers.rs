//! Normal consistency, uniform Laplacian and edge length terms.
//!
//! Each loss returns its value and the gradient with respect to every vertex.

use super::{EdgePair, MeshTopology, TriangleMesh};
use crate::geometry::Vec3;
use crate::{Error, Real, Result};

/// Below this normal length a face pair is treated as having cosine 0.
const DEGENERATE_NORMAL: f64 = 1e-20;

/// Cosine between the two face normals of an edge pair and its gradient with
/// respect to `[vx, vy, a, b]`.
fn pair_cosine<T: Real>(v: &[Vec3<T>], p: &EdgePair) -> (T, [Vec3<T>; 4]) {
    let (vx, vy, a, b) = (v[p.vx], v[p.vy], v[p.a], v[p.b]);
    let e = vy - vx;
    let da = a - vx;
    let db = b - vx;
    let nx = e.cross(da);
    let ny = db.cross(e);
    let (lx, ly) = (nx.norm(), ny.norm());
    let tiny = T::lit(DEGENERATE_NORMAL);
    if lx <= tiny || ly <= tiny {
        return (T::zero(), [Vec3::zero(); 4]);
    }
    let inv = T::one() / (lx * ly);
    let cos = nx.dot(ny) * inv;
    let g_nx = ny * inv - nx * (cos / (lx * lx));
    let g_ny = nx * inv - ny * (cos / (ly * ly));

    // nx = e × da
    let g_e_from_x = da.cross(g_nx);
    let g_da = g_nx.cross(e);
    // ny = db × e
    let g_db = e.cross(g_ny);
    let g_e_from_y = g_ny.cross(db);

    let g_e = g_e_from_x + g_e_from_y;
    let g_vx = -(g_e + g_da + g_db);
    (cos, [g_vx, g_e, g_da, g_db])
}

impl MeshTopology {
    /// `(1/|F|) Σ_pairs (1 − cos(n_x, n_y))`; zero when no edge is shared.
    pub fn normal_consistency<T: Real>(&self, vertices: &[Vec3<T>]) -> (T, Vec<Vec3<T>>) {
        let mut grad = vec![Vec3::zero(); vertices.len()];
        if self.edge_pairs().is_empty() || self.num_faces() == 0 {
            return (T::zero(), grad);
        }
        let scale = T::one() / T::from_usize_lossy(self.num_faces());
        let mut loss = T::zero();
        for p in self.edge_pairs() {
            let (cos, g) = pair_cosine(vertices, p);
            loss += T::one() - cos;
            for (idx, gk) in [p.vx, p.vy, p.a, p.b].into_iter().zip(g) {
                grad[idx] -= gk * scale;
            }
        }
        (loss * scale, grad)
    }

    /// Mean cosine between adjacent face normals; higher is smoother.
    pub fn normal_consistency_metric<T: Real>(&self, vertices: &[Vec3<T>]) -> Result<T> {
        let pairs = self.edge_pairs();
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("mesh has no interior edges".into()));
        }
        let sum: T = pairs.iter().map(|p| pair_cosine(vertices, p).0).sum();
        Ok(sum / T::from_usize_lossy(pairs.len()))
    }

    /// Per-vertex uniform Laplacian vectors `mean(N(i)) − v_i`.
    pub fn laplacian_vectors<T: Real>(&self, vertices: &[Vec3<T>]) -> Result<Vec<Vec3<T>>> {
        (0..vertices.len())
            .map(|i| {
                let ring = self.neighbors(i);
                if ring.is_empty() {
                    return Err(Error::MalformedMesh(format!("vertex {i} is isolated")));
                }
                let sum = ring.iter().fold(Vec3::zero(), |acc, &j| acc + vertices[j]);
                Ok(sum * (T::one() / T::from_usize_lossy(ring.len())) - vertices[i])
            })
            .collect()
    }

    /// `(1/|V|) Σ_i ‖mean(N(i)) − v_i‖₁`, subgradient 0 where a coordinate is exactly 0.
    pub fn laplacian<T: Real>(&self, vertices: &[Vec3<T>]) -> Result<(T, Vec<Vec3<T>>)> {
        let lap = self.laplacian_vectors(vertices)?;
        let scale = T::one() / T::from_usize_lossy(vertices.len());
        let mut grad = vec![Vec3::zero(); vertices.len()];
        let mut loss = T::zero();
        for (i, l) in lap.iter().enumerate() {
            loss += l.norm_l1();
            let s = l.map(T::sign0) * scale;
            grad[i] -= s;
            let ring = self.neighbors(i);
            let share = s * (T::one() / T::from_usize_lossy(ring.len()));
            for &j in ring {
                grad[j] += share;
            }
        }
        Ok((loss * scale, grad))
    }

    /// `Σ_i Σ_{j∈N(i)} ‖v_i − v_j‖²`, so each undirected edge counts twice.
    pub fn edge_length<T: Real>(&self, vertices: &[Vec3<T>]) -> (T, Vec<Vec3<T>>) {
        let mut grad = vec![Vec3::zero(); vertices.len()];
        let mut loss = T::zero();
        let two = T::two();
        let four = two * two;
        for &(i, j) in self.edges() {
            let d = vertices[i] - vertices[j];
            loss += two * d.norm_squared();
            grad[i] += d * four;
            grad[j] -= d * four;
        }
        (loss, grad)
    }
}

pub fn normal_consistency_loss<T: Real>(mesh: &TriangleMesh<T>) -> (T, Vec<Vec3<T>>) {
    MeshTopology::new(mesh.num_vertices(), mesh.faces()).normal_consistency(mesh.vertices())
}

pub fn normal_consistency_metric<T: Real>(mesh: &TriangleMesh<T>) -> Result<T> {
    MeshTopology::new(mesh.num_vertices(), mesh.faces()).normal_consistency_metric(mesh.vertices())
}

pub fn laplacian_loss<T: Real>(mesh: &TriangleMesh<T>) -> Result<(T, Vec<Vec3<T>>)> {
    MeshTopology::new(mesh.num_vertices(), mesh.faces()).laplacian(mesh.vertices())
}

pub fn edge_length_loss<T: Real>(mesh: &TriangleMesh<T>) -> (T, Vec<Vec3<T>>) {
    MeshTopology::new(mesh.num_vertices(), mesh.faces()).edge_length(mesh.vertices())
}
