//! Triangle meshes, icosphere generation, soft silhouette rasterization and
//! mesh regularizers with analytic gradients.

mod icosphere;
mod raster;
mod regularizers;
mod topology;

pub use icosphere::icosphere;
pub use raster::{soft_silhouette, soft_silhouette_backward, SoftRasterSettings};
pub use regularizers::{
    edge_length_loss, laplacian_loss, normal_consistency_loss, normal_consistency_metric,
};
pub use topology::{EdgePair, MeshTopology};

use crate::geometry::Vec3;
use crate::{Error, Real, Result};

/// Indexed triangle mesh with counter-clockwise faces.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh<T> {
    vertices: Vec<Vec3<T>>,
    faces: Vec<[usize; 3]>,
}

impl<T: Real> TriangleMesh<T> {
    /// Validates indices and rejects faces with repeated indices or zero area.
    pub fn new(vertices: Vec<Vec3<T>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Self::from_raw(vertices, faces)?;
        if let Some(i) = (0..mesh.faces.len()).find(|&i| mesh.face_area(i) <= T::zero()) {
            return Err(Error::MalformedMesh(format!("face {i} has zero area")));
        }
        Ok(mesh)
    }

    /// Like [`TriangleMesh::new`] but allows zero-area faces, which deformation
    /// and surface extraction can legitimately produce.
    pub fn from_raw(vertices: Vec<Vec3<T>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        for (i, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= n) {
                return Err(Error::MalformedMesh(format!(
                    "face {i} references a vertex outside 0..{n}"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::MalformedMesh(format!("face {i} repeats a vertex")));
            }
        }
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("vertex {i}")));
        }
        Ok(Self { vertices, faces })
    }

    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn face_normal(&self, i: usize) -> Vec3<T> {
        let [a, b, c] = self.faces[i].map(|k| self.vertices[k]);
        (b - a).cross(c - a)
    }

    pub fn face_area(&self, i: usize) -> T {
        self.face_normal(i).norm() * T::half()
    }

    /// Longest undirected edge.
    pub fn max_edge_length(&self) -> T {
        self.faces
            .iter()
            .flat_map(|f| [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])])
            .map(|(a, b)| (self.vertices[a] - self.vertices[b]).norm())
            .fold(T::zero(), T::max)
    }

    pub fn cast<U: Real>(&self) -> TriangleMesh<U> {
        TriangleMesh {
            vertices: self.vertices.iter().map(|v| v.cast()).collect(),
            faces: self.faces.clone(),
        }
    }
}

/// Learnable per-vertex offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField<T> {
    pub offsets: Vec<Vec3<T>>,
}

impl<T: Real> DisplacementField<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            offsets: vec![Vec3::zero(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Largest absolute coordinate over all offsets.
    pub fn max_abs(&self) -> T {
        self.offsets.iter().map(|o| o.max_abs()).fold(T::zero(), T::max)
    }
}

/// Adds the displacement to every source vertex; faces are kept as is.
pub fn deform<T: Real>(src: &TriangleMesh<T>, d: &DisplacementField<T>) -> Result<TriangleMesh<T>> {
    if d.len() != src.num_vertices() {
        return Err(Error::LengthMismatch {
            expected: src.num_vertices(),
            found: d.len(),
        });
    }
    let vertices: Vec<_> = src
        .vertices
        .iter()
        .zip(&d.offsets)
        .map(|(&v, &o)| v + o)
        .collect();
    if vertices.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("deformed vertices".into()));
    }
    Ok(TriangleMesh {
        vertices,
        faces: src.faces.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> TriangleMesh<f64> {
        TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn construction_checks() {
        let v = tri().vertices().to_vec();
        assert!(TriangleMesh::new(v.clone(), vec![[0, 1, 3]]).is_err());
        assert!(TriangleMesh::new(v.clone(), vec![[0, 1, 1]]).is_err());
        let collinear = vec![Vec3::zero(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)];
        assert!(TriangleMesh::new(collinear.clone(), vec![[0, 1, 2]]).is_err());
        assert!(TriangleMesh::from_raw(collinear, vec![[0, 1, 2]]).is_ok());
    }

    #[test]
    fn deform_zero_is_identity() {
        let m = icosphere::<f64>(1, 1.0);
        let out = deform(&m, &DisplacementField::zeros(m.num_vertices())).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn deform_translates() {
        let m = tri();
        let d = DisplacementField {
            offsets: vec![Vec3::new(1.0, 0.0, 0.0); 3],
        };
        let out = deform(&m, &d).unwrap();
        assert_eq!(out.faces(), m.faces());
        for (a, b) in out.vertices().iter().zip(m.vertices()) {
            assert_eq!(*a, *b + Vec3::new(1.0, 0.0, 0.0));
        }
    }

    #[test]
    fn deform_length_mismatch() {
        let m = tri();
        assert!(matches!(
            deform(&m, &DisplacementField::zeros(2)),
            Err(Error::LengthMismatch { expected: 3, found: 2 })
        ));
    }
}
