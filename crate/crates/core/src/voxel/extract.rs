//! Voxel-to-mesh conversion.

use std::collections::{HashMap, HashSet};

use super::VoxelGrid;
use crate::geometry::Vec3;
use crate::mesh::TriangleMesh;
use crate::Real;

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        parent[ra.max(rb)] = ra.min(rb);
    }
}

fn coplanar(a: &[[usize; 3]; 4], b: &[[usize; 3]; 4]) -> bool {
    (0..3).any(|axis| a.iter().chain(b).all(|p| p[axis] == a[0][axis]))
}

/// Cube faces around every voxel with density above `iso`, omitting faces
/// shared by two such voxels. Returns `None` when no voxel exceeds `iso`.
///
/// Corners are welded through face adjacency rather than position: where two
/// voxels touch only along an edge or at a corner, each keeps its own copy of
/// the shared corners, so every mesh edge borders exactly two triangles.
pub fn extract_blocky_mesh<T: Real>(grid: &VoxelGrid<T>, iso: T) -> Option<TriangleMesh<T>> {
    let d = grid.resolution();
    let dens = grid.densities();
    let solid = |x: isize, y: isize, z: isize| {
        let r = d as isize;
        (0..r).contains(&x)
            && (0..r).contains(&y)
            && (0..r).contains(&z)
            && dens[grid.index(x as usize, y as usize, z as usize)] > iso
    };
    let c1 = d + 1;
    let corner_id = |p: [usize; 3]| (p[2] * c1 + p[1]) * c1 + p[0];

    // Each quad: lattice corners in outward counter-clockwise order, plus owner voxel.
    let mut quads: Vec<([[usize; 3]; 4], usize)> = Vec::new();
    for z in 0..d {
        for y in 0..d {
            for x in 0..d {
                let (xi, yi, zi) = (x as isize, y as isize, z as isize);
                if !solid(xi, yi, zi) {
                    continue;
                }
                let owner = grid.index(x, y, z);
                let base = [x, y, z];
                for axis in 0..3 {
                    let (b, c) = ((axis + 1) % 3, (axis + 2) % 3);
                    for side in [0usize, 1] {
                        let mut n = [xi, yi, zi];
                        n[axis] += if side == 1 { 1 } else { -1 };
                        if solid(n[0], n[1], n[2]) {
                            continue;
                        }
                        let corner = |db: usize, dc: usize| {
                            let mut p = base;
                            p[axis] += side;
                            p[b] += db;
                            p[c] += dc;
                            p
                        };
                        let ring = if side == 1 {
                            [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)]
                        } else {
                            [corner(0, 0), corner(0, 1), corner(1, 1), corner(1, 0)]
                        };
                        quads.push((ring, owner));
                    }
                }
            }
        }
    }
    if quads.is_empty() {
        return None;
    }

    // Quad slots sharing each lattice edge.
    let mut by_edge: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
    for (qi, (ring, _)) in quads.iter().enumerate() {
        for k in 0..4 {
            let (p, q) = (corner_id(ring[k]), corner_id(ring[(k + 1) % 4]));
            by_edge.entry((p.min(q), p.max(q))).or_default().push((qi, k));
        }
    }
    let slot_of = |qi: usize, id: usize| {
        let k = quads[qi].0.iter().position(|&p| corner_id(p) == id).expect("corner on quad");
        qi * 4 + k
    };
    let mut keys: Vec<_> = by_edge.keys().copied().collect();
    keys.sort_unstable();
    // At a diagonal contact the four faces pair up either by owning voxel or
    // around the empty voxel they bound. Both are consistently oriented; the
    // owner pairing is tried first and flipped wherever it would leave both
    // ends of the edge welded into single vertices.
    let diagonal: Vec<(usize, usize)> = keys.iter().copied().filter(|k| by_edge[k].len() == 4).collect();
    let mut flipped: HashSet<(usize, usize)> = HashSet::new();
    let mut parent: Vec<usize> = Vec::new();
    for _ in 0..=diagonal.len() {
        parent = (0..quads.len() * 4).collect();
        let mut diagonal_pairs = Vec::new();
        for &key in &keys {
            let users = &by_edge[&key];
            let pairs: Vec<(usize, usize)> = match users.len() {
                2 => vec![(users[0].0, users[1].0)],
                4 => {
                    let owner_pairing = !flipped.contains(&key);
                    let mut pairs = Vec::new();
                    for i in 0..4 {
                        for j in i + 1..4 {
                            let (qa, qb) = (users[i].0, users[j].0);
                            let same_owner = quads[qa].1 == quads[qb].1;
                            // Faces of different owners that are not coplanar bound the same empty voxel.
                            let pairable = if owner_pairing { same_owner } else { !same_owner && !coplanar(&quads[qa].0, &quads[qb].0) };
                            if pairable {
                                pairs.push((qa, qb));
                            }
                        }
                    }
                    debug_assert_eq!(pairs.len(), 2);
                    diagonal_pairs.push((key, pairs[0], pairs[1]));
                    pairs
                }
                n => unreachable!("lattice edge bordered by {n} faces"),
            };
            for (qa, qb) in pairs {
                for id in [key.0, key.1] {
                    union(&mut parent, slot_of(qa, id), slot_of(qb, id));
                }
            }
        }
        let mut pinched = Vec::new();
        for (key, (a, _), (b, _)) in diagonal_pairs {
            let joined = |id: usize, parent: &mut [usize]| find(parent, slot_of(a, id)) == find(parent, slot_of(b, id));
            if joined(key.0, &mut parent) && joined(key.1, &mut parent) {
                pinched.push(key);
            }
        }
        if pinched.is_empty() {
            break;
        }
        for key in pinched {
            if !flipped.insert(key) {
                flipped.remove(&key);
            }
        }
    }

    let h = grid.voxel_size();
    let lo = -grid.extent() * T::half();
    let mut vertex_of_root: HashMap<usize, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::with_capacity(quads.len() * 2);
    for (qi, (ring, _)) in quads.iter().enumerate() {
        let mut idx = [0usize; 4];
        for k in 0..4 {
            let root = find(&mut parent, qi * 4 + k);
            idx[k] = *vertex_of_root.entry(root).or_insert_with(|| {
                let p = ring[k].map(|i| lo + T::from_usize_lossy(i) * h);
                vertices.push(Vec3::new(p[0], p[1], p[2]));
                vertices.len() - 1
            });
        }
        faces.push([idx[0], idx[1], idx[2]]);
        faces.push([idx[0], idx[2], idx[3]]);
    }
    Some(TriangleMesh::from_raw(vertices, faces).expect("blocky mesh indices are valid"))
}

/// Kuhn decomposition of the unit cube into six tetrahedra along the 0–7
/// diagonal; corner `c` has offset `(c & 1, c >> 1 & 1, c >> 2 & 1)`.
const CUBE_TETS: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

/// Isosurface of the density field at level `iso`, sampled at voxel centers.
///
/// Cells are split into tetrahedra, which removes the ambiguous cases of
/// cube-based tables, and the field is padded with an empty border so the
/// result is closed. Triangles face away from the dense side. Returns `None`
/// when no density exceeds `iso`.
pub fn extract_isosurface<T: Real>(grid: &VoxelGrid<T>, iso: T) -> Option<TriangleMesh<T>> {
    let d = grid.resolution();
    let dens = grid.densities();
    if !dens.iter().any(|&v| v > iso) {
        return None;
    }
    let p = d + 2;
    let node = |x: usize, y: usize, z: usize| (z * p + y) * p + x;
    let value = |x: usize, y: usize, z: usize| {
        if x == 0 || y == 0 || z == 0 || x > d || y > d || z > d {
            T::zero()
        } else {
            dens[grid.index(x - 1, y - 1, z - 1)]
        }
    };
    let h = grid.voxel_size();
    let lo = -grid.extent() * T::half() - h * T::half();
    let position = |x: usize, y: usize, z: usize| {
        Vec3::new(
            lo + T::from_usize_lossy(x) * h,
            lo + T::from_usize_lossy(y) * h,
            lo + T::from_usize_lossy(z) * h,
        )
    };

    let mut edge_vertex: HashMap<(usize, usize), usize> = HashMap::new();
    let mut vertices: Vec<Vec3<T>> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();

    for z in 0..p - 1 {
        for y in 0..p - 1 {
            for x in 0..p - 1 {
                let corners: [(usize, Vec3<T>, T); 8] = std::array::from_fn(|c| {
                    let (cx, cy, cz) = (x + (c & 1), y + ((c >> 1) & 1), z + ((c >> 2) & 1));
                    (node(cx, cy, cz), position(cx, cy, cz), value(cx, cy, cz))
                });
                if corners.iter().all(|c| c.2 > iso) || corners.iter().all(|c| c.2 <= iso) {
                    continue;
                }
                for tet in CUBE_TETS {
                    let tv = tet.map(|c| corners[c]);
                    let (inside, outside): (Vec<_>, Vec<_>) = tv.iter().partition(|c| c.2 > iso);
                    if inside.is_empty() || outside.is_empty() {
                        continue;
                    }
                    let mut crossing = |a: &(usize, Vec3<T>, T), b: &(usize, Vec3<T>, T)| {
                        let key = (a.0.min(b.0), a.0.max(b.0));
                        *edge_vertex.entry(key).or_insert_with(|| {
                            let t = (iso - a.2) / (b.2 - a.2);
                            vertices.push(a.1 + (b.1 - a.1) * t);
                            vertices.len() - 1
                        })
                    };
                    let polygon: Vec<usize> = match (inside.len(), outside.len()) {
                        (1, 3) => outside.iter().map(|o| crossing(inside[0], o)).collect(),
                        (3, 1) => inside.iter().map(|i| crossing(i, outside[0])).collect(),
                        _ => vec![
                            crossing(inside[0], outside[0]),
                            crossing(inside[0], outside[1]),
                            crossing(inside[1], outside[1]),
                            crossing(inside[1], outside[0]),
                        ],
                    };
                    // The cut is planar within a tetrahedron, so the mean
                    // inside-to-outside direction orients the whole polygon.
                    let centroid = |s: &[&(usize, Vec3<T>, T)]| {
                        s.iter().fold(Vec3::zero(), |acc, c| acc + c.1)
                            * (T::one() / T::from_usize_lossy(s.len()))
                    };
                    let outward = centroid(&outside) - centroid(&inside);
                    let tris: Vec<[usize; 3]> = if polygon.len() == 3 {
                        vec![[polygon[0], polygon[1], polygon[2]]]
                    } else {
                        vec![
                            [polygon[0], polygon[1], polygon[2]],
                            [polygon[0], polygon[2], polygon[3]],
                        ]
                    };
                    for [a, b, c] in tris {
                        let n = (vertices[b] - vertices[a]).cross(vertices[c] - vertices[a]);
                        faces.push(if n.dot(outward) < T::zero() { [a, c, b] } else { [a, b, c] });
                    }
                }
            }
        }
    }
    Some(TriangleMesh::from_raw(vertices, faces).expect("isosurface indices are valid"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_with(d: usize, on: &[(usize, usize, usize)]) -> VoxelGrid<f64> {
        let mut g = VoxelGrid::new(d, 1.0, -10.0).unwrap();
        for &(x, y, z) in on {
            let i = g.index(x, y, z);
            g.logits_mut()[i] = 10.0;
        }
        g
    }

    #[test]
    fn blocky_single_voxel_is_a_cube() {
        let m = extract_blocky_mesh(&grid_with(3, &[(1, 1, 1)]), 0.5).unwrap();
        assert_eq!(m.num_vertices(), 8);
        assert_eq!(m.num_faces(), 12);
        for i in 0..m.num_faces() {
            let f = m.faces()[i];
            let c = (m.vertices()[f[0]] + m.vertices()[f[1]] + m.vertices()[f[2]]) * (1.0 / 3.0);
            assert!(m.face_normal(i).dot(c) > 0.0, "face {i} points inward");
        }
    }

    #[test]
    fn blocky_adjacent_pair_drops_shared_face() {
        let m = extract_blocky_mesh(&grid_with(3, &[(0, 1, 1), (1, 1, 1)]), 0.5).unwrap();
        assert_eq!(m.num_faces(), 20);
        assert_eq!(m.num_vertices(), 12);
    }

    #[test]
    fn blocky_empty_signal() {
        assert!(extract_blocky_mesh(&grid_with(3, &[]), 0.5).is_none());
        assert!(extract_isosurface(&grid_with(3, &[]), 0.5).is_none());
    }

    #[test]
    fn blocky_diagonal_contact_splits_corners() {
        let m = extract_blocky_mesh(&grid_with(2, &[(0, 0, 0), (1, 1, 0)]), 0.5).unwrap();
        // Two separate cubes: the two shared lattice corners are duplicated.
        assert_eq!(m.num_faces(), 24);
        assert_eq!(m.num_vertices(), 16);
    }
}
