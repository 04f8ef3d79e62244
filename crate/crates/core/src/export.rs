//! OBJ serialization and mesh validity checks.
//!
//! Written OBJ files contain `v x y z` lines followed by 1-indexed
//! `f a b c` lines, coordinates at 6 significant digits, LF endings. The
//! output is canonical: reading a written file and writing it again
//! reproduces the same bytes.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::geometry::Vec3;
use crate::mesh::TriangleMesh;
use crate::{Error, Real, Result};

/// Formats like C's `%.6g`.
fn fmt_g6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() { "0".into() } else { format!("{x}") };
    }
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    let fixed = format!("{:.*}", decimals, x);
    let out = trim_zeros(&fixed);
    if out == "-0" {
        "0".into()
    } else {
        out
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

pub fn obj_string<T: Real>(mesh: &TriangleMesh<T>) -> String {
    let mut out = String::with_capacity(mesh.num_vertices() * 32 + mesh.num_faces() * 16);
    for v in mesh.vertices() {
        let _ = writeln!(
            out,
            "v {} {} {}",
            fmt_g6(v.x.to_f64_lossy()),
            fmt_g6(v.y.to_f64_lossy()),
            fmt_g6(v.z.to_f64_lossy())
        );
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

pub fn write_obj<T: Real>(mesh: &TriangleMesh<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, obj_string(mesh))?;
    Ok(())
}

/// Parses `v` and `f` records; polygons are fan-triangulated, texture and
/// normal references (`a/b/c`) are ignored, negative indices are relative.
pub fn parse_obj<T: Real>(text: &str) -> Result<TriangleMesh<T>> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        let bad = |what: &str| Error::MalformedMesh(format!("line {}: {what}", lineno + 1));
        match parts.next() {
            Some("v") => {
                let coords: Vec<f64> = parts
                    .take(3)
                    .map(|s| s.parse::<f64>().map_err(|_| bad("bad vertex coordinate")))
                    .collect::<Result<_>>()?;
                if coords.len() != 3 {
                    return Err(bad("vertex needs three coordinates"));
                }
                vertices.push(Vec3::from_f64(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = parts
                    .map(|s| {
                        let first = s.split('/').next().unwrap_or("");
                        let i: i64 = first.parse().map_err(|_| bad("bad face index"))?;
                        let n = vertices.len() as i64;
                        let resolved = if i < 0 { n + i } else { i - 1 };
                        if resolved < 0 || (i > 0 && i > n) || i == 0 {
                            return Err(bad("face index out of range"));
                        }
                        Ok(resolved as usize)
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(bad("face needs at least three vertices"));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriangleMesh::from_raw(vertices, faces)
}

pub fn read_obj<T: Real>(path: impl AsRef<Path>) -> Result<TriangleMesh<T>> {
    parse_obj(&fs::read_to_string(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MeshReport {
    /// Every undirected edge borders exactly two faces.
    pub watertight: bool,
    /// No directed half-edge is used by two faces.
    pub consistent_orientation: bool,
    pub degenerate_faces: usize,
    pub boundary_edges: usize,
    pub non_manifold_edges: usize,
}

/// Half-edge census of a mesh.
pub fn validate_mesh<T: Real>(mesh: &TriangleMesh<T>) -> MeshReport {
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    let mut undirected: HashMap<(usize, usize), usize> = HashMap::new();
    for f in mesh.faces() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            *directed.entry((a, b)).or_default() += 1;
            *undirected.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let boundary_edges = undirected.values().filter(|&&c| c == 1).count();
    let non_manifold_edges = undirected.values().filter(|&&c| c > 2).count();
    let consistent_orientation = directed.values().all(|&c| c == 1);
    let degenerate_faces = (0..mesh.num_faces())
        .filter(|&i| {
            let f = mesh.faces()[i];
            let scale = [(0, 1), (1, 2), (2, 0)]
                .iter()
                .map(|&(a, b)| (mesh.vertices()[f[a]] - mesh.vertices()[f[b]]).norm_squared())
                .fold(T::zero(), T::max);
            mesh.face_normal(i).norm() <= T::lit(1e-12) * scale || scale == T::zero()
        })
        .count();
    MeshReport {
        watertight: !mesh.is_empty() && boundary_edges == 0 && non_manifold_edges == 0,
        consistent_orientation,
        degenerate_faces,
        boundary_edges,
        non_manifold_edges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::icosphere;

    #[test]
    fn g6_formatting() {
        assert_eq!(fmt_g6(0.0), "0");
        assert_eq!(fmt_g6(-0.0), "0");
        assert_eq!(fmt_g6(1.0), "1");
        assert_eq!(fmt_g6(-0.5), "-0.5");
        assert_eq!(fmt_g6(0.123456789), "0.123457");
        assert_eq!(fmt_g6(123456.7), "123457");
        assert_eq!(fmt_g6(1234567.0), "1.23457e+06");
        assert_eq!(fmt_g6(0.00001234), "1.234e-05");
        assert_eq!(fmt_g6(0.0001), "0.0001");
        assert_eq!(fmt_g6(999999.5), "1e+06");
    }

    #[test]
    fn single_triangle_obj() {
        let m = TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert_eq!(obj_string(&m), "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
    }

    #[test]
    fn icosahedron_obj_lines() {
        let s = obj_string(&icosphere::<f64>(0, 1.0));
        assert_eq!(s.lines().filter(|l| l.starts_with("v ")).count(), 12);
        assert_eq!(s.lines().filter(|l| l.starts_with("f ")).count(), 20);
        assert!(!s.contains('\r'));
    }

    #[test]
    fn read_back_and_canonical() {
        let m = icosphere::<f64>(2, 0.8);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.obj");
        write_obj(&m, &path).unwrap();
        let back: TriangleMesh<f64> = read_obj(&path).unwrap();
        assert_eq!(back.faces(), m.faces());
        for (a, b) in back.vertices().iter().zip(m.vertices()) {
            assert!((*a - *b).max_abs() <= 1e-5);
        }
        assert_eq!(obj_string(&back), fs::read_to_string(&path).unwrap());
    }

    #[test]
    fn parse_handles_slashes_and_quads() {
        let m: TriangleMesh<f64> =
            parse_obj("# c\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1/1 2/2/2 3/3/3 4/4/4\n").unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
        assert!(parse_obj::<f64>("v 0 0\n").is_err());
        assert!(parse_obj::<f64>("v 0 0 0\nf 1 2 3\n").is_err());
    }

    #[test]
    fn validation_reports() {
        let r = validate_mesh(&icosphere::<f64>(2, 1.0));
        assert!(r.watertight && r.consistent_orientation);
        assert_eq!(r.degenerate_faces, 0);

        // Open fan around vertex 0.
        let fan = TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(-1.0, 0.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let r = validate_mesh(&fan);
        assert!(!r.watertight);
        assert!(r.consistent_orientation);
        assert_eq!(r.boundary_edges, 4);

        let mut faces = icosphere::<f64>(0, 1.0).faces().to_vec();
        faces[0] = [faces[0][0], faces[0][2], faces[0][1]];
        let flipped = TriangleMesh::new(icosphere::<f64>(0, 1.0).vertices().to_vec(), faces).unwrap();
        assert!(!validate_mesh(&flipped).consistent_orientation);
    }
}
