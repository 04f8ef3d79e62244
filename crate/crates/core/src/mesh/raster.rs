//! Soft silhouette rasterization.
//!
//! Every face contributes a smooth coverage `σ(±d²/σ_s)` per pixel, where `d²`
//! is the squared screen-space distance from the pixel center to the face's
//! projected triangle boundary (positive sign inside, negative outside). The
//! pixel value is the probabilistic union `1 − Π(1 − D_j)` over faces within
//! the distance cutoff. There is no depth term: silhouettes are unions.

use rayon::prelude::*;

use super::TriangleMesh;
use crate::geometry::{Camera, Vec3};
use crate::parallel::chunk_ranges;
use crate::silhouette::Image;
use crate::{Error, Real, Result};

/// Sharpness and cutoff are in normalized screen units, where the image
/// height spans 2 units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftRasterSettings<T> {
    /// Temperature of the logistic coverage, in squared screen units.
    pub sharpness: T,
    /// Faces farther than this from a pixel center are ignored.
    pub distance_cutoff: T,
}

impl<T: Real> Default for SoftRasterSettings<T> {
    fn default() -> Self {
        Self {
            sharpness: T::lit(1e-4),
            distance_cutoff: T::lit(0.05),
        }
    }
}

impl<T: Real> SoftRasterSettings<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.sharpness > T::zero() && self.distance_cutoff > T::zero()) {
            return Err(Error::InvalidArgument(
                "soft raster sharpness and cutoff must be positive".into(),
            ));
        }
        Ok(())
    }
}

const BIN_SIZE: usize = 8;

/// A face projected into pixel space.
struct ScreenFace<T> {
    face: usize,
    pts: [[T; 2]; 3],
}

/// Closest point on the triangle boundary and which feature produced it.
struct Proximity<T> {
    inside: bool,
    d2: T,
    edge: usize,
    t: T,
    /// `p − q`, from the closest boundary point to the pixel.
    diff: [T; 2],
}

fn proximity<T: Real>(p: [T; 2], tri: &[[T; 2]; 3]) -> Proximity<T> {
    let mut best: Option<Proximity<T>> = None;
    for edge in 0..3 {
        let s = tri[edge];
        let e = tri[(edge + 1) % 3];
        let ex = e[0] - s[0];
        let ey = e[1] - s[1];
        let len2 = ex * ex + ey * ey;
        let t = if len2 > T::zero() {
            (((p[0] - s[0]) * ex + (p[1] - s[1]) * ey) / len2).max(T::zero()).min(T::one())
        } else {
            T::zero()
        };
        let diff = [p[0] - (s[0] + ex * t), p[1] - (s[1] + ey * t)];
        let d2 = diff[0] * diff[0] + diff[1] * diff[1];
        // strict comparison keeps the lowest edge index on ties
        if best.as_ref().is_none_or(|b| d2 < b.d2) {
            best = Some(Proximity { inside: false, d2, edge, t, diff });
        }
    }
    let mut best = best.expect("triangle has three edges");
    best.inside = contains(p, tri);
    best
}

fn contains<T: Real>(p: [T; 2], tri: &[[T; 2]; 3]) -> bool {
    let cross = |a: [T; 2], b: [T; 2], c: [T; 2]| {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    };
    let area = cross(tri[0], tri[1], tri[2]);
    if area == T::zero() {
        return false;
    }
    let w0 = cross(tri[1], tri[2], p) * area;
    let w1 = cross(tri[2], tri[0], p) * area;
    let w2 = cross(tri[0], tri[1], p) * area;
    w0 >= T::zero() && w1 >= T::zero() && w2 >= T::zero()
}

/// Per-call state shared by the forward and backward passes.
struct Rasterizer<T> {
    width: usize,
    height: usize,
    faces: Vec<ScreenFace<T>>,
    bins_x: usize,
    bins: Vec<Vec<usize>>,
    /// Sharpness and cutoff converted to pixel units.
    sharpness_px: T,
    cutoff2_px: T,
    /// Pixel-coordinate Jacobians per vertex; `None` behind a perspective camera.
    jacobians: Vec<Option<(Vec3<T>, Vec3<T>)>>,
}

impl<T: Real> Rasterizer<T> {
    fn new(mesh: &TriangleMesh<T>, camera: &Camera<T>, settings: &SoftRasterSettings<T>) -> Result<Self> {
        settings.validate()?;
        let (width, height) = (camera.width(), camera.height());
        let u = camera.screen_units_per_pixel();
        let sharpness_px = settings.sharpness / (u * u);
        let cutoff_px = settings.distance_cutoff / u;

        let projected: Vec<_> = mesh
            .vertices()
            .iter()
            .map(|&v| camera.project_with_jacobian(v))
            .collect();
        let jacobians = projected.iter().map(|p| p.map(|(_, _, du, dv)| (du, dv))).collect();

        let bins_x = width.div_ceil(BIN_SIZE);
        let bins_y = height.div_ceil(BIN_SIZE);
        let mut bins = vec![Vec::new(); bins_x * bins_y];
        let mut faces = Vec::new();
        for (fi, f) in mesh.faces().iter().enumerate() {
            let Some(pts) = f
                .iter()
                .map(|&k| projected[k].map(|(x, y, _, _)| [x, y]))
                .collect::<Option<Vec<_>>>()
            else {
                continue;
            };
            let pts = [pts[0], pts[1], pts[2]];
            let min_x = pts.iter().map(|p| p[0]).fold(T::infinity(), T::min) - cutoff_px;
            let max_x = pts.iter().map(|p| p[0]).fold(T::neg_infinity(), T::max) + cutoff_px;
            let min_y = pts.iter().map(|p| p[1]).fold(T::infinity(), T::min) - cutoff_px;
            let max_y = pts.iter().map(|p| p[1]).fold(T::neg_infinity(), T::max) + cutoff_px;
            let (w, h) = (T::from_usize_lossy(width), T::from_usize_lossy(height));
            if max_x < T::zero() || max_y < T::zero() || min_x > w || min_y > h {
                continue;
            }
            let bin_of = |v: T, limit: usize| {
                let b = (v.max(T::zero()).to_f64_lossy() as usize) / BIN_SIZE;
                b.min(limit - 1)
            };
            let slot = faces.len();
            faces.push(ScreenFace { face: fi, pts });
            for by in bin_of(min_y, bins_y)..=bin_of(max_y, bins_y) {
                for bx in bin_of(min_x, bins_x)..=bin_of(max_x, bins_x) {
                    bins[by * bins_x + bx].push(slot);
                }
            }
        }
        Ok(Self {
            width,
            height,
            faces,
            bins_x,
            bins,
            sharpness_px,
            cutoff2_px: cutoff_px * cutoff_px,
            jacobians,
        })
    }

    fn candidates(&self, col: usize, row: usize) -> &[usize] {
        &self.bins[(row / BIN_SIZE) * self.bins_x + col / BIN_SIZE]
    }

    /// Coverage of one face at pixel center `p`, or `None` beyond the cutoff.
    fn coverage(&self, p: [T; 2], face: &ScreenFace<T>) -> Option<(T, Proximity<T>)> {
        let prox = proximity(p, &face.pts);
        if !prox.inside && prox.d2 > self.cutoff2_px {
            return None;
        }
        let signed = if prox.inside { prox.d2 } else { -prox.d2 };
        Some(((signed / self.sharpness_px).sigmoid(), prox))
    }

    fn pixel_center(col: usize, row: usize) -> [T; 2] {
        [
            T::from_usize_lossy(col) + T::half(),
            T::from_usize_lossy(row) + T::half(),
        ]
    }

    fn shade(&self, col: usize, row: usize) -> T {
        let p = Self::pixel_center(col, row);
        let mut transmit = T::one();
        for &slot in self.candidates(col, row) {
            if let Some((d, _)) = self.coverage(p, &self.faces[slot]) {
                transmit *= T::one() - d;
            }
        }
        T::one() - transmit
    }

    fn accumulate_pixel(
        &self,
        mesh: &TriangleMesh<T>,
        col: usize,
        row: usize,
        upstream: T,
        grad: &mut [Vec3<T>],
    ) {
        let p = Self::pixel_center(col, row);
        let hits: Vec<(usize, T, Proximity<T>)> = self
            .candidates(col, row)
            .iter()
            .filter_map(|&slot| {
                self.coverage(p, &self.faces[slot]).map(|(d, prox)| (slot, d, prox))
            })
            .collect();
        if hits.is_empty() {
            return;
        }
        // ∂pixel/∂D_j = Π_{k≠j}(1 − D_k), via prefix and suffix products
        let n = hits.len();
        let mut suffix = vec![T::one(); n + 1];
        for k in (0..n).rev() {
            suffix[k] = suffix[k + 1] * (T::one() - hits[k].1);
        }
        let mut prefix = T::one();
        for (k, (slot, d, prox)) in hits.iter().enumerate() {
            let others = prefix * suffix[k + 1];
            prefix *= T::one() - *d;
            let sign = if prox.inside { T::one() } else { -T::one() };
            // ∂D/∂d² for D = σ(sign·d²/s)
            let g_d2 = upstream * others * sign * *d * (T::one() - *d) / self.sharpness_px;
            if g_d2 == T::zero() {
                continue;
            }
            // d² = |p − q|², q = s + t(e − s); envelope gives ∂d²/∂s = −2(1−t)(p−q), ∂d²/∂e = −2t(p−q)
            let two = T::two();
            let ws = -two * (T::one() - prox.t) * g_d2;
            let we = -two * prox.t * g_d2;
            let face = &mesh.faces()[self.faces[*slot].face];
            let vs = face[prox.edge];
            let ve = face[(prox.edge + 1) % 3];
            for (v, w) in [(vs, ws), (ve, we)] {
                if let Some((du, dv)) = self.jacobians[v] {
                    grad[v] += (du * prox.diff[0] + dv * prox.diff[1]) * w;
                }
            }
        }
    }
}

/// Soft silhouette of `mesh` seen through `camera`, values in `[0,1]`.
pub fn soft_silhouette<T: Real>(
    mesh: &TriangleMesh<T>,
    camera: &Camera<T>,
    settings: &SoftRasterSettings<T>,
) -> Result<Image<T>> {
    let r = Rasterizer::new(mesh, camera, settings)?;
    let mut data = vec![T::zero(); r.width * r.height];
    data.par_chunks_mut(r.width)
        .enumerate()
        .for_each(|(row, out)| {
            for (col, px) in out.iter_mut().enumerate() {
                *px = r.shade(col, row);
            }
        });
    Image::new(r.width, r.height, data)
}

/// Gradient of `Σ_p upstream[p]·pixel[p]` with respect to every vertex.
///
/// Rows are split into one contiguous block per worker; block buffers are
/// summed in block order, so a fixed thread count gives reproducible output.
pub fn soft_silhouette_backward<T: Real>(
    mesh: &TriangleMesh<T>,
    camera: &Camera<T>,
    settings: &SoftRasterSettings<T>,
    upstream: &Image<T>,
) -> Result<Vec<Vec3<T>>> {
    let r = Rasterizer::new(mesh, camera, settings)?;
    if upstream.width() != r.width || upstream.height() != r.height {
        return Err(Error::DimensionMismatch {
            left_width: r.width,
            left_height: r.height,
            right_width: upstream.width(),
            right_height: upstream.height(),
        });
    }
    let n = mesh.num_vertices();
    let partials: Vec<Vec<Vec3<T>>> = chunk_ranges(r.height)
        .into_par_iter()
        .map(|rows| {
            let mut grad = vec![Vec3::zero(); n];
            for row in rows {
                for col in 0..r.width {
                    let g = upstream.get(col, row);
                    if g != T::zero() {
                        r.accumulate_pixel(mesh, col, row, g, &mut grad);
                    }
                }
            }
            grad
        })
        .collect();
    let mut total = vec![Vec3::zero(); n];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    Ok(total)
}
