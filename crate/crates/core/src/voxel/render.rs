//! Absorption-only ray marching through the squashed density field.
//!
//! For a ray clipped to the grid cube, `N` equispaced samples with spacing
//! `Δt` read trilinearly interpolated densities `d_k`. Each sample has
//! opacity `α_k = 1 − exp(−κ d_k Δt)` and the pixel is `1 − Π(1 − α_k)`,
//! which collapses to `1 − exp(−κ Δt Σ d_k)`. Rays that miss the cube are 0.

use rayon::prelude::*;

use super::VoxelGrid;
use crate::geometry::{Camera, Projection, Ray};
use crate::parallel::chunk_ranges;
use crate::silhouette::Image;
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderSettings<T> {
    pub samples_per_ray: usize,
    /// Randomly offsets the sample comb per pixel, reproducibly from `jitter_seed`.
    pub step_jitter: bool,
    pub jitter_seed: u64,
    /// Opacity scale κ, per world unit.
    pub opacity_scale: T,
}

impl<T: Real> RenderSettings<T> {
    /// κ = 30/extent and 2·D samples per ray.
    pub fn for_grid(grid: &VoxelGrid<T>) -> Self {
        Self {
            samples_per_ray: 2 * grid.resolution(),
            step_jitter: false,
            jitter_seed: 0,
            opacity_scale: T::lit(30.0) / grid.extent(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples_per_ray < 2 {
            return Err(Error::InvalidArgument("samples_per_ray must be at least 2".into()));
        }
        if !(self.opacity_scale > T::zero()) || !self.opacity_scale.is_finite() {
            return Err(Error::InvalidArgument("opacity scale must be positive".into()));
        }
        Ok(())
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Geometry needed to march one grid; borrowed by both passes.
struct Marcher<'a, T> {
    grid: &'a VoxelGrid<T>,
    camera: &'a Camera<T>,
    settings: &'a RenderSettings<T>,
    half: T,
    inv_h: T,
}

/// Eight trilinear taps `(voxel index, weight)`.
type Taps<T> = [(usize, T); 8];

impl<'a, T: Real> Marcher<'a, T> {
    fn new(grid: &'a VoxelGrid<T>, camera: &'a Camera<T>, settings: &'a RenderSettings<T>) -> Result<Self> {
        settings.validate()?;
        Ok(Self {
            grid,
            camera,
            settings,
            half: grid.extent() * T::half(),
            inv_h: T::one() / grid.voxel_size(),
        })
    }

    /// Parametric interval of the ray inside the cube.
    fn clip(&self, ray: &Ray<T>) -> Option<(T, T)> {
        let mut t0 = if self.camera.projection() == Projection::Perspective {
            T::zero()
        } else {
            T::neg_infinity()
        };
        let mut t1 = T::infinity();
        for a in 0..3 {
            let o = ray.origin[a];
            let d = ray.direction[a];
            if d.abs() < T::lit(1e-12) {
                if o < -self.half || o > self.half {
                    return None;
                }
                continue;
            }
            let inv = T::one() / d;
            let (mut near, mut far) = ((-self.half - o) * inv, (self.half - o) * inv);
            if near > far {
                std::mem::swap(&mut near, &mut far);
            }
            t0 = t0.max(near);
            t1 = t1.min(far);
        }
        (t1 > t0).then_some((t0, t1))
    }

    fn taps(&self, ray: &Ray<T>, t: T) -> Taps<T> {
        let p = ray.at(t);
        let d = self.grid.resolution();
        let max = T::from_usize_lossy(d - 1);
        let mut base = [0usize; 3];
        let mut frac = [T::zero(); 3];
        for a in 0..3 {
            let u = ((p[a] + self.half) * self.inv_h - T::half()).max(T::zero()).min(max);
            let i = (u.to_f64_lossy().floor() as usize).min(d - 2);
            base[a] = i;
            frac[a] = u - T::from_usize_lossy(i);
        }
        let mut out = [(0usize, T::zero()); 8];
        for (c, slot) in out.iter_mut().enumerate() {
            let (dx, dy, dz) = (c & 1, (c >> 1) & 1, (c >> 2) & 1);
            let w = |bit: usize, f: T| if bit == 1 { f } else { T::one() - f };
            *slot = (
                self.grid.index(base[0] + dx, base[1] + dy, base[2] + dz),
                w(dx, frac[0]) * w(dy, frac[1]) * w(dz, frac[2]),
            );
        }
        out
    }

    /// Sample spacing and the per-sample taps of one pixel's ray, or `None` on a miss.
    fn visit(&self, col: usize, row: usize, mut f: impl FnMut(&Taps<T>)) -> Option<T> {
        let ray = self.camera.pixel_center_ray(col, row);
        let (t0, t1) = self.clip(&ray)?;
        let n = self.settings.samples_per_ray;
        let dt = (t1 - t0) / T::from_usize_lossy(n);
        let offset = if self.settings.step_jitter {
            let pixel = (row * self.camera.width() + col) as u64;
            let bits = splitmix64(self.settings.jitter_seed ^ splitmix64(pixel));
            T::lit((bits >> 11) as f64 / (1u64 << 53) as f64)
        } else {
            T::half()
        };
        for k in 0..n {
            let t = t0 + (T::from_usize_lossy(k) + offset) * dt;
            f(&self.taps(&ray, t));
        }
        Some(dt)
    }

    /// Σ_k d_k along the ray, plus Δt.
    fn optical_sum(&self, dens: &[T], col: usize, row: usize) -> Option<(T, T)> {
        let mut sum = T::zero();
        let dt = self.visit(col, row, |taps| {
            for &(i, w) in taps {
                sum += w * dens[i];
            }
        })?;
        Some((sum, dt))
    }
}

/// Renders the grid's silhouette; pixel values lie in `[0, color]`.
pub fn render_silhouette<T: Real>(
    grid: &VoxelGrid<T>,
    camera: &Camera<T>,
    settings: &RenderSettings<T>,
) -> Result<Image<T>> {
    let m = Marcher::new(grid, camera, settings)?;
    let dens = grid.densities();
    let (w, h) = (camera.width(), camera.height());
    let kappa = settings.opacity_scale;
    let mut data = vec![T::zero(); w * h];
    data.par_chunks_mut(w).enumerate().for_each(|(row, out)| {
        for (col, px) in out.iter_mut().enumerate() {
            if let Some((sum, dt)) = m.optical_sum(&dens, col, row) {
                *px = grid.color * (T::one() - (-kappa * dt * sum).exp());
            }
        }
    });
    Image::new(w, h, data)
}

/// Gradient of `Σ_p upstream[p]·pixel[p]` with respect to every logit.
///
/// `∂pixel/∂d_k = C·κ·Δt·Π_j(1 − α_j)`, pushed through the trilinear weights
/// and `σ' = σ(1 − σ)`. Rows are split into one block per worker and block
/// buffers are summed in block order.
pub fn render_silhouette_backward<T: Real>(
    grid: &VoxelGrid<T>,
    camera: &Camera<T>,
    settings: &RenderSettings<T>,
    upstream: &Image<T>,
) -> Result<Vec<T>> {
    let (w, h) = (camera.width(), camera.height());
    if upstream.width() != w || upstream.height() != h {
        return Err(Error::DimensionMismatch {
            left_width: w,
            left_height: h,
            right_width: upstream.width(),
            right_height: upstream.height(),
        });
    }
    let m = Marcher::new(grid, camera, settings)?;
    let dens = grid.densities();
    let kappa = settings.opacity_scale;
    let partials: Vec<Vec<T>> = chunk_ranges(h)
        .into_par_iter()
        .map(|rows| {
            let mut g = vec![T::zero(); grid.len()];
            for row in rows {
                for col in 0..w {
                    let up = upstream.get(col, row);
                    if up == T::zero() {
                        continue;
                    }
                    let Some((sum, dt)) = m.optical_sum(&dens, col, row) else {
                        continue;
                    };
                    let transmittance = (-kappa * dt * sum).exp();
                    let per_sample = up * grid.color * kappa * dt * transmittance;
                    m.visit(col, row, |taps| {
                        for &(i, wt) in taps {
                            g[i] += per_sample * wt;
                        }
                    });
                }
            }
            g
        })
        .collect();
    let mut total = vec![T::zero(); grid.len()];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    for (g, &d) in total.iter_mut().zip(&dens) {
        *g *= d * (T::one() - d);
    }
    Ok(total)
}
