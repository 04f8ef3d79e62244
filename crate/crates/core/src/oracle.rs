//! Brute-force references: visual-hull carving and finite differences.

use rayon::prelude::*;

use crate::shadow::ShadowConfiguration;
use crate::voxel::VoxelGrid;
use crate::{Error, Real, Result};

/// Boolean occupancy on the same lattice layout as [`VoxelGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryOccupancy<T> {
    resolution: usize,
    extent: T,
    cells: Vec<bool>,
}

impl<T: Real> BinaryOccupancy<T> {
    pub fn new(resolution: usize, extent: T, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != resolution.pow(3) {
            return Err(Error::LengthMismatch {
                expected: resolution.pow(3),
                found: cells.len(),
            });
        }
        Ok(Self {
            resolution,
            extent,
            cells,
        })
    }

    pub fn from_fn(resolution: usize, extent: T, f: impl Fn(usize, usize, usize) -> bool) -> Self {
        let mut cells = Vec::with_capacity(resolution.pow(3));
        for z in 0..resolution {
            for y in 0..resolution {
                for x in 0..resolution {
                    cells.push(f(x, y, z));
                }
            }
        }
        Self {
            resolution,
            extent,
            cells,
        }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn extent(&self) -> T {
        self.extent
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.cells[(z * self.resolution + y) * self.resolution + x]
    }

    /// `self ⊆ other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.cells.len() == other.cells.len()
            && self.cells.iter().zip(&other.cells).all(|(&a, &b)| !a || b)
    }

    /// Logit grid with `inside` on occupied cells and `outside` elsewhere.
    pub fn to_grid(&self, inside: T, outside: T) -> Result<VoxelGrid<T>> {
        let logits = self
            .cells
            .iter()
            .map(|&c| if c { inside } else { outside })
            .collect();
        VoxelGrid::from_logits(self.resolution, self.extent, logits)
    }
}

/// Keeps a voxel iff its center projects onto a foreground pixel (nearest
/// pixel, value ≥ ½) in every view. Voxels projecting outside an image are removed.
pub fn carve_visual_hull<T: Real>(
    views: &[ShadowConfiguration<T>],
    resolution: usize,
    extent: T,
) -> Result<BinaryOccupancy<T>> {
    if views.is_empty() {
        return Err(Error::InvalidArgument("carving needs at least one view".into()));
    }
    let probe = VoxelGrid::new(resolution, extent, T::zero())?;
    let half = T::half();
    let cells: Vec<bool> = (0..resolution.pow(3))
        .into_par_iter()
        .map(|i| {
            let x = i % resolution;
            let y = (i / resolution) % resolution;
            let z = i / (resolution * resolution);
            let c = probe.voxel_center(x, y, z);
            views.iter().all(|view| {
                let Some((px, py)) = view.camera.project(c) else {
                    return false;
                };
                if px < T::zero() || py < T::zero() {
                    return false;
                }
                let (col, row) = (px.floor().to_f64_lossy() as usize, py.floor().to_f64_lossy() as usize);
                let img = view.target.image();
                col < img.width() && row < img.height() && img.get(col, row) >= half
            })
        })
        .collect();
    BinaryOccupancy::new(resolution, extent, cells)
}

/// Central differences `(f(x+ε) − f(x−ε)) / 2ε` for every coordinate.
pub fn fd_gradient<T: Real>(mut f: impl FnMut(&[T]) -> T, params: &[T], eps: T) -> Vec<T> {
    let mut x = params.to_vec();
    let two_eps = eps + eps;
    (0..params.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + eps;
            let plus = f(&x);
            x[i] = orig - eps;
            let minus = f(&x);
            x[i] = orig;
            (plus - minus) / two_eps
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Camera, Projection};
    use crate::silhouette::TargetImage;

    #[test]
    fn fd_examples() {
        let g = fd_gradient(|x: &[f64]| x[0] * x[0], &[3.0], 1e-4);
        assert!((g[0] - 6.0).abs() < 1e-6);

        let g = fd_gradient(|_: &[f64]| 4.2, &[1.0, -2.0], 1e-3);
        assert_eq!(g, vec![0.0, 0.0]);

        let x = [0.1, 1.3, -2.2, 0.7];
        let g = fd_gradient(|v: &[f64]| v.iter().map(|t| t.sin()).sum(), &x, 1e-4);
        for (gi, xi) in g.iter().zip(x) {
            assert!((gi - xi.cos()).abs() < 1e-7);
        }
    }

    fn full_view(az: f64, el: f64, n: usize) -> ShadowConfiguration<f64> {
        let cam = Camera::from_view_spec(az, el, 3.0, Projection::Orthographic, 0.9, n, n).unwrap();
        let target = TargetImage::from_mask(n, n, &vec![true; n * n]).unwrap();
        ShadowConfiguration::new("full", target, cam)
    }

    #[test]
    fn full_targets_keep_the_cube() {
        let one = carve_visual_hull(&[full_view(0.0, 0.0, 16)], 8, 1.7).unwrap();
        assert_eq!(one.count(), 512);
        let two = carve_visual_hull(&[full_view(0.0, 0.0, 16), full_view(std::f64::consts::FRAC_PI_2, 0.0, 16)], 8, 1.7)
            .unwrap();
        assert_eq!(two.count(), 512);
        assert!(carve_visual_hull::<f64>(&[], 8, 1.7).is_err());
    }
}
