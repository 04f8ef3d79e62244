//! Learnable density grids, absorption-only volume rendering with an analytic
//! adjoint, and mesh extraction.

mod extract;
mod render;

pub use extract::{extract_blocky_mesh, extract_isosurface};
pub use render::{render_silhouette, render_silhouette_backward, RenderSettings};

use std::io::{Read, Write};
use std::path::Path;

use crate::geometry::Vec3;
use crate::{Error, Real, Result};

const GRID_MAGIC: &[u8; 8] = b"UMBRAGRD";

/// Cubic logit field centered at the origin.
///
/// Voxel `(x, y, z)` is stored at `(z·D + y)·D + x`; its center sits at
/// `−extent/2 + (i + ½)·extent/D` along each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid<T> {
    resolution: usize,
    extent: T,
    logits: Vec<T>,
    /// Constant per-voxel color. Silhouettes only scale by it.
    pub color: T,
}

impl<T: Real> VoxelGrid<T> {
    /// Grid with every logit set to `init_logit`.
    pub fn new(resolution: usize, extent: T, init_logit: T) -> Result<Self> {
        Self::from_logits(resolution, extent, vec![init_logit; resolution.pow(3)])
    }

    pub fn from_logits(resolution: usize, extent: T, logits: Vec<T>) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid resolution must be at least 2, got {resolution}"
            )));
        }
        if !(extent > T::zero()) || !extent.is_finite() {
            return Err(Error::InvalidArgument(format!("grid extent must be positive, got {extent}")));
        }
        if logits.len() != resolution.pow(3) {
            return Err(Error::LengthMismatch {
                expected: resolution.pow(3),
                found: logits.len(),
            });
        }
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid logits".into()));
        }
        Ok(Self {
            resolution,
            extent,
            logits,
            color: T::one(),
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn extent(&self) -> T {
        self.extent
    }

    pub fn voxel_size(&self) -> T {
        self.extent / T::from_usize_lossy(self.resolution)
    }

    pub fn len(&self) -> usize {
        self.logits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logits.is_empty()
    }

    pub fn logits(&self) -> &[T] {
        &self.logits
    }

    pub fn logits_mut(&mut self) -> &mut [T] {
        &mut self.logits
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (z * self.resolution + y) * self.resolution + x
    }

    pub fn voxel_center(&self, x: usize, y: usize, z: usize) -> Vec3<T> {
        let h = self.voxel_size();
        let c = |i: usize| -self.extent * T::half() + (T::from_usize_lossy(i) + T::half()) * h;
        Vec3::new(c(x), c(y), c(z))
    }

    /// Squashed densities `σ(logit)` in (0,1).
    pub fn densities(&self) -> Vec<T> {
        densities(&self.logits)
    }

    pub fn cast<U: Real>(&self) -> VoxelGrid<U> {
        VoxelGrid {
            resolution: self.resolution,
            extent: U::lit(self.extent.to_f64_lossy()),
            logits: self.logits.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
            color: U::lit(self.color.to_f64_lossy()),
        }
    }
}

impl<T: Real> VoxelGrid<T> {
    /// Binary form: magic `UMBRAGRD`, `u32` resolution, `f64` extent, then
    /// `D³` logits as `f64`, all little-endian.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(GRID_MAGIC)?;
        w.write_all(&(self.resolution as u32).to_le_bytes())?;
        w.write_all(&self.extent.to_f64_lossy().to_le_bytes())?;
        for l in &self.logits {
            w.write_all(&l.to_f64_lossy().to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != GRID_MAGIC {
            return Err(Error::InvalidArgument("not a voxel grid file (bad magic)".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let resolution = u32::from_le_bytes(b4) as usize;
        if !(2..=2048).contains(&resolution) {
            return Err(Error::InvalidArgument(format!("implausible grid resolution {resolution}")));
        }
        r.read_exact(&mut b8)?;
        let extent = f64::from_le_bytes(b8);
        let mut logits = Vec::with_capacity(resolution.pow(3));
        for _ in 0..resolution.pow(3) {
            r.read_exact(&mut b8)?;
            logits.push(T::lit(f64::from_le_bytes(b8)));
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::InvalidArgument("trailing bytes after voxel grid".into()));
        }
        Self::from_logits(resolution, T::lit(extent), logits)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Elementwise logistic squashing of logits into densities.
pub fn densities<T: Real>(logits: &[T]) -> Vec<T> {
    logits.iter().map(|&l| l.sigmoid()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squashing_examples() {
        let d = densities(&[0.0f64, 20.0, 1.0]);
        assert_eq!(d[0], 0.5);
        assert!((d[1] - 1.0).abs() < 1e-8);
        assert!((d[2] - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn construction_checks() {
        assert!(VoxelGrid::<f64>::new(1, 1.0, 0.0).is_err());
        assert!(VoxelGrid::<f64>::new(4, 0.0, 0.0).is_err());
        assert!(VoxelGrid::<f64>::from_logits(2, 1.0, vec![0.0; 7]).is_err());
        assert!(VoxelGrid::<f64>::from_logits(2, 1.0, vec![f64::NAN; 8]).is_err());
        let g = VoxelGrid::<f64>::new(4, 2.0, 1.0).unwrap();
        assert_eq!(g.len(), 64);
        assert_eq!(g.voxel_center(0, 0, 0), Vec3::new(-0.75, -0.75, -0.75));
        assert_eq!(g.voxel_center(3, 3, 3), Vec3::new(0.75, 0.75, 0.75));
    }

    #[test]
    fn binary_round_trip() {
        let logits: Vec<f64> = (0..27).map(|i| i as f64 * 0.37 - 4.0).collect();
        let g = VoxelGrid::from_logits(3, 1.3, logits).unwrap();
        let mut buf = Vec::new();
        g.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 4 + 8 + 27 * 8);
        assert_eq!(VoxelGrid::<f64>::read_from(&buf[..]).unwrap(), g);
        assert!(VoxelGrid::<f64>::read_from(&buf[..buf.len() - 1]).is_err());
        buf.push(0);
        assert!(VoxelGrid::<f64>::read_from(&buf[..]).is_err());
        buf[0] = b'X';
        assert!(VoxelGrid::<f64>::read_from(&buf[..]).is_err());
    }
}
