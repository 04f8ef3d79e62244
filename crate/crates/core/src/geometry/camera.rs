use serde::{Deserialize, Serialize};

use super::{Mat3, Vec3};
use crate::{Error, Real, Result};

/// Orthographic projection models a directional light, perspective a point light.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Projection {
    Orthographic,
    Perspective,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray<T> {
    pub origin: Vec3<T>,
    /// Unit length.
    pub direction: Vec3<T>,
}

impl<T: Real> Ray<T> {
    pub fn new(origin: Vec3<T>, direction: Vec3<T>) -> Self {
        Self {
            origin,
            direction: direction.normalized(),
        }
    }

    #[inline]
    pub fn at(&self, t: T) -> Vec3<T> {
        self.origin + self.direction * t
    }
}

/// Pinhole or parallel camera.
///
/// Camera space is right-handed with x to the right, y down the image and z
/// along the optical axis. `rotation` maps world directions into camera space
/// and `translation` completes the world-to-camera transform `R·p + t`.
/// Pixel centers sit at half-integers and row 0 is the top of the image.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera<T> {
    rotation: Mat3<T>,
    translation: Vec3<T>,
    projection: Projection,
    fov_or_extent: T,
    width: usize,
    height: usize,
}

const POLE_TOLERANCE: f64 = 1e-6;

impl<T: Real> Camera<T> {
    pub fn new(
        rotation: Mat3<T>,
        translation: Vec3<T>,
        projection: Projection,
        fov_or_extent: T,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        if rotation.rows.iter().any(|r| !r.is_finite()) || !translation.is_finite() {
            return Err(Error::NonFinite("camera pose".into()));
        }
        if rotation.orthonormality_error() > T::lit(1e-6) {
            return Err(Error::InvalidArgument("camera rotation is not orthonormal".into()));
        }
        if !(fov_or_extent > T::zero()) || !fov_or_extent.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "fov_or_extent must be positive, got {fov_or_extent}"
            )));
        }
        if projection == Projection::Perspective && fov_or_extent >= T::PI() {
            return Err(Error::InvalidArgument("perspective fov must be below π".into()));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("image dimensions must be at least 1".into()));
        }
        Ok(Self {
            rotation,
            translation,
            projection,
            fov_or_extent,
            width,
            height,
        })
    }

    /// Camera on a sphere around the origin, looking at the origin.
    ///
    /// Up is +z unless the view direction is within 1e-6 of a pole, in which
    /// case +x is used.
    pub fn from_view_spec(
        azimuth: T,
        elevation: T,
        distance: T,
        projection: Projection,
        fov_or_extent: T,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        if !(azimuth.is_finite() && elevation.is_finite() && distance.is_finite()) {
            return Err(Error::NonFinite("view specification".into()));
        }
        if !(distance > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "camera distance must be positive, got {distance}"
            )));
        }
        let position = Vec3::new(
            distance * elevation.cos() * azimuth.cos(),
            distance * elevation.cos() * azimuth.sin(),
            distance * elevation.sin(),
        );
        let forward = (-position).normalized();
        let z_up = Vec3::new(T::zero(), T::zero(), T::one());
        let up = if forward.cross(z_up).norm() < T::lit(POLE_TOLERANCE) {
            Vec3::new(T::one(), T::zero(), T::zero())
        } else {
            z_up
        };
        let right = forward.cross(up).normalized();
        let true_up = right.cross(forward);
        let rotation = Mat3::from_rows(right, -true_up, forward);
        let translation = -rotation.mul_vec(position);
        Self::new(rotation, translation, projection, fov_or_extent, width, height)
    }

    pub fn rotation(&self) -> &Mat3<T> {
        &self.rotation
    }

    pub fn translation(&self) -> Vec3<T> {
        self.translation
    }

    pub fn projection(&self) -> Projection {
        self.projection
    }

    pub fn fov_or_extent(&self) -> T {
        self.fov_or_extent
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Same pose and projection, different raster.
    pub fn with_resolution(&self, width: usize, height: usize) -> Result<Self> {
        Self::new(
            self.rotation,
            self.translation,
            self.projection,
            self.fov_or_extent,
            width,
            height,
        )
    }

    /// Camera center in world space.
    pub fn center(&self) -> Vec3<T> {
        -self.rotation.transpose_mul_vec(self.translation)
    }

    /// Unit optical axis in world space.
    pub fn axis(&self) -> Vec3<T> {
        self.rotation.rows[2]
    }

    pub fn world_to_camera(&self, p: Vec3<T>) -> Vec3<T> {
        self.rotation.mul_vec(p) + self.translation
    }

    /// Orthographic: pixels per world unit. Perspective: focal length in pixels.
    fn pixel_scale(&self) -> T {
        let half_h = T::lit(0.5) * T::from_usize_lossy(self.height);
        match self.projection {
            Projection::Orthographic => half_h / self.fov_or_extent,
            Projection::Perspective => half_h / (self.fov_or_extent * T::half()).tan(),
        }
    }

    fn principal_point(&self) -> (T, T) {
        (
            T::half() * T::from_usize_lossy(self.width),
            T::half() * T::from_usize_lossy(self.height),
        )
    }

    /// Size of one pixel in normalized screen units, where the image height spans 2 units.
    pub fn screen_units_per_pixel(&self) -> T {
        T::two() / T::from_usize_lossy(self.height)
    }

    /// Continuous pixel coordinates of a world point. `None` for points at or
    /// behind a perspective camera's center plane.
    pub fn project(&self, p: Vec3<T>) -> Option<(T, T)> {
        self.project_with_jacobian(p).map(|(px, py, _, _)| (px, py))
    }

    /// Pixel coordinates together with their gradients with respect to `p`.
    pub fn project_with_jacobian(&self, p: Vec3<T>) -> Option<(T, T, Vec3<T>, Vec3<T>)> {
        let c = self.world_to_camera(p);
        let s = self.pixel_scale();
        let (cx, cy) = self.principal_point();
        let r = &self.rotation.rows;
        match self.projection {
            Projection::Orthographic => Some((c.x * s + cx, c.y * s + cy, r[0] * s, r[1] * s)),
            Projection::Perspective => {
                if c.z <= T::lit(1e-9) {
                    return None;
                }
                let inv_z = T::one() / c.z;
                let u = c.x * inv_z;
                let v = c.y * inv_z;
                let du = (r[0] - r[2] * u) * (s * inv_z);
                let dv = (r[1] - r[2] * v) * (s * inv_z);
                Some((u * s + cx, v * s + cy, du, dv))
            }
        }
    }

    /// Ray through continuous pixel position `(px, py)`; pixel centers are at `i + 0.5`.
    pub fn pixel_ray(&self, px: T, py: T) -> Ray<T> {
        let s = self.pixel_scale();
        let (cx, cy) = self.principal_point();
        let x = (px - cx) / s;
        let y = (py - cy) / s;
        let r = &self.rotation.rows;
        let center = self.center();
        match self.projection {
            Projection::Orthographic => Ray::new(center + r[0] * x + r[1] * y, r[2]),
            Projection::Perspective => Ray::new(center, r[0] * x + r[1] * y + r[2]),
        }
    }

    /// Ray through the center of pixel `(col, row)`.
    pub fn pixel_center_ray(&self, col: usize, row: usize) -> Ray<T> {
        self.pixel_ray(
            T::from_usize_lossy(col) + T::half(),
            T::from_usize_lossy(row) + T::half(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6};

    fn ortho(az: f64, el: f64) -> Camera<f64> {
        Camera::from_view_spec(az, el, 3.0, Projection::Orthographic, 0.9, 32, 24).unwrap()
    }

    fn close(a: Vec3<f64>, b: Vec3<f64>, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn axis_aligned_views() {
        let cam = ortho(0.0, 0.0);
        assert!(close(cam.center(), Vec3::new(3.0, 0.0, 0.0), 1e-12));
        assert!(close(cam.axis(), Vec3::new(-1.0, 0.0, 0.0), 1e-12));

        let cam = ortho(FRAC_PI_2, 0.0);
        assert!(close(cam.center(), Vec3::new(0.0, 3.0, 0.0), 1e-12));
        assert!(close(cam.axis(), Vec3::new(0.0, -1.0, 0.0), 1e-12));
    }

    #[test]
    fn oblique_view_matches_spherical_conversion() {
        let (az, el, d) = (FRAC_PI_4, FRAC_PI_6, 2.0);
        let cam = Camera::<f64>::from_view_spec(az, el, d, Projection::Perspective, 0.8, 16, 16).unwrap();
        // x = d cos(el) cos(az) etc., written out with exact trig values.
        let expected = Vec3::new(
            d * (3f64.sqrt() / 2.0) * (2f64.sqrt() / 2.0),
            d * (3f64.sqrt() / 2.0) * (2f64.sqrt() / 2.0),
            d * 0.5,
        );
        assert!(close(cam.center(), expected, 1e-12));
        assert!(close(cam.axis(), -expected * (1.0 / expected.norm()), 1e-12));
    }

    #[test]
    fn pole_views_use_x_up() {
        let cam = ortho(0.3, FRAC_PI_2);
        assert!(cam.rotation().orthonormality_error() < 1e-12);
        assert!(close(cam.axis(), Vec3::new(0.0, 0.0, -1.0), 1e-9));
        // Image "up" (negative row direction) is +x.
        assert!(close(-cam.rotation().rows[1], Vec3::new(1.0, 0.0, 0.0), 1e-9));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(Camera::from_view_spec(f64::NAN, 0.0, 3.0, Projection::Orthographic, 1.0, 4, 4).is_err());
        assert!(Camera::from_view_spec(0.0, 0.0, 0.0, Projection::Orthographic, 1.0, 4, 4).is_err());
        assert!(Camera::from_view_spec(0.0, 0.0, 3.0, Projection::Orthographic, 0.0, 4, 4).is_err());
        assert!(Camera::from_view_spec(0.0, 0.0, 3.0, Projection::Orthographic, 1.0, 0, 4).is_err());
    }

    #[test]
    fn orthographic_rays_are_parallel() {
        let cam = ortho(0.0, 0.0);
        let a = cam.pixel_center_ray(0, 0);
        let b = cam.pixel_center_ray(31, 23);
        assert!(close(a.direction, Vec3::new(-1.0, 0.0, 0.0), 1e-12));
        assert!(close(a.direction, b.direction, 1e-15));
        assert!((a.origin - b.origin).norm() > 0.1);
    }

    #[test]
    fn perspective_principal_and_corner_rays() {
        let fov = 0.7f64;
        let (w, h) = (20usize, 16usize);
        let cam = Camera::<f64>::from_view_spec(0.4, 0.2, 3.0, Projection::Perspective, fov, w, h).unwrap();
        let principal = cam.pixel_ray(w as f64 / 2.0, h as f64 / 2.0);
        assert!(close(principal.direction, cam.axis(), 1e-12));

        // Pinhole model: a pixel at offset (dx, dy) from the principal point has
        // tangent offsets dx·tan(fov/2)/(h/2), dy·tan(fov/2)/(h/2).
        let corner = cam.pixel_center_ray(0, 0);
        let t = (fov / 2.0).tan() / (h as f64 / 2.0);
        let (dx, dy) = (0.5 - w as f64 / 2.0, 0.5 - h as f64 / 2.0);
        let rows = cam.rotation().rows;
        let expected = (rows[0] * (dx * t) + rows[1] * (dy * t) + rows[2]).normalized();
        assert!(close(corner.direction, expected, 1e-12));
        assert!(close(corner.origin, cam.center(), 1e-12));
    }

    #[test]
    fn origin_projects_to_image_center() {
        for proj in [Projection::Orthographic, Projection::Perspective] {
            let cam = Camera::<f64>::from_view_spec(1.1, -0.4, 2.5, proj, 0.9, 33, 17).unwrap();
            let (px, py) = cam.project(Vec3::zero()).unwrap();
            assert!((px - 16.5).abs() < 0.5 && (py - 8.5).abs() < 0.5);
        }
    }

    #[test]
    fn projection_inverts_pixel_ray() {
        for proj in [Projection::Orthographic, Projection::Perspective] {
            let cam = Camera::<f64>::from_view_spec(0.3, 0.5, 4.0, proj, 0.6, 40, 30).unwrap();
            let ray = cam.pixel_ray(7.25, 21.5);
            let (px, py) = cam.project(ray.at(2.7)).unwrap();
            assert!((px - 7.25).abs() < 1e-9 && (py - 21.5).abs() < 1e-9);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        for proj in [Projection::Orthographic, Projection::Perspective] {
            let cam = Camera::<f64>::from_view_spec(0.3, 0.5, 4.0, proj, 0.6, 40, 30).unwrap();
            let p = Vec3::new(0.2, -0.3, 0.1);
            let (_, _, du, dv) = cam.project_with_jacobian(p).unwrap();
            let h = 1e-6;
            for k in 0..3 {
                let mut a = p;
                let mut b = p;
                a[k] += h;
                b[k] -= h;
                let (ua, va) = cam.project(a).unwrap();
                let (ub, vb) = cam.project(b).unwrap();
                assert!(((ua - ub) / (2.0 * h) - du[k]).abs() < 1e-5);
                assert!(((va - vb) / (2.0 * h) - dv[k]).abs() < 1e-5);
            }
        }
    }
}
