//! Vectors, cameras and ray generation shared by both rendering back-ends.

mod camera;
mod vec3;

pub use camera::{Camera, Projection, Ray};
pub use vec3::{Mat3, Vec3};
