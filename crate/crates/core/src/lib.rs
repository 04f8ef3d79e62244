//! Differentiable silhouette rendering for shadow-art sculptures.
//!
//! A sculpture is either a density grid ([`voxel`]) or a deformable triangle
//! mesh ([`mesh`]). Both back-ends render soft silhouettes with hand-written
//! adjoints, and [`optim`] drives them toward a set of target shadows, each
//! paired with the camera that stands in for its light source.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root name the common concrete instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod export;
pub mod geometry;
pub mod mesh;
pub mod optim;
pub mod oracle;
pub mod parallel;
pub mod scalar;
pub mod shadow;
pub mod silhouette;
pub mod voxel;

pub use error::{Error, Result};
pub use scalar::Real;
pub use shadow::ShadowConfiguration;

pub type Vec3f = geometry::Vec3<f32>;
pub type Vec3d = geometry::Vec3<f64>;
pub type Cameraf = geometry::Camera<f32>;
pub type Camerad = geometry::Camera<f64>;
pub type Imagef = silhouette::Image<f32>;
pub type Imaged = silhouette::Image<f64>;
pub type TargetImagef = silhouette::TargetImage<f32>;
pub type TargetImaged = silhouette::TargetImage<f64>;
pub type VoxelGridf = voxel::VoxelGrid<f32>;
pub type VoxelGridd = voxel::VoxelGrid<f64>;
pub type TriangleMeshf = mesh::TriangleMesh<f32>;
pub type TriangleMeshd = mesh::TriangleMesh<f64>;
pub type ShadowConfigurationf = ShadowConfiguration<f32>;
pub type ShadowConfigurationd = ShadowConfiguration<f64>;
