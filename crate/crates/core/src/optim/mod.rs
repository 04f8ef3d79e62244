//! Loss assembly, Adam updates, training loops and gradient checking.

mod adam;
mod gradcheck;
mod loss;
mod mesh;
mod run;
mod voxel;

pub use adam::{adam_step, AdamState};
pub use gradcheck::{gradient_check, gradient_check_coords, GradCheckReport};
pub use loss::{image_loss, total_mesh_loss, LossWeights, MeshLossTerms};
pub use mesh::{mesh_objective, optimize_mesh, optimize_mesh_with, MeshObjective};
pub use run::{IterationRecord, OptimizationRun, OptimizeOptions};
pub use voxel::{optimize_voxel, optimize_voxel_with, voxel_objective};
