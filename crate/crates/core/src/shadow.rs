use crate::geometry::Camera;
use crate::silhouette::TargetImage;
use crate::Real;

/// One view constraint: a target shadow and the camera (light) producing it.
#[derive(Debug, Clone)]
pub struct ShadowConfiguration<T> {
    pub name: String,
    pub target: TargetImage<T>,
    pub camera: Camera<T>,
}

impl<T: Real> ShadowConfiguration<T> {
    /// Pairs a target with a camera, resampling the target to the camera raster.
    pub fn new(name: impl Into<String>, target: TargetImage<T>, camera: Camera<T>) -> Self {
        let target = target.resampled(camera.width(), camera.height());
        Self {
            name: name.into(),
            target,
            camera,
        }
    }
}
