//! TOML run configuration.
//!
//! ```toml
//! pipeline = "voxel"        # or "mesh"
//! image_size = 128
//!
//! [[views]]
//! name = "front"
//! image = "front.png"       # relative to this file
//! azimuth = 0.0             # radians
//! elevation = 0.0
//! projection = "orthographic"
//!
//! [grid]
//! resolution = 128
//! ```
//!
//! Omitted fields take the defaults below; `budget` and `lr` default per pipeline.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use umbra_core::geometry::Projection;
use umbra_core::optim::LossWeights;
use umbra_core::silhouette::TargetMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    Voxel,
    Mesh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionKind {
    Orthographic,
    Perspective,
}

impl From<ProjectionKind> for Projection {
    fn from(p: ProjectionKind) -> Self {
        match p {
            ProjectionKind::Orthographic => Projection::Orthographic,
            ProjectionKind::Perspective => Projection::Perspective,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Binary,
    Grayscale,
}

impl From<ModeKind> for TargetMode {
    fn from(m: ModeKind) -> Self {
        match m {
            ModeKind::Binary => TargetMode::Binary,
            ModeKind::Grayscale => TargetMode::Grayscale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewConfig {
    #[serde(default)]
    pub name: String,
    pub image: PathBuf,
    #[serde(default)]
    pub azimuth: f64,
    #[serde(default)]
    pub elevation: f64,
    #[serde(default = "default_distance")]
    pub distance: f64,
    #[serde(default = "default_projection")]
    pub projection: ProjectionKind,
    /// Perspective vertical fov (radians) or orthographic half-height.
    #[serde(default)]
    pub fov_or_extent: Option<f64>,
    #[serde(default)]
    pub invert: bool,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_mode")]
    pub mode: ModeKind,
}

fn default_distance() -> f64 {
    3.0
}
fn default_projection() -> ProjectionKind {
    ProjectionKind::Orthographic
}
fn default_threshold() -> f64 {
    0.5
}
fn default_mode() -> ModeKind {
    ModeKind::Binary
}

impl ViewConfig {
    pub fn fov_or_extent(&self) -> f64 {
        self.fov_or_extent.unwrap_or(match self.projection {
            ProjectionKind::Orthographic => 0.9,
            ProjectionKind::Perspective => 0.6,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub resolution: usize,
    pub extent: f64,
    pub init_logit: f64,
    /// Opacity scale κ; `30/extent` when absent.
    pub kappa: Option<f64>,
    /// `2·resolution` when absent.
    pub samples_per_ray: Option<usize>,
    pub step_jitter: bool,
    pub init_from_carving: bool,
    /// Density level for the exported surfaces.
    pub iso: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            resolution: 128,
            extent: 1.7,
            init_logit: 1.0,
            kappa: None,
            samples_per_ray: None,
            step_jitter: false,
            init_from_carving: false,
            iso: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub level: u32,
    pub radius: f64,
    pub sharpness: f64,
    pub cutoff: f64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            level: 4,
            radius: 0.5,
            sharpness: 1e-4,
            cutoff: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_pipeline")]
    pub pipeline: Pipeline,
    #[serde(default)]
    pub views: Vec<ViewConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub weights: LossWeights,
    pub budget: Option<usize>,
    pub lr: Option<f64>,
    #[serde(default = "default_adam_eps")]
    pub adam_eps: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_image_size")]
    pub image_size: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_log_every")]
    pub log_every: usize,
}

fn default_pipeline() -> Pipeline {
    Pipeline::Voxel
}
fn default_adam_eps() -> f64 {
    1e-8
}
fn default_image_size() -> usize {
    128
}
fn default_output() -> PathBuf {
    PathBuf::from("output")
}
fn default_log_every() -> usize {
    100
}

impl RunConfig {
    pub fn budget(&self) -> usize {
        self.budget.unwrap_or(match self.pipeline {
            Pipeline::Voxel => 2000,
            Pipeline::Mesh => 500,
        })
    }

    pub fn lr(&self) -> f64 {
        self.lr.unwrap_or(match self.pipeline {
            Pipeline::Voxel => 1e-4,
            Pipeline::Mesh => 1e-2,
        })
    }

    /// Parses TOML text, resolving relative paths against `base`, and validates.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| anyhow::anyhow!("{e}"))?;
        for (i, v) in cfg.views.iter_mut().enumerate() {
            if v.name.is_empty() {
                v.name = format!("view{i}");
            }
            if v.image.is_relative() {
                v.image = base.join(&v.image);
            }
        }
        if cfg.output.is_relative() {
            cfg.output = base.join(&cfg.output);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.views.is_empty() {
            bail!("views: at least one view is required");
        }
        let mut names = std::collections::HashSet::new();
        for (i, v) in self.views.iter().enumerate() {
            if !names.insert(v.name.as_str()) {
                bail!("views[{i}].name: duplicate view name {:?}", v.name);
            }
            if !v.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                bail!("views[{i}].name: only letters, digits, '_' and '-' are allowed, got {:?}", v.name);
            }
            if !v.image.is_file() {
                bail!("views[{i}].image: file not found: {}", v.image.display());
            }
            if !(v.threshold > 0.0 && v.threshold < 1.0) {
                bail!("views[{i}].threshold: must lie in (0,1), got {}", v.threshold);
            }
            if !(v.distance > 0.0 && v.distance.is_finite()) {
                bail!("views[{i}].distance: must be positive, got {}", v.distance);
            }
            let f = v.fov_or_extent();
            if !(f > 0.0 && f.is_finite()) || (v.projection == ProjectionKind::Perspective && f >= std::f64::consts::PI) {
                bail!("views[{i}].fov_or_extent: out of range, got {f}");
            }
            if !(v.azimuth.is_finite() && v.elevation.is_finite()) {
                bail!("views[{i}]: azimuth and elevation must be finite");
            }
        }
        if self.image_size == 0 {
            bail!("image_size: must be at least 1");
        }
        if self.grid.resolution < 2 {
            bail!("grid.resolution: must be at least 2, got {}", self.grid.resolution);
        }
        if !(self.grid.extent > 0.0 && self.grid.extent.is_finite()) {
            bail!("grid.extent: must be positive, got {}", self.grid.extent);
        }
        if !self.grid.init_logit.is_finite() {
            bail!("grid.init_logit: must be finite");
        }
        if let Some(k) = self.grid.kappa {
            if !(k > 0.0 && k.is_finite()) {
                bail!("grid.kappa: must be positive, got {k}");
            }
        }
        if matches!(self.grid.samples_per_ray, Some(n) if n < 2) {
            bail!("grid.samples_per_ray: must be at least 2");
        }
        if !(self.grid.iso > 0.0 && self.grid.iso < 1.0) {
            bail!("grid.iso: must lie in (0,1), got {}", self.grid.iso);
        }
        if self.mesh.level > 7 {
            bail!("mesh.level: at most 7, got {}", self.mesh.level);
        }
        if !(self.mesh.radius > 0.0 && self.mesh.radius.is_finite()) {
            bail!("mesh.radius: must be positive, got {}", self.mesh.radius);
        }
        if !(self.mesh.sharpness > 0.0 && self.mesh.cutoff > 0.0) {
            bail!("mesh.sharpness and mesh.cutoff: must be positive");
        }
        self.weights.validate().context("weights")?;
        if self.budget() == 0 {
            bail!("budget: must be at least 1");
        }
        if !(self.lr() > 0.0 && self.lr().is_finite()) {
            bail!("lr: must be positive, got {}", self.lr());
        }
        if !(self.adam_eps > 0.0 && self.adam_eps.is_finite()) {
            bail!("adam_eps: must be positive, got {}", self.adam_eps);
        }
        Ok(())
    }

    /// The config with every default made explicit.
    pub fn resolved_toml(&self) -> Result<String> {
        let mut v = self.clone();
        v.budget = Some(self.budget());
        v.lr = Some(self.lr());
        v.grid.kappa = Some(self.grid.kappa.unwrap_or(30.0 / self.grid.extent));
        v.grid.samples_per_ray = Some(self.grid.samples_per_ray.unwrap_or(2 * self.grid.resolution));
        for view in &mut v.views {
            view.fov_or_extent = Some(view.fov_or_extent());
        }
        Ok(toml::to_string_pretty(&v)?)
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    RunConfig::from_toml(&text, base).with_context(|| format!("invalid config {}", path.display()))
}
