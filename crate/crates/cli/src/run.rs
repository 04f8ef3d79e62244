//! Run orchestration and artifact emission.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use image::{Rgb, RgbImage};
use log::info;
use umbra_core::export::{read_obj, validate_mesh, write_obj};
use umbra_core::geometry::Camera;
use umbra_core::mesh::{icosphere, normal_consistency_metric, soft_silhouette, SoftRasterSettings, TriangleMesh};
use umbra_core::optim::{optimize_mesh, optimize_voxel, OptimizationRun, OptimizeOptions};
use umbra_core::oracle::carve_visual_hull;
use umbra_core::silhouette::{load_target, Image, MetricReport};
use umbra_core::voxel::{extract_blocky_mesh, extract_isosurface, render_silhouette, RenderSettings, VoxelGrid};
use umbra_core::ShadowConfiguration;

use crate::config::{Pipeline, RunConfig};

const ORANGE: Rgb<u8> = Rgb([255, 140, 0]);
const BLUE: Rgb<u8> = Rgb([0, 90, 255]);
const AGREE_FG: Rgb<u8> = Rgb([60, 60, 60]);
const AGREE_BG: Rgb<u8> = Rgb([255, 255, 255]);

pub fn build_views(cfg: &RunConfig) -> Result<Vec<ShadowConfiguration<f64>>> {
    cfg.views
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let target = load_target::<f64>(&v.image, v.threshold, v.mode.into(), v.invert)
                .with_context(|| format!("views[{i}].image: {}", v.image.display()))?;
            let camera = Camera::from_view_spec(
                v.azimuth,
                v.elevation,
                v.distance,
                v.projection.into(),
                v.fov_or_extent(),
                cfg.image_size,
                cfg.image_size,
            )
            .with_context(|| format!("views[{i}]"))?;
            Ok(ShadowConfiguration::new(v.name.clone(), target, camera))
        })
        .collect()
}

fn render_settings(cfg: &RunConfig, grid: &VoxelGrid<f64>) -> RenderSettings<f64> {
    let mut s = RenderSettings::for_grid(grid);
    if let Some(k) = cfg.grid.kappa {
        s.opacity_scale = k;
    }
    if let Some(n) = cfg.grid.samples_per_ray {
        s.samples_per_ray = n;
    }
    s.step_jitter = cfg.grid.step_jitter;
    s
}

fn raster_settings(cfg: &RunConfig) -> SoftRasterSettings<f64> {
    SoftRasterSettings {
        sharpness: cfg.mesh.sharpness,
        distance_cutoff: cfg.mesh.cutoff,
    }
}

/// Foreground agreement in dark gray, target foreground the render misses in
/// orange, rendered foreground outside the target in blue.
pub fn overlay(rendered: &Image<f64>, target: &Image<f64>, threshold: f64) -> RgbImage {
    RgbImage::from_fn(rendered.width() as u32, rendered.height() as u32, |c, r| {
        let a = rendered.get(c as usize, r as usize) >= threshold;
        let b = target.get(c as usize, r as usize) >= threshold;
        match (a, b) {
            (true, true) => AGREE_FG,
            (false, false) => AGREE_BG,
            (false, true) => ORANGE,
            (true, false) => BLUE,
        }
    })
}

/// Writes `shadow_<name>.png`, `overlay_<name>.png` and returns the scores.
fn emit_views(views: &[ShadowConfiguration<f64>], renders: &[Image<f64>], out: &Path) -> Result<MetricReport> {
    for (v, r) in views.iter().zip(renders) {
        r.save_png(out.join(format!("shadow_{}.png", v.name)))?;
        let path = out.join(format!("overlay_{}.png", v.name));
        overlay(r, v.target.image(), 0.5).save(&path).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(MetricReport::compute(
        views.iter().zip(renders).map(|(v, r)| (v.name.clone(), r, v.target.image())),
        0.5,
    )?)
}

fn write_metrics(report: &MetricReport, out: &Path) -> Result<()> {
    fs::write(out.join("metrics.json"), report.to_json()? + "\n")?;
    Ok(())
}

fn write_mesh(mesh: &TriangleMesh<f64>, path: &Path) -> Result<()> {
    let report = validate_mesh(mesh);
    if !report.watertight || !report.consistent_orientation {
        log::warn!("{} is not a closed oriented surface: {report:?}", path.display());
    }
    write_obj(mesh, path).with_context(|| format!("writing {}", path.display()))
}

fn create_output(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))
}

fn options(cfg: &RunConfig) -> OptimizeOptions<f64> {
    let mut opts = OptimizeOptions::new(cfg.budget(), cfg.lr());
    opts.adam_eps = cfg.adam_eps;
    opts.seed = cfg.seed;
    opts.log_every = cfg.log_every;
    opts
}

fn initial_grid(cfg: &RunConfig, views: &[ShadowConfiguration<f64>]) -> Result<VoxelGrid<f64>> {
    if cfg.grid.init_from_carving {
        let hull = carve_visual_hull(views, cfg.grid.resolution, cfg.grid.extent)?;
        info!("initializing from a carved hull with {} voxels", hull.count());
        Ok(hull.to_grid(3.0, -3.0)?)
    } else {
        Ok(VoxelGrid::new(cfg.grid.resolution, cfg.grid.extent, cfg.grid.init_logit)?)
    }
}

/// Runs the configured pipeline and writes every artifact into `cfg.output`.
pub fn optimize(cfg: &RunConfig) -> Result<PathBuf> {
    let out = cfg.output.clone();
    let views = build_views(cfg)?;
    create_output(&out)?;
    fs::write(out.join("config.toml"), cfg.resolved_toml()?)?;
    let opts = options(cfg);
    let (report, run): (MetricReport, OptimizationRun) = match cfg.pipeline {
        Pipeline::Voxel => {
            let init = initial_grid(cfg, &views)?;
            let settings = render_settings(cfg, &init);
            let (grid, run) = optimize_voxel(&views, init, &settings, &cfg.weights, &opts)?;
            grid.save(out.join("grid.bin"))?;
            let iso = cfg.grid.iso;
            let smooth = extract_isosurface(&grid, iso);
            let blocky = extract_blocky_mesh(&grid, iso);
            let (Some(smooth), Some(blocky)) = (smooth, blocky) else {
                bail!("the optimized grid has no voxel above density {iso}; nothing to export");
            };
            write_mesh(&smooth, &out.join("sculpture.obj"))?;
            write_mesh(&blocky, &out.join("sculpture_blocky.obj"))?;
            let mut final_settings = settings;
            final_settings.step_jitter = false;
            let renders = views
                .iter()
                .map(|v| render_silhouette(&grid, &v.camera, &final_settings))
                .collect::<Result<Vec<_>, _>>()?;
            let mut report = emit_views(&views, &renders, &out)?;
            report.normal_consistency = Some(normal_consistency_metric(&smooth)?);
            (report, run)
        }
        Pipeline::Mesh => {
            let src = icosphere::<f64>(cfg.mesh.level, cfg.mesh.radius);
            let settings = raster_settings(cfg);
            let (mesh, run) = optimize_mesh(&views, &src, &settings, &cfg.weights, &opts)?;
            write_mesh(&mesh, &out.join("sculpture.obj"))?;
            let renders = views
                .iter()
                .map(|v| soft_silhouette(&mesh, &v.camera, &settings))
                .collect::<Result<Vec<_>, _>>()?;
            let mut report = emit_views(&views, &renders, &out)?;
            report.normal_consistency = Some(normal_consistency_metric(&mesh)?);
            (report, run)
        }
    };
    write_metrics(&report, &out)?;
    fs::write(out.join("history.jsonl"), run.history_jsonl()?)?;
    info!("mean IoU {:.4}, mean Dice {:.4}", report.mean_iou, report.mean_dice);
    Ok(out)
}

/// Carves the visual hull of the configured views and writes `hull.obj`,
/// `hull.bin`, its shadows, overlays and metrics.
pub fn carve(cfg: &RunConfig) -> Result<PathBuf> {
    let out = cfg.output.clone();
    let views = build_views(cfg)?;
    create_output(&out)?;
    let hull = carve_visual_hull(&views, cfg.grid.resolution, cfg.grid.extent)?;
    info!("hull keeps {} of {} voxels", hull.count(), cfg.grid.resolution.pow(3));
    let grid = hull.to_grid(40.0, -40.0)?;
    grid.save(out.join("hull.bin"))?;
    let Some(mesh) = extract_blocky_mesh(&grid, 0.5) else {
        bail!("the views have no common foreground: the carved hull is empty");
    };
    write_mesh(&mesh, &out.join("hull.obj"))?;
    let settings = render_settings(cfg, &grid);
    let renders = views
        .iter()
        .map(|v| render_silhouette(&grid, &v.camera, &RenderSettings { step_jitter: false, ..settings }))
        .collect::<Result<Vec<_>, _>>()?;
    let report = emit_views(&views, &renders, &out)?;
    write_metrics(&report, &out)?;
    Ok(out)
}

/// Renders an existing OBJ (soft rasterizer) or grid file (ray marcher) from
/// the configured views.
pub fn render(cfg: &RunConfig, input: &Path) -> Result<PathBuf> {
    let out = cfg.output.clone();
    let views = build_views(cfg)?;
    create_output(&out)?;
    let is_obj = input.extension().is_some_and(|e| e.eq_ignore_ascii_case("obj"));
    let (renders, nc) = if is_obj {
        let mesh = read_obj::<f64>(input).with_context(|| format!("reading {}", input.display()))?;
        let settings = raster_settings(cfg);
        let renders = views
            .iter()
            .map(|v| soft_silhouette(&mesh, &v.camera, &settings))
            .collect::<Result<Vec<_>, _>>()?;
        (renders, normal_consistency_metric(&mesh).ok())
    } else {
        let grid = VoxelGrid::<f64>::load(input).with_context(|| format!("reading {}", input.display()))?;
        let settings = RenderSettings { step_jitter: false, ..render_settings(cfg, &grid) };
        let renders = views
            .iter()
            .map(|v| render_silhouette(&grid, &v.camera, &settings))
            .collect::<Result<Vec<_>, _>>()?;
        (renders, None)
    };
    let mut report = emit_views(&views, &renders, &out)?;
    report.normal_consistency = nc.filter(|v| v.is_finite());
    write_metrics(&report, &out)?;
    Ok(out)
}

fn load_gray(path: &Path) -> Result<Image<f64>> {
    let img = image::open(path).with_context(|| format!("reading {}", path.display()))?.to_luma8();
    let data = img.as_raw().iter().map(|&b| f64::from(b) / 255.0).collect();
    Ok(Image::new(img.width() as usize, img.height() as usize, data)?)
}

fn png_names(dir: &Path) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if name.to_ascii_lowercase().ends_with(".png") {
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}

/// Scores same-named PNGs of two directories (or two single files) against
/// each other at `threshold`.
pub fn metrics(a: &Path, b: &Path, threshold: f64) -> Result<MetricReport> {
    if !(threshold > 0.0 && threshold < 1.0) {
        bail!("threshold must lie in (0,1), got {threshold}");
    }
    let pairs: Vec<(String, PathBuf, PathBuf)> = if a.is_dir() && b.is_dir() {
        let names = png_names(a)?;
        let pairs: Vec<_> = names
            .into_iter()
            .filter(|n| b.join(n).is_file())
            .map(|n| (n.trim_end_matches(".png").to_string(), a.join(&n), b.join(&n)))
            .collect();
        if pairs.is_empty() {
            bail!("no PNG file names are shared by {} and {}", a.display(), b.display());
        }
        pairs
    } else if a.is_file() && b.is_file() {
        let name = a.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        vec![(name, a.to_path_buf(), b.to_path_buf())]
    } else {
        bail!("expected two directories or two image files");
    };
    let mut loaded = Vec::new();
    for (name, pa, pb) in pairs {
        let (ia, ib) = (load_gray(&pa)?, load_gray(&pb)?);
        ia.same_shape(&ib).with_context(|| format!("comparing {}", name))?;
        loaded.push((name, ia, ib));
    }
    Ok(MetricReport::compute(loaded.iter().map(|(n, x, y)| (n.clone(), x, y)), threshold)?)
}

/// Extracts an isosurface (or the blocky surface) of a grid file.
pub fn export(grid: &Path, iso: f64, blocky: bool, out: &Path) -> Result<()> {
    if !(iso > 0.0 && iso < 1.0) {
        bail!("iso must lie in (0,1), got {iso}");
    }
    let grid = VoxelGrid::<f64>::load(grid).with_context(|| format!("reading {}", grid.display()))?;
    let mesh = if blocky {
        extract_blocky_mesh(&grid, iso)
    } else {
        extract_isosurface(&grid, iso)
    };
    let Some(mesh) = mesh else {
        bail!("no voxel exceeds density {iso}");
    };
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_output(parent)?;
    }
    write_mesh(&mesh, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_colors() {
        let r = Image::new(4, 1, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let t = Image::new(4, 1, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let o = overlay(&r, &t, 0.5);
        assert_eq!(*o.get_pixel(0, 0), AGREE_FG);
        assert_eq!(*o.get_pixel(1, 0), BLUE);
        assert_eq!(*o.get_pixel(2, 0), ORANGE);
        assert_eq!(*o.get_pixel(3, 0), AGREE_BG);
    }
}
