use log::info;

use super::{image_loss, AdamState, IterationRecord, LossWeights, OptimizationRun, OptimizeOptions};
use crate::shadow::ShadowConfiguration;
use crate::silhouette::{dice, iou, Image, MetricReport, ViewMetric};
use crate::voxel::{render_silhouette, render_silhouette_backward, RenderSettings, VoxelGrid};
use crate::{Error, Real, Result};

fn iteration_settings<T: Real>(base: &RenderSettings<T>, seed: u64, iter: usize) -> RenderSettings<T> {
    let mut s = *base;
    s.jitter_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (iter as u64);
    s
}

/// Image loss summed over views, its logit gradient and the renders.
pub fn voxel_objective<T: Real>(
    grid: &VoxelGrid<T>,
    views: &[ShadowConfiguration<T>],
    settings: &RenderSettings<T>,
    weights: &LossWeights,
) -> Result<(T, Vec<T>, Vec<Image<T>>)> {
    let mut total = T::zero();
    let mut grad = vec![T::zero(); grid.len()];
    let mut renders = Vec::with_capacity(views.len());
    for view in views {
        let rendered = render_silhouette(grid, &view.camera, settings)?;
        let (loss, upstream) = image_loss(&rendered, view.target.image(), weights)?;
        let g = render_silhouette_backward(grid, &view.camera, settings, &upstream)?;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
        total += loss;
        renders.push(rendered);
    }
    Ok((total, grad, renders))
}

fn score<T: Real>(views: &[ShadowConfiguration<T>], renders: &[Image<T>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let half = T::half();
    let mut ious = Vec::with_capacity(views.len());
    let mut dices = Vec::with_capacity(views.len());
    for (v, r) in views.iter().zip(renders) {
        ious.push(iou(r, v.target.image(), half)?);
        dices.push(dice(r, v.target.image(), half)?);
    }
    Ok((ious, dices))
}

pub(super) fn final_report<T: Real>(
    views: &[ShadowConfiguration<T>],
    renders: &[Image<T>],
) -> Result<MetricReport> {
    let (ious, dices) = score(views, renders)?;
    Ok(MetricReport::from_views(
        views
            .iter()
            .zip(ious.into_iter().zip(dices))
            .map(|(v, (iou, dice))| ViewMetric {
                name: v.name.clone(),
                iou,
                dice,
            })
            .collect(),
    ))
}

pub(super) fn record_scores<T: Real>(
    views: &[ShadowConfiguration<T>],
    renders: &[Image<T>],
) -> Result<(Vec<f64>, Vec<f64>)> {
    score(views, renders)
}

/// Optimizes grid logits so the rendered silhouettes match every target.
pub fn optimize_voxel<T: Real>(
    views: &[ShadowConfiguration<T>],
    init: VoxelGrid<T>,
    settings: &RenderSettings<T>,
    weights: &LossWeights,
    options: &OptimizeOptions<T>,
) -> Result<(VoxelGrid<T>, OptimizationRun)> {
    optimize_voxel_with(views, init, settings, weights, options, |_, _| {})
}

/// [`optimize_voxel`] with a hook called every `snapshot_every` iterations.
pub fn optimize_voxel_with<T: Real>(
    views: &[ShadowConfiguration<T>],
    init: VoxelGrid<T>,
    settings: &RenderSettings<T>,
    weights: &LossWeights,
    options: &OptimizeOptions<T>,
    mut on_snapshot: impl FnMut(usize, &VoxelGrid<T>),
) -> Result<(VoxelGrid<T>, OptimizationRun)> {
    if views.is_empty() {
        return Err(Error::InvalidArgument("optimization needs at least one view".into()));
    }
    weights.validate()?;
    settings.validate()?;
    let mut grid = init;
    let mut adam = AdamState::new(grid.len(), options.lr);
    adam.eps = options.adam_eps;
    let mut history = Vec::with_capacity(options.budget);
    for iter in 0..options.budget {
        let s = iteration_settings(settings, options.seed, iter);
        let (loss, grad, renders) = voxel_objective(&grid, views, &s, weights)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteGradient { iteration: iter, stage: "voxel loss".into() });
        }
        let (ious, dices) = record_scores(views, &renders)?;
        let l = loss.to_f64_lossy();
        if options.log_every > 0 && iter % options.log_every == 0 {
            let mean = ious.iter().sum::<f64>() / ious.len() as f64;
            info!("voxel iter {iter}: loss {l:.6} mean IoU {mean:.4}");
        }
        history.push(IterationRecord {
            iter,
            l_img: l,
            l_norm: 0.0,
            l_lap: 0.0,
            l_edge: 0.0,
            l_total: l,
            iou: ious,
            dice: dices,
        });
        if options.snapshot_every > 0 && iter % options.snapshot_every == 0 {
            on_snapshot(iter, &grid);
        }
        adam.step(grid.logits_mut(), &grad).map_err(|e| match e {
            Error::NonFiniteGradient { stage, .. } => Error::NonFiniteGradient { iteration: iter, stage },
            other => other,
        })?;
        if grid.logits().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient { iteration: iter, stage: "updated logits".into() });
        }
    }
    let s = iteration_settings(settings, options.seed, options.budget);
    let renders = views
        .iter()
        .map(|v| render_silhouette(&grid, &v.camera, &s))
        .collect::<Result<Vec<_>>>()?;
    let report = final_report(views, &renders)?;
    Ok((
        grid,
        OptimizationRun {
            budget: options.budget,
            seed: options.seed,
            snapshot_every: options.snapshot_every,
            history,
            final_report: report,
        },
    ))
}
