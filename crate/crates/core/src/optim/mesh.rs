use log::info;

use super::voxel::{final_report, record_scores};
use super::{image_loss, total_mesh_loss, AdamState, IterationRecord, LossWeights, MeshLossTerms, OptimizationRun, OptimizeOptions};
use crate::geometry::Vec3;
use crate::mesh::{deform, soft_silhouette, soft_silhouette_backward, DisplacementField, MeshTopology, SoftRasterSettings, TriangleMesh};
use crate::shadow::ShadowConfiguration;
use crate::silhouette::Image;
use crate::{Error, Real, Result};

/// Value, per-vertex gradient, component terms and renders of the mesh objective.
pub struct MeshObjective<T> {
    pub total: T,
    pub terms: MeshLossTerms<T>,
    pub grad: Vec<Vec3<T>>,
    pub renders: Vec<Image<T>>,
}

/// Weighted mesh objective on `mesh`. Terms whose weight is zero are skipped.
pub fn mesh_objective<T: Real>(
    mesh: &TriangleMesh<T>,
    topology: &MeshTopology,
    views: &[ShadowConfiguration<T>],
    settings: &SoftRasterSettings<T>,
    weights: &LossWeights,
) -> Result<MeshObjective<T>> {
    let n = mesh.num_vertices();
    let mut grad = vec![Vec3::zero(); n];
    let mut terms = MeshLossTerms::default();
    let mut renders = Vec::with_capacity(views.len());
    let add = |grad: &mut [Vec3<T>], g: &[Vec3<T>], w: T| {
        for (a, &b) in grad.iter_mut().zip(g) {
            *a += b * w;
        }
    };

    let w_img = T::lit(weights.img);
    for view in views {
        let rendered = soft_silhouette(mesh, &view.camera, settings)?;
        let (loss, upstream) = image_loss(&rendered, view.target.image(), weights)?;
        terms.img += loss;
        if weights.img > 0.0 {
            let g = soft_silhouette_backward(mesh, &view.camera, settings, &upstream)?;
            add(&mut grad, &g, w_img);
        }
        renders.push(rendered);
    }
    if weights.norm > 0.0 {
        let (l, g) = topology.normal_consistency(mesh.vertices());
        terms.norm = l;
        add(&mut grad, &g, T::lit(weights.norm));
    }
    if weights.lap > 0.0 {
        let (l, g) = topology.laplacian(mesh.vertices())?;
        terms.lap = l;
        add(&mut grad, &g, T::lit(weights.lap));
    }
    if weights.edge > 0.0 {
        let (l, g) = topology.edge_length(mesh.vertices());
        terms.edge = l;
        add(&mut grad, &g, T::lit(weights.edge));
    }
    Ok(MeshObjective {
        total: total_mesh_loss(&terms, weights),
        terms,
        grad,
        renders,
    })
}

/// Learns per-vertex displacements of `src` minimizing the weighted mesh objective.
pub fn optimize_mesh<T: Real>(
    views: &[ShadowConfiguration<T>],
    src: &TriangleMesh<T>,
    settings: &SoftRasterSettings<T>,
    weights: &LossWeights,
    options: &OptimizeOptions<T>,
) -> Result<(TriangleMesh<T>, OptimizationRun)> {
    optimize_mesh_with(views, src, settings, weights, options, |_, _| {})
}

/// [`optimize_mesh`] with a hook called every `snapshot_every` iterations.
pub fn optimize_mesh_with<T: Real>(
    views: &[ShadowConfiguration<T>],
    src: &TriangleMesh<T>,
    settings: &SoftRasterSettings<T>,
    weights: &LossWeights,
    options: &OptimizeOptions<T>,
    mut on_snapshot: impl FnMut(usize, &TriangleMesh<T>),
) -> Result<(TriangleMesh<T>, OptimizationRun)> {
    if views.is_empty() {
        return Err(Error::InvalidArgument("optimization needs at least one view".into()));
    }
    if src.is_empty() {
        return Err(Error::InvalidArgument("source mesh has no faces".into()));
    }
    weights.validate()?;
    settings.validate()?;
    let topology = MeshTopology::new(src.num_vertices(), src.faces());
    let n = src.num_vertices();
    let mut params = vec![T::zero(); 3 * n];
    let mut adam = AdamState::new(3 * n, options.lr);
    adam.eps = options.adam_eps;
    let mut history = Vec::with_capacity(options.budget);
    let field = |p: &[T]| DisplacementField {
        offsets: p.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect(),
    };

    for iter in 0..options.budget {
        let mesh = deform(src, &field(&params))?;
        let obj = mesh_objective(&mesh, &topology, views, settings, weights)?;
        if !obj.total.is_finite() {
            return Err(Error::NonFiniteGradient { iteration: iter, stage: "mesh loss".into() });
        }
        let (ious, dices) = record_scores(views, &obj.renders)?;
        let t = obj.terms;
        if options.log_every > 0 && iter % options.log_every == 0 {
            let mean = ious.iter().sum::<f64>() / ious.len() as f64;
            info!("mesh iter {iter}: loss {:.6} mean IoU {mean:.4}", obj.total.to_f64_lossy());
        }
        history.push(IterationRecord {
            iter,
            l_img: t.img.to_f64_lossy(),
            l_norm: t.norm.to_f64_lossy(),
            l_lap: t.lap.to_f64_lossy(),
            l_edge: t.edge.to_f64_lossy(),
            l_total: obj.total.to_f64_lossy(),
            iou: ious,
            dice: dices,
        });
        if options.snapshot_every > 0 && iter % options.snapshot_every == 0 {
            on_snapshot(iter, &mesh);
        }
        let flat: Vec<T> = obj.grad.iter().flat_map(|g| g.to_array()).collect();
        adam.step(&mut params, &flat).map_err(|e| match e {
            Error::NonFiniteGradient { stage, .. } => Error::NonFiniteGradient { iteration: iter, stage },
            other => other,
        })?;
    }
    let mesh = deform(src, &field(&params))?;
    let renders = views
        .iter()
        .map(|v| soft_silhouette(&mesh, &v.camera, settings))
        .collect::<Result<Vec<_>>>()?;
    let report = final_report(views, &renders)?;
    Ok((
        mesh,
        OptimizationRun {
            budget: options.budget,
            seed: options.seed,
            snapshot_every: options.snapshot_every,
            history,
            final_report: report,
        },
    ))
}
