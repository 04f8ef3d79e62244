use serde::{Deserialize, Serialize};

use crate::silhouette::Image;
use crate::{Error, Real, Result};

/// Weights of the image loss (`l1`, `l2`) and of the mesh objective
/// (`img`, `norm`, `lap`, `edge`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub l1: f64,
    pub l2: f64,
    pub img: f64,
    pub norm: f64,
    pub lap: f64,
    pub edge: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            l1: 10.0,
            l2: 10.0,
            img: 1.6,
            norm: 2.1,
            lap: 0.9,
            edge: 1.8,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.l1, self.l2, self.img, self.norm, self.lap, self.edge];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidArgument("loss weights must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// `λ1·mean|r − t| + λ2·mean(r − t)²` and its per-pixel gradient
/// `λ1·sign(r − t)/P + 2λ2(r − t)/P`, with `sign(0) = 0`.
pub fn image_loss<T: Real>(
    rendered: &Image<T>,
    target: &Image<T>,
    weights: &LossWeights,
) -> Result<(T, Image<T>)> {
    rendered.same_shape(target)?;
    let p = T::from_usize_lossy(rendered.len());
    let (l1, l2) = (T::lit(weights.l1), T::lit(weights.l2));
    let mut abs_sum = T::zero();
    let mut sq_sum = T::zero();
    let grad: Vec<T> = rendered
        .data()
        .iter()
        .zip(target.data())
        .map(|(&r, &t)| {
            let d = r - t;
            abs_sum += d.abs();
            sq_sum += d * d;
            (l1 * d.sign0() + T::two() * l2 * d) / p
        })
        .collect();
    let loss = l1 * abs_sum / p + l2 * sq_sum / p;
    Ok((loss, Image::new(rendered.width(), rendered.height(), grad)?))
}

/// Component values of the mesh objective, all evaluated on the same deformed mesh.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeshLossTerms<T> {
    pub img: T,
    pub norm: T,
    pub lap: T,
    pub edge: T,
}

/// `λa·L_img + λb·L_norm + λc·L_lap + λd·L_edge`.
pub fn total_mesh_loss<T: Real>(terms: &MeshLossTerms<T>, weights: &LossWeights) -> T {
    T::lit(weights.img) * terms.img
        + T::lit(weights.norm) * terms.norm
        + T::lit(weights.lap) * terms.lap
        + T::lit(weights.edge) * terms.edge
}
