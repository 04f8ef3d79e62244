use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::Real;

/// Coordinates whose magnitude is below this fraction of the largest
/// gradient entry are compared against that floor instead of themselves.
const RELATIVE_FLOOR: f64 = 1e-4;
const DEFAULT_COORDS: usize = 64;

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub mean_rel_error: f64,
    pub tolerance: f64,
    pub checked: Vec<usize>,
    pub failing: Vec<usize>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failing.is_empty()
    }
}

/// Compares `f`'s analytic gradient with central differences on a random
/// subset of at least 64 coordinates (all of them for small problems).
///
/// The error of coordinate `i` is `|a − n| / max(|a|, |n|, floor)` where
/// `floor` is 1e-4 of the largest gradient magnitude seen.
pub fn gradient_check<T: Real>(
    f: impl FnMut(&[T]) -> (T, Vec<T>),
    params: &[T],
    eps: T,
    tolerance: f64,
) -> GradCheckReport {
    let coords = if params.len() <= DEFAULT_COORDS {
        (0..params.len()).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
        let mut c = sample(&mut rng, params.len(), DEFAULT_COORDS).into_vec();
        c.sort_unstable();
        c
    };
    gradient_check_coords(f, params, &coords, eps, tolerance)
}

/// [`gradient_check`] restricted to the given coordinates.
pub fn gradient_check_coords<T: Real>(
    mut f: impl FnMut(&[T]) -> (T, Vec<T>),
    params: &[T],
    coords: &[usize],
    eps: T,
    tolerance: f64,
) -> GradCheckReport {
    let (_, analytic) = f(params);
    let mut x = params.to_vec();
    let numeric: Vec<f64> = coords
        .iter()
        .map(|&i| {
            let orig = x[i];
            x[i] = orig + eps;
            let plus = f(&x).0;
            x[i] = orig - eps;
            let minus = f(&x).0;
            x[i] = orig;
            ((plus - minus) / (eps + eps)).to_f64_lossy()
        })
        .collect();
    let scale = coords
        .iter()
        .zip(&numeric)
        .map(|(&i, n)| analytic[i].to_f64_lossy().abs().max(n.abs()))
        .fold(0.0, f64::max);
    let floor = (scale * RELATIVE_FLOOR).max(f64::MIN_POSITIVE);
    let errors: Vec<f64> = coords
        .iter()
        .zip(&numeric)
        .map(|(&i, &n)| {
            let a = analytic[i].to_f64_lossy();
            (a - n).abs() / a.abs().max(n.abs()).max(floor)
        })
        .collect();
    let failing = coords
        .iter()
        .zip(&errors)
        .filter(|(_, &e)| !(e <= tolerance))
        .map(|(&i, _)| i)
        .collect();
    GradCheckReport {
        max_rel_error: errors.iter().copied().fold(0.0, f64::max),
        mean_rel_error: errors.iter().sum::<f64>() / errors.len().max(1) as f64,
        tolerance,
        checked: coords.to_vec(),
        failing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let f = |x: &[f64]| {
            let v = x.iter().enumerate().map(|(i, t)| (i as f64 + 1.0) * t * t).sum();
            let g = x.iter().enumerate().map(|(i, t)| 2.0 * (i as f64 + 1.0) * t).collect();
            (v, g)
        };
        let x: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let r = gradient_check(f, &x, 1e-4, 1e-8);
        assert_eq!(r.checked.len(), 64);
        assert!(r.passed(), "max rel error {}", r.max_rel_error);
    }

    #[test]
    fn wrong_gradient_is_flagged() {
        let f = |x: &[f64]| (x[0] * x[0] + x[1], vec![2.0 * x[0], 2.0]);
        let r = gradient_check(f, &[1.0, 1.0], 1e-5, 1e-6);
        assert_eq!(r.failing, vec![1]);
    }
}
