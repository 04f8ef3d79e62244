use crate::{Error, Real, Result};

/// Bias-corrected Adam moments for one flat parameter vector.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    m: Vec<T>,
    v: Vec<T>,
    step: u64,
}

impl<T: Real> AdamState<T> {
    /// β1 = 0.9, β2 = 0.999, ε = 1e-8.
    pub fn new(len: usize, lr: T) -> Self {
        Self {
            lr,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// Applies one update in place. Non-finite gradients abort before any
    /// parameter or moment is touched.
    pub fn step(&mut self, params: &mut [T], grads: &[T]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::LengthMismatch {
                expected: self.m.len(),
                found: if params.len() != self.m.len() { params.len() } else { grads.len() },
            });
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient {
                iteration: self.step as usize,
                stage: format!("gradient coordinate {i}"),
            });
        }
        self.step += 1;
        let t = i32::try_from(self.step).unwrap_or(i32::MAX);
        let one = T::one();
        let c1 = one - self.beta1.powi(t);
        let c2 = one - self.beta2.powi(t);
        for ((p, &g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = self.beta1 * *m + (one - self.beta1) * g;
            *v = self.beta2 * *v + (one - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

pub fn adam_step<T: Real>(params: &mut [T], grads: &[T], state: &mut AdamState<T>) -> Result<()> {
    state.step(params, grads)
}
