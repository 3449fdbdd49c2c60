//! Adam optimizer over flat parameter buffers.

use crate::error::{Error, Result};

/// Moment accumulators, one pair of buffers per parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(lr: f64, shapes: &[usize]) -> AdamState {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// One bias-corrected update. `params` and `grads` must match the
    /// shapes this state was built with.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Shape(format!(
                "adam state holds {} tensors, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            if p.len() != m.len() || g.len() != m.len() {
                return Err(Error::Shape(format!(
                    "parameter buffer of {} values does not match state of {}",
                    p.len(),
                    m.len()
                )));
            }
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut state = AdamState::new(0.1, &[3]);
        let mut p = vec![1.0, -2.0, 0.5];
        let orig = p.clone();
        state.step(&mut [&mut p], &[&[0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(p, orig);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // constant gradient 1: m_hat = 1, v_hat = 1, step = -lr/(1 + eps)
        let mut state = AdamState::new(0.1, &[1]);
        let mut p = vec![0.0];
        state.step(&mut [&mut p], &[&[1.0]]).unwrap();
        assert!((p[0] + 0.1).abs() < 1e-8, "got {}", p[0]);
    }

    #[test]
    fn identical_runs_are_identical() {
        let run = || {
            let mut state = AdamState::new(0.05, &[2, 1]);
            let mut a = vec![0.3, -0.7];
            let mut b = vec![2.0];
            for k in 0..50 {
                let g1 = [a[0] * 0.5 + k as f64 * 0.01, -a[1]];
                let g2 = [b[0].sin()];
                state.step(&mut [&mut a, &mut b], &[&g1, &g2]).unwrap();
            }
            (a, b)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn shape_mismatch_is_error() {
        let mut state = AdamState::new(0.1, &[2]);
        let mut p = vec![0.0; 3];
        assert!(state.step(&mut [&mut p], &[&[1.0, 1.0, 1.0]]).is_err());
    }

    #[test]
    fn converges_on_quadratic() {
        let mut state = AdamState::new(0.1, &[1]);
        let mut p = vec![5.0];
        for _ in 0..2000 {
            let g = [2.0 * p[0]];
            state.step(&mut [&mut p], &[&g]).unwrap();
        }
        assert!(p[0].abs() < 1e-3, "got {}", p[0]);
    }
}
