use serde::{Deserialize, Serialize};

use crate::nn::{ParamSet, Tensor2};

/// How the L2 weight enters an Adam step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum L2Mode {
    /// `g <- g + l2 * theta` before the moment updates.
    #[default]
    Coupled,
    /// `theta <- theta - lr * l2 * theta` after the Adam update, outside the moments.
    Decoupled,
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub l2: f64,
    pub l2_mode: L2Mode,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Tensor2>,
    v: Vec<Tensor2>,
}

impl Adam {
    /// Coupled L2; see [`Adam::with_l2_mode`].
    pub fn new(params: &ParamSet, lr: f64, l2: f64) -> Self {
        Self {
            lr,
            l2,
            l2_mode: L2Mode::Coupled,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }

    pub fn with_l2_mode(mut self, mode: L2Mode) -> Self {
        self.l2_mode = mode;
        self
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut ParamSet, grads: &[Tensor2]) {
        assert_eq!(grads.len(), params.len(), "one gradient per parameter");
        self.t += 1;
        let t = self.t as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let (coupled, decay) = match self.l2_mode {
            L2Mode::Coupled => (self.l2, 0.0),
            L2Mode::Decoupled => (0.0, self.lr * self.l2),
        };
        for (((theta, g), m), v) in params.tensors_mut().iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            let cells = theta.data_mut().iter_mut().zip(g.data()).zip(m.data_mut()).zip(v.data_mut());
            for (((th, g), m), v) in cells {
                let gi = g + coupled * *th;
                *m = self.beta1 * *m + (1.0 - self.beta1) * gi;
                *v = self.beta2 * *v + (1.0 - self.beta2) * gi * gi;
                let (mhat, vhat) = (*m / bc1, *v / bc2);
                *th -= self.lr * mhat / (vhat.sqrt() + self.eps) + decay * *th;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(v: f64) -> ParamSet {
        let mut p = ParamSet::new();
        p.add("x", Tensor2::scalar(v));
        p
    }

    #[test]
    fn zero_gradient_no_l2_is_a_no_op() {
        let mut p = one(0.7);
        let mut adam = Adam::new(&p, 0.005, 0.0);
        adam.step(&mut p, &[Tensor2::scalar(0.0)]);
        assert_eq!(p.tensors()[0].item(), 0.7);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = one(1.0);
        let mut adam = Adam::new(&p, 0.005, 0.0);
        adam.step(&mut p, &[Tensor2::scalar(1.0)]);
        // m_hat = 1, v_hat = 1, so the step is lr / (1 + eps).
        let expect = 1.0 - 0.005 / (1.0 + 1e-8);
        assert!((p.tensors()[0].item() - expect).abs() < 1e-15);
    }

    #[test]
    fn quadratic_bowl_converges() {
        let mut p = one(1.0);
        let mut adam = Adam::new(&p, 0.05, 0.0);
        for _ in 0..200 {
            let x = p.tensors()[0].item();
            adam.step(&mut p, &[Tensor2::scalar(2.0 * x)]);
        }
        assert!(p.tensors()[0].item().abs() < 1e-2);
    }

    #[test]
    fn l2_modes_differ_only_in_where_decay_enters() {
        let mut a = one(2.0);
        let mut b = one(2.0);
        let mut coupled = Adam::new(&a, 0.01, 0.5);
        let mut decoupled = Adam::new(&b, 0.01, 0.5).with_l2_mode(L2Mode::Decoupled);
        coupled.step(&mut a, &[Tensor2::scalar(0.0)]);
        decoupled.step(&mut b, &[Tensor2::scalar(0.0)]);
        // Coupled: the normalized step of g = l2 * theta is lr. Decoupled: only lr * l2 * theta.
        assert!((a.tensors()[0].item() - (2.0 - 0.01 / (1.0 + 1e-8))).abs() < 1e-12);
        assert!((b.tensors()[0].item() - (2.0 - 0.01 * 0.5 * 2.0)).abs() < 1e-15);
    }
}
