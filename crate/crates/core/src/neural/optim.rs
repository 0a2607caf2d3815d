use serde::{Deserialize, Serialize};

use super::{Gradients, Mlp, NeuralError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Adam,
    /// Plain `θ ← θ − α·g`.
    Sgd,
}

/// Adam moments and step counter, shaped like the network it updates.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl OptimizerState {
    pub fn adam(num_params: usize, learning_rate: f64) -> Self {
        Self::new(OptimizerKind::Adam, num_params, learning_rate)
    }

    pub fn new(kind: OptimizerKind, num_params: usize, learning_rate: f64) -> Self {
        Self { kind, learning_rate, beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, m: vec![0.0; num_params], v: vec![0.0; num_params] }
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    /// Applies one bias-corrected update in place.
    pub fn apply(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.m.len() {
            return Err(NeuralError::ShapeMismatch { expected: self.m.len(), found: grads.len().min(params.len()) });
        }
        self.step += 1;
        let lr = self.learning_rate;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    *p -= lr * g;
                }
            }
            OptimizerKind::Adam => {
                let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
                let c1 = 1.0 - b1.powi(self.step as i32);
                let c2 = 1.0 - b2.powi(self.step as i32);
                for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    let m_hat = *m / c1;
                    let v_hat = *v / c2;
                    *p -= lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
        Ok(())
    }

    /// `optimizer_step`: update `net` with `grads`.
    pub fn step_network(&mut self, net: &mut Mlp, grads: &Gradients) -> Result<()> {
        self.apply(net.params_mut(), &grads.0)
    }
}

/// Scales `grads` so its L2 norm is at most `max_norm`; returns the original norm.
pub fn clip_global_norm(grads: &mut Gradients, max_norm: f64) -> f64 {
    let norm = grads.0.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        grads.0.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

/// Overwrites `target` with an independent deep copy of `online`.
pub fn copy_into_target(online: &Mlp, target: &mut Mlp) {
    target.clone_from(online);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{init_network, Q_NETWORK_DIMS};

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut net = init_network(&Q_NETWORK_DIMS, 1).unwrap();
        let before = net.clone();
        let mut opt = OptimizerState::adam(net.params().len(), 1e-3);
        let zeros = Gradients(vec![0.0; net.params().len()]);
        for _ in 0..5 {
            opt.step_network(&mut net, &zeros).unwrap();
        }
        assert_eq!(net, before);
    }

    #[test]
    fn first_step_closed_form() {
        // From zero moments, step 1: m̂ = g, v̂ = g², update = α g / (|g| + ε).
        let mut opt = OptimizerState::adam(1, 0.1);
        let mut x = [3.0];
        let g = 2.0 * x[0]; // d/dx x²
        opt.apply(&mut x, &[g]).unwrap();
        assert!((x[0] - (3.0 - 0.1 * g / (g.abs() + 1e-8))).abs() < 1e-15);
        // second step with g = 2 * x1
        let g2 = 2.0 * x[0];
        let m = 0.9 * (0.1 * g) + 0.1 * g2;
        let v = 0.999 * (0.001 * g * g) + 0.001 * g2 * g2;
        let expected = x[0] - 0.1 * (m / (1.0 - 0.81)) / ((v / (1.0 - 0.999f64.powi(2))).sqrt() + 1e-8);
        opt.apply(&mut x, &[g2]).unwrap();
        assert!((x[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn quadratic_descends_after_warmup() {
        // f(x) = Σ c_i x_i², 200 Adam steps
        let c = [1.0, 4.0, 0.5];
        let mut x = [2.0, -1.0, 3.0];
        let f = |x: &[f64; 3]| x.iter().zip(&c).map(|(v, c)| c * v * v).sum::<f64>();
        let mut opt = OptimizerState::adam(3, 0.01);
        let mut history = vec![f(&x)];
        for _ in 0..200 {
            let g: Vec<f64> = x.iter().zip(&c).map(|(v, c)| 2.0 * c * v).collect();
            opt.apply(&mut x, &g).unwrap();
            history.push(f(&x));
        }
        for w in history[10..].windows(2) {
            assert!(w[1] < w[0], "{} !< {}", w[1], w[0]);
        }
        assert!(history[200] < 0.2 * history[0]);
    }

    #[test]
    fn sgd_variant() {
        let mut opt = OptimizerState::new(OptimizerKind::Sgd, 2, 0.5);
        let mut p = [1.0, 1.0];
        opt.apply(&mut p, &[2.0, -2.0]).unwrap();
        assert_eq!(p, [0.0, 2.0]);
    }

    #[test]
    fn shape_mismatch() {
        let mut opt = OptimizerState::adam(3, 0.1);
        assert!(opt.apply(&mut [0.0; 3], &[0.0; 2]).is_err());
    }

    #[test]
    fn clipping() {
        let mut g = Gradients(vec![3.0, 4.0]);
        assert_eq!(clip_global_norm(&mut g, 10.0), 5.0);
        assert_eq!(g.0, vec![3.0, 4.0]);
        clip_global_norm(&mut g, 1.0);
        assert!((g.0[0] - 0.6).abs() < 1e-15 && (g.0[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn target_copy_is_independent() {
        let mut online = init_network(&Q_NETWORK_DIMS, 1).unwrap();
        let mut target = init_network(&Q_NETWORK_DIMS, 2).unwrap();
        copy_into_target(&online, &mut target);
        assert_eq!(target, online);
        assert_eq!(target.checksum(), online.checksum());
        online.params_mut()[0] += 1.0;
        assert_ne!(target, online);
        let snapshot = target.clone();
        copy_into_target(&snapshot, &mut target);
        assert_eq!(target, snapshot);
    }
}
