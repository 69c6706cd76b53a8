use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    SgdMomentum,
    Adam,
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" | "sgd_momentum" => Ok(OptimizerKind::SgdMomentum),
            "adam" => Ok(OptimizerKind::Adam),
            _ => Err(Error::InvalidArgument(format!("unknown optimizer {s:?}"))),
        }
    }
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OptimizerKind::SgdMomentum => "sgd",
            OptimizerKind::Adam => "adam",
        })
    }
}

/// Optimizer hyperparameters plus per-parameter moment buffers.
#[derive(Clone, Debug)]
pub struct OptimizerState<T> {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    steps: u64,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
}

impl<T: Real> OptimizerState<T> {
    pub fn sgd(lr: f64, momentum: f64, weight_decay: f64) -> Result<Self> {
        Self::new(OptimizerKind::SgdMomentum, lr, momentum, weight_decay)
    }

    pub fn adam(lr: f64) -> Result<Self> {
        Self::new(OptimizerKind::Adam, lr, 0.0, 0.0)
    }

    pub fn new(kind: OptimizerKind, lr: f64, momentum: f64, weight_decay: f64) -> Result<Self> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate must be positive, got {lr}")));
        }
        Ok(OptimizerState {
            kind,
            lr,
            momentum,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            steps: 0,
            first: Vec::new(),
            second: Vec::new(),
        })
    }

    pub fn set_lr(&mut self, lr: f64) -> Result<()> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate must be positive, got {lr}")));
        }
        self.lr = lr;
        Ok(())
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps
    }

    fn ensure_buffers(&mut self, params: &[&mut [T]], grads: &[&[T]]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::shape("optimizer", params.len(), grads.len()));
        }
        for (p, g) in params.iter().zip(grads) {
            if p.len() != g.len() {
                return Err(Error::shape("optimizer", p.len(), g.len()));
            }
        }
        if self.first.is_empty() {
            self.first = params.iter().map(|p| vec![T::zero(); p.len()]).collect();
            self.second = params.iter().map(|p| vec![T::zero(); p.len()]).collect();
        } else if self.first.len() != params.len() || self.first.iter().zip(params).any(|(b, p)| b.len() != p.len()) {
            return Err(Error::shape(
                "optimizer buffers",
                self.first.iter().map(Vec::len).collect::<Vec<_>>(),
                params.iter().map(|p| p.len()).collect::<Vec<_>>(),
            ));
        }
        Ok(())
    }

    pub fn step(&mut self, params: Vec<&mut [T]>, grads: Vec<&[T]>) -> Result<()> {
        match self.kind {
            OptimizerKind::SgdMomentum => self.sgd_step(params, grads),
            OptimizerKind::Adam => self.adam_step(params, grads),
        }
    }

    /// v ← μ·v + (g + λ·θ); θ ← θ − lr·v
    pub fn sgd_step(&mut self, mut params: Vec<&mut [T]>, grads: Vec<&[T]>) -> Result<()> {
        if self.kind != OptimizerKind::SgdMomentum {
            return Err(Error::InvalidArgument("sgd_step on a non-SGD optimizer".into()));
        }
        self.ensure_buffers(&params, &grads)?;
        let mu = T::of(self.momentum);
        let wd = T::of(self.weight_decay);
        let lr = T::of(self.lr);
        for ((p, g), v) in params.iter_mut().zip(&grads).zip(&mut self.first) {
            for ((theta, &grad), vel) in p.iter_mut().zip(g.iter()).zip(v.iter_mut()) {
                *vel = mu * *vel + (grad + wd * *theta);
                *theta = *theta - lr * *vel;
            }
        }
        self.steps += 1;
        Ok(())
    }

    /// Bias-corrected Adam.
    pub fn adam_step(&mut self, mut params: Vec<&mut [T]>, grads: Vec<&[T]>) -> Result<()> {
        if self.kind != OptimizerKind::Adam {
            return Err(Error::InvalidArgument("adam_step on a non-Adam optimizer".into()));
        }
        self.ensure_buffers(&params, &grads)?;
        self.steps += 1;
        let t = self.steps as i32;
        let b1 = T::of(self.beta1);
        let b2 = T::of(self.beta2);
        let c1 = T::of(1.0 - self.beta1.powi(t));
        let c2 = T::of(1.0 - self.beta2.powi(t));
        let lr = T::of(self.lr);
        let eps = T::of(self.epsilon);
        let one = T::one();
        for (((p, g), m), v) in params.iter_mut().zip(&grads).zip(&mut self.first).zip(&mut self.second) {
            for (((theta, &grad), m), v) in p.iter_mut().zip(g.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + (one - b1) * grad;
                *v = b2 * *v + (one - b2) * grad * grad;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *theta = *theta - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_sgd(opt: &mut OptimizerState<f64>, theta: &mut [f64], g: &[f64]) {
        opt.step(vec![theta], vec![g]).unwrap();
    }

    #[test]
    fn sgd_single_step() {
        let mut opt = OptimizerState::sgd(1.0, 0.0, 0.0).unwrap();
        let mut theta = [0.0];
        run_sgd(&mut opt, &mut theta, &[1.0]);
        assert_eq!(theta, [-1.0]);
    }

    #[test]
    fn sgd_momentum_two_steps() {
        let mut opt = OptimizerState::sgd(1.0, 0.9, 0.0).unwrap();
        let mut theta = [0.0];
        run_sgd(&mut opt, &mut theta, &[1.0]);
        run_sgd(&mut opt, &mut theta, &[1.0]);
        assert!((theta[0] + 2.9).abs() < 1e-12);
    }

    #[test]
    fn sgd_pure_decay() {
        let mut opt = OptimizerState::sgd(1.0, 0.0, 0.1).unwrap();
        let mut theta = [1.0];
        run_sgd(&mut opt, &mut theta, &[0.0]);
        assert!((theta[0] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn adam_first_step_is_signed_lr() {
        for g in [3.0, -0.02, 1e3] {
            let mut opt = OptimizerState::<f64>::adam(0.01).unwrap();
            let mut theta = [0.5];
            opt.step(vec![&mut theta], vec![&[g]]).unwrap();
            assert!((theta[0] - (0.5 - 0.01 * f64::signum(g))).abs() < 1e-8);
        }
    }

    #[test]
    fn adam_zero_grad_no_change() {
        let mut opt = OptimizerState::<f32>::adam(0.1).unwrap();
        let mut theta = [0.25f32, -1.0];
        opt.step(vec![&mut theta], vec![&[0.0, 0.0]]).unwrap();
        assert_eq!(theta, [0.25, -1.0]);
    }

    #[test]
    fn rejects_bad_lr_and_shapes() {
        assert!(OptimizerState::<f32>::adam(0.0).is_err());
        assert!(OptimizerState::<f32>::sgd(-1.0, 0.9, 0.0).is_err());
        let mut opt = OptimizerState::<f32>::adam(0.1).unwrap();
        let mut theta = [0.0f32; 2];
        assert!(opt.step(vec![&mut theta], vec![&[0.0]]).is_err());
        let mut sgd = OptimizerState::<f32>::sgd(0.1, 0.9, 0.0).unwrap();
        assert!(sgd.adam_step(vec![&mut theta], vec![&[0.0, 0.0]]).is_err());
    }

    #[test]
    fn deterministic_given_state() {
        let grads = [0.3, -0.7, 0.01];
        let mut a = OptimizerState::<f64>::adam(1e-3).unwrap();
        let mut b = a.clone();
        let (mut ta, mut tb) = ([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]);
        for _ in 0..5 {
            a.step(vec![&mut ta], vec![&grads]).unwrap();
            b.step(vec![&mut tb], vec![&grads]).unwrap();
        }
        assert_eq!(ta, tb);
    }
}
