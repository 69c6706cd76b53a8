//! Fixed-order layer stack with cached forward state for explicit backprop.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

use super::{
    batchnorm, batchnorm_backward, conv2d, conv2d_backward, maxpool2, maxpool2_backward, relu, relu_backward,
    BatchNormCache, BatchNormParams, PoolIndices, Real, Tensor,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Train,
    Infer,
}

/// One executable step. Indices refer to [`Network::layers`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Conv(usize),
    BatchNorm(usize),
    Pool,
    Relu,
}

/// Weights of one convolution layer and the batch normalization that
/// follows it, if any.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams<T> {
    /// out_ch × in_ch × k × k
    pub weights: Tensor<T>,
    pub bias: Vec<T>,
    pub bn: Option<BatchNormParams<T>>,
}

impl<T: Real> LayerParams<T> {
    /// Kaiming-normal weights (std = sqrt(2 / fan_in)), zero bias.
    pub fn kaiming(in_ch: usize, out_ch: usize, k: usize, with_bn: bool, rng: &mut ChaCha8Rng) -> Self {
        let fan_in = (in_ch * k * k) as f64;
        let normal = Normal::new(0.0, (2.0 / fan_in).sqrt()).expect("positive std");
        let data = (0..out_ch * in_ch * k * k)
            .map(|_| T::of(normal.sample(rng)))
            .collect();
        LayerParams {
            weights: Tensor::from_vec([out_ch, in_ch, k, k], data).expect("sized"),
            bias: vec![T::zero(); out_ch],
            bn: with_bn.then(|| BatchNormParams::new(out_ch)),
        }
    }

    pub fn kernel(&self) -> usize {
        self.weights.h()
    }

    pub fn out_channels(&self) -> usize {
        self.weights.n()
    }

    pub fn in_channels(&self) -> usize {
        self.weights.c()
    }

    /// Conv weights and bias, then BN gamma and beta.
    fn trainable_mut(&mut self) -> Vec<&mut [T]> {
        let mut v: Vec<&mut [T]> = vec![self.weights.data_mut(), &mut self.bias];
        if let Some(bn) = &mut self.bn {
            v.push(&mut bn.gamma);
            v.push(&mut bn.beta);
        }
        v
    }
}

/// Gradients for one [`LayerParams`]; `gamma`/`beta` are empty without BN.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrads<T> {
    pub weights: Vec<T>,
    pub bias: Vec<T>,
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
}

impl<T: Real> LayerGrads<T> {
    fn zeros_like(p: &LayerParams<T>) -> Self {
        let bn = p.bn.as_ref().map_or(0, |b| b.channels());
        LayerGrads {
            weights: vec![T::zero(); p.weights.len()],
            bias: vec![T::zero(); p.bias.len()],
            gamma: vec![T::zero(); bn],
            beta: vec![T::zero(); bn],
        }
    }

    /// Same order as the network's trainable parameters.
    pub fn slices(&self) -> Vec<&[T]> {
        let mut v: Vec<&[T]> = vec![&self.weights, &self.bias];
        if !self.gamma.is_empty() {
            v.push(&self.gamma);
            v.push(&self.beta);
        }
        v
    }
}

enum Saved<T> {
    Input(Tensor<T>),
    Bn(BatchNormCache<T>),
    Pool(PoolIndices),
}

pub struct Network<T> {
    pub layers: Vec<LayerParams<T>>,
    pub steps: Vec<Step>,
    cache: Option<Vec<Saved<T>>>,
}

impl<T: Real> Clone for Network<T> {
    fn clone(&self) -> Self {
        Network {
            layers: self.layers.clone(),
            steps: self.steps.clone(),
            cache: None,
        }
    }
}

impl<T: Real> std::fmt::Debug for Network<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Network")
            .field("layers", &self.layers.len())
            .field("steps", &self.steps)
            .finish()
    }
}

impl<T: Real> Network<T> {
    pub fn new(layers: Vec<LayerParams<T>>, steps: Vec<Step>) -> Result<Self> {
        for s in &steps {
            match *s {
                Step::Conv(i) if i >= layers.len() => {
                    return Err(Error::InvalidArgument(format!("step refers to missing layer {i}")))
                }
                Step::BatchNorm(i) if layers.get(i).and_then(|l| l.bn.as_ref()).is_none() => {
                    return Err(Error::InvalidArgument(format!("layer {i} has no batch normalization")))
                }
                _ => {}
            }
        }
        Ok(Network {
            layers,
            steps,
            cache: None,
        })
    }

    /// Forward pass. In `Train` mode the per-step state needed by
    /// [`Network::backward`] is kept and BN running statistics are updated.
    pub fn forward(&mut self, input: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let mut saved = Vec::with_capacity(self.steps.len());
        let mut x = input.clone();
        for &step in &self.steps {
            x = match step {
                Step::Conv(i) => {
                    let l = &self.layers[i];
                    let y = conv2d(&x, &l.weights, &l.bias)?;
                    saved.push(Saved::Input(x));
                    y
                }
                Step::BatchNorm(i) => {
                    let bn = self.layers[i].bn.as_mut().expect("validated in new");
                    let (y, c) = batchnorm(&x, bn, mode)?;
                    saved.push(Saved::Bn(c));
                    y
                }
                Step::Pool => {
                    let (y, idx) = maxpool2(&x)?;
                    saved.push(Saved::Pool(idx));
                    y
                }
                Step::Relu => {
                    let y = relu(&x);
                    saved.push(Saved::Input(x));
                    y
                }
            };
        }
        self.cache = Some(saved);
        Ok(x)
    }

    /// Inference with running BN statistics; keeps no state.
    pub fn infer(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let mut x = input.clone();
        for &step in &self.steps {
            x = match step {
                Step::Conv(i) => conv2d(&x, &self.layers[i].weights, &self.layers[i].bias)?,
                Step::BatchNorm(i) => {
                    let mut bn = self.layers[i].bn.clone().expect("validated in new");
                    batchnorm(&x, &mut bn, Mode::Infer)?.0
                }
                Step::Pool => maxpool2(&x)?.0,
                Step::Relu => relu(&x),
            };
        }
        Ok(x)
    }

    /// Reverse pass from the gradient of the loss with respect to the network
    /// output. Consumes the cache of the last [`Network::forward`].
    pub fn backward(&mut self, grad_out: &Tensor<T>) -> Result<(Vec<LayerGrads<T>>, Tensor<T>)> {
        let saved = self.cache.take().ok_or(Error::NoForwardCache)?;
        let mut grads: Vec<LayerGrads<T>> = self.layers.iter().map(LayerGrads::zeros_like).collect();
        let mut g = grad_out.clone();
        for (&step, state) in self.steps.iter().zip(saved.iter()).rev() {
            g = match (step, state) {
                (Step::Conv(i), Saved::Input(x)) => {
                    let l = &self.layers[i];
                    let cg = conv2d_backward(x, &l.weights, &l.bias, &g)?;
                    add_into(&mut grads[i].weights, &cg.weights);
                    add_into(&mut grads[i].bias, &cg.bias);
                    cg.input
                }
                (Step::BatchNorm(i), Saved::Bn(c)) => {
                    let bn = self.layers[i].bn.as_ref().expect("validated in new");
                    let (dx, dg, db) = batchnorm_backward(c, bn, &g)?;
                    add_into(&mut grads[i].gamma, &dg);
                    add_into(&mut grads[i].beta, &db);
                    dx
                }
                (Step::Pool, Saved::Pool(idx)) => maxpool2_backward(idx, &g)?,
                (Step::Relu, Saved::Input(x)) => relu_backward(x, &g)?,
                _ => unreachable!("cache recorded in step order"),
            };
        }
        Ok((grads, g))
    }

    pub fn has_cache(&self) -> bool {
        self.cache.is_some()
    }

    /// Trainable parameter slices in a stable order.
    pub fn params_mut(&mut self) -> Vec<&mut [T]> {
        self.layers.iter_mut().flat_map(|l| l.trainable_mut()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len() + l.bn.as_ref().map_or(0, |b| 2 * b.channels()))
            .sum()
    }

    pub fn cast<U: Real>(&self) -> Network<U> {
        let cast_vec = |v: &[T]| v.iter().map(|x| U::of(x.as_f64())).collect::<Vec<U>>();
        let layers = self
            .layers
            .iter()
            .map(|l| LayerParams {
                weights: l.weights.cast(),
                bias: cast_vec(&l.bias),
                bn: l.bn.as_ref().map(|b| BatchNormParams {
                    gamma: cast_vec(&b.gamma),
                    beta: cast_vec(&b.beta),
                    running_mean: cast_vec(&b.running_mean),
                    running_var: cast_vec(&b.running_var),
                    momentum: U::of(b.momentum.as_f64()),
                    eps: U::of(b.eps.as_f64()),
                }),
            })
            .collect();
        Network {
            layers,
            steps: self.steps.clone(),
            cache: None,
        }
    }
}

fn add_into<T: Real>(acc: &mut [T], v: &[T]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a = *a + *b;
    }
}

/// Seeded generator shared by weight initialization and data sampling.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(seed: u64) -> Network<f64> {
        let mut rng = seeded_rng(seed);
        let layers = vec![
            LayerParams::kaiming(1, 2, 3, true, &mut rng),
            LayerParams::kaiming(2, 3, 2, false, &mut rng),
        ];
        Network::new(
            layers,
            vec![Step::Conv(0), Step::BatchNorm(0), Step::Relu, Step::Pool, Step::Conv(1)],
        )
        .unwrap()
    }

    fn input() -> Tensor<f64> {
        Tensor::from_vec([2, 1, 7, 7], (0..98).map(|i| ((i * 31) % 19) as f64 / 19.0).collect()).unwrap()
    }

    #[test]
    fn backward_requires_forward() {
        let mut net = tiny(1);
        let err = net.backward(&Tensor::zeros([2, 3, 2, 2])).unwrap_err();
        assert!(matches!(err, Error::NoForwardCache));
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let mut net = tiny(2);
        let y = net.forward(&input(), Mode::Train).unwrap();
        let (grads, gin) = net.backward(&Tensor::zeros(y.shape())).unwrap();
        for g in &grads {
            assert!(g.slices().iter().all(|s| s.iter().all(|&v| v == 0.0)));
        }
        assert!(gin.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradients_are_linear_in_upstream() {
        let mut net = tiny(3);
        let y = net.forward(&input(), Mode::Train).unwrap();
        let up = Tensor::from_vec(y.shape(), (0..y.len()).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let (g1, _) = net.backward(&up).unwrap();
        net.forward(&input(), Mode::Train).unwrap();
        let doubled = Tensor::from_vec(y.shape(), up.data().iter().map(|v| 2.0 * v).collect()).unwrap();
        let (g2, _) = net.backward(&doubled).unwrap();
        for (a, b) in g1.iter().zip(&g2) {
            for (sa, sb) in a.slices().iter().zip(b.slices()) {
                for (x, y) in sa.iter().zip(sb.iter()) {
                    assert!((2.0 * x - y).abs() <= 1e-12 * (1.0 + y.abs()));
                }
            }
        }
    }

    #[test]
    fn infer_matches_forward_in_infer_mode() {
        let mut net = tiny(4);
        net.forward(&input(), Mode::Train).unwrap();
        let a = net.infer(&input()).unwrap();
        let b = net.forward(&input(), Mode::Infer).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bn_step_without_bn() {
        let mut rng = seeded_rng(0);
        let layers = vec![LayerParams::<f32>::kaiming(1, 1, 3, false, &mut rng)];
        assert!(Network::new(layers, vec![Step::Conv(0), Step::BatchNorm(0)]).is_err());
    }

    #[test]
    fn init_is_seeded() {
        assert_eq!(tiny(9).layers, tiny(9).layers);
        assert_ne!(tiny(9).layers, tiny(10).layers);
    }
}
