use crate::error::{Error, Result};

use super::{Mode, Real, Tensor};

pub const DEFAULT_EPS: f64 = 1e-5;
pub const DEFAULT_MOMENTUM: f64 = 0.1;

/// Per-channel batch normalization state.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchNormParams<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub running_mean: Vec<T>,
    /// Always strictly positive.
    pub running_var: Vec<T>,
    pub momentum: T,
    pub eps: T,
}

impl<T: Real> BatchNormParams<T> {
    pub fn new(channels: usize) -> Self {
        BatchNormParams {
            gamma: vec![T::one(); channels],
            beta: vec![T::zero(); channels],
            running_mean: vec![T::zero(); channels],
            running_var: vec![T::one(); channels],
            momentum: T::of(DEFAULT_MOMENTUM),
            eps: T::of(DEFAULT_EPS),
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }
}

/// What the backward pass needs from a forward call.
#[derive(Clone, Debug)]
pub struct BatchNormCache<T> {
    pub mode: Mode,
    pub normalized: Tensor<T>,
    pub inv_std: Vec<T>,
}

/// Normalizes each channel. `Train` uses batch statistics (biased variance)
/// and folds them into the running estimates (unbiased variance); `Infer`
/// uses the running estimates only.
pub fn batchnorm<T: Real>(
    input: &Tensor<T>,
    params: &mut BatchNormParams<T>,
    mode: Mode,
) -> Result<(Tensor<T>, BatchNormCache<T>)> {
    let [n, c, h, w] = input.shape();
    if c != params.channels() {
        return Err(Error::shape("batchnorm", input.shape(), params.channels()));
    }
    let hw = h * w;
    let count = n * hw;
    let (mean, var) = match mode {
        Mode::Train => {
            if count < 2 {
                return Err(Error::InvalidArgument(format!(
                    "batchnorm in train mode needs at least 2 values per channel, got {count}"
                )));
            }
            let inv = T::one() / T::from_usize(count).unwrap();
            let mut mean = vec![T::zero(); c];
            let mut var = vec![T::zero(); c];
            for ch in 0..c {
                let mut s = 0.0f64;
                for b in 0..n {
                    s += input.plane(b, ch).iter().map(|v| v.as_f64()).sum::<f64>();
                }
                let m = s / count as f64;
                let mut sq = 0.0f64;
                for b in 0..n {
                    sq += input.plane(b, ch).iter().map(|v| (v.as_f64() - m).powi(2)).sum::<f64>();
                }
                mean[ch] = T::of(m);
                var[ch] = T::of(sq) * inv;
            }
            let unbias = T::from_usize(count).unwrap() / T::from_usize(count - 1).unwrap();
            let mom = params.momentum;
            for ch in 0..c {
                params.running_mean[ch] = (T::one() - mom) * params.running_mean[ch] + mom * mean[ch];
                params.running_var[ch] = (T::one() - mom) * params.running_var[ch] + mom * var[ch] * unbias;
            }
            (mean, var)
        }
        Mode::Infer => (params.running_mean.clone(), params.running_var.clone()),
    };

    let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + params.eps).sqrt()).collect();
    let mut normalized = Tensor::zeros(input.shape());
    let mut out = Tensor::zeros(input.shape());
    {
        let src = input.data();
        let xh = normalized.data_mut();
        for b in 0..n {
            for ch in 0..c {
                let base = (b * c + ch) * hw;
                for i in base..base + hw {
                    xh[i] = (src[i] - mean[ch]) * inv_std[ch];
                }
            }
        }
    }
    {
        let xh = normalized.data();
        let y = out.data_mut();
        for b in 0..n {
            for ch in 0..c {
                let base = (b * c + ch) * hw;
                for i in base..base + hw {
                    y[i] = params.gamma[ch] * xh[i] + params.beta[ch];
                }
            }
        }
    }
    Ok((
        out,
        BatchNormCache {
            mode,
            normalized,
            inv_std,
        },
    ))
}

/// Returns (input grad, gamma grad, beta grad).
pub fn batchnorm_backward<T: Real>(
    cache: &BatchNormCache<T>,
    params: &BatchNormParams<T>,
    grad_out: &Tensor<T>,
) -> Result<(Tensor<T>, Vec<T>, Vec<T>)> {
    let shape = cache.normalized.shape();
    if grad_out.shape() != shape {
        return Err(Error::shape("batchnorm backward", shape, grad_out.shape()));
    }
    let [n, c, h, w] = shape;
    let hw = h * w;
    let count = T::from_usize(n * hw).unwrap();
    let xh = cache.normalized.data();
    let dy = grad_out.data();
    let mut dgamma = vec![T::zero(); c];
    let mut dbeta = vec![T::zero(); c];
    for b in 0..n {
        for ch in 0..c {
            let base = (b * c + ch) * hw;
            for i in base..base + hw {
                dgamma[ch] = dgamma[ch] + dy[i] * xh[i];
                dbeta[ch] = dbeta[ch] + dy[i];
            }
        }
    }
    let mut dx = Tensor::zeros(shape);
    let out = dx.data_mut();
    for b in 0..n {
        for ch in 0..c {
            let base = (b * c + ch) * hw;
            let g = params.gamma[ch];
            let s = cache.inv_std[ch];
            match cache.mode {
                Mode::Train => {
                    // dx = γ·s/N · (N·dy − Σdy − x̂·Σ(dy·x̂))
                    let k = g * s / count;
                    for i in base..base + hw {
                        out[i] = k * (count * dy[i] - dbeta[ch] - xh[i] * dgamma[ch]);
                    }
                }
                Mode::Infer => {
                    for i in base..base + hw {
                        out[i] = g * s * dy[i];
                    }
                }
            }
        }
    }
    Ok((dx, dgamma, dbeta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_input() -> Tensor<f64> {
        let data = (0..2 * 3 * 4 * 5).map(|i| ((i * 37) % 23) as f64 * 0.3 - 2.0).collect();
        Tensor::from_vec([2, 3, 4, 5], data).unwrap()
    }

    fn channel_stats(t: &Tensor<f64>, ch: usize) -> (f64, f64) {
        let vals: Vec<f64> = (0..t.n()).flat_map(|b| t.plane(b, ch).to_vec()).collect();
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        let v = vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / vals.len() as f64;
        (m, v)
    }

    #[test]
    fn train_mode_standardizes() {
        let mut p = BatchNormParams::<f64>::new(3);
        let (y, _) = batchnorm(&sample_input(), &mut p, Mode::Train).unwrap();
        for ch in 0..3 {
            let (m, v) = channel_stats(&y, ch);
            assert!(m.abs() < 1e-5);
            assert!((v - 1.0).abs() < 1e-4, "{v}");
        }
    }

    #[test]
    fn affine_law() {
        let mut p = BatchNormParams::<f64>::new(3);
        p.gamma = vec![2.0; 3];
        p.beta = vec![3.0; 3];
        let (y, _) = batchnorm(&sample_input(), &mut p, Mode::Train).unwrap();
        for ch in 0..3 {
            let (m, v) = channel_stats(&y, ch);
            assert!((m - 3.0).abs() < 1e-5);
            assert!((v.sqrt() - 2.0).abs() < 1e-4);
        }
    }

    #[test]
    fn infer_with_unit_stats_is_identity() {
        let mut p = BatchNormParams::<f64>::new(3);
        let x = sample_input();
        let (y, _) = batchnorm(&x, &mut p, Mode::Infer).unwrap();
        for (a, b) in x.data().iter().zip(y.data()) {
            // scale 1/sqrt(1+eps)
            assert!((a - b).abs() <= a.abs() * 1e-5 + 1e-12);
        }
    }

    #[test]
    fn running_stats_update_with_momentum() {
        let mut p = BatchNormParams::<f64>::new(3);
        let x = sample_input();
        batchnorm(&x, &mut p, Mode::Train).unwrap();
        let (m, v) = channel_stats(&x, 1);
        let count = 40.0;
        assert!((p.running_mean[1] - 0.1 * m).abs() < 1e-12);
        assert!((p.running_var[1] - (0.9 + 0.1 * v * count / (count - 1.0))).abs() < 1e-12);
        assert!(p.running_var.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn zero_variance_is_guarded() {
        let mut p = BatchNormParams::<f32>::new(1);
        let (y, _) = batchnorm(&Tensor::filled([4, 1, 2, 2], 3.0), &mut p, Mode::Train).unwrap();
        assert!(y.all_finite());
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn train_mode_needs_two_values() {
        let mut p = BatchNormParams::<f32>::new(1);
        assert!(batchnorm(&Tensor::zeros([1, 1, 1, 1]), &mut p, Mode::Train).is_err());
        assert!(batchnorm(&Tensor::zeros([1, 1, 1, 1]), &mut p, Mode::Infer).is_ok());
    }

    #[test]
    fn infer_is_batch_independent() {
        let mut p = BatchNormParams::<f64>::new(3);
        p.running_mean = vec![0.3, -0.1, 0.7];
        p.running_var = vec![0.5, 2.0, 1.5];
        p.gamma = vec![1.5, 0.5, -1.0];
        let x = sample_input();
        let (whole, _) = batchnorm(&x, &mut p.clone(), Mode::Infer).unwrap();
        for b in 0..2 {
            let single = Tensor::from_vec([1, 3, 4, 5], x.sample(b).to_vec()).unwrap();
            let (y, _) = batchnorm(&single, &mut p.clone(), Mode::Infer).unwrap();
            for (a, c) in y.data().iter().zip(whole.sample(b)) {
                assert!((a - c).abs() < 1e-6);
            }
        }
    }
}
