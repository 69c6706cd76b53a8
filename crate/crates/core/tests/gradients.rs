//! Finite-difference checks of every layer's backward pass and of the full
//! single-output and six-class stacks, in f64.

use latres::models::{Model, ModelKind};
use latres::numkernel::{
    batchnorm, batchnorm_backward, conv2d, conv2d_backward, maxpool2, maxpool2_backward, mse_loss, relu,
    relu_backward, seeded_rng, softmax_xent, BatchNormParams, Mode, Tensor,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const INSTANCES: usize = 20;
const H: f64 = 1e-6;
const TOL: f64 = 1e-4;
/// Denominator floor: gradients that are exactly zero (a shift followed by
/// batch normalization) leave only round-off in the numeric estimate.
const FLOOR: f64 = 1e-4;

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / (a.abs() + n.abs()).max(FLOOR)
}

fn random(rng: &mut ChaCha8Rng, shape: [usize; 4]) -> Tensor<f64> {
    let len = shape.iter().product();
    Tensor::from_vec(shape, (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn dot(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

/// Central difference of `f` with respect to `v[i]`.
fn central(v: &mut [f64], i: usize, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let orig = v[i];
    v[i] = orig + H;
    let up = f(v);
    v[i] = orig - H;
    let down = f(v);
    v[i] = orig;
    (up - down) / (2.0 * H)
}

fn assert_close(what: &str, analytic: f64, numeric: f64) {
    let e = rel_err(analytic, numeric);
    assert!(e < TOL, "{what}: analytic {analytic} vs numeric {numeric} (rel {e:e})");
}

pub fn conv_gradients() {
    let mut rng = seeded_rng(1);
    for inst in 0..INSTANCES {
        let k = [1, 3, 5][inst % 3];
        let (n, c, oc) = (rng.random_range(1..3), rng.random_range(1..4), rng.random_range(1..4));
        let (h, w) = (k + rng.random_range(0..5), k + rng.random_range(0..5));
        let mut x = random(&mut rng, [n, c, h, w]);
        let mut wt = random(&mut rng, [oc, c, k, k]);
        let mut b: Vec<f64> = (0..oc).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = conv2d(&x, &wt, &b).unwrap();
        let r = random(&mut rng, y.shape());
        let g = conv2d_backward(&x, &wt, &b, &r).unwrap();
        let shape = x.shape();
        for i in 0..x.len() {
            let (wt2, b2) = (wt.clone(), b.clone());
            let num = central(x.data_mut(), i, |d| {
                dot(&conv2d(&Tensor::from_vec(shape, d.to_vec()).unwrap(), &wt2, &b2).unwrap(), &r)
            });
            assert_close("conv input", g.input.data()[i], num);
        }
        let wshape = wt.shape();
        for i in 0..wt.len() {
            let (x2, b2) = (x.clone(), b.clone());
            let num = central(wt.data_mut(), i, |d| {
                dot(&conv2d(&x2, &Tensor::from_vec(wshape, d.to_vec()).unwrap(), &b2).unwrap(), &r)
            });
            assert_close("conv weight", g.weights[i], num);
        }
        for i in 0..b.len() {
            let (x2, w2) = (x.clone(), wt.clone());
            let num = central(&mut b, i, |d| dot(&conv2d(&x2, &w2, d).unwrap(), &r));
            assert_close("conv bias", g.bias[i], num);
        }
    }
}

pub fn pool_gradients() {
    let mut rng = seeded_rng(2);
    for _ in 0..INSTANCES {
        let shape = [rng.random_range(1..3), rng.random_range(1..3), rng.random_range(2..9), rng.random_range(2..9)];
        let mut x = random(&mut rng, shape);
        let (y, idx) = maxpool2(&x).unwrap();
        let r = random(&mut rng, y.shape());
        let g = maxpool2_backward(&idx, &r).unwrap();
        for i in 0..x.len() {
            let num = central(x.data_mut(), i, |d| {
                dot(&maxpool2(&Tensor::from_vec(shape, d.to_vec()).unwrap()).unwrap().0, &r)
            });
            assert_close("pool input", g.data()[i], num);
        }
    }
}

pub fn relu_gradients() {
    let mut rng = seeded_rng(3);
    for _ in 0..INSTANCES {
        let shape = [2, 2, rng.random_range(1..6), rng.random_range(1..6)];
        let mut x = random(&mut rng, shape);
        // keep clear of the kink
        for v in x.data_mut() {
            if v.abs() < 1e-3 {
                *v = 0.5;
            }
        }
        let r = random(&mut rng, shape);
        let g = relu_backward(&x, &r).unwrap();
        for i in 0..x.len() {
            let num = central(x.data_mut(), i, |d| dot(&relu(&Tensor::from_vec(shape, d.to_vec()).unwrap()), &r));
            assert_close("relu input", g.data()[i], num);
        }
    }
}

fn bn_params(rng: &mut ChaCha8Rng, c: usize) -> BatchNormParams<f64> {
    let mut p = BatchNormParams::new(c);
    for i in 0..c {
        p.gamma[i] = rng.random_range(0.5..1.5);
        p.beta[i] = rng.random_range(-0.5..0.5);
        p.running_mean[i] = rng.random_range(-0.5..0.5);
        p.running_var[i] = rng.random_range(0.5..2.0);
    }
    p
}

pub fn batchnorm_gradients() {
    let mut rng = seeded_rng(4);
    for inst in 0..INSTANCES {
        let mode = if inst % 2 == 0 { Mode::Train } else { Mode::Infer };
        let c = rng.random_range(1..4);
        let shape = [rng.random_range(2..4), c, rng.random_range(1..4), rng.random_range(1..4)];
        let mut x = random(&mut rng, shape);
        let params = bn_params(&mut rng, c);
        let (y, cache) = batchnorm(&x, &mut params.clone(), mode).unwrap();
        let r = random(&mut rng, y.shape());
        let (gx, gg, gb) = batchnorm_backward(&cache, &params, &r).unwrap();
        let loss = |x: &Tensor<f64>, p: &BatchNormParams<f64>| dot(&batchnorm(x, &mut p.clone(), mode).unwrap().0, &r);
        for i in 0..x.len() {
            let num = central(x.data_mut(), i, |d| loss(&Tensor::from_vec(shape, d.to_vec()).unwrap(), &params));
            assert_close("bn input", gx.data()[i], num);
        }
        for i in 0..c {
            let mut p = params.clone();
            let num = central(&mut p.gamma.clone(), i, |d| {
                p.gamma = d.to_vec();
                loss(&x, &p)
            });
            assert_close("bn gamma", gg[i], num);
            let mut p = params.clone();
            let num = central(&mut p.beta.clone(), i, |d| {
                p.beta = d.to_vec();
                loss(&x, &p)
            });
            assert_close("bn beta", gb[i], num);
        }
    }
}

pub fn loss_gradients() {
    let mut rng = seeded_rng(5);
    for _ in 0..INSTANCES {
        let n = rng.random_range(1..5);
        let shape = [n, 6, 1, 1];
        let mut z = random(&mut rng, shape);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(1..=6)).collect();
        let (_, g) = softmax_xent(&z, &labels).unwrap();
        for i in 0..z.len() {
            let num = central(z.data_mut(), i, |d| {
                softmax_xent(&Tensor::from_vec(shape, d.to_vec()).unwrap(), &labels).unwrap().0
            });
            assert_close("softmax xent", g.data()[i], num);
        }
        let t = random(&mut rng, shape);
        let (_, g) = mse_loss(&z, &t).unwrap();
        for i in 0..z.len() {
            let num = central(z.data_mut(), i, |d| mse_loss(&Tensor::from_vec(shape, d.to_vec()).unwrap(), &t).unwrap().0);
            assert_close("mse", g.data()[i], num);
        }
    }
}

/// Loss of the whole network in training mode for a batch of two patches.
fn stack_loss(model: &mut Model<f64>, x: &Tensor<f64>, targets: &Tensor<f64>, labels: &[usize]) -> (f64, Tensor<f64>) {
    let y = model.net.forward(x, Mode::Train).unwrap();
    if model.kind.is_regression() {
        mse_loss(&y, targets).unwrap()
    } else {
        softmax_xent(&y, labels).unwrap()
    }
}

/// Centered difference of a loss at one coordinate, or `None` when the
/// estimates at steps H and H/10 disagree beyond round-off: a max-pool or ReLU switch lies
/// within the step, so neither is a derivative.
fn stack_difference(mut eval: impl FnMut(f64) -> f64, orig: f64) -> Option<f64> {
    let mut centered = |h: f64| (eval(orig + h) - eval(orig - h)) / (2.0 * h);
    let (coarse, fine) = (centered(H), centered(H / 10.0));
    eval(orig);
    // round-off of the fine estimate is about 1e-8
    let kink = (coarse - fine).abs() > (TOL / 2.0 * coarse.abs().max(fine.abs())).max(1e-7);
    (!kink).then_some(coarse)
}

fn check_stack(kind: ModelKind, seed: u64) {
    let mut rng = seeded_rng(seed);
    let (mut checked, mut kinks) = (0, 0);
    for inst in 0..INSTANCES {
        let mut model: Model<f64> = Model::new(kind, seed * 100 + inst as u64);
        // the regression stack also sees a 2×2 output map
        let side = if kind.is_regression() { 64 + 4 * (inst % 2) } else { 64 };
        let x = random(&mut rng, [2, 1, side, side]);
        let out_side = side / 4 - 15;
        let targets = random(&mut rng, [2, model.head(), out_side, out_side]);
        let labels = vec![rng.random_range(1..=6), rng.random_range(1..=6)];
        let (_, g) = stack_loss(&mut model, &x, &targets, &labels);
        let (grads, gx) = model.net.backward(&g).unwrap();
        let analytic: Vec<Vec<f64>> = grads.iter().flat_map(|l| l.slices()).map(<[f64]>::to_vec).collect();
        for _ in 0..4 {
            let slot = rng.random_range(0..analytic.len());
            let i = rng.random_range(0..analytic[slot].len());
            let orig = model.net.params_mut()[slot][i];
            let eval = |v: f64| {
                model.net.params_mut()[slot][i] = v;
                stack_loss(&mut model, &x, &targets, &labels).0
            };
            match stack_difference(eval, orig) {
                Some(num) => {
                    assert_close(&format!("{kind} param slot {slot}[{i}]"), analytic[slot][i], num);
                    checked += 1;
                }
                None => kinks += 1,
            }
        }
        for _ in 0..2 {
            let i = rng.random_range(0..x.len());
            let mut xd = x.data().to_vec();
            let eval = |v: f64| {
                xd[i] = v;
                stack_loss(&mut model, &Tensor::from_vec(x.shape(), xd.clone()).unwrap(), &targets, &labels).0
            };
            match stack_difference(eval, x.data()[i]) {
                Some(num) => {
                    assert_close(&format!("{kind} input[{i}]"), gx.data()[i], num);
                    checked += 1;
                }
                None => kinks += 1,
            }
        }
    }
    assert!(kinks * 10 <= checked, "{kinks} coordinates sat on a switch, only {checked} checked");
}

pub fn regression_stack_gradients() {
    check_stack(ModelKind::Mask, 6);
}

pub fn classification_stack_gradients() {
    check_stack(ModelKind::MaskSoftmax, 7);
}

#[cfg(test)]
mod tests {
    #[test]
    fn conv_gradients() {
        super::conv_gradients();
    }

    #[test]
    fn pool_gradients() {
        super::pool_gradients();
    }

    #[test]
    fn relu_gradients() {
        super::relu_gradients();
    }

    #[test]
    fn batchnorm_gradients() {
        super::batchnorm_gradients();
    }

    #[test]
    fn loss_gradients() {
        super::loss_gradients();
    }

    #[test]
    fn regression_stack_gradients() {
        super::regression_stack_gradients();
    }

    #[test]
    fn classification_stack_gradients() {
        super::classification_stack_gradients();
    }
}
