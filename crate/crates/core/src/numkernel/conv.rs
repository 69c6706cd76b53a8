//! Valid (unpadded) stride-1 2-D convolution via strip-wise im2col + GEMM.

use crate::error::{Error, Result};

use super::parallel::parallel_map;
use super::{Real, Tensor};

/// Upper bound on im2col buffer elements per task; large feature maps are
/// processed in horizontal strips so whole-image inference stays in memory.
const MAX_COLS: usize = 1 << 21;

pub struct ConvGrads<T> {
    pub input: Tensor<T>,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

fn check_shapes<T: Real>(input: &Tensor<T>, weights: &Tensor<T>, bias: &[T]) -> Result<(usize, usize)> {
    let [_, c, h, w] = input.shape();
    let [oc, ic, kh, kw] = weights.shape();
    if c != ic || kh != kw || bias.len() != oc {
        return Err(Error::shape("conv2d", input.shape(), weights.shape()));
    }
    if h < kh || w < kw {
        return Err(Error::shape("conv2d", input.shape(), weights.shape()));
    }
    Ok((h - kh + 1, w - kw + 1))
}

/// Fills `cols` ((c·k·k) × (rows·ow)) for output rows `y0..y0+rows` of one sample.
fn im2col<T: Real>(sample: &[T], c: usize, h: usize, w: usize, k: usize, y0: usize, rows: usize, ow: usize, cols: &mut [T]) {
    let width = rows * ow;
    for ci in 0..c {
        let plane = &sample[ci * h * w..(ci + 1) * h * w];
        for ky in 0..k {
            for kx in 0..k {
                let r = (ci * k + ky) * k + kx;
                let dst = &mut cols[r * width..(r + 1) * width];
                for y in 0..rows {
                    let src = (y0 + y + ky) * w + kx;
                    dst[y * ow..(y + 1) * ow].copy_from_slice(&plane[src..src + ow]);
                }
            }
        }
    }
}

fn col2im_add<T: Real>(cols: &[T], c: usize, h: usize, w: usize, k: usize, oh: usize, ow: usize, out: &mut [T]) {
    let width = oh * ow;
    for ci in 0..c {
        let plane = &mut out[ci * h * w..(ci + 1) * h * w];
        for ky in 0..k {
            for kx in 0..k {
                let r = (ci * k + ky) * k + kx;
                let src = &cols[r * width..(r + 1) * width];
                for y in 0..oh {
                    let dst = &mut plane[(y + ky) * w + kx..(y + ky) * w + kx + ow];
                    for (d, s) in dst.iter_mut().zip(&src[y * ow..(y + 1) * ow]) {
                        *d = *d + *s;
                    }
                }
            }
        }
    }
}

/// Valid convolution (cross-correlation) of `input` (n×c×h×w) with `weights`
/// (oc×c×k×k) plus per-channel `bias`. Output is n×oc×(h−k+1)×(w−k+1).
pub fn conv2d<T: Real>(input: &Tensor<T>, weights: &Tensor<T>, bias: &[T]) -> Result<Tensor<T>> {
    let (oh, ow) = check_shapes(input, weights, bias)?;
    let [n, c, h, w] = input.shape();
    let [oc, _, k, _] = weights.shape();
    let ckk = c * k * k;
    let strip = (MAX_COLS / (ckk * ow)).clamp(1, oh);
    let strips_per_sample = oh.div_ceil(strip);

    let tasks = n * strips_per_sample;
    let parts = parallel_map(tasks, |t| {
        let s = t / strips_per_sample;
        let y0 = (t % strips_per_sample) * strip;
        let rows = strip.min(oh - y0);
        let width = rows * ow;
        let mut cols = vec![T::zero(); ckk * width];
        im2col(input.sample(s), c, h, w, k, y0, rows, ow, &mut cols);
        let mut out = Vec::with_capacity(oc * width);
        for &b in bias {
            out.extend(std::iter::repeat_n(b, width));
        }
        T::gemm(
            oc,
            ckk,
            width,
            T::one(),
            weights.data(),
            (ckk as isize, 1),
            &cols,
            (width as isize, 1),
            T::one(),
            &mut out,
            (width as isize, 1),
        );
        out
    });

    let mut output = Tensor::zeros([n, oc, oh, ow]);
    let data = output.data_mut();
    for (t, part) in parts.into_iter().enumerate() {
        let s = t / strips_per_sample;
        let y0 = (t % strips_per_sample) * strip;
        let width = part.len() / oc;
        for o in 0..oc {
            let dst = ((s * oc + o) * oh + y0) * ow;
            data[dst..dst + width].copy_from_slice(&part[o * width..(o + 1) * width]);
        }
    }
    Ok(output)
}

/// Gradients of [`conv2d`] with respect to input, weights and bias.
pub fn conv2d_backward<T: Real>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &[T],
    grad_out: &Tensor<T>,
) -> Result<ConvGrads<T>> {
    let (oh, ow) = check_shapes(input, weights, bias)?;
    let [n, c, h, w] = input.shape();
    let [oc, _, k, _] = weights.shape();
    if grad_out.shape() != [n, oc, oh, ow] {
        return Err(Error::shape("conv2d backward", [n, oc, oh, ow], grad_out.shape()));
    }
    let ckk = c * k * k;
    let width = oh * ow;

    let parts = parallel_map(n, |s| {
        let mut cols = vec![T::zero(); ckk * width];
        im2col(input.sample(s), c, h, w, k, 0, oh, ow, &mut cols);
        let gout = grad_out.sample(s);

        let mut gw = vec![T::zero(); oc * ckk];
        T::gemm(
            oc,
            width,
            ckk,
            T::one(),
            gout,
            (width as isize, 1),
            &cols,
            (1, width as isize),
            T::zero(),
            &mut gw,
            (ckk as isize, 1),
        );
        let gb: Vec<T> = (0..oc).map(|o| gout[o * width..(o + 1) * width].iter().copied().sum()).collect();

        // Reuse the im2col buffer for the column gradient.
        T::gemm(
            ckk,
            oc,
            width,
            T::one(),
            weights.data(),
            (1, ckk as isize),
            gout,
            (width as isize, 1),
            T::zero(),
            &mut cols,
            (width as isize, 1),
        );
        let mut gin = vec![T::zero(); c * h * w];
        col2im_add(&cols, c, h, w, k, oh, ow, &mut gin);
        (gw, gb, gin)
    });

    let mut gw_total = vec![T::zero(); oc * ckk];
    let mut gb_total = vec![T::zero(); oc];
    let mut gin_total = Vec::with_capacity(n * c * h * w);
    for (gw, gb, gin) in parts {
        for (a, b) in gw_total.iter_mut().zip(gw) {
            *a = *a + b;
        }
        for (a, b) in gb_total.iter_mut().zip(gb) {
            *a = *a + b;
        }
        gin_total.extend(gin);
    }
    Ok(ConvGrads {
        input: Tensor::from_vec([n, c, h, w], gin_total)?,
        weights: gw_total,
        bias: gb_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(input: &Tensor<f64>, weights: &Tensor<f64>, bias: &[f64]) -> Tensor<f64> {
        let [n, c, h, w] = input.shape();
        let [oc, _, k, _] = weights.shape();
        let (oh, ow) = (h - k + 1, w - k + 1);
        let mut out = Tensor::zeros([n, oc, oh, ow]);
        for s in 0..n {
            for o in 0..oc {
                for y in 0..oh {
                    for x in 0..ow {
                        let mut acc = bias[o];
                        for ci in 0..c {
                            for ky in 0..k {
                                for kx in 0..k {
                                    acc += input.at(s, ci, y + ky, x + kx) * weights.at(o, ci, ky, kx);
                                }
                            }
                        }
                        let i = out.index(s, o, y, x);
                        out.data_mut()[i] = acc;
                    }
                }
            }
        }
        out
    }

    fn ramp(shape: [usize; 4], scale: f64) -> Tensor<f64> {
        let len = shape.iter().product();
        Tensor::from_vec(shape, (0..len).map(|i| ((i * 7919) % 97) as f64 * scale - 0.4).collect()).unwrap()
    }

    #[test]
    fn all_ones_sums_window() {
        let input = Tensor::<f32>::filled([1, 1, 5, 5], 1.0);
        let weights = Tensor::<f32>::filled([1, 1, 5, 5], 1.0);
        let out = conv2d(&input, &weights, &[0.0]).unwrap();
        assert_eq!(out.shape(), [1, 1, 1, 1]);
        assert_eq!(out.data(), &[25.0]);
    }

    #[test]
    fn centered_delta_kernel_crops() {
        let input = Tensor::<f32>::from_vec([1, 1, 7, 7], (0..49).map(|v| v as f32).collect()).unwrap();
        let mut weights = Tensor::<f32>::zeros([1, 1, 5, 5]);
        weights.data_mut()[12] = 1.0;
        let out = conv2d(&input, &weights, &[0.0]).unwrap();
        assert_eq!(out.shape(), [1, 1, 3, 3]);
        for y in 0..3 {
            for x in 0..3 {
                assert_eq!(out.at(0, 0, y, x), input.at(0, 0, y + 2, x + 2));
            }
        }
    }

    #[test]
    fn matches_naive_loop() {
        let input = ramp([2, 3, 9, 11], 0.01);
        let weights = ramp([4, 3, 3, 3], 0.02);
        let bias = [0.1, -0.2, 0.3, 0.0];
        let fast = conv2d(&input, &weights, &bias).unwrap();
        let slow = naive(&input, &weights, &bias);
        for (a, b) in fast.data().iter().zip(slow.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn strips_match_single_pass() {
        // Large enough that the im2col buffer is split into several strips.
        let input = ramp([1, 16, 150, 150], 0.001);
        let weights = ramp([2, 16, 5, 5], 0.001);
        let out = conv2d(&input, &weights, &[0.0, 0.5]).unwrap();
        let slow = naive(&input, &weights, &[0.0, 0.5]);
        for (a, b) in out.data().iter().zip(slow.data()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn shape_errors_name_both_shapes() {
        let input = Tensor::<f32>::zeros([1, 2, 4, 4]);
        let weights = Tensor::<f32>::zeros([1, 2, 5, 5]);
        let err = conv2d(&input, &weights, &[0.0]).unwrap_err().to_string();
        assert!(err.contains("[1, 2, 4, 4]") && err.contains("[1, 2, 5, 5]"), "{err}");
        let weights = Tensor::<f32>::zeros([1, 3, 3, 3]);
        assert!(conv2d(&input, &weights, &[0.0]).is_err());
    }
}
