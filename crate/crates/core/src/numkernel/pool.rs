use crate::error::{Error, Result};

use super::{Real, Tensor};

/// Flat input offsets of the winning cell of every output window, plus the
/// input shape, for routing gradients back.
#[derive(Clone, Debug)]
pub struct PoolIndices {
    pub input_shape: [usize; 4],
    pub argmax: Vec<usize>,
}

/// 2×2 max-pooling with stride 2. Odd trailing rows/columns are dropped.
/// Ties go to the first cell in row-major window order.
pub fn maxpool2<T: Real>(input: &Tensor<T>) -> Result<(Tensor<T>, PoolIndices)> {
    let [n, c, h, w] = input.shape();
    let (oh, ow) = (h / 2, w / 2);
    if oh == 0 || ow == 0 {
        return Err(Error::shape("maxpool2", input.shape(), "at least 2×2"));
    }
    let mut out = Tensor::zeros([n, c, oh, ow]);
    let mut argmax = Vec::with_capacity(n * c * oh * ow);
    let src = input.data();
    let dst = out.data_mut();
    let mut o = 0;
    for plane in 0..n * c {
        let base = plane * h * w;
        for y in 0..oh {
            for x in 0..ow {
                let i0 = base + 2 * y * w + 2 * x;
                let mut best = i0;
                for i in [i0 + 1, i0 + w, i0 + w + 1] {
                    if src[i] > src[best] {
                        best = i;
                    }
                }
                dst[o] = src[best];
                argmax.push(best);
                o += 1;
            }
        }
    }
    Ok((
        out,
        PoolIndices {
            input_shape: input.shape(),
            argmax,
        },
    ))
}

pub fn maxpool2_backward<T: Real>(indices: &PoolIndices, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    if grad_out.len() != indices.argmax.len() {
        return Err(Error::shape("maxpool2 backward", indices.argmax.len(), grad_out.shape()));
    }
    let mut grad = Tensor::zeros(indices.input_shape);
    let g = grad.data_mut();
    for (&i, &v) in indices.argmax.iter().zip(grad_out.data()) {
        g[i] = g[i] + v;
    }
    Ok(grad)
}
