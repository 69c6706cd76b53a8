use crate::error::{Error, Result};

use super::{Real, Tensor};

pub fn relu<T: Real>(input: &Tensor<T>) -> Tensor<T> {
    let data = input.data().iter().map(|&v| v.max(T::zero())).collect();
    Tensor::from_vec(input.shape(), data).expect("same shape")
}

/// Gradient passes where the forward input was strictly positive.
pub fn relu_backward<T: Real>(input: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    if input.shape() != grad_out.shape() {
        return Err(Error::shape("relu backward", input.shape(), grad_out.shape()));
    }
    let data = input
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&x, &g)| if x > T::zero() { g } else { T::zero() })
        .collect();
    Tensor::from_vec(input.shape(), data)
}
