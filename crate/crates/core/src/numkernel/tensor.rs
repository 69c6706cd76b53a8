use crate::error::{Error, Result};

use super::Real;

/// (batch, channels, height, width)
pub type Shape4 = [usize; 4];

/// Dense NCHW tensor with an optional gradient buffer of identical shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    shape: Shape4,
    data: Vec<T>,
    grad: Option<Vec<T>>,
}

impl<T: Real> Tensor<T> {
    pub fn zeros(shape: Shape4) -> Self {
        Tensor {
            shape,
            data: vec![T::zero(); shape.iter().product()],
            grad: None,
        }
    }

    pub fn filled(shape: Shape4, value: T) -> Self {
        Tensor {
            shape,
            data: vec![value; shape.iter().product()],
            grad: None,
        }
    }

    pub fn from_vec(shape: Shape4, data: Vec<T>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(Error::shape("tensor", shape, data.len()));
        }
        Ok(Tensor {
            shape,
            data,
            grad: None,
        })
    }

    pub fn shape(&self) -> Shape4 {
        self.shape
    }

    pub fn n(&self) -> usize {
        self.shape[0]
    }

    pub fn c(&self) -> usize {
        self.shape[1]
    }

    pub fn h(&self) -> usize {
        self.shape[2]
    }

    pub fn w(&self) -> usize {
        self.shape[3]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn grad(&self) -> Option<&[T]> {
        self.grad.as_deref()
    }

    pub fn set_grad(&mut self, grad: Vec<T>) -> Result<()> {
        if grad.len() != self.data.len() {
            return Err(Error::shape("tensor grad", self.shape, grad.len()));
        }
        self.grad = Some(grad);
        Ok(())
    }

    pub fn clear_grad(&mut self) {
        self.grad = None;
    }

    #[inline]
    pub fn index(&self, n: usize, c: usize, y: usize, x: usize) -> usize {
        ((n * self.shape[1] + c) * self.shape[2] + y) * self.shape[3] + x
    }

    #[inline]
    pub fn at(&self, n: usize, c: usize, y: usize, x: usize) -> T {
        self.data[self.index(n, c, y, x)]
    }

    /// Contiguous h×w plane of sample `n`, channel `c`.
    pub fn plane(&self, n: usize, c: usize) -> &[T] {
        let hw = self.shape[2] * self.shape[3];
        let start = (n * self.shape[1] + c) * hw;
        &self.data[start..start + hw]
    }

    /// All channels of sample `n`.
    pub fn sample(&self, n: usize) -> &[T] {
        let chw = self.shape[1] * self.shape[2] * self.shape[3];
        &self.data[n * chw..(n + 1) * chw]
    }

    pub fn reshape(mut self, shape: Shape4) -> Result<Self> {
        if shape.iter().product::<usize>() != self.data.len() {
            return Err(Error::shape("reshape", self.shape, shape));
        }
        self.shape = shape;
        self.grad = None;
        Ok(self)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape,
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
            grad: None,
        }
    }

    /// Stacks equally shaped single-sample tensors along the batch axis.
    pub fn stack(items: &[Tensor<T>]) -> Result<Self> {
        let first = items.first().ok_or(Error::Empty("tensor stack"))?;
        let [_, c, h, w] = first.shape;
        let mut data = Vec::with_capacity(items.len() * c * h * w);
        let mut n = 0;
        for t in items {
            if t.shape[1..] != first.shape[1..] {
                return Err(Error::shape("stack", first.shape, t.shape));
            }
            n += t.shape[0];
            data.extend_from_slice(&t.data);
        }
        Tensor::from_vec([n, c, h, w], data)
    }
}
