//! Dense row-major tensors of 32- or 64-bit floats.
//!
//! `Tensor<f32>` is the storage type used throughout training; `Tensor<f64>`
//! exists so finite-difference oracles can replay forward passes at higher
//! precision.

use crate::error::{Result, VganError};

/// Element types a [`Tensor`] can hold.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + PartialOrd
    + std::fmt::Debug
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
    + std::ops::AddAssign
    + 'static
{
    const ZERO: Self;
    const ONE: Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn is_finite(self) -> bool;
    fn mul_add(self, a: Self, b: Self) -> Self;
}

impl Scalar for f32 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn sqrt(self) -> Self {
        f32::sqrt(self)
    }
    fn is_finite(self) -> bool {
        f32::is_finite(self)
    }
    fn mul_add(self, a: Self, b: Self) -> Self {
        f32::mul_add(self, a, b)
    }
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn mul_add(self, a: Self, b: Self) -> Self {
        f64::mul_add(self, a, b)
    }
}

/// Dense N-dimensional array, row-major contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<E: Scalar = f32> {
    shape: Vec<usize>,
    strides: Vec<usize>,
    data: Vec<E>,
    requires_grad: bool,
}

fn contiguous_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    strides
}

impl<E: Scalar> Tensor<E> {
    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, E::ZERO)
    }

    pub fn full(shape: &[usize], value: E) -> Self {
        let n: usize = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            strides: contiguous_strides(shape),
            data: vec![value; n],
            requires_grad: false,
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<E>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(VganError::InvalidArgument(format!(
                "shape {:?} implies {} elements, got {}",
                shape,
                n,
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            strides: contiguous_strides(shape),
            data,
            requires_grad: false,
        })
    }

    pub fn scalar(value: E) -> Self {
        Tensor::from_vec(&[1], vec![value]).unwrap()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[E] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [E] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<E> {
        self.data
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    pub fn with_grad(mut self) -> Self {
        self.requires_grad = true;
        self
    }

    pub fn set_requires_grad(&mut self, flag: bool) {
        self.requires_grad = flag;
    }

    /// Reinterprets the buffer under a new shape without copying.
    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return Err(VganError::ShapeMismatch {
                left: self.shape.clone(),
                right: shape.to_vec(),
                ctx: "reshape",
            });
        }
        self.shape = shape.to_vec();
        self.strides = contiguous_strides(&self.shape);
        Ok(self)
    }

    /// Mutable view of one index along the leading axis. Shares the
    /// underlying buffer; writes through the view mutate this tensor.
    pub fn subview_mut(&mut self, index: usize) -> ViewMut<'_, E> {
        assert!(!self.shape.is_empty() && index < self.shape[0]);
        let inner: usize = self.shape[1..].iter().product();
        ViewMut {
            shape: self.shape[1..].to_vec(),
            data: &mut self.data[index * inner..(index + 1) * inner],
        }
    }

    pub fn map(&self, f: impl Fn(E) -> E) -> Self {
        Tensor {
            shape: self.shape.clone(),
            strides: self.strides.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
            requires_grad: false,
        }
    }

    pub fn cast<F: Scalar>(&self) -> Tensor<F> {
        Tensor {
            shape: self.shape.clone(),
            strides: self.strides.clone(),
            data: self.data.iter().map(|x| F::from_f64(x.to_f64())).collect(),
            requires_grad: self.requires_grad,
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Borrowed mutable view into a tensor's buffer.
pub struct ViewMut<'a, E: Scalar> {
    shape: Vec<usize>,
    data: &'a mut [E],
}

impl<'a, E: Scalar> ViewMut<'a, E> {
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data_mut(&mut self) -> &mut [E] {
        self.data
    }
}

/// Elementwise binary ops used outside the tape (data plumbing).
pub fn elementwise_zip<E: Scalar>(
    a: &Tensor<E>,
    b: &Tensor<E>,
    ctx: &'static str,
    f: impl Fn(E, E) -> E,
) -> Result<Tensor<E>> {
    if a.shape() != b.shape() {
        return Err(VganError::ShapeMismatch {
            left: a.shape().to_vec(),
            right: b.shape().to_vec(),
            ctx,
        });
    }
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| f(x, y))
        .collect();
    Tensor::from_vec(a.shape(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_strides_are_row_major() {
        let t: Tensor = Tensor::zeros(&[2, 3, 4]);
        assert_eq!(t.strides(), &[12, 4, 1]);
        assert_eq!(t.numel(), 24);
    }

    #[test]
    fn from_vec_rejects_bad_length() {
        assert!(Tensor::<f32>::from_vec(&[2, 2], vec![1.0; 3]).is_err());
    }

    #[test]
    fn reshape_keeps_data() {
        let t = Tensor::from_vec(&[4], vec![1.0f32, 2.0, 3.0, 4.0]).unwrap();
        let t = t.reshape(&[2, 2]).unwrap();
        assert_eq!(t.shape(), &[2, 2]);
        assert_eq!(t.data(), &[1.0, 2.0, 3.0, 4.0]);
        assert!(t.clone().reshape(&[3]).is_err());
    }

    #[test]
    fn view_aliases_base() {
        let mut t = Tensor::from_vec(&[2, 2], vec![0.0f32; 4]).unwrap();
        {
            let mut v = t.subview_mut(1);
            v.data_mut()[0] = 7.0;
        }
        assert_eq!(t.data(), &[0.0, 0.0, 7.0, 0.0]);
    }
}
