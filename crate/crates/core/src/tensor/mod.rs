//! Dense NCHW tensors and the handful of layers the self-regression model is
//! built from. Every layer has a forward pass and an analytic backward pass;
//! there is no autodiff graph.
//!
//! All ops are generic over [`Real`] so the gradient checks can run in `f64`
//! while training runs in `f32`.

mod activation;
mod adam;
mod conv;
mod loss;
mod norm;

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, ToPrimitive};

use crate::error::{Error, Result};

pub use activation::{relu, relu_backward, tanh, tanh_backward};
pub use adam::{adam_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use conv::{conv2d_backward, conv2d_forward, ConvGrads, KERNEL};
pub(crate) use conv::conv2d_backward_inner;
pub use loss::{l1_loss, tv_loss};
pub use norm::{
    instance_norm_backward, instance_norm_forward, instance_norm_infer, InstanceNormCache, InstanceNormGrads, IN_EPS,
};

/// Floating point element type accepted by the tensor ops.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Default + Debug + Send + Sync + std::ops::AddAssign + 'static
{
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal fits the element type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Tensor dimensions in (batch, channel, height, width) order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Shape {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Shape {
    pub const fn new(n: usize, c: usize, h: usize, w: usize) -> Self {
        Shape { n, c, h, w }
    }

    pub const fn numel(&self) -> usize {
        self.n * self.c * self.h * self.w
    }

    /// Elements in one (sample, channel) plane.
    pub const fn plane(&self) -> usize {
        self.h * self.w
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}, {}, {}]", self.n, self.c, self.h, self.w)
    }
}

/// Row-major NCHW array.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T = f32> {
    shape: Shape,
    data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn zeros(shape: Shape) -> Self {
        Self::full(shape, T::zero())
    }

    pub fn full(shape: Shape, value: T) -> Self {
        Tensor {
            shape,
            data: vec![value; shape.numel()],
        }
    }

    pub fn from_vec(shape: Shape, data: Vec<T>) -> Result<Self> {
        if data.len() != shape.numel() {
            return Err(Error::contract(format!(
                "tensor of shape {shape} needs {} elements, got {}",
                shape.numel(),
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(usize) -> T) -> Self {
        Tensor {
            shape,
            data: (0..shape.numel()).map(&mut f).collect(),
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn plane_offset(&self, n: usize, c: usize) -> usize {
        (n * self.shape.c + c) * self.shape.plane()
    }

    /// The `h*w` slice for sample `n`, channel `c`.
    pub fn plane(&self, n: usize, c: usize) -> &[T] {
        let off = self.plane_offset(n, c);
        &self.data[off..off + self.shape.plane()]
    }

    pub fn plane_mut(&mut self, n: usize, c: usize) -> &mut [T] {
        let off = self.plane_offset(n, c);
        let len = self.shape.plane();
        &mut self.data[off..off + len]
    }

    pub fn get(&self, n: usize, c: usize, y: usize, x: usize) -> T {
        self.data[self.plane_offset(n, c) + y * self.shape.w + x]
    }

    pub fn set(&mut self, n: usize, c: usize, y: usize, x: usize, v: T) {
        let off = self.plane_offset(n, c) + y * self.shape.w + x;
        self.data[off] = v;
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Tensor {
            shape: self.shape,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape,
            data: self
                .data
                .iter()
                .map(|v| U::from_f64(v.to_f64().unwrap_or(f64::NAN)).unwrap_or(U::nan()))
                .collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copy of samples `start..start+count` along the batch axis.
    pub fn batch_slice(&self, start: usize, count: usize) -> Result<Self> {
        if start + count > self.shape.n {
            return Err(Error::contract(format!(
                "batch slice {start}..{} out of range for {}",
                start + count,
                self.shape
            )));
        }
        let per = self.shape.c * self.shape.plane();
        let shape = Shape { n: count, ..self.shape };
        Self::from_vec(shape, self.data[start * per..(start + count) * per].to_vec())
    }

    /// Stack tensors with matching (c, h, w) along the batch axis.
    pub fn concat_batch(parts: &[&Self]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::contract("concat_batch needs at least one tensor"))?;
        let base = first.shape;
        let mut data = Vec::new();
        let mut n = 0;
        for p in parts {
            if (p.shape.c, p.shape.h, p.shape.w) != (base.c, base.h, base.w) {
                return Err(Error::contract(format!(
                    "concat_batch shape mismatch: {} vs {}",
                    p.shape, base
                )));
            }
            n += p.shape.n;
            data.extend_from_slice(&p.data);
        }
        Self::from_vec(Shape { n, ..base }, data)
    }
}

pub(crate) fn expect_shape(what: &str, got: Shape, want: Shape) -> Result<()> {
    if got != want {
        return Err(Error::contract(format!(
            "{what}: expected shape {want}, got {got}"
        )));
    }
    Ok(())
}

/// Dot product with four independent accumulators. Fixed summation order,
/// so results are bit-reproducible.
#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = i * 4;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut tail = T::zero();
    for j in chunks * 4..a.len() {
        tail += a[j] * b[j];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `dst += alpha * src`
#[inline]
pub(crate) fn axpy<T: Real>(alpha: T, src: &[T], dst: &mut [T]) {
    debug_assert_eq!(src.len(), dst.len());
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += alpha * s;
    }
}
