//! Reconstruction and smoothness losses. Both return the scalar value and
//! its gradient with respect to the prediction; L1 uses `sign(0) = 0`.

use super::{expect_shape, Real, Tensor};
use crate::error::{Error, Result};

fn sign<T: Real>(v: T) -> T {
    if v > T::zero() {
        T::one()
    } else if v < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// Mean absolute error over every element.
pub fn l1_loss<T: Real>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<(T, Tensor<T>)> {
    expect_shape("l1_loss target", target.shape(), pred.shape())?;
    if pred.is_empty() {
        return Err(Error::contract("l1_loss: empty tensors"));
    }
    let count = pred.len() as f64;
    let inv = T::lit(1.0 / count);
    let mut total = 0.0f64;
    let grad = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| {
            let d = p - t;
            total += d.abs().to_f64().unwrap_or(f64::NAN);
            sign(d) * inv
        })
        .collect();
    Ok((T::lit(total / count), Tensor::from_vec(pred.shape(), grad)?))
}

/// Total variation: the mean, over every vertically or horizontally adjacent
/// pixel pair of every plane, of their squared difference.
pub fn tv_loss<T: Real>(x: &Tensor<T>) -> Result<(T, Tensor<T>)> {
    let s = x.shape();
    if s.h < 2 || s.w < 2 {
        return Err(Error::contract(format!(
            "tv_loss: spatial dims must be at least 2x2, got {s}"
        )));
    }
    let (h, w) = (s.h, s.w);
    let pairs = (s.n * s.c * ((h - 1) * w + h * (w - 1))) as f64;
    let inv = T::lit(1.0 / pairs);
    let two = T::lit(2.0);
    let sq = |d: T| {
        let d = d.to_f64().unwrap_or(f64::NAN);
        d * d
    };
    let mut total = 0.0f64;
    let mut grad = Tensor::zeros(s);
    for n in 0..s.n {
        for c in 0..s.c {
            let p = x.plane(n, c);
            let g = grad.plane_mut(n, c);
            for y in 0..h {
                for xx in 0..w {
                    let i = y * w + xx;
                    if y + 1 < h {
                        let d = p[i + w] - p[i];
                        total += sq(d);
                        let sg = two * d * inv;
                        g[i + w] += sg;
                        g[i] = g[i] - sg;
                    }
                    if xx + 1 < w {
                        let d = p[i + 1] - p[i];
                        total += sq(d);
                        let sg = two * d * inv;
                        g[i + 1] += sg;
                        g[i] = g[i] - sg;
                    }
                }
            }
        }
    }
    Ok((T::lit(total / pairs), grad))
}
