//! Instance normalization: per (sample, channel) standardization over the
//! spatial plane, followed by a learned per-channel affine map.

use super::{expect_shape, Real, Tensor};
use crate::error::{Error, Result};

pub const IN_EPS: f64 = 1e-5;

/// Intermediates kept from the forward pass.
#[derive(Clone, Debug)]
pub struct InstanceNormCache<T> {
    /// Normalized input before the affine map.
    xhat: Tensor<T>,
    /// `1 / sqrt(var + eps)` per (sample, channel).
    inv_std: Vec<T>,
    gamma: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct InstanceNormGrads<T> {
    pub input: Tensor<T>,
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
}

/// Mean and biased variance of a plane, accumulated in f64 over fixed lanes.
fn plane_stats<T: Real>(x: &[T]) -> (f64, f64) {
    const LANES: usize = 8;
    let count = x.len() as f64;
    let lanes = |f: &dyn Fn(f64) -> f64| {
        let mut acc = [0.0f64; LANES];
        let chunks = x.chunks_exact(LANES);
        let tail: f64 = chunks.remainder().iter().map(|v| f(v.to_f64().unwrap_or(f64::NAN))).sum();
        for chunk in chunks {
            for (a, v) in acc.iter_mut().zip(chunk) {
                *a += f(v.to_f64().unwrap_or(f64::NAN));
            }
        }
        acc.iter().sum::<f64>() + tail
    };
    let mean = lanes(&|v| v) / count;
    let var = lanes(&|v| (v - mean) * (v - mean)) / count;
    (mean, var)
}

/// Normalization alone, for inference: no cache is built.
pub fn instance_norm_infer<T: Real>(input: &Tensor<T>, gamma: &[T], beta: &[T], eps: T) -> Result<Tensor<T>> {
    let s = input.shape();
    if gamma.len() != s.c || beta.len() != s.c || s.plane() == 0 || !(eps > T::zero()) {
        return instance_norm_forward(input, gamma, beta, eps).map(|(out, _)| out);
    }
    let eps64 = eps.to_f64().unwrap_or(0.0);
    let mut out = input.clone();
    for n in 0..s.n {
        for c in 0..s.c {
            let plane = out.plane_mut(n, c);
            let (mean, var) = plane_stats(plane);
            let scale = T::lit(1.0 / (var + eps64).sqrt()) * gamma[c];
            let shift = beta[c] - T::lit(mean) * scale;
            plane.iter_mut().for_each(|v| *v = *v * scale + shift);
        }
    }
    Ok(out)
}

pub fn instance_norm_forward<T: Real>(
    input: &Tensor<T>,
    gamma: &[T],
    beta: &[T],
    eps: T,
) -> Result<(Tensor<T>, InstanceNormCache<T>)> {
    let s = input.shape();
    if gamma.len() != s.c || beta.len() != s.c {
        return Err(Error::contract(format!(
            "instance_norm: {} channels but gamma/beta have {}/{}",
            s.c,
            gamma.len(),
            beta.len()
        )));
    }
    if s.plane() == 0 {
        return Err(Error::contract("instance_norm: empty spatial plane"));
    }
    if !(eps > T::zero()) {
        return Err(Error::contract("instance_norm: eps must be positive"));
    }
    let eps64 = eps.to_f64().unwrap_or(0.0);
    let mut xhat = Tensor::zeros(s);
    let mut out = Tensor::zeros(s);
    let mut inv_std = Vec::with_capacity(s.n * s.c);
    let mut buf = vec![T::zero(); s.plane()];
    for n in 0..s.n {
        for c in 0..s.c {
            let x = input.plane(n, c);
            let (mean, var) = plane_stats(x);
            let istd = 1.0 / (var + eps64).sqrt();
            inv_std.push(T::lit(istd));
            let (g, b) = (gamma[c], beta[c]);
            let mean_t = T::lit(mean);
            let istd_t = T::lit(istd);
            let out_plane = out.plane_mut(n, c);
            for (i, &v) in x.iter().enumerate() {
                let xh = (v - mean_t) * istd_t;
                out_plane[i] = g * xh + b;
                buf[i] = xh;
            }
            xhat.plane_mut(n, c).copy_from_slice(&buf);
        }
    }
    Ok((
        out,
        InstanceNormCache {
            xhat,
            inv_std,
            gamma: gamma.to_vec(),
        },
    ))
}

/// Gradient through normalization, including the dependence of the mean and
/// variance on every element of the plane:
/// `dx = inv_std / N * (N * dxhat - sum(dxhat) - xhat * sum(dxhat * xhat))`.
pub fn instance_norm_backward<T: Real>(
    cache: &InstanceNormCache<T>,
    grad_out: &Tensor<T>,
) -> Result<InstanceNormGrads<T>> {
    let s = cache.xhat.shape();
    expect_shape("instance_norm_backward grad_out", grad_out.shape(), s)?;
    let count = s.plane() as f64;
    let mut gin = Tensor::zeros(s);
    let mut gg = vec![T::zero(); s.c];
    let mut gbeta = vec![T::zero(); s.c];
    for n in 0..s.n {
        for c in 0..s.c {
            let g = grad_out.plane(n, c);
            let xh = cache.xhat.plane(n, c);
            let mut sum_g = 0.0f64;
            let mut sum_gx = 0.0f64;
            for (&gv, &xv) in g.iter().zip(xh) {
                let gv = gv.to_f64().unwrap_or(f64::NAN);
                sum_g += gv;
                sum_gx += gv * xv.to_f64().unwrap_or(f64::NAN);
            }
            gg[c] += T::lit(sum_gx);
            gbeta[c] += T::lit(sum_g);
            // dxhat = gamma * g, so the sums over dxhat are gamma times these.
            let gamma = cache.gamma[c];
            let scale = gamma * cache.inv_std[n * s.c + c];
            let mean_g = T::lit(sum_g / count);
            let mean_gx = T::lit(sum_gx / count);
            for ((dst, &gv), &xv) in gin.plane_mut(n, c).iter_mut().zip(g).zip(xh) {
                *dst = scale * (gv - mean_g - xv * mean_gx);
            }
        }
    }
    Ok(InstanceNormGrads {
        input: gin,
        gamma: gg,
        beta: gbeta,
    })
}
