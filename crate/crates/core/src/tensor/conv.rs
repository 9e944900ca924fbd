//! 3x3 same-padding cross-correlation.

use super::{axpy, dot, expect_shape, Real, Shape, Tensor};
use crate::error::{Error, Result};

/// Side length of every convolution kernel.
pub const KERNEL: usize = 3;

/// Gradients of a convolution with respect to its input, weight and bias.
#[derive(Clone, Debug)]
pub struct ConvGrads<T> {
    pub input: Option<Tensor<T>>,
    pub weight: Tensor<T>,
    pub bias: Vec<T>,
}

fn check_weight<T: Real>(input: Shape, weight: &Tensor<T>) -> Result<usize> {
    let ws = weight.shape();
    if ws.h != KERNEL || ws.w != KERNEL {
        return Err(Error::contract(format!(
            "conv2d: kernel must be {KERNEL}x{KERNEL}, weight shape is {ws}"
        )));
    }
    if ws.c != input.c {
        return Err(Error::contract(format!(
            "conv2d: input has {} channels but weight expects {} ({ws})",
            input.c, ws.c
        )));
    }
    if input.h == 0 || input.w == 0 {
        return Err(Error::contract(format!(
            "conv2d: empty spatial dims {input}"
        )));
    }
    Ok(ws.n)
}

/// For a tap offset `d` in {-1, 0, 1} along an axis of length `len`, the
/// output coordinates whose shifted source `i + d` is in bounds.
#[inline]
fn valid_range(d: isize, len: usize) -> std::ops::Range<usize> {
    let start = (-d).max(0) as usize;
    let end = (len as isize - d.max(0)).max(0) as usize;
    start..end.max(start)
}

/// `dst[x] += t0 * src[x-1] + t1 * src[x] + t2 * src[x+1]`, zero outside `src`.
#[inline]
fn row3<T: Real>(t: [T; 3], src: &[T], dst: &mut [T]) {
    let w = dst.len();
    if w == 1 {
        dst[0] += t[1] * src[0];
        return;
    }
    dst[0] += t[1] * src[0] + t[2] * src[1];
    let (a, b, c) = (&src[..w - 2], &src[1..w - 1], &src[2..w]);
    for (((d, &a), &b), &c) in dst[1..w - 1].iter_mut().zip(a).zip(b).zip(c) {
        *d += t[0] * a + t[1] * b + t[2] * c;
    }
    dst[w - 1] += t[0] * src[w - 2] + t[1] * src[w - 1];
}

/// Forward pass: `out[n,o,y,x] = b[o] + sum_{i,ky,kx} w[o,i,ky,kx] * in[n,i,y+ky-1,x+kx-1]`
/// with zeros outside the image.
pub fn conv2d_forward<T: Real>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: &[T],
) -> Result<Tensor<T>> {
    let is = input.shape();
    let cout = check_weight(is, weight)?;
    if bias.len() != cout {
        return Err(Error::contract(format!(
            "conv2d: bias has {} entries, weight has {cout} output channels",
            bias.len()
        )));
    }
    let (h, w) = (is.h, is.w);
    let mut out = Tensor::zeros(Shape::new(is.n, cout, h, w));
    let wd = weight.data();
    for n in 0..is.n {
        for o in 0..cout {
            let dst = out.plane_mut(n, o);
            dst.fill(bias[o]);
            for i in 0..is.c {
                let src = input.plane(n, i);
                let taps = &wd[(o * is.c + i) * 9..(o * is.c + i + 1) * 9];
                for ky in 0..KERNEL {
                    let dy = ky as isize - 1;
                    for y in valid_range(dy, h) {
                        let sy = (y as isize + dy) as usize;
                        let drow = &mut dst[y * w..(y + 1) * w];
                        let srow = &src[sy * w..(sy + 1) * w];
                        let k = &taps[ky * KERNEL..(ky + 1) * KERNEL];
                        row3([k[0], k[1], k[2]], srow, drow);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Backward pass given the forward input and weight.
///
/// `grad_bias[o]` is the sum of `grad_out` over batch and space for channel `o`.
pub fn conv2d_backward<T: Real>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<ConvGrads<T>> {
    conv2d_backward_inner(input, weight, grad_out, true)
}

/// Same as [`conv2d_backward`], optionally skipping the input gradient
/// (the first layer of a network never needs it).
pub(crate) fn conv2d_backward_inner<T: Real>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    grad_out: &Tensor<T>,
    want_input: bool,
) -> Result<ConvGrads<T>> {
    let is = input.shape();
    let cout = check_weight(is, weight)?;
    expect_shape(
        "conv2d_backward grad_out",
        grad_out.shape(),
        Shape::new(is.n, cout, is.h, is.w),
    )?;
    let (h, w) = (is.h, is.w);
    let wd = weight.data();
    let mut gw = Tensor::zeros(weight.shape());
    let mut gin = want_input.then(|| Tensor::zeros(is));
    let mut gb = vec![T::zero(); cout];

    for n in 0..is.n {
        for o in 0..cout {
            let g = grad_out.plane(n, o);
            let mut s = 0.0f64;
            for &v in g {
                s += v.to_f64().unwrap_or(f64::NAN);
            }
            gb[o] += T::lit(s);
            for i in 0..is.c {
                let src = input.plane(n, i);
                let base = (o * is.c + i) * 9;
                for ky in 0..KERNEL {
                    let dy = ky as isize - 1;
                    for kx in 0..KERNEL {
                        let dx = kx as isize - 1;
                        let xs = valid_range(dx, w);
                        let s0 = (xs.start as isize + dx) as usize;
                        let s1 = (xs.end as isize + dx) as usize;
                        let mut acc = T::zero();
                        for y in valid_range(dy, h) {
                            let sy = (y as isize + dy) as usize;
                            acc += dot(
                                &g[y * w + xs.start..y * w + xs.end],
                                &src[sy * w + s0..sy * w + s1],
                            );
                        }
                        gw.data_mut()[base + ky * KERNEL + kx] += acc;
                    }
                }
                if let Some(gin) = gin.as_mut() {
                    let dst = gin.plane_mut(n, i);
                    let taps = &wd[base..base + 9];
                    for ky in 0..KERNEL {
                        let dy = ky as isize - 1;
                        for y in valid_range(dy, h) {
                            let sy = (y as isize + dy) as usize;
                            let grow = &g[y * w..(y + 1) * w];
                            let drow = &mut dst[sy * w..(sy + 1) * w];
                            for kx in 0..KERNEL {
                                let dx = kx as isize - 1;
                                let xs = valid_range(dx, w);
                                let s0 = (xs.start as isize + dx) as usize;
                                let s1 = (xs.end as isize + dx) as usize;
                                axpy(taps[ky * KERNEL + kx], &grow[xs], &mut drow[s0..s1]);
                            }
                        }
                    }
                }
            }
        }
    }

    Ok(ConvGrads {
        input: gin,
        weight: gw,
        bias: gb,
    })
}
