//! Oracles shared by the test targets: finite-difference gradient checks,
//! a nested-loop convolution and a direct-window SSIM.
#![allow(dead_code)]

use noiser::tensor::{
    conv2d_backward, conv2d_forward, instance_norm_backward, instance_norm_forward, l1_loss, relu,
    relu_backward, tanh, tanh_backward, tv_loss, Shape, Tensor, IN_EPS,
};
use noiser::{Rgb8, RgbImage, SrmParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const STEP: f64 = 1e-3;
pub const TOL: f64 = 1e-3;
pub const TOL_COMPOSED: f64 = 1e-2;
/// Entries closer than this to a kink are excluded: a central difference
/// with step `STEP` straddles the kink there and is not a valid oracle.
pub const TIE: f64 = STEP;
pub const INSTANCES: u64 = 20;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x9d1e_0000 + seed)
}

pub fn randn(rng: &mut ChaCha8Rng, s: Shape) -> Tensor<f64> {
    Tensor::from_fn(s, |_| rng.sample::<f64, _>(StandardNormal))
}

/// Random shape up to (2, 4, 6, 6).
pub fn small_shape(rng: &mut ChaCha8Rng) -> Shape {
    Shape::new(rng.random_range(1..=2), rng.random_range(1..=4), rng.random_range(2..=6), rng.random_range(2..=6))
}

/// Norm-wise relative error `|a - b| / max(|a|, |b|)` over the kept entries.
pub fn rel_err(analytic: &[f64], numeric: &[f64], keep: &[bool]) -> f64 {
    let (mut diff, mut na, mut nn) = (0.0, 0.0, 0.0);
    for ((&a, &n), &k) in analytic.iter().zip(numeric).zip(keep) {
        if k {
            diff += (a - n) * (a - n);
            na += a * a;
            nn += n * n;
        }
    }
    let scale = na.max(nn).sqrt();
    if scale < 1e-12 {
        diff.sqrt()
    } else {
        diff.sqrt() / scale
    }
}

fn all(n: usize) -> Vec<bool> {
    vec![true; n]
}

/// Central differences of `f` over every entry of `x`.
pub fn numeric_grad(x: &mut [f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + STEP;
            let up = f(x);
            x[i] = orig - STEP;
            let down = f(x);
            x[i] = orig;
            (up - down) / (2.0 * STEP)
        })
        .collect()
}

fn project(y: &Tensor<f64>, r: &Tensor<f64>) -> f64 {
    y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

/// Worst relative error of conv2d input/weight/bias gradients.
pub fn conv2d_worst() -> f64 {
    let mut worst = 0.0f64;
    for k in 0..INSTANCES {
        let mut g = rng(k);
        let s = small_shape(&mut g);
        let cout = g.random_range(1..=4);
        let x = randn(&mut g, s);
        let w = randn(&mut g, Shape::new(cout, s.c, 3, 3));
        let b: Vec<f64> = (0..cout).map(|_| g.sample(StandardNormal)).collect();
        let r = randn(&mut g, Shape::new(s.n, cout, s.h, s.w));
        let grads = conv2d_backward(&x, &w, &r).unwrap();

        let mut xv = x.data().to_vec();
        let nx = numeric_grad(&mut xv, |v| {
            project(&conv2d_forward(&Tensor::from_vec(s, v.to_vec()).unwrap(), &w, &b).unwrap(), &r)
        });
        let mut wv = w.data().to_vec();
        let nw = numeric_grad(&mut wv, |v| {
            project(&conv2d_forward(&x, &Tensor::from_vec(w.shape(), v.to_vec()).unwrap(), &b).unwrap(), &r)
        });
        let mut bv = b.clone();
        let nb = numeric_grad(&mut bv, |v| project(&conv2d_forward(&x, &w, v).unwrap(), &r));

        let gx = grads.input.unwrap();
        worst = worst
            .max(rel_err(gx.data(), &nx, &all(nx.len())))
            .max(rel_err(grads.weight.data(), &nw, &all(nw.len())))
            .max(rel_err(&grads.bias, &nb, &all(nb.len())));
    }
    worst
}

pub fn instance_norm_worst() -> f64 {
    let mut worst = 0.0f64;
    for k in 0..INSTANCES {
        let mut g = rng(100 + k);
        let s = small_shape(&mut g);
        let x = randn(&mut g, s);
        let gamma: Vec<f64> = (0..s.c).map(|_| g.random_range(0.5..1.5)).collect();
        let beta: Vec<f64> = (0..s.c).map(|_| g.sample(StandardNormal)).collect();
        let r = randn(&mut g, s);
        let eps = IN_EPS as f64;
        let (_, cache) = instance_norm_forward(&x, &gamma, &beta, eps).unwrap();
        let grads = instance_norm_backward(&cache, &r).unwrap();

        let obj = |x: &Tensor<f64>, gm: &[f64], bt: &[f64]| {
            project(&instance_norm_forward(x, gm, bt, eps).unwrap().0, &r)
        };
        let mut xv = x.data().to_vec();
        let nx = numeric_grad(&mut xv, |v| obj(&Tensor::from_vec(s, v.to_vec()).unwrap(), &gamma, &beta));
        let mut gv = gamma.clone();
        let ng = numeric_grad(&mut gv, |v| obj(&x, v, &beta));
        let mut bv = beta.clone();
        let nb = numeric_grad(&mut bv, |v| obj(&x, &gamma, v));

        worst = worst
            .max(rel_err(grads.input.data(), &nx, &all(nx.len())))
            .max(rel_err(&grads.gamma, &ng, &all(ng.len())))
            .max(rel_err(&grads.beta, &nb, &all(nb.len())));
    }
    worst
}

pub fn relu_worst() -> f64 {
    let mut worst = 0.0f64;
    for k in 0..INSTANCES {
        let mut g = rng(200 + k);
        let s = small_shape(&mut g);
        let x = randn(&mut g, s);
        let r = randn(&mut g, s);
        let a = relu_backward(&x, &r).unwrap();
        let mut xv = x.data().to_vec();
        let n = numeric_grad(&mut xv, |v| project(&relu(&Tensor::from_vec(s, v.to_vec()).unwrap()), &r));
        let keep: Vec<bool> = x.data().iter().map(|v| v.abs() >= TIE).collect();
        worst = worst.max(rel_err(a.data(), &n, &keep));
    }
    worst
}

pub fn tanh_worst() -> f64 {
    let mut worst = 0.0f64;
    for k in 0..INSTANCES {
        let mut g = rng(300 + k);
        let s = small_shape(&mut g);
        let x = randn(&mut g, s);
        let r = randn(&mut g, s);
        let a = tanh_backward(&tanh(&x), &r).unwrap();
        let mut xv = x.data().to_vec();
        let n = numeric_grad(&mut xv, |v| project(&tanh(&Tensor::from_vec(s, v.to_vec()).unwrap()), &r));
        worst = worst.max(rel_err(a.data(), &n, &all(n.len())));
    }
    worst
}

pub fn l1_worst() -> f64 {
    let mut worst = 0.0f64;
    for k in 0..INSTANCES {
        let mut g = rng(400 + k);
        let s = small_shape(&mut g);
        let p = randn(&mut g, s);
        let t = randn(&mut g, s);
        let (_, a) = l1_loss(&p, &t).unwrap();
        let mut pv = p.data().to_vec();
        let n = numeric_grad(&mut pv, |v| l1_loss(&Tensor::from_vec(s, v.to_vec()).unwrap(), &t).unwrap().0);
        let keep: Vec<bool> = p.data().iter().zip(t.data()).map(|(a, b)| (a - b).abs() >= TIE).collect();
        worst = worst.max(rel_err(a.data(), &n, &keep));
    }
    worst
}

pub fn tv_worst() -> f64 {
    let mut worst = 0.0f64;
    for k in 0..INSTANCES {
        let mut g = rng(500 + k);
        let s = small_shape(&mut g);
        let x = randn(&mut g, s);
        let (_, a) = tv_loss(&x).unwrap();
        let mut xv = x.data().to_vec();
        let n = numeric_grad(&mut xv, |v| tv_loss(&Tensor::from_vec(s, v.to_vec()).unwrap()).unwrap().0);
        worst = worst.max(rel_err(a.data(), &n, &all(n.len())));
    }
    worst
}

/// Training objective `L1(f(x), x) + TV(f(x))` and the pattern of kinks it
/// sits on (hidden relu masks, L1 signs).
fn srm_objective(p: &SrmParams<f64>, x: &Tensor<f64>) -> (f64, Vec<bool>) {
    let (y, cache) = p.forward(x).unwrap();
    let mut pattern = cache.activation_pattern();
    pattern.extend(y.data().iter().zip(x.data()).map(|(a, b)| a > b));
    (l1_loss(&y, x).unwrap().0 + tv_loss(&y).unwrap().0, pattern)
}

/// Worst relative error of every parameter gradient of the full model on
/// 1x3x6x6 inputs. Parameters whose perturbation flips a relu mask or an L1
/// sign are excluded.
pub fn composed_worst(instance_norm: bool) -> f64 {
    let base_seed = if instance_norm { 600 } else { 700 };
    let mut worst = 0.0f64;
    for k in 0..INSTANCES {
        let mut g = rng(base_seed + k);
        let width = g.random_range(2..=4);
        let init = if instance_norm {
            SrmParams::new(k, width)
        } else {
            SrmParams::new_without_instance_norm(k, width)
        };
        let mut p: SrmParams<f64> = init.unwrap().cast();
        // Move the affine terms off their identity initialization.
        for v in p.in1_gamma.iter_mut().chain(p.in2_gamma.iter_mut()) {
            *v = g.random_range(0.5..1.5);
        }
        for v in p.in1_beta.iter_mut().chain(p.in2_beta.iter_mut()).chain(p.conv1_b.iter_mut()) {
            *v = g.random_range(-0.3..0.3);
        }
        let x = randn(&mut g, Shape::new(1, 3, 6, 6));
        let (y, cache) = p.forward(&x).unwrap();
        let (_, g1) = l1_loss(&y, &x).unwrap();
        let (_, g2) = tv_loss(&y).unwrap();
        let gy = Tensor::from_vec(y.shape(), g1.data().iter().zip(g2.data()).map(|(a, b)| a + b).collect())
            .unwrap();
        let grads = p.backward(&cache, &gy).unwrap();
        let analytic: Vec<f64> = grads.buffers.iter().flatten().copied().collect();

        let (_, base) = srm_objective(&p, &x);
        let mut numeric = Vec::with_capacity(analytic.len());
        let mut keep = Vec::with_capacity(analytic.len());
        for b in 0..10 {
            for i in 0..p.buffers()[b].len() {
                let orig = p.buffers()[b][i];
                p.buffers_mut()[b][i] = orig + STEP;
                let (up, pu) = srm_objective(&p, &x);
                p.buffers_mut()[b][i] = orig - STEP;
                let (down, pd) = srm_objective(&p, &x);
                p.buffers_mut()[b][i] = orig;
                numeric.push((up - down) / (2.0 * STEP));
                keep.push(pu == base && pd == base);
            }
        }
        let kept = keep.iter().filter(|&&k| k).count();
        assert!(kept * 2 > keep.len(), "instance {k}: only {kept}/{} parameters checkable", keep.len());
        worst = worst.max(rel_err(&analytic, &numeric, &keep));
    }
    worst
}

/// Direct nested-loop 3x3 same-padding cross-correlation.
pub fn naive_conv(x: &Tensor, w: &Tensor, b: &[f32]) -> Vec<f64> {
    let s = x.shape();
    let cout = w.shape().n;
    let mut out = vec![0.0f64; s.n * cout * s.h * s.w];
    for n in 0..s.n {
        for o in 0..cout {
            for y in 0..s.h as isize {
                for xx in 0..s.w as isize {
                    let mut acc = b[o] as f64;
                    for i in 0..s.c {
                        for ky in 0..3isize {
                            for kx in 0..3isize {
                                let (sy, sx) = (y + ky - 1, xx + kx - 1);
                                if sy < 0 || sx < 0 || sy >= s.h as isize || sx >= s.w as isize {
                                    continue;
                                }
                                let xi = x.get(n, i, sy as usize, sx as usize) as f64;
                                let wi = w.get(o, i, ky as usize, kx as usize) as f64;
                                acc += xi * wi;
                            }
                        }
                    }
                    out[((n * cout + o) * s.h + y as usize) * s.w + xx as usize] = acc;
                }
            }
        }
    }
    out
}

/// Largest absolute gap between `conv2d_forward` and [`naive_conv`] over
/// random f32 cases up to 2x5x9x9.
pub fn conv_oracle_worst() -> f64 {
    let mut worst = 0.0f64;
    for k in 0..INSTANCES {
        let mut g = rng(900 + k);
        let s = Shape::new(g.random_range(1..=2), g.random_range(1..=5), g.random_range(1..=9), g.random_range(1..=9));
        let cout = g.random_range(1..=5);
        let x = Tensor::from_fn(s, |_| g.random_range(-1.0f32..1.0));
        let w = Tensor::from_fn(Shape::new(cout, s.c, 3, 3), |_| g.random_range(-1.0f32..1.0));
        let b: Vec<f32> = (0..cout).map(|_| g.random_range(-1.0f32..1.0)).collect();
        let fast = conv2d_forward(&x, &w, &b).unwrap();
        let slow = naive_conv(&x, &w, &b);
        for (f, s) in fast.data().iter().zip(&slow) {
            worst = worst.max((*f as f64 - s).abs());
        }
    }
    worst
}

/// SSIM computed window by window with an explicit 2-D kernel and two-pass
/// weighted moments.
pub fn slow_ssim(a: &RgbImage, b: &RgbImage) -> f64 {
    let grey = |img: &RgbImage, x: usize, y: usize| {
        let p = img.pixel(x, y);
        p.r as f64 * 0.299 + p.g as f64 * 0.587 + p.b as f64 * 0.114
    };
    let mut kernel = [[0.0f64; 11]; 11];
    let mut total = 0.0;
    for (i, row) in kernel.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
            *v = (-(di * di + dj * dj) / (2.0 * 1.5 * 1.5)).exp();
            total += *v;
        }
    }
    kernel.iter_mut().flatten().for_each(|v| *v /= total);
    let (c1, c2) = ((0.01f64 * 255.0).powi(2), (0.03f64 * 255.0).powi(2));
    let mut sum = 0.0;
    let mut windows = 0usize;
    for oy in 0..=a.height() - 11 {
        for ox in 0..=a.width() - 11 {
            let (mut ma, mut mb) = (0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    ma += kernel[i][j] * grey(a, ox + j, oy + i);
                    mb += kernel[i][j] * grey(b, ox + j, oy + i);
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    let da = grey(a, ox + j, oy + i) - ma;
                    let db = grey(b, ox + j, oy + i) - mb;
                    va += kernel[i][j] * da * da;
                    vb += kernel[i][j] * db * db;
                    cov += kernel[i][j] * da * db;
                }
            }
            sum += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            windows += 1;
        }
    }
    sum / windows as f64
}

/// Fixed 32x32 image pairs: a textured base against a brightened, a noisy
/// and an unrelated counterpart.
pub fn ssim_pairs() -> Vec<(RgbImage, RgbImage)> {
    let base = RgbImage::from_fn(32, 32, |x, y| {
        Rgb8::new(((x * 7 + y * 3) % 256) as u8, ((x * y) % 200) as u8, ((x + 2 * y) * 4 % 256) as u8)
    })
    .unwrap();
    let bright = RgbImage::new(
        32,
        32,
        base.pixels().iter().map(|p| Rgb8::from_channels(p.channels().map(|v| v.saturating_add(40)))).collect(),
    )
    .unwrap();
    let mut g = rng(1000);
    let noisy = RgbImage::new(
        32,
        32,
        base.pixels()
            .iter()
            .map(|p| Rgb8::from_channels(p.channels().map(|v| (v as i32 + g.random_range(-30..=30)).clamp(0, 255) as u8)))
            .collect(),
    )
    .unwrap();
    let other = RgbImage::from_fn(32, 32, |x, y| if (x / 4 + y / 4) % 2 == 0 { Rgb8::BLACK } else { Rgb8::new(200, 180, 90) }).unwrap();
    vec![(base.clone(), base.clone()), (base.clone(), bright), (base.clone(), noisy), (base, other)]
}

pub fn ssim_oracle_worst() -> f64 {
    ssim_pairs()
        .iter()
        .map(|(a, b)| (noiser::ssim(a, b).unwrap() - slow_ssim(a, b)).abs())
        .fold(0.0, f64::max)
}
