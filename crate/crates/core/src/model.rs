//! The self-regression model: three 3x3 convolutions, instance norm and relu
//! after the first two, tanh on the output. No skip connections.
//!
//! ```text
//! x(3) -> conv1 -> IN -> relu -> conv2 -> IN -> relu -> conv3 -> tanh -> y(3)
//!         (3->C)                 (C->C)                 (C->3)
//! ```

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{
    conv2d_backward_inner, conv2d_forward, instance_norm_backward, instance_norm_forward, instance_norm_infer, relu,
    relu_backward, tanh, tanh_backward, InstanceNormCache, Real, Shape, Tensor, IN_EPS, KERNEL,
};

/// Image channels at the model boundary.
pub const RGB: usize = 3;
pub const DEFAULT_HIDDEN_WIDTH: usize = 9;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"NSER";
pub const CHECKPOINT_VERSION: u16 = 1;
const FLAG_NO_IN: u16 = 1;
const HEADER_LEN: usize = 10;

/// Number of learnable scalars for hidden width `c`: `9c^2 + 60c + 3`.
pub const fn param_count_for(c: usize) -> usize {
    9 * c * c + 60 * c + 3
}

/// Every learnable parameter of the model.
#[derive(Clone, Debug, PartialEq)]
pub struct SrmParams<T = f32> {
    hidden_width: usize,
    instance_norm: bool,
    pub conv1_w: Tensor<T>,
    pub conv1_b: Vec<T>,
    pub in1_gamma: Vec<T>,
    pub in1_beta: Vec<T>,
    pub conv2_w: Tensor<T>,
    pub conv2_b: Vec<T>,
    pub in2_gamma: Vec<T>,
    pub in2_beta: Vec<T>,
    pub conv3_w: Tensor<T>,
    pub conv3_b: Vec<T>,
}

/// Gradients for each parameter buffer, in checkpoint order.
#[derive(Clone, Debug, PartialEq)]
pub struct SrmGrads<T = f32> {
    pub buffers: [Vec<T>; 10],
}

/// Forward intermediates, valid for exactly one forward call.
#[derive(Clone, Debug)]
pub struct SrmCache<T = f32> {
    hidden_width: usize,
    instance_norm: bool,
    input: Tensor<T>,
    norm1: Option<InstanceNormCache<T>>,
    act1: Tensor<T>,
    norm2: Option<InstanceNormCache<T>>,
    act2: Tensor<T>,
    output: Tensor<T>,
}

fn uniform_weight<T: Real>(rng: &mut ChaCha8Rng, cout: usize, cin: usize) -> Tensor<T> {
    let bound = (1.0 / (cin * KERNEL * KERNEL) as f64).sqrt();
    Tensor::from_fn(Shape::new(cout, cin, KERNEL, KERNEL), |_| {
        T::lit(rng.random_range(-bound..bound))
    })
}

impl SrmParams<f32> {
    /// Freshly initialized model: conv weights uniform in `±sqrt(1/fan_in)`,
    /// zero biases, unit IN scale and zero shift.
    pub fn new(seed: u64, hidden_width: usize) -> Result<Self> {
        Self::init(seed, hidden_width, true)
    }

    /// Like [`SrmParams::new`] but with the IN layers replaced by identity.
    pub fn new_without_instance_norm(seed: u64, hidden_width: usize) -> Result<Self> {
        Self::init(seed, hidden_width, false)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.param_count());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.hidden_width as u16).to_le_bytes());
        let flags = if self.instance_norm { 0 } else { FLAG_NO_IN };
        out.extend_from_slice(&flags.to_le_bytes());
        for buf in self.buffers() {
            for v in buf {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format(format!(
                "truncated header: {} bytes, need {HEADER_LEN}",
                bytes.len()
            )));
        }
        if &bytes[..4] != CHECKPOINT_MAGIC {
            return Err(Error::Format(format!(
                "bad magic: expected {:?}, found {:?}",
                String::from_utf8_lossy(CHECKPOINT_MAGIC),
                String::from_utf8_lossy(&bytes[..4])
            )));
        }
        let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
        let version = u16_at(4);
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "unsupported version {version}, this build reads {CHECKPOINT_VERSION}"
            )));
        }
        let width = u16_at(6) as usize;
        if width == 0 {
            return Err(Error::Format("hidden width is zero".into()));
        }
        let flags = u16_at(8);
        if flags & !FLAG_NO_IN != 0 {
            return Err(Error::Format(format!("unknown flag bits {flags:#06x}")));
        }
        let want = HEADER_LEN + 4 * param_count_for(width);
        if bytes.len() != want {
            return Err(Error::Format(format!(
                "size mismatch: width {width} needs {want} bytes, file has {}",
                bytes.len()
            )));
        }
        let mut params = Self::init(0, width, flags & FLAG_NO_IN == 0)?;
        let mut off = HEADER_LEN;
        for buf in params.buffers_mut() {
            for v in buf.iter_mut() {
                *v = f32::from_le_bytes(bytes[off..off + 4].try_into().expect("4-byte chunk"));
                off += 4;
            }
        }
        Ok(params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

impl<T: Real> SrmParams<T> {
    fn init(seed: u64, hidden_width: usize, instance_norm: bool) -> Result<Self> {
        if hidden_width == 0 || hidden_width > u16::MAX as usize {
            return Err(Error::contract(format!(
                "hidden width must be in 1..=65535, got {hidden_width}"
            )));
        }
        let c = hidden_width;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let conv1_w = uniform_weight(&mut rng, c, RGB);
        let conv2_w = uniform_weight(&mut rng, c, c);
        let conv3_w = uniform_weight(&mut rng, RGB, c);
        Ok(SrmParams {
            hidden_width,
            instance_norm,
            conv1_w,
            conv1_b: vec![T::zero(); c],
            in1_gamma: vec![T::one(); c],
            in1_beta: vec![T::zero(); c],
            conv2_w,
            conv2_b: vec![T::zero(); c],
            in2_gamma: vec![T::one(); c],
            in2_beta: vec![T::zero(); c],
            conv3_w,
            conv3_b: vec![T::zero(); RGB],
        })
    }

    pub fn hidden_width(&self) -> usize {
        self.hidden_width
    }

    pub fn instance_norm(&self) -> bool {
        self.instance_norm
    }

    pub fn param_count(&self) -> usize {
        self.buffers().iter().map(|b| b.len()).sum()
    }

    /// Buffer lengths in checkpoint order.
    pub fn layout(&self) -> Vec<usize> {
        self.buffers().iter().map(|b| b.len()).collect()
    }

    /// Parameter buffers in checkpoint order: conv1.w, conv1.b, in1.g, in1.b,
    /// conv2.w, conv2.b, in2.g, in2.b, conv3.w, conv3.b.
    pub fn buffers(&self) -> [&[T]; 10] {
        [
            self.conv1_w.data(),
            &self.conv1_b,
            &self.in1_gamma,
            &self.in1_beta,
            self.conv2_w.data(),
            &self.conv2_b,
            &self.in2_gamma,
            &self.in2_beta,
            self.conv3_w.data(),
            &self.conv3_b,
        ]
    }

    pub fn buffers_mut(&mut self) -> [&mut [T]; 10] {
        [
            self.conv1_w.data_mut(),
            &mut self.conv1_b,
            &mut self.in1_gamma,
            &mut self.in1_beta,
            self.conv2_w.data_mut(),
            &mut self.conv2_b,
            &mut self.in2_gamma,
            &mut self.in2_beta,
            self.conv3_w.data_mut(),
            &mut self.conv3_b,
        ]
    }

    pub fn cast<U: Real>(&self) -> SrmParams<U> {
        let v = |b: &[T]| -> Vec<U> { b.iter().map(|x| U::lit(x.to_f64().unwrap_or(f64::NAN))).collect() };
        SrmParams {
            hidden_width: self.hidden_width,
            instance_norm: self.instance_norm,
            conv1_w: self.conv1_w.cast(),
            conv1_b: v(&self.conv1_b),
            in1_gamma: v(&self.in1_gamma),
            in1_beta: v(&self.in1_beta),
            conv2_w: self.conv2_w.cast(),
            conv2_b: v(&self.conv2_b),
            in2_gamma: v(&self.in2_gamma),
            in2_beta: v(&self.in2_beta),
            conv3_w: self.conv3_w.cast(),
            conv3_b: v(&self.conv3_b),
        }
    }

    fn norm(
        &self,
        x: &Tensor<T>,
        gamma: &[T],
        beta: &[T],
    ) -> Result<(Tensor<T>, Option<InstanceNormCache<T>>)> {
        if self.instance_norm {
            let (y, cache) = instance_norm_forward(x, gamma, beta, T::lit(IN_EPS))?;
            Ok((y, Some(cache)))
        } else {
            Ok((x.clone(), None))
        }
    }

    /// Runs the network on `x` of shape `[n, 3, h, w]`, keeping what backward needs.
    pub fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, SrmCache<T>)> {
        if x.shape().c != RGB {
            return Err(Error::contract(format!(
                "model input must have {RGB} channels, got {}",
                x.shape()
            )));
        }
        let pre1 = conv2d_forward(x, &self.conv1_w, &self.conv1_b)?;
        let (n1, norm1) = self.norm(&pre1, &self.in1_gamma, &self.in1_beta)?;
        let act1 = relu(&n1);
        let pre2 = conv2d_forward(&act1, &self.conv2_w, &self.conv2_b)?;
        let (n2, norm2) = self.norm(&pre2, &self.in2_gamma, &self.in2_beta)?;
        let act2 = relu(&n2);
        let pre3 = conv2d_forward(&act2, &self.conv3_w, &self.conv3_b)?;
        let output = tanh(&pre3);
        let cache = SrmCache {
            hidden_width: self.hidden_width,
            instance_norm: self.instance_norm,
            input: x.clone(),
            norm1,
            act1,
            norm2,
            act2,
            output: output.clone(),
        };
        Ok((output, cache))
    }

    /// Forward pass without retaining intermediates; same result as [`SrmParams::forward`].
    pub fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        if x.shape().c != RGB {
            return Err(Error::contract(format!(
                "model input must have {RGB} channels, got {}",
                x.shape()
            )));
        }
        let hidden = |t: Tensor<T>, gamma: &[T], beta: &[T]| -> Result<Tensor<T>> {
            let mut t = if self.instance_norm {
                instance_norm_infer(&t, gamma, beta, T::lit(IN_EPS))?
            } else {
                t
            };
            t.data_mut().iter_mut().for_each(|v| {
                if !(*v > T::zero()) {
                    *v = T::zero()
                }
            });
            Ok(t)
        };
        let a1 = hidden(conv2d_forward(x, &self.conv1_w, &self.conv1_b)?, &self.in1_gamma, &self.in1_beta)?;
        let a2 = hidden(conv2d_forward(&a1, &self.conv2_w, &self.conv2_b)?, &self.in2_gamma, &self.in2_beta)?;
        let mut y = conv2d_forward(&a2, &self.conv3_w, &self.conv3_b)?;
        y.data_mut().iter_mut().for_each(|v| *v = v.tanh());
        Ok(y)
    }

    /// Gradient of a scalar objective with respect to every parameter,
    /// given `grad_y = dL/dy` for the output of the forward call that produced `cache`.
    pub fn backward(&self, cache: &SrmCache<T>, grad_y: &Tensor<T>) -> Result<SrmGrads<T>> {
        if cache.hidden_width != self.hidden_width || cache.instance_norm != self.instance_norm {
            return Err(Error::contract(
                "backward: cache was produced by a model with a different configuration",
            ));
        }
        // relu(v) > 0 exactly when v > 0, so the activations double as relu masks.
        let g_pre3 = tanh_backward(&cache.output, grad_y)?;
        let conv3 = conv2d_backward_inner(&cache.act2, &self.conv3_w, &g_pre3, true)?;
        let g_n2 = relu_backward(&cache.act2, &conv3.input.expect("requested"))?;
        let (g_pre2, in2_g, in2_b) = match &cache.norm2 {
            Some(nc) => {
                let g = instance_norm_backward(nc, &g_n2)?;
                (g.input, g.gamma, g.beta)
            }
            None => (g_n2, vec![T::zero(); self.hidden_width], vec![T::zero(); self.hidden_width]),
        };
        let conv2 = conv2d_backward_inner(&cache.act1, &self.conv2_w, &g_pre2, true)?;
        let g_n1 = relu_backward(&cache.act1, &conv2.input.expect("requested"))?;
        let (g_pre1, in1_g, in1_b) = match &cache.norm1 {
            Some(nc) => {
                let g = instance_norm_backward(nc, &g_n1)?;
                (g.input, g.gamma, g.beta)
            }
            None => (g_n1, vec![T::zero(); self.hidden_width], vec![T::zero(); self.hidden_width]),
        };
        let conv1 = conv2d_backward_inner(&cache.input, &self.conv1_w, &g_pre1, false)?;
        Ok(SrmGrads {
            buffers: [
                conv1.weight.into_vec(),
                conv1.bias,
                in1_g,
                in1_b,
                conv2.weight.into_vec(),
                conv2.bias,
                in2_g,
                in2_b,
                conv3.weight.into_vec(),
                conv3.bias,
            ],
        })
    }
}

impl<T: Real> SrmCache<T> {
    /// Which hidden units were active (`relu` input > 0), both layers in
    /// order. The forward pass is smooth while this pattern stays fixed.
    pub fn activation_pattern(&self) -> Vec<bool> {
        let live = |t: &Tensor<T>| t.data().iter().map(|&v| v > T::zero()).collect::<Vec<_>>();
        let mut out = live(&self.act1);
        out.extend(live(&self.act2));
        out
    }
}

impl<T: Real> SrmGrads<T> {
    pub fn as_slices(&self) -> [&[T]; 10] {
        let b = &self.buffers;
        [&b[0], &b[1], &b[2], &b[3], &b[4], &b[5], &b[6], &b[7], &b[8], &b[9]]
    }

    pub fn all_finite(&self) -> bool {
        self.buffers.iter().flatten().all(|v| v.is_finite())
    }
}
