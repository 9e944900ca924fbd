//! Self-regression training: the model is fit to reproduce its own input
//! under `L1(f(x), x) + TV(f(x))`, with `x` drawn from noise, a pure color or
//! the palette. Probe diagnostics are logged along the way.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::data::{palette_image, pure_color_image, sample_noise, NoiseSpec, Rgb8};
use crate::error::{Error, Result};
use crate::image::{normalize, RgbImage};
use crate::metrics::{color_constancy_of_means, grey_distance_of_means, tensor_channel_means};
use crate::model::{SrmParams, DEFAULT_HIDDEN_WIDTH};
use crate::tensor::{adam_step, l1_loss, tv_loss, AdamState, Tensor};

pub const DEFAULT_ITERATIONS: usize = 2000;
pub const EARLY_STOP_ITERATIONS: usize = 600;
pub const DEFAULT_LEARNING_RATE: f64 = 2e-4;
pub const DEFAULT_NOISE_HW: (usize, usize) = (104, 104);
pub const DEFAULT_PROBE_EVERY: usize = 10;

/// Offset mixed into the seed for the noise stream so it is not the same
/// stream that initialized the weights.
const NOISE_SEED_SALT: u64 = 0x5eed_0f_0015e;

/// What the model regresses onto itself.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum TrainMode {
    /// Fresh `N(0, sigma^2)` noise every iteration.
    Noise,
    /// A constant image of one color.
    PureColor(Rgb8),
    /// The fixed 8-color palette.
    Palette,
}

impl std::fmt::Display for TrainMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrainMode::Noise => write!(f, "noise"),
            TrainMode::PureColor(c) => write!(f, "color:{},{},{}", c.r, c.g, c.b),
            TrainMode::Palette => write!(f, "palette"),
        }
    }
}

impl std::str::FromStr for TrainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noise" => Ok(TrainMode::Noise),
            "palette" => Ok(TrainMode::Palette),
            _ => match s.strip_prefix("color:") {
                Some(c) => Ok(TrainMode::PureColor(c.parse()?)),
                None => Err(Error::Config(format!(
                    "unknown mode {s:?}: expected noise, palette or color:<R,G,B|name>"
                ))),
            },
        }
    }
}

/// Named training recipes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Full convergence: 2000 iterations, sigma 1.
    Fc,
    /// Early stop: 600 iterations, sigma 1.
    Es,
    /// sigma 3, 2000 iterations.
    Var3,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fc" => Ok(Variant::Fc),
            "es" => Ok(Variant::Es),
            "var3" => Ok(Variant::Var3),
            _ => Err(Error::Config(format!("unknown variant {s:?}: expected fc, es or var3"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainConfig {
    pub mode: TrainMode,
    pub iterations: usize,
    pub learning_rate: f64,
    pub sigma: f32,
    pub noise_hw: (usize, usize),
    pub seed: u64,
    pub probe_every: usize,
    pub disable_instance_norm: bool,
    pub hidden_width: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: TrainMode::Noise,
            iterations: DEFAULT_ITERATIONS,
            learning_rate: DEFAULT_LEARNING_RATE,
            sigma: 1.0,
            noise_hw: DEFAULT_NOISE_HW,
            seed: 0,
            probe_every: DEFAULT_PROBE_EVERY,
            disable_instance_norm: false,
            hidden_width: DEFAULT_HIDDEN_WIDTH,
        }
    }
}

impl TrainConfig {
    pub fn variant(v: Variant) -> Self {
        let base = Self::default();
        match v {
            Variant::Fc => base,
            Variant::Es => TrainConfig {
                iterations: EARLY_STOP_ITERATIONS,
                ..base
            },
            Variant::Var3 => TrainConfig { sigma: 3.0, ..base },
        }
    }

    pub fn noiser(sigma: f32) -> Self {
        TrainConfig {
            sigma,
            ..Self::default()
        }
    }

    pub fn c_regression(color: Rgb8) -> Self {
        TrainConfig {
            mode: TrainMode::PureColor(color),
            ..Self::default()
        }
    }

    pub fn p_regression() -> Self {
        TrainConfig {
            mode: TrainMode::Palette,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.probe_every == 0 {
            return Err(Error::Config("probe_every must be at least 1".into()));
        }
        if self.hidden_width == 0 {
            return Err(Error::Config("hidden width must be at least 1".into()));
        }
        let (h, w) = self.noise_hw;
        if h < 2 || w < 2 {
            return Err(Error::Config(format!("training image must be at least 2x2, got {h}x{w}")));
        }
        if self.mode == TrainMode::Palette && (h % 2 != 0 || w % 4 != 0) {
            return Err(Error::Config(format!(
                "palette training needs height divisible by 2 and width by 4, got {h}x{w}"
            )));
        }
        Ok(())
    }

    /// Applies one `key=value` setting (config-file syntax).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("invalid {what} value {value:?}"));
        match key {
            "mode" => self.mode = value.parse()?,
            "variant" => {
                let keep = (self.mode, self.seed, self.probe_every, self.disable_instance_norm, self.hidden_width);
                *self = TrainConfig::variant(value.parse()?);
                (self.mode, self.seed, self.probe_every, self.disable_instance_norm, self.hidden_width) = keep;
            }
            "iterations" | "iters" => self.iterations = value.parse().map_err(|_| bad(key))?,
            "learning_rate" | "lr" => self.learning_rate = value.parse().map_err(|_| bad(key))?,
            "sigma" => self.sigma = value.parse().map_err(|_| bad(key))?,
            "seed" => self.seed = value.parse().map_err(|_| bad(key))?,
            "probe_every" => self.probe_every = value.parse().map_err(|_| bad(key))?,
            "width" | "hidden_width" => self.hidden_width = value.parse().map_err(|_| bad(key))?,
            "no_in" | "disable_instance_norm" => {
                self.disable_instance_norm = value.parse().map_err(|_| bad(key))?
            }
            "noise_hw" => {
                let (h, w) = value.split_once('x').ok_or_else(|| bad(key))?;
                self.noise_hw = (
                    h.trim().parse().map_err(|_| bad(key))?,
                    w.trim().parse().map_err(|_| bad(key))?,
                );
            }
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a plain-text `key=value` file; blank lines and `#` comments are skipped.
    pub fn apply_config_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value, got {line:?}", lineno + 1))
            })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// `key=value` lines that reproduce this config through [`TrainConfig::apply_config_text`].
    pub fn to_config_text(&self) -> String {
        format!(
            "mode={}\niterations={}\nlearning_rate={}\nsigma={}\nnoise_hw={}x{}\nseed={}\nprobe_every={}\ndisable_instance_norm={}\nhidden_width={}\n",
            self.mode,
            self.iterations,
            self.learning_rate,
            self.sigma,
            self.noise_hw.0,
            self.noise_hw.1,
            self.seed,
            self.probe_every,
            self.disable_instance_norm,
            self.hidden_width
        )
    }

    fn noise_spec(&self) -> Result<NoiseSpec> {
        NoiseSpec::new(
            self.sigma,
            self.noise_hw.0,
            self.noise_hw.1,
            self.seed ^ NOISE_SEED_SALT,
        )
    }
}

/// Diagnostics at one logged iteration. Values at iteration `i` describe the
/// model after `i` parameter updates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub iteration: usize,
    pub loss: f64,
    pub l1: f64,
    pub tv: f64,
    /// Grey distance of the probe output.
    pub grey_distance: f64,
    /// Color constancy of the probe output.
    pub color_constancy: f64,
    /// Grey distance of the output on the training image itself.
    pub train_grey_distance: f64,
    pub train_color_constancy: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CurveLog {
    pub points: Vec<CurvePoint>,
    /// Total training loss at every iteration, before that iteration's update.
    pub losses: Vec<f64>,
}

pub const CURVE_CSV_HEADER: &str = "iter,loss,l1,tv,grey_distance,color_constancy";
pub const TRAINING_CURVE_CSV_HEADER: &str = "iter,train_grey_distance,train_color_constancy";

impl CurveLog {
    /// Probe curves: `iter,loss,l1,tv,grey_distance,color_constancy`, six decimals.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CURVE_CSV_HEADER);
        s.push('\n');
        for p in &self.points {
            let _ = writeln!(
                s,
                "{},{:.6},{:.6},{:.6},{:.6},{:.6}",
                p.iteration, p.loss, p.l1, p.tv, p.grey_distance, p.color_constancy
            );
        }
        s
    }

    /// Training-output curves: `iter,train_grey_distance,train_color_constancy`.
    pub fn training_to_csv(&self) -> String {
        let mut s = String::from(TRAINING_CURVE_CSV_HEADER);
        s.push('\n');
        for p in &self.points {
            let _ = writeln!(
                s,
                "{},{:.6},{:.6}",
                p.iteration, p.train_grey_distance, p.train_color_constancy
            );
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn write_training_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.training_to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn first(&self) -> Option<&CurvePoint> {
        self.points.first()
    }

    pub fn last(&self) -> Option<&CurvePoint> {
        self.points.last()
    }
}

struct Signal {
    fixed: Option<Tensor>,
    noise: Option<NoiseSpec>,
}

impl Signal {
    fn new(config: &TrainConfig) -> Result<Self> {
        let (h, w) = config.noise_hw;
        Ok(match config.mode {
            TrainMode::Noise => Signal {
                fixed: None,
                noise: Some(config.noise_spec()?),
            },
            TrainMode::PureColor(c) => Signal {
                fixed: Some(pure_color_image(c, h, w)),
                noise: None,
            },
            TrainMode::Palette => Signal {
                fixed: Some(palette_image(h, w)?),
                noise: None,
            },
        })
    }

    fn at(&self, iteration: usize) -> std::borrow::Cow<'_, Tensor> {
        match (&self.fixed, &self.noise) {
            (Some(t), _) => std::borrow::Cow::Borrowed(t),
            (None, Some(spec)) => std::borrow::Cow::Owned(sample_noise(spec, iteration as u64)),
            (None, None) => unreachable!("signal has either a fixed image or a noise source"),
        }
    }
}

struct Step {
    loss: f64,
    l1: f64,
    tv: f64,
    output: Tensor,
    grad: Tensor,
    cache: crate::model::SrmCache,
}

fn evaluate(params: &SrmParams, x: &Tensor, iteration: usize) -> Result<Step> {
    let (output, cache) = params.forward(x)?;
    let (l1, g_l1) = l1_loss(&output, x)?;
    let (tv, g_tv) = tv_loss(&output)?;
    let (l1, tv) = (l1 as f64, tv as f64);
    let loss = l1 + tv;
    if !loss.is_finite() || !output.all_finite() {
        return Err(Error::NonFinite {
            iteration,
            detail: format!("loss {loss} (l1 {l1}, tv {tv})"),
        });
    }
    let mut grad = g_l1;
    for (g, t) in grad.data_mut().iter_mut().zip(g_tv.data()) {
        *g += t;
    }
    Ok(Step {
        loss,
        l1,
        tv,
        output,
        grad,
        cache,
    })
}

fn curve_point(params: &SrmParams, probe: &Tensor, step: &Step, iteration: usize) -> Result<CurvePoint> {
    let probe_means = tensor_channel_means(&params.infer(probe)?);
    let train_means = tensor_channel_means(&step.output);
    Ok(CurvePoint {
        iteration,
        loss: step.loss,
        l1: step.l1,
        tv: step.tv,
        grey_distance: grey_distance_of_means(probe_means),
        color_constancy: color_constancy_of_means(probe_means),
        train_grey_distance: grey_distance_of_means(train_means),
        train_color_constancy: color_constancy_of_means(train_means),
    })
}

/// Trains a fresh model. `probe` defaults to the palette at the training size.
pub fn train(config: &TrainConfig, probe: Option<&RgbImage>) -> Result<(SrmParams, CurveLog)> {
    train_with_observer(config, probe, |_, _| {})
}

/// [`train`], calling `observer(updates_done, &params)` after every update.
pub fn train_with_observer(
    config: &TrainConfig,
    probe: Option<&RgbImage>,
    mut observer: impl FnMut(usize, &SrmParams),
) -> Result<(SrmParams, CurveLog)> {
    config.validate()?;
    let mut params = if config.disable_instance_norm {
        SrmParams::new_without_instance_norm(config.seed, config.hidden_width)?
    } else {
        SrmParams::new(config.seed, config.hidden_width)?
    };
    let probe = match probe {
        Some(img) => normalize(img),
        None => {
            let (h, w) = config.noise_hw;
            palette_image(h - h % 2, w - w % 4)?
        }
    };
    let signal = Signal::new(config)?;
    let mut adam = AdamState::new(&params.layout(), config.learning_rate);
    let mut log = CurveLog::default();

    for it in 0..config.iterations {
        let x = signal.at(it);
        let step = evaluate(&params, &x, it)?;
        log.losses.push(step.loss);
        if it % config.probe_every == 0 {
            log.points.push(curve_point(&params, &probe, &step, it)?);
        }
        let grads = params.backward(&step.cache, &step.grad)?;
        adam_step(&mut params.buffers_mut(), &grads.as_slices(), &mut adam).map_err(|e| match e {
            Error::NonFinite { detail, .. } => Error::NonFinite { iteration: it, detail },
            other => other,
        })?;
        observer(it + 1, &params);
    }

    let n = config.iterations;
    let step = evaluate(&params, &signal.at(n), n)?;
    log.points.push(curve_point(&params, &probe, &step, n)?);
    Ok((params, log))
}

/// Pure-color self-regression with default settings.
pub fn train_c_regression(color: Rgb8, seed: u64) -> Result<(SrmParams, CurveLog)> {
    train(&TrainConfig::c_regression(color).with_seed(seed), None)
}

/// Palette self-regression with default settings.
pub fn train_p_regression(seed: u64) -> Result<(SrmParams, CurveLog)> {
    train(&TrainConfig::p_regression().with_seed(seed), None)
}

/// Noise self-regression with default settings and the given sigma.
pub fn train_noiser(sigma: f32, seed: u64) -> Result<(SrmParams, CurveLog)> {
    train(&TrainConfig::noiser(sigma).with_seed(seed), None)
}
