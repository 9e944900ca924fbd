//! Training signals: Gaussian noise, pure-color images and the 8-color palette.
//! Everything is produced directly in the model's [-1, 1] domain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::image::normalize_value;
use crate::model::RGB;
use crate::tensor::{Shape, Tensor};

/// One 8-bit RGB color.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize)]
pub struct Rgb8 {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Rgb8 {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Rgb8 { r, g, b }
    }

    pub const fn channels(self) -> [u8; 3] {
        [self.r, self.g, self.b]
    }

    pub const fn from_channels(c: [u8; 3]) -> Self {
        Rgb8::new(c[0], c[1], c[2])
    }

    pub const BLACK: Rgb8 = Rgb8::new(0, 0, 0);
    pub const WHITE: Rgb8 = Rgb8::new(255, 255, 255);
    pub const RED: Rgb8 = Rgb8::new(255, 0, 0);
    pub const GREEN: Rgb8 = Rgb8::new(0, 255, 0);
    pub const BLUE: Rgb8 = Rgb8::new(0, 0, 255);
    pub const CYAN: Rgb8 = Rgb8::new(0, 255, 255);
    pub const PURPLE: Rgb8 = Rgb8::new(255, 0, 255);
    pub const YELLOW: Rgb8 = Rgb8::new(255, 255, 0);
    pub const ORANGE: Rgb8 = Rgb8::new(255, 128, 0);
    pub const LIGHT_RED: Rgb8 = Rgb8::new(255, 128, 128);
    pub const CENTRAL_GREY: Rgb8 = Rgb8::new(128, 128, 128);
}

impl std::fmt::Display for Rgb8 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.r, self.g, self.b)
    }
}

impl std::str::FromStr for Rgb8 {
    type Err = Error;

    /// Accepts `R,G,B` or a name from the palette (`black`, `orange`, ...).
    fn from_str(s: &str) -> Result<Self> {
        let named = match s.to_ascii_lowercase().as_str() {
            "black" => Some(Rgb8::BLACK),
            "white" => Some(Rgb8::WHITE),
            "red" => Some(Rgb8::RED),
            "green" => Some(Rgb8::GREEN),
            "blue" => Some(Rgb8::BLUE),
            "cyan" => Some(Rgb8::CYAN),
            "purple" => Some(Rgb8::PURPLE),
            "yellow" => Some(Rgb8::YELLOW),
            "orange" => Some(Rgb8::ORANGE),
            "light-red" => Some(Rgb8::LIGHT_RED),
            "grey" | "gray" | "central-grey" => Some(Rgb8::CENTRAL_GREY),
            _ => None,
        };
        if let Some(c) = named {
            return Ok(c);
        }
        let parts: Vec<_> = s.split(',').map(|p| p.trim().parse::<u8>()).collect();
        match parts.as_slice() {
            [Ok(r), Ok(g), Ok(b)] => Ok(Rgb8::new(*r, *g, *b)),
            _ => Err(Error::Config(format!(
                "cannot parse color {s:?}: expected R,G,B with values 0-255 or a color name"
            ))),
        }
    }
}

/// Palette colors in raster order over a 2x4 block grid.
pub const PALETTE: [(&str, Rgb8); 8] = [
    ("white", Rgb8::WHITE),
    ("cyan", Rgb8::CYAN),
    ("purple", Rgb8::PURPLE),
    ("yellow", Rgb8::YELLOW),
    ("red", Rgb8::RED),
    ("green", Rgb8::GREEN),
    ("blue", Rgb8::BLUE),
    ("black", Rgb8::BLACK),
];

pub const PALETTE_ROWS: usize = 2;
pub const PALETTE_COLS: usize = 4;

/// Gaussian noise source parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f32,
    pub height: usize,
    pub width: usize,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f32, height: usize, width: usize, seed: u64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::contract(format!("noise sigma must be positive, got {sigma}")));
        }
        if height == 0 || width == 0 {
            return Err(Error::contract("noise dims must be positive"));
        }
        Ok(NoiseSpec {
            sigma,
            height,
            width,
            seed,
        })
    }
}

/// I.i.d. `N(0, sigma^2)` image for one training iteration. The draw depends
/// only on `(spec.seed, iteration)`; values are not clamped.
pub fn sample_noise(spec: &NoiseSpec, iteration: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(iteration);
    let shape = Shape::new(1, RGB, spec.height, spec.width);
    Tensor::from_fn(shape, |_| {
        let z: f32 = rng.sample(StandardNormal);
        z * spec.sigma
    })
}

/// Constant image of `color`.
pub fn pure_color_image(color: Rgb8, height: usize, width: usize) -> Tensor {
    let mut t = Tensor::zeros(Shape::new(1, RGB, height, width));
    for (c, v) in color.channels().into_iter().enumerate() {
        t.plane_mut(0, c).fill(normalize_value(v));
    }
    t
}

/// Color of the palette block containing pixel `(y, x)`.
pub fn palette_color_at(height: usize, width: usize, y: usize, x: usize) -> Rgb8 {
    let row = y / (height / PALETTE_ROWS);
    let col = x / (width / PALETTE_COLS);
    PALETTE[row * PALETTE_COLS + col].1
}

/// The 2x4 grid of saturated colors (white, cyan, purple, yellow on top;
/// red, green, blue, black below).
pub fn palette_image(height: usize, width: usize) -> Result<Tensor> {
    if height == 0 || width == 0 || height % PALETTE_ROWS != 0 || width % PALETTE_COLS != 0 {
        return Err(Error::contract(format!(
            "palette needs height divisible by {PALETTE_ROWS} and width by {PALETTE_COLS}, got {height}x{width}"
        )));
    }
    let mut t = Tensor::zeros(Shape::new(1, RGB, height, width));
    for y in 0..height {
        for x in 0..width {
            let color = palette_color_at(height, width, y, x).channels();
            for c in 0..RGB {
                t.set(0, c, y, x, normalize_value(color[c]));
            }
        }
    }
    Ok(t)
}


/// Overall exposure of a [`synthetic_scene`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exposure {
    /// Near-black background with dim colored objects; channel means below 20.
    Dark,
    /// Near-white background with darker colored objects; channel means above 200.
    Bright,
}

/// A deterministic textured test scene: a gently varying background with
/// scattered colored rectangles and discs plus fine grain.
pub fn synthetic_scene(width: usize, height: usize, exposure: Exposure, seed: u64) -> crate::image::RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    struct Blob {
        cx: f64,
        cy: f64,
        r: f64,
        disc: bool,
        color: [f64; 3],
    }
    let (w, h) = (width as f64, height as f64);
    let blobs: Vec<Blob> = (0..12)
        .map(|_| {
            let color = match exposure {
                Exposure::Dark => [0; 3].map(|_| rng.random_range(35.0..130.0)),
                Exposure::Bright => [0; 3].map(|_| rng.random_range(90.0..200.0)),
            };
            Blob {
                cx: rng.random_range(0.0..w),
                cy: rng.random_range(0.0..h),
                r: rng.random_range(0.03..0.09) * w.min(h),
                disc: rng.random_bool(0.5),
                color,
            }
        })
        .collect();
    let phase: [f64; 3] = [0; 3].map(|_| rng.random_range(0.0..std::f64::consts::TAU));
    let pixels = (0..width * height)
        .map(|i| {
            let (x, y) = ((i % width) as f64, (i / width) as f64);
            let mut px = [0.0f64; 3];
            for (c, v) in px.iter_mut().enumerate() {
                let wave = (x / w * 9.0 + phase[c]).sin() * (y / h * 7.0 - phase[c]).cos();
                *v = match exposure {
                    Exposure::Dark => 6.0 + 3.0 * wave,
                    Exposure::Bright => 238.0 + 8.0 * wave,
                };
            }
            for b in &blobs {
                let (dx, dy) = (x - b.cx, y - b.cy);
                let inside = if b.disc {
                    dx * dx + dy * dy < b.r * b.r
                } else {
                    dx.abs() < b.r && dy.abs() < b.r * 0.6
                };
                if inside {
                    px = b.color;
                }
            }
            let grain: f64 = rng.random_range(-3.0..3.0);
            Rgb8::from_channels(px.map(|v| (v + grain).round().clamp(0.0, 255.0) as u8))
        })
        .collect();
    crate::image::RgbImage::new(width, height, pixels).expect("dims are positive")
}
