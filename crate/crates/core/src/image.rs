//! 8-bit RGB rasters, conversion to and from the model domain, and file I/O
//! (PNG and binary PPM).

use std::path::Path;

use image::{ImageFormat, ImageReader};

use crate::data::Rgb8;
use crate::error::{Error, Result};
use crate::model::RGB;
use crate::tensor::{Shape, Tensor};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<Rgb8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::contract(format!("image dims must be positive, got {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::contract(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(RgbImage {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, color: Rgb8) -> Result<Self> {
        Self::new(width, height, vec![color; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Rgb8) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb8] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> Rgb8 {
        self.pixels[y * self.width + x]
    }

    /// Interleaved RGB bytes.
    pub fn to_raw(&self) -> Vec<u8> {
        self.pixels.iter().flat_map(|p| p.channels()).collect()
    }

    pub fn from_raw(width: usize, height: usize, raw: &[u8]) -> Result<Self> {
        if raw.len() != width * height * 3 {
            return Err(Error::contract(format!(
                "{width}x{height} RGB buffer needs {} bytes, got {}",
                width * height * 3,
                raw.len()
            )));
        }
        let pixels = raw.chunks_exact(3).map(|c| Rgb8::new(c[0], c[1], c[2])).collect();
        Self::new(width, height, pixels)
    }

    /// Decodes PNG or PPM (detected from content). Alpha is dropped and
    /// grayscale is replicated to three channels.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let image_err = |source| Error::Image {
            path: path.to_path_buf(),
            source,
        };
        let decoded = ImageReader::open(path)
            .map_err(|e| Error::io(path, e))?
            .with_guessed_format()
            .map_err(|e| Error::io(path, e))?
            .decode()
            .map_err(image_err)?;
        let rgb = decoded.to_rgb8();
        Self::from_raw(rgb.width() as usize, rgb.height() as usize, rgb.as_raw())
    }

    /// Writes PPM (P6) for a `.ppm` extension and PNG otherwise.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let format = match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("ppm") => ImageFormat::Pnm,
            _ => ImageFormat::Png,
        };
        image::save_buffer_with_format(
            path,
            &self.to_raw(),
            self.width as u32,
            self.height as u32,
            image::ExtendedColorType::Rgb8,
            format,
        )
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// `v / 127.5 - 1`
pub fn normalize_value(v: u8) -> f32 {
    v as f32 / 127.5 - 1.0
}

/// Clamp to [-1, 1] then `round((v + 1) * 127.5)`, rounding half away from zero.
pub fn denormalize_value(v: f32) -> u8 {
    let v = if v.is_nan() { -1.0 } else { v.clamp(-1.0, 1.0) };
    ((v + 1.0) * 127.5).round().clamp(0.0, 255.0) as u8
}

/// Image to a `[1, 3, h, w]` tensor in [-1, 1].
pub fn normalize(img: &RgbImage) -> Tensor {
    let (w, h) = (img.width, img.height);
    let mut t = Tensor::zeros(Shape::new(1, RGB, h, w));
    for c in 0..RGB {
        let plane = t.plane_mut(0, c);
        for (dst, p) in plane.iter_mut().zip(&img.pixels) {
            *dst = normalize_value(p.channels()[c]);
        }
    }
    t
}

/// First sample of a `[n, 3, h, w]` tensor back to 8-bit.
pub fn denormalize(t: &Tensor) -> Result<RgbImage> {
    let s = t.shape();
    if s.n < 1 || s.c != RGB {
        return Err(Error::contract(format!("denormalize needs [n>=1, 3, h, w], got {s}")));
    }
    let (r, g, b) = (t.plane(0, 0), t.plane(0, 1), t.plane(0, 2));
    let pixels = (0..s.plane())
        .map(|i| {
            Rgb8::new(
                denormalize_value(r[i]),
                denormalize_value(g[i]),
                denormalize_value(b[i]),
            )
        })
        .collect();
    RgbImage::new(s.w, s.h, pixels)
}
