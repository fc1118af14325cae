//! Grayscale images, file I/O, synthetic noise and quality metrics.

mod metrics;
mod noise;
mod pgm;

pub use metrics::{mse, psnr};
pub use noise::{add_gaussian_noise, NoiseSpec};
pub use pgm::{decode_pgm, encode_pgm, load_image, save_image};

use crate::error::{Error, Result};

/// Largest representable intensity.
pub const PEAK: f64 = 255.0;

/// Row-major grayscale image with real-valued pixels.
///
/// Values are nominally in `[0, 255]`; anything produced by a load or by
/// [`Image::clamped`] is guaranteed to be in range.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Constant-valued image.
    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
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

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    pub fn same_size(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Copy with every pixel clamped to `[0, 255]`.
    pub fn clamped(&self) -> Image {
        Image {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&v| clamp_intensity(v)).collect(),
        }
    }

    /// Copy clamped to `[0, 255]` and rounded to the nearest integer, i.e.
    /// exactly what an 8-bit file stores.
    pub fn quantized(&self) -> Image {
        Image {
            width: self.width,
            height: self.height,
            pixels: self
                .pixels
                .iter()
                .map(|&v| f64::from(to_byte(v)))
                .collect(),
        }
    }

    /// Rectangular sub-image.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Image> {
        if x0 + width > self.width || y0 + height > self.height {
            return Err(Error::DimensionMismatch(format!(
                "crop {width}x{height}+{x0}+{y0} exceeds {}x{} image",
                self.width, self.height
            )));
        }
        Image::from_fn(width, height, |x, y| self.get(x0 + x, y0 + y))
    }
}

#[inline]
pub(crate) fn clamp_intensity(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, PEAK)
    }
}

#[inline]
pub(crate) fn to_byte(v: f64) -> u8 {
    clamp_intensity(v).round() as u8
}
