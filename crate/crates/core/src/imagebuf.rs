//! RGB image buffer, loading, and canonical rescaling.

use std::path::Path;

use image::imageops::FilterType;
use image::{DynamicImage, RgbImage};

use crate::error::{Error, Result};

pub const MIN_DIM: u32 = 8;
/// Long side of the canonical working resolution (500x330 / 330x500).
pub const CANONICAL_LONG: u32 = 500;

/// An 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if width < MIN_DIM || height < MIN_DIM {
            return Err(Error::InvalidInput(format!(
                "image {width}x{height} is smaller than {MIN_DIM}x{MIN_DIM}"
            )));
        }
        if pixels.len() != (width * height * 3) as usize {
            return Err(Error::InvalidInput("pixel count does not match dimensions".into()));
        }
        Ok(ImageBuffer { width, height, pixels })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity((width * height * 3) as usize);
        for _ in 0..width * height {
            pixels.extend_from_slice(&rgb);
        }
        Self::new(width, height, pixels)
    }

    /// Build an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity((width * height * 3) as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = ((y * self.width + x) * 3) as usize;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = ((y * self.width + x) * 3) as usize;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Rec.601 luma in [0, 255].
    #[inline]
    pub fn luma(&self, x: u32, y: u32) -> f64 {
        let [r, g, b] = self.get(x, y);
        0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64
    }

    /// Load a PNG or JPEG from disk.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let img = image::open(path)?.to_rgb8();
        let (w, h) = img.dimensions();
        Self::new(w, h, img.into_raw())
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_rgb_image().save(path.as_ref()).map_err(Error::from)
    }

    pub fn to_rgb_image(&self) -> RgbImage {
        RgbImage::from_raw(self.width, self.height, self.pixels.clone())
            .expect("buffer length matches dimensions")
    }
}

/// Rescale so the long side is 500 px, preserving aspect ratio and
/// orientation, with bilinear resampling.
pub fn resize_canonical(img: &ImageBuffer) -> Result<ImageBuffer> {
    let (w, h) = (img.width(), img.height());
    let long = w.max(h);
    if long == CANONICAL_LONG {
        return Ok(img.clone());
    }
    let scale = CANONICAL_LONG as f64 / long as f64;
    let nw = ((w as f64 * scale).round() as u32).max(1);
    let nh = ((h as f64 * scale).round() as u32).max(1);
    let dynimg = DynamicImage::ImageRgb8(img.to_rgb_image());
    let resized = dynimg.resize_exact(nw, nh, FilterType::Triangle).to_rgb8();
    ImageBuffer::new(nw, nh, resized.into_raw())
}
