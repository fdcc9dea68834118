//! In-memory RGB image plus PNG/JPEG I/O.

use std::io::Cursor;
use std::path::Path;

use image::codecs::png::{CompressionType, FilterType as PngFilter, PngEncoder};
use image::{ExtendedColorType, ImageEncoder, ImageFormat, RgbImage, RgbaImage};

use crate::colorspace::RgbColor;
use crate::error::{Error, Result};

/// Row-major `height × width` grid of RGB values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<[f64; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Invalid("image has zero area".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::Shape(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if pixels.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite pixel value".into()));
        }
        Ok(Image {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Image::new(width, height, pixels).expect("from_fn produced an invalid image")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn color(&self, i: usize) -> RgbColor {
        RgbColor::from_array(self.pixels[i])
    }

    pub fn from_rgb8(img: &RgbImage) -> Self {
        let (w, h) = img.dimensions();
        let pixels = img
            .pixels()
            .map(|p| RgbColor::from_u8(p.0).to_array())
            .collect();
        Image {
            width: w as usize,
            height: h as usize,
            pixels,
        }
    }

    pub fn to_rgb8(&self) -> RgbImage {
        let mut out = RgbImage::new(self.width as u32, self.height as u32);
        for (dst, src) in out.pixels_mut().zip(&self.pixels) {
            dst.0 = RgbColor::from_array(*src).to_u8();
        }
        out
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let img = image::open(path)?.into_rgb8();
        Ok(Image::from_rgb8(&img))
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory(bytes)?.into_rgb8();
        Ok(Image::from_rgb8(&img))
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        encode_rgb_png(&self.to_rgb8())
    }

    /// Nearest-neighbour resample so that the long edge is at most `max_edge`.
    pub fn downscaled(&self, max_edge: usize) -> Image {
        let long = self.width.max(self.height);
        if long <= max_edge {
            return self.clone();
        }
        let s = max_edge as f64 / long as f64;
        let w = ((self.width as f64 * s).round() as usize).max(1);
        let h = ((self.height as f64 * s).round() as usize).max(1);
        Image::from_fn(w, h, |x, y| {
            let sx = ((x as f64 + 0.5) / s).floor() as usize;
            let sy = ((y as f64 + 0.5) / s).floor() as usize;
            self.pixel(sx.min(self.width - 1), sy.min(self.height - 1))
        })
    }

    /// Root-mean-square per-channel difference.
    pub fn rmse(&self, other: &Image) -> Result<f64> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::Shape("image sizes differ".into()));
        }
        let sum: f64 = self
            .pixels
            .iter()
            .zip(&other.pixels)
            .map(|(a, b)| {
                (0..3).map(|k| (a[k] - b[k]) * (a[k] - b[k])).sum::<f64>()
            })
            .sum();
        Ok((sum / (3 * self.len()) as f64).sqrt())
    }
}

pub fn encode_rgb_png(img: &RgbImage) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)?;
    Ok(buf.into_inner())
}

/// PNG with fast compression and no filtering, for interactive previews.
pub fn encode_rgb_png_fast(img: &RgbImage) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    PngEncoder::new_with_quality(&mut buf, CompressionType::Fast, PngFilter::NoFilter).write_image(
        img.as_raw(),
        img.width(),
        img.height(),
        ExtendedColorType::Rgb8,
    )?;
    Ok(buf)
}

pub fn encode_rgba_png(img: &RgbaImage) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)?;
    Ok(buf.into_inner())
}
