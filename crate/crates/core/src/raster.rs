//! Floating-point RGB rasters and 8-bit image conversion.

use std::io::Cursor;

use image::{DynamicImage, ImageFormat, RgbImage, RgbaImage};
use thiserror::Error;

pub type Rgb = [f64; 3];

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("raster is empty")]
    Empty,
    #[error("{pixels} pixels do not fill a {width}x{height} raster")]
    SizeMismatch { width: u32, height: u32, pixels: usize },
    #[error("pixel {index} has a channel outside [0, 1]")]
    OutOfRange { index: usize },
    #[error("cannot decode image: {0}")]
    Decode(String),
    #[error("cannot encode image: {0}")]
    Encode(String),
}

/// Row-major RGB raster with channels in `[0, 1]`. Values are taken as
/// stored; no gamma conversion is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbRaster {
    width: u32,
    height: u32,
    pixels: Vec<Rgb>,
}

impl RgbRaster {
    pub fn new(width: u32, height: u32, pixels: Vec<Rgb>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::Empty);
        }
        if pixels.len() != width as usize * height as usize {
            return Err(RasterError::SizeMismatch { width, height, pixels: pixels.len() });
        }
        if let Some(index) = pixels.iter().position(|p| p.iter().any(|c| !(0.0..=1.0).contains(c))) {
            return Err(RasterError::OutOfRange { index });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> Rgb) -> Result<Self, RasterError> {
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
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

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn from_rgb8(image: &RgbImage) -> Result<Self, RasterError> {
        let pixels = image.pixels().map(|p| p.0.map(|c| f64::from(c) / 255.0)).collect();
        Self::new(image.width(), image.height(), pixels)
    }

    pub fn to_rgb8(&self) -> RgbImage {
        let mut out = RgbImage::new(self.width, self.height);
        for (dst, src) in out.pixels_mut().zip(&self.pixels) {
            dst.0 = src.map(unit_to_u8);
        }
        out
    }

    /// Decodes PNG or JPEG bytes; alpha, if any, is dropped.
    pub fn decode(bytes: &[u8]) -> Result<Self, RasterError> {
        let img = image::load_from_memory(bytes).map_err(|e| RasterError::Decode(e.to_string()))?;
        Self::from_rgb8(&img.to_rgb8())
    }
}

/// Width and height from the image header, without decoding pixels.
pub fn image_dimensions(bytes: &[u8]) -> Result<(u32, u32), RasterError> {
    image::ImageReader::new(std::io::Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| RasterError::Decode(e.to_string()))?
        .into_dimensions()
        .map_err(|e| RasterError::Decode(e.to_string()))
}

/// `[0, 1] -> 0..=255`, rounding half up.
pub fn unit_to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

pub fn encode_png(image: DynamicImage) -> Result<Vec<u8>, RasterError> {
    let mut buf = Cursor::new(Vec::new());
    image
        .write_to(&mut buf, ImageFormat::Png)
        .map_err(|e| RasterError::Encode(e.to_string()))?;
    Ok(buf.into_inner())
}

pub fn encode_rgb_png(image: &RgbImage) -> Result<Vec<u8>, RasterError> {
    encode_png(DynamicImage::ImageRgb8(image.clone()))
}

pub fn encode_rgba_png(image: &RgbaImage) -> Result<Vec<u8>, RasterError> {
    encode_png(DynamicImage::ImageRgba8(image.clone()))
}
