use std::fs;
use std::path::{Path, PathBuf};

use image::{GrayImage, Luma, Rgba, RgbaImage};
use serde::{Deserialize, Serialize};

use super::{ColorError, LayerStack, Palette};
use crate::raster::{encode_png, encode_rgba_png, unit_to_u8, RasterError};

/// `{"colors": [[r,g,b],...], "lambda": f, "seed": n}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaletteFile {
    pub colors: Vec<[f64; 3]>,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub seed: u64,
}

impl PaletteFile {
    pub fn palette(&self) -> Result<Palette, ColorError> {
        Palette::new(self.colors.clone())
    }

    pub fn read(path: &Path) -> Result<Self, ColorError> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("palette file serializes");
        s.push('\n');
        s
    }
}

/// File names of a stack written as `{dir}/{stem}.layer{k}.png` plus
/// `{stem}.palette.json` and `{stem}.err.png`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StackPaths {
    pub dir: PathBuf,
    pub stem: String,
}

impl StackPaths {
    pub fn new(dir: impl Into<PathBuf>, stem: impl Into<String>) -> Self {
        Self { dir: dir.into(), stem: stem.into() }
    }

    /// Splits a `dir/stem` prefix.
    pub fn from_prefix(prefix: &Path) -> Self {
        let dir = prefix.parent().map(Path::to_path_buf).unwrap_or_default();
        let stem = prefix.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Self { dir, stem }
    }

    pub fn layer(&self, k: usize) -> PathBuf {
        self.dir.join(format!("{}.layer{k}.png", self.stem))
    }

    pub fn palette(&self) -> PathBuf {
        self.dir.join(format!("{}.palette.json", self.stem))
    }

    pub fn error_map(&self) -> PathBuf {
        self.dir.join(format!("{}.err.png", self.stem))
    }
}

/// Straight-alpha RGBA rendering of one layer.
pub fn layer_image(stack: &LayerStack, layer: usize) -> RgbaImage {
    let mut img = RgbaImage::new(stack.width(), stack.height());
    for (i, px) in img.pixels_mut().enumerate() {
        let u = stack.layer_color(i, layer).map(unit_to_u8);
        *px = Rgba([u[0], u[1], u[2], unit_to_u8(stack.alpha(i, layer))]);
    }
    img
}

/// Clipping error scaled by 255, as 8-bit grayscale.
pub fn error_map_image(stack: &LayerStack) -> GrayImage {
    let mut img = GrayImage::new(stack.width(), stack.height());
    for (px, e) in img.pixels_mut().zip(stack.clip_error()) {
        *px = Luma([unit_to_u8(*e)]);
    }
    img
}

/// Writes all layers, the palette file and optionally the error map.
/// Returns the written paths.
pub fn write_layer_stack(
    stack: &LayerStack,
    paths: &StackPaths,
    lambda: f64,
    seed: u64,
    error_map: bool,
) -> Result<Vec<PathBuf>, ColorError> {
    let mut written = Vec::new();
    for k in 0..stack.layer_count() {
        let path = paths.layer(k);
        fs::write(&path, encode_rgba_png(&layer_image(stack, k))?)?;
        written.push(path);
    }
    let palette = PaletteFile { colors: stack.palette().colors().to_vec(), lambda, seed };
    fs::write(paths.palette(), palette.to_json())?;
    written.push(paths.palette());
    if error_map {
        let bytes = encode_png(image::DynamicImage::ImageLuma8(error_map_image(stack)))?;
        fs::write(paths.error_map(), bytes)?;
        written.push(paths.error_map());
    }
    Ok(written)
}

/// Loads a stack written by [`write_layer_stack`]. Layer values carry 8-bit
/// precision; alphas are renormalized to sum to one per pixel, and the
/// clipping error map is not restored.
pub fn read_layer_stack(paths: &StackPaths) -> Result<(LayerStack, PaletteFile), ColorError> {
    let file = PaletteFile::read(&paths.palette())?;
    let palette = file.palette()?;
    let k = palette.len();
    let mut layers = Vec::with_capacity(k);
    for layer in 0..k {
        let bytes = fs::read(paths.layer(layer))?;
        let img = image::load_from_memory(&bytes)
            .map_err(|e| RasterError::Decode(format!("{}: {e}", paths.layer(layer).display())))?
            .to_rgba8();
        if let Some(first) = layers.first() {
            let first: &RgbaImage = first;
            if first.dimensions() != img.dimensions() {
                return Err(ColorError::InvalidLayer { layer, message: "size differs from layer 0".into() });
            }
        }
        layers.push(img);
    }
    let (width, height) = layers[0].dimensions();
    let n = width as usize * height as usize;
    let mut alphas = Vec::with_capacity(n * k);
    let mut colors = Vec::with_capacity(n * k);
    for i in 0..n {
        let (x, y) = ((i % width as usize) as u32, (i / width as usize) as u32);
        let start = alphas.len();
        for img in &layers {
            let p = img.get_pixel(x, y).0;
            alphas.push(f64::from(p[3]) / 255.0);
            colors.push([p[0], p[1], p[2]].map(|c| f64::from(c) / 255.0));
        }
        let sum: f64 = alphas[start..].iter().sum();
        if sum == 0.0 {
            return Err(ColorError::InvalidLayer { layer: 0, message: format!("pixel ({x}, {y}) is transparent in every layer") });
        }
        for a in &mut alphas[start..] {
            *a /= sum;
        }
    }
    let stack = LayerStack::from_parts(width, height, palette, alphas, colors, vec![0.0; n])?;
    Ok((stack, file))
}
