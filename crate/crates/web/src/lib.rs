//! WebAssembly bindings for the browser demo in `www/`.
//!
//! The plain functions and methods on [`Layers`] are ordinary Rust and are
//! tested natively; the `#[wasm_bindgen]` wrappers only convert errors.

use ukiyo_core::color::{compose, decompose, estimate_palette, layer_image, recolor, LayerStack, Palette};
use ukiyo_core::corpus::Point;
use ukiyo_core::geometry::triplet_angles;
use ukiyo_core::RgbRaster;
use wasm_bindgen::prelude::*;

fn opaque(raster: &RgbRaster) -> Vec<u8> {
    raster.to_rgb8().pixels().flat_map(|p| [p.0[0], p.0[1], p.0[2], 255]).collect()
}

/// Soft color layers of one image.
#[wasm_bindgen]
pub struct Layers {
    stack: LayerStack,
}

impl Layers {
    /// `rgba` is canvas `ImageData`; alpha is ignored.
    pub fn build(rgba: &[u8], width: u32, height: u32, k: usize, lambda: f64, seed: u64) -> Result<Layers, String> {
        if rgba.len() != 4 * width as usize * height as usize {
            return Err(format!("expected {} bytes for {width}x{height}, got {}", 4 * width * height, rgba.len()));
        }
        let image = RgbRaster::new(
            width,
            height,
            rgba.chunks_exact(4).map(|p| [p[0], p[1], p[2]].map(|v| f64::from(v) / 255.0)).collect(),
        )
        .map_err(|e| e.to_string())?;
        let palette = estimate_palette(&image, k, seed).map_err(|e| e.to_string())?;
        let stack = decompose(&image, &palette, lambda).map_err(|e| e.to_string())?;
        Ok(Layers { stack })
    }

    /// Composition under `colors`, flat `[r, g, b, ...]` in [0, 1].
    pub fn recolored(&self, colors: &[f64]) -> Result<Vec<u8>, String> {
        if colors.len() != 3 * self.stack.layer_count() {
            return Err(format!("expected {} color values, got {}", 3 * self.stack.layer_count(), colors.len()));
        }
        let palette = Palette::new(colors.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()).map_err(|e| e.to_string())?;
        let moved = recolor(&self.stack, &palette).map_err(|e| e.to_string())?;
        Ok(opaque(&compose(&moved)))
    }
}

#[wasm_bindgen]
impl Layers {
    #[wasm_bindgen(constructor)]
    pub fn new(rgba: &[u8], width: u32, height: u32, k: usize, lambda: f64, seed: u64) -> Result<Layers, JsError> {
        Self::build(rgba, width, height, k, lambda, seed).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(getter)]
    pub fn count(&self) -> usize {
        self.stack.layer_count()
    }

    #[wasm_bindgen(getter, js_name = maxClipError)]
    pub fn max_clip_error(&self) -> f64 {
        self.stack.max_clip_error()
    }

    /// Palette as flat `[r, g, b, ...]` in [0, 1], darkest first.
    pub fn palette(&self) -> Vec<f64> {
        self.stack.palette().colors().iter().flatten().copied().collect()
    }

    /// Straight-alpha RGBA of layer `k`.
    pub fn layer(&self, k: usize) -> Result<Vec<u8>, JsError> {
        if k >= self.stack.layer_count() {
            return Err(JsError::new(&format!("no layer {k}")));
        }
        Ok(layer_image(&self.stack, k).into_raw())
    }

    pub fn composed(&self) -> Vec<u8> {
        opaque(&compose(&self.stack))
    }

    pub fn recolor(&self, colors: &[f64]) -> Result<Vec<u8>, JsError> {
        self.recolored(colors).map_err(|e| JsError::new(&e))
    }
}

/// Interior angles in degrees at `a`, `b` and `c`.
pub fn angles(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Result<[f64; 3], String> {
    let p = |(x, y)| Point::new(x, y);
    triplet_angles(p(a), p(b), p(c)).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = triangleAngles)]
pub fn triangle_angles(ax: f64, ay: f64, bx: f64, by: f64, cx: f64, cy: f64) -> Result<Vec<f64>, JsError> {
    angles((ax, ay), (bx, by), (cx, cy)).map(Vec::from).map_err(|e| JsError::new(&e))
}
