#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::unmix::mix;
use super::{estimate_palette, unmix_pixel, ColorError, Palette};
use crate::raster::{Rgb, RgbRaster};

/// K straight-alpha layers over one image. Per pixel `i` and layer `k`,
/// `alphas[i * K + k]` is the weight and `colors[i * K + k]` the layer
/// color.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    width: u32,
    height: u32,
    palette: Palette,
    alphas: Vec<f64>,
    colors: Vec<Rgb>,
    clip_error: Vec<f64>,
}

impl LayerStack {
    /// Assembles a stack from raw parts, checking shapes and that every
    /// pixel's alphas lie on the simplex within `1e-9`.
    pub fn from_parts(
        width: u32,
        height: u32,
        palette: Palette,
        alphas: Vec<f64>,
        colors: Vec<Rgb>,
        clip_error: Vec<f64>,
    ) -> Result<Self, ColorError> {
        let k = palette.len();
        let n = width as usize * height as usize;
        if alphas.len() != n * k || colors.len() != n * k || clip_error.len() != n {
            return Err(ColorError::InvalidLayer { layer: 0, message: "layer buffers do not match the image size".into() });
        }
        for px in alphas.chunks(k) {
            if px.iter().any(|a| !(0.0..=1.0).contains(a)) || (px.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(ColorError::InvalidLayer { layer: 0, message: "alphas leave the simplex".into() });
            }
        }
        Ok(Self { width, height, palette, alphas, colors, clip_error })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn layer_count(&self) -> usize {
        self.palette.len()
    }

    pub fn palette(&self) -> &Palette {
        &self.palette
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn alpha(&self, pixel: usize, layer: usize) -> f64 {
        self.alphas[pixel * self.layer_count() + layer]
    }

    pub fn layer_color(&self, pixel: usize, layer: usize) -> Rgb {
        self.colors[pixel * self.layer_count() + layer]
    }

    pub fn pixel_alphas(&self, pixel: usize) -> &[f64] {
        let k = self.layer_count();
        &self.alphas[pixel * k..(pixel + 1) * k]
    }

    /// Per-pixel `max_c |sum_k a_k u_k - p|` introduced by clamping layer
    /// colors to the unit cube.
    pub fn clip_error(&self) -> &[f64] {
        &self.clip_error
    }

    pub fn max_clip_error(&self) -> f64 {
        self.clip_error.iter().copied().fold(0.0, f64::max)
    }
}

struct PixelLayers {
    alphas: Vec<f64>,
    colors: Vec<Rgb>,
    clip: f64,
}

fn decompose_pixel(p: Rgb, palette: &Palette, lambda: f64) -> PixelLayers {
    let alphas = unmix_pixel(p, palette, lambda).into_inner();
    let m = mix(&alphas, palette);
    let residual = [p[0] - m[0], p[1] - m[1], p[2] - m[2]];
    let mut clipped = [0.0; 3];
    let colors: Vec<Rgb> = palette
        .colors()
        .iter()
        .zip(&alphas)
        .map(|(c, a)| {
            [0, 1, 2].map(|i| {
                let u = c[i] + residual[i];
                let kept = u.clamp(0.0, 1.0);
                clipped[i] += a * (kept - u);
                kept
            })
        })
        .collect();
    // Without clamping sum_k a_k u_k equals p, so the clamped amount is the
    // reconstruction error.
    let clip = clipped.iter().map(|v| v.abs()).fold(0.0, f64::max);
    PixelLayers { alphas, colors, clip }
}

/// Splits `image` into one layer per palette color. Each pixel's residual
/// from its best mixture is added to every layer color, so the layers
/// reproduce the pixel exactly unless a layer color had to be clamped.
pub fn decompose(image: &RgbRaster, palette: &Palette, lambda: f64) -> Result<LayerStack, ColorError> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(ColorError::InvalidLambda(lambda));
    }
    let per_pixel: Vec<PixelLayers> = {
        #[cfg(feature = "parallel")]
        {
            image.pixels().par_iter().map(|p| decompose_pixel(*p, palette, lambda)).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            image.pixels().iter().map(|p| decompose_pixel(*p, palette, lambda)).collect()
        }
    };
    let k = palette.len();
    let n = image.len();
    let mut alphas = Vec::with_capacity(n * k);
    let mut colors = Vec::with_capacity(n * k);
    let mut clip_error = Vec::with_capacity(n);
    for px in per_pixel {
        alphas.extend(px.alphas);
        colors.extend(px.colors);
        clip_error.push(px.clip);
    }
    Ok(LayerStack {
        width: image.width(),
        height: image.height(),
        palette: palette.clone(),
        alphas,
        colors,
        clip_error,
    })
}

/// Additive blend of premultiplied layers, `clamp(sum_k a_k u_k)`.
pub fn compose(stack: &LayerStack) -> RgbRaster {
    let k = stack.layer_count();
    let pixels = stack
        .alphas
        .chunks(k)
        .zip(stack.colors.chunks(k))
        .map(|(a, u)| {
            let mut out = [0.0; 3];
            for (w, color) in a.iter().zip(u) {
                for c in 0..3 {
                    out[c] += w * color[c];
                }
            }
            out.map(|v| v.clamp(0.0, 1.0))
        })
        .collect();
    RgbRaster::new(stack.width, stack.height, pixels).expect("stack dimensions are valid")
}

/// Replaces the base colors, keeping each pixel's deviation from its old
/// base color. Layers whose color is unchanged are copied untouched.
pub fn recolor(stack: &LayerStack, new_palette: &Palette) -> Result<LayerStack, ColorError> {
    let k = stack.layer_count();
    if new_palette.len() != k {
        return Err(ColorError::PaletteSizeMismatch { expected: k, got: new_palette.len() });
    }
    let old = stack.palette.colors();
    let new = new_palette.colors();
    let colors = stack
        .colors
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let layer = i % k;
            if old[layer] == new[layer] {
                *u
            } else {
                [0, 1, 2].map(|c| (new[layer][c] + (u[c] - old[layer][c])).clamp(0.0, 1.0))
            }
        })
        .collect();
    Ok(LayerStack { palette: new_palette.clone(), colors, ..stack.clone() })
}

/// Recolors with a palette estimated from `reference`, pairing layers and
/// reference colors by luminance rank.
pub fn transfer_palette(stack: &LayerStack, reference: &RgbRaster, seed: u64) -> Result<LayerStack, ColorError> {
    let target = estimate_palette(reference, stack.layer_count(), seed)?;
    let mut colors = vec![[0.0; 3]; stack.layer_count()];
    for (rank, layer) in stack.palette.luminance_order().into_iter().enumerate() {
        colors[layer] = target.colors()[rank];
    }
    recolor(stack, &Palette::new(colors)?)
}
