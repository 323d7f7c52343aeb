//! Soft color separation: palette estimation, per-pixel unmixing into
//! alpha layers, layer composition and recoloring.

mod files;
mod kmeans;
mod layers;
mod unmix;

use thiserror::Error;

use crate::raster::{RasterError, Rgb};

pub use files::{
    error_map_image, layer_image, read_layer_stack, write_layer_stack, PaletteFile, StackPaths,
};
pub use kmeans::{estimate_palette, kmeans_palette, KmeansReport, MAX_LLOYD_ITERS, SHIFT_TOL};
pub use layers::{compose, decompose, recolor, transfer_palette, LayerStack};
pub use unmix::{project_to_simplex, unmix_energy, unmix_pixel, MAX_EXACT_LAYERS, UNMIX_ITERS, UNMIX_STEP};

pub const DEFAULT_LAYERS: usize = 6;
pub const DEFAULT_LAMBDA: f64 = 0.05;

/// Minimum Euclidean distance between two palette colors.
pub const MIN_COLOR_SEPARATION: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ColorError {
    #[error("palette needs at least one color")]
    EmptyPalette,
    #[error("palette color {index} has a channel outside [0, 1]")]
    ColorOutOfRange { index: usize },
    #[error("palette colors {0} and {1} coincide")]
    DuplicateColors(usize, usize),
    #[error("layer count must be at least 1")]
    InvalidLayerCount,
    #[error("image has {distinct} distinct colors, fewer than the {k} requested")]
    TooFewDistinctColors { distinct: usize, k: usize },
    #[error("lambda must be finite and non-negative, got {0}")]
    InvalidLambda(f64),
    #[error("palette has {got} colors, the stack has {expected} layers")]
    PaletteSizeMismatch { expected: usize, got: usize },
    #[error("layer {layer}: {message}")]
    InvalidLayer { layer: usize, message: String },
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("palette file: {0}")]
    PaletteFile(#[from] serde_json::Error),
}

/// Rec. 709 luma of a color, used to order palettes.
pub fn luminance(c: Rgb) -> f64 {
    0.2126 * c[0] + 0.7152 * c[1] + 0.0722 * c[2]
}

fn distance(a: Rgb, b: Rgb) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// The base colors of a layer decomposition, one per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Palette(Vec<Rgb>);

impl Palette {
    pub fn new(colors: Vec<Rgb>) -> Result<Self, ColorError> {
        if colors.is_empty() {
            return Err(ColorError::EmptyPalette);
        }
        if let Some(index) = colors.iter().position(|c| c.iter().any(|v| !(0.0..=1.0).contains(v))) {
            return Err(ColorError::ColorOutOfRange { index });
        }
        for i in 0..colors.len() {
            for j in i + 1..colors.len() {
                if distance(colors[i], colors[j]) <= MIN_COLOR_SEPARATION {
                    return Err(ColorError::DuplicateColors(i, j));
                }
            }
        }
        Ok(Self(colors))
    }

    pub fn colors(&self) -> &[Rgb] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Layer indices ordered by ascending luminance, ties by channel values
    /// and then index.
    pub fn luminance_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.0.len()).collect();
        idx.sort_by(|&a, &b| {
            let (ca, cb) = (self.0[a], self.0[b]);
            luminance(ca)
                .total_cmp(&luminance(cb))
                .then(ca[0].total_cmp(&cb[0]))
                .then(ca[1].total_cmp(&cb[1]))
                .then(ca[2].total_cmp(&cb[2]))
                .then(a.cmp(&b))
        });
        idx
    }

    pub fn sorted_by_luminance(&self) -> Self {
        Self(self.luminance_order().into_iter().map(|i| self.0[i]).collect())
    }
}

/// Per-pixel layer weights on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaVector(Vec<f64>);

impl AlphaVector {
    pub(crate) fn from_simplex(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.0.iter().all(|a| (0.0..=1.0).contains(a)) && (self.0.iter().sum::<f64>() - 1.0).abs() <= tol
    }
}
