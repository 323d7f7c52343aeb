//! Quantitative tools for woodblock-print faces and colors.
//!
//! - [`corpus`]: artwork metadata, 30-point landmark annotations and the
//!   joined face corpus with descriptive statistics.
//! - [`geometry`]: left-facing normalization, FFHQ-style alignment crops,
//!   landmark quality audits and similarity-invariant angle features.
//! - [`embedding`]: PCA, LDA and exact t-SNE over feature matrices.
//! - [`color`]: palette estimation, soft separation into RGBA layers,
//!   additive recomposition, recoloring and palette transfer.

pub mod color;
pub mod corpus;
pub mod embedding;
pub mod geometry;
pub mod raster;

pub use raster::{RgbRaster, Rgb};
