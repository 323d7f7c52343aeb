use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::{ColorError, Palette};
use crate::raster::{Rgb, RgbRaster};

pub const MAX_LLOYD_ITERS: usize = 100;
/// Lloyd stops once no centroid moves farther than this.
pub const SHIFT_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansReport {
    /// Sorted by luminance.
    pub palette: Palette,
    /// Quantization inertia (sum of squared distances to the nearest
    /// centroid over all pixels) at every assignment step.
    pub inertia: Vec<f64>,
    pub iterations: usize,
}

/// K-color palette by Lloyd's algorithm with k-means++ seeding.
pub fn estimate_palette(image: &RgbRaster, k: usize, seed: u64) -> Result<Palette, ColorError> {
    kmeans_palette(image, k, seed).map(|r| r.palette)
}

fn sq_dist(a: Rgb, b: Rgb) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

/// Distinct colors with multiplicities, in a fixed (bit-pattern) order.
fn distinct_colors(image: &RgbRaster) -> (Vec<Rgb>, Vec<f64>) {
    let mut counts: BTreeMap<[u64; 3], usize> = BTreeMap::new();
    for p in image.pixels() {
        *counts.entry(p.map(f64::to_bits)).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .map(|(bits, n)| (bits.map(f64::from_bits), n as f64))
        .unzip()
}

fn nearest(p: Rgb, centroids: &[Rgb]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, *c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn assign(points: &[Rgb], centroids: &[Rgb]) -> Vec<(usize, f64)> {
    #[cfg(feature = "parallel")]
    {
        points.par_iter().map(|p| nearest(*p, centroids)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        points.iter().map(|p| nearest(*p, centroids)).collect()
    }
}

// Draws an index with probability proportional to `weights`.
fn draw(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if *w > 0.0 && acc > target {
            return i;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

fn plus_plus_seeds(points: &[Rgb], counts: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Vec<Rgb> {
    let mut centroids = vec![points[draw(rng, counts)]];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(*p, centroids[0])).collect();
    while centroids.len() < k {
        let weights: Vec<f64> = d2.iter().zip(counts).map(|(d, w)| d * w).collect();
        let next = points[draw(rng, &weights)];
        centroids.push(next);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(*p, next));
        }
    }
    centroids
}

/// Like [`estimate_palette`], also returning the inertia trace.
pub fn kmeans_palette(image: &RgbRaster, k: usize, seed: u64) -> Result<KmeansReport, ColorError> {
    if k == 0 {
        return Err(ColorError::InvalidLayerCount);
    }
    let (points, counts) = distinct_colors(image);
    if points.len() < k {
        return Err(ColorError::TooFewDistinctColors { distinct: points.len(), k });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_seeds(&points, &counts, k, &mut rng);
    let mut inertia = Vec::new();
    let mut iterations = 0;

    let mut labels = assign(&points, &centroids);
    inertia.push(weighted_inertia(&labels, &counts));
    while iterations < MAX_LLOYD_ITERS {
        iterations += 1;
        let updated = update_centroids(&points, &counts, &labels, &centroids);
        let shift = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| sq_dist(*a, *b).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        labels = assign(&points, &centroids);
        inertia.push(weighted_inertia(&labels, &counts));
        if shift < SHIFT_TOL {
            break;
        }
    }

    let palette = Palette::new(centroids)?.sorted_by_luminance();
    Ok(KmeansReport { palette, inertia, iterations })
}

fn weighted_inertia(labels: &[(usize, f64)], counts: &[f64]) -> f64 {
    labels.iter().zip(counts).map(|((_, d), w)| d * w).sum()
}

// Weighted means, accumulated as offsets from each cluster's first member
// so that a cluster of one distinct color reproduces it exactly. Empty
// clusters move to the points farthest from their current centroid.
fn update_centroids(points: &[Rgb], counts: &[f64], labels: &[(usize, f64)], old: &[Rgb]) -> Vec<Rgb> {
    let k = old.len();
    let mut anchor: Vec<Option<Rgb>> = vec![None; k];
    let mut offset = vec![[0.0f64; 3]; k];
    let mut weight = vec![0.0f64; k];
    for ((p, w), (label, _)) in points.iter().zip(counts).zip(labels) {
        let a = *anchor[*label].get_or_insert(*p);
        for c in 0..3 {
            offset[*label][c] += w * (p[c] - a[c]);
        }
        weight[*label] += w;
    }

    let mut farthest: Vec<usize> = (0..points.len()).collect();
    farthest.sort_by(|&a, &b| labels[b].1.total_cmp(&labels[a].1).then(a.cmp(&b)));
    let mut spare = farthest.into_iter();

    (0..k)
        .map(|i| match anchor[i] {
            Some(a) => [0, 1, 2].map(|c| a[c] + offset[i][c] / weight[i]),
            None => points[spare.next().expect("at least k distinct points")],
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn two_color(a: Rgb, b: Rgb) -> RgbRaster {
        RgbRaster::from_fn(20, 10, |x, y| if (x * 7 + y * 3) % 5 < 2 { a } else { b }).unwrap()
    }

    #[test]
    fn two_colors_recovered_exactly() {
        let a = [0.1, 0.2, 0.3];
        let b = [0.9, 0.7, 0.35];
        for seed in 0..5 {
            let p = estimate_palette(&two_color(a, b), 2, seed).unwrap();
            assert_eq!(p.colors(), [a, b]);
        }
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let img = RgbRaster::from_fn(7, 5, |x, y| [x as f64 / 10.0, y as f64 / 7.0, 0.5]).unwrap();
        let p = estimate_palette(&img, 1, 3).unwrap();
        let n = img.len() as f64;
        for c in 0..3 {
            let mean = img.pixels().iter().map(|p| p[c]).sum::<f64>() / n;
            assert!((p.colors()[0][c] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn noisy_three_colors_within_tolerance() {
        let truth = [[0.15, 0.2, 0.6], [0.8, 0.3, 0.25], [0.5, 0.85, 0.5]];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let img = RgbRaster::from_fn(60, 60, |x, _| {
            truth[(x / 20) as usize].map(|v: f64| (v + noise.sample(&mut rng)).clamp(0.0, 1.0))
        })
        .unwrap();
        let report = kmeans_palette(&img, 3, 0).unwrap();
        let sorted = Palette::new(truth.to_vec()).unwrap().sorted_by_luminance();
        for (got, want) in report.palette.colors().iter().zip(sorted.colors()) {
            assert!(sq_dist(*got, *want).sqrt() < 0.02, "{got:?} vs {want:?}");
        }
        assert!(report.inertia.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn too_few_colors_and_zero_k() {
        let img = two_color([0.0; 3], [1.0; 3]);
        assert!(matches!(estimate_palette(&img, 3, 0), Err(ColorError::TooFewDistinctColors { distinct: 2, k: 3 })));
        assert!(matches!(estimate_palette(&img, 0, 0), Err(ColorError::InvalidLayerCount)));
    }

    #[test]
    fn seeded_runs_repeat() {
        let img = RgbRaster::from_fn(30, 30, |x, y| [x as f64 / 29.0, y as f64 / 29.0, ((x * y) % 7) as f64 / 6.0]).unwrap();
        assert_eq!(kmeans_palette(&img, 5, 9).unwrap(), kmeans_palette(&img, 5, 9).unwrap());
    }
}
