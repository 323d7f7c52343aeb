//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code paths it is used to check.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rgb = [f64; 3];

/// Energy of a mixture, written out directly from its definition.
pub fn energy(alpha: &[f64], pixel: Rgb, palette: &[Rgb], lambda: f64) -> f64 {
    let mut fit = 0.0;
    for c in 0..3 {
        let m: f64 = alpha.iter().zip(palette).map(|(a, col)| a * col[c]).sum();
        fit += (m - pixel[c]).powi(2);
    }
    fit + lambda * alpha.iter().map(|a| a * (1.0 - a)).sum::<f64>()
}

/// Minimum energy over the simplex grid with spacing `1 / steps`, for two or
/// three colors.
pub fn grid_minimum(pixel: Rgb, palette: &[Rgb], lambda: f64, steps: usize) -> (f64, Vec<f64>) {
    let h = 1.0 / steps as f64;
    let mut best = (f64::INFINITY, Vec::new());
    match palette.len() {
        2 => {
            for i in 0..=steps {
                let a = [i as f64 * h, (steps - i) as f64 * h];
                let e = energy(&a, pixel, palette, lambda);
                if e < best.0 {
                    best = (e, a.to_vec());
                }
            }
        }
        3 => {
            for i in 0..=steps {
                for j in 0..=steps - i {
                    let a = [i as f64 * h, j as f64 * h, (steps - i - j) as f64 * h];
                    let e = energy(&a, pixel, palette, lambda);
                    if e < best.0 {
                        best = (e, a.to_vec());
                    }
                }
            }
        }
        k => panic!("grid oracle supports 2 or 3 colors, got {k}"),
    }
    best
}

pub struct UnmixCase {
    pub pixel: Rgb,
    pub palette: Vec<Rgb>,
    pub lambda: f64,
}

fn dist(a: Rgb, b: Rgb) -> f64 {
    (0..3).map(|c| (a[c] - b[c]).powi(2)).sum::<f64>().sqrt()
}

/// Seeded random pixels and palettes, alternating K in {2, 3} and lambda in
/// {0, 0.05}.
pub fn unmix_cases(seed: u64, count: usize) -> Vec<UnmixCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let color = |rng: &mut ChaCha8Rng| -> Rgb { [rng.random(), rng.random(), rng.random()] };
    (0..count)
        .map(|i| {
            let k = 2 + i % 2;
            let lambda = if (i / 2) % 2 == 0 { 0.0 } else { 0.05 };
            let mut palette: Vec<Rgb> = Vec::new();
            while palette.len() < k {
                let c = color(&mut rng);
                if palette.iter().all(|p| dist(*p, c) > 1e-6) {
                    palette.push(c);
                }
            }
            UnmixCase { pixel: color(&mut rng), palette, lambda }
        })
        .collect()
}
