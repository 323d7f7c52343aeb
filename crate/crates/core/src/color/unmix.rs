use super::{AlphaVector, Palette};
use crate::raster::Rgb;

/// Largest palette for which [`unmix_pixel`] enumerates every face of the
/// simplex. Bigger palettes use projected gradient descent.
pub const MAX_EXACT_LAYERS: usize = 10;
pub const UNMIX_STEP: f64 = 0.1;
pub const UNMIX_ITERS: usize = 200;

const PIVOT_EPS: f64 = 1e-13;

/// `||sum_k a_k c_k - p||^2 + lambda * sum_k a_k (1 - a_k)`
pub fn unmix_energy(alpha: &[f64], pixel: Rgb, palette: &Palette, lambda: f64) -> f64 {
    let mix = mix(alpha, palette);
    let fit: f64 = (0..3).map(|c| (mix[c] - pixel[c]).powi(2)).sum();
    let sparsity: f64 = alpha.iter().map(|a| a * (1.0 - a)).sum();
    fit + lambda * sparsity
}

pub(crate) fn mix(alpha: &[f64], palette: &Palette) -> Rgb {
    let mut out = [0.0; 3];
    for (a, color) in alpha.iter().zip(palette.colors()) {
        for c in 0..3 {
            out[c] += a * color[c];
        }
    }
    out
}

/// Euclidean projection onto `{a : a_k >= 0, sum a_k = 1}` by the
/// sort-and-threshold method.
pub fn project_to_simplex(v: &mut [f64]) {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// Layer weights for one pixel: the minimizer of [`unmix_energy`] over the
/// probability simplex.
///
/// On the simplex the energy is the quadratic
/// `a^T (C^T C - lambda I) a - 2 p^T C a + const`, so its global minimum is
/// either a vertex or the stationary point of a face on which the reduced
/// Hessian is positive definite. Up to [`MAX_EXACT_LAYERS`] colors every
/// face is solved and the lowest energy wins, smaller faces first, so exact
/// palette colors come out one-hot.
pub fn unmix_pixel(pixel: Rgb, palette: &Palette, lambda: f64) -> AlphaVector {
    let k = palette.len();
    if k == 1 {
        return AlphaVector::from_simplex(vec![1.0]);
    }
    let alpha = if k <= MAX_EXACT_LAYERS {
        FaceSolver::new(pixel, palette, lambda).solve()
    } else {
        let start = projected_gradient(pixel, palette, lambda);
        polish_on_support(start, pixel, palette, lambda)
    };
    AlphaVector::from_simplex(alpha)
}

/// Fixed-schedule projected gradient descent from the uniform mixture. The
/// step is capped by the inverse Lipschitz bound `1 / (2 tr(C^T C))`.
pub(crate) fn projected_gradient(pixel: Rgb, palette: &Palette, lambda: f64) -> Vec<f64> {
    let k = palette.len();
    let colors = palette.colors();
    let lipschitz = 2.0 * colors.iter().flatten().map(|v| v * v).sum::<f64>() + 2.0 * lambda;
    let step = UNMIX_STEP.min(1.0 / lipschitz);
    let mut alpha = vec![1.0 / k as f64; k];
    let mut grad = vec![0.0; k];
    for _ in 0..UNMIX_ITERS {
        let m = mix(&alpha, palette);
        let r = [m[0] - pixel[0], m[1] - pixel[1], m[2] - pixel[2]];
        for (g, (a, color)) in grad.iter_mut().zip(alpha.iter().zip(colors)) {
            *g = 2.0 * (color[0] * r[0] + color[1] * r[1] + color[2] * r[2]) + lambda * (1.0 - 2.0 * a);
        }
        for (a, g) in alpha.iter_mut().zip(&grad) {
            *a -= step * g;
        }
        project_to_simplex(&mut alpha);
    }
    alpha
}

// Re-solves exactly on the support found by gradient descent and keeps the
// result if it is feasible and no worse.
fn polish_on_support(start: Vec<f64>, pixel: Rgb, palette: &Palette, lambda: f64) -> Vec<f64> {
    let support: Vec<usize> = (0..start.len()).filter(|&i| start[i] > 0.0).collect();
    let solver = FaceSolver::new(pixel, palette, lambda);
    match solver.face_minimum(&support) {
        Some(candidate)
            if unmix_energy(&candidate, pixel, palette, lambda) <= unmix_energy(&start, pixel, palette, lambda) =>
        {
            candidate
        }
        _ => start,
    }
}

struct FaceSolver<'a> {
    pixel: Rgb,
    palette: &'a Palette,
    lambda: f64,
    /// `C^T C - lambda I`, row-major `k x k`
    hessian: Vec<f64>,
    /// `C^T p`
    linear: Vec<f64>,
}

impl<'a> FaceSolver<'a> {
    fn new(pixel: Rgb, palette: &'a Palette, lambda: f64) -> Self {
        let colors = palette.colors();
        let k = colors.len();
        let dot = |a: Rgb, b: Rgb| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let mut hessian = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                hessian[i * k + j] = dot(colors[i], colors[j]) - if i == j { lambda } else { 0.0 };
            }
        }
        let linear = colors.iter().map(|c| dot(*c, pixel)).collect();
        Self { pixel, palette, lambda, hessian, linear }
    }

    fn solve(&self) -> Vec<f64> {
        let k = self.palette.len();
        let mut masks: Vec<u32> = (1..1u32 << k).collect();
        masks.sort_by_key(|m| (m.count_ones(), *m));

        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut support = Vec::with_capacity(k);
        for mask in masks {
            support.clear();
            support.extend((0..k).filter(|i| mask & (1 << i) != 0));
            let Some(alpha) = self.face_minimum(&support) else {
                continue;
            };
            let e = unmix_energy(&alpha, self.pixel, self.palette, self.lambda);
            if best.as_ref().is_none_or(|(b, _)| e < *b) {
                best = Some((e, alpha));
            }
        }
        best.expect("vertices are always candidates").1
    }

    /// Stationary point of the energy on the relative interior of the face
    /// spanned by `support`, when it exists and is a strict local minimum
    /// there. A single vertex is returned as is.
    fn face_minimum(&self, support: &[usize]) -> Option<Vec<f64>> {
        let k = self.palette.len();
        let mut alpha = vec![0.0; k];
        let (&first, rest) = support.split_first()?;
        if rest.is_empty() {
            alpha[first] = 1.0;
            return Some(alpha);
        }
        // a = e_first + sum_j z_j (e_j - e_first) over j in `rest`
        let m = rest.len();
        let h = |a: usize, b: usize| self.hessian[a * k + b];
        let mut reduced = vec![0.0; m * m];
        let mut rhs = vec![0.0; m];
        for (r, &i) in rest.iter().enumerate() {
            for (c, &j) in rest.iter().enumerate() {
                reduced[r * m + c] = h(i, j) - h(i, first) - h(first, j) + h(first, first);
            }
            // gradient of the quadratic at e_first along (e_i - e_first), halved
            rhs[r] = -((h(i, first) - self.linear[i]) - (h(first, first) - self.linear[first]));
        }
        let z = cholesky_solve(&mut reduced, &mut rhs, m)?;
        let mut total = 0.0;
        for (&i, zi) in rest.iter().zip(&z) {
            if *zi <= 0.0 {
                return None;
            }
            alpha[i] = *zi;
            total += zi;
        }
        let head = 1.0 - total;
        if head <= 0.0 {
            return None;
        }
        alpha[first] = head;
        Some(alpha)
    }
}

// Solves `a x = b` in place for symmetric positive definite `a`; `None` if
// `a` is not numerically positive definite.
fn cholesky_solve(a: &mut [f64], b: &mut [f64], n: usize) -> Option<Vec<f64>> {
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for j in 0..n {
        let mut d = a[j * n + j];
        for p in 0..j {
            d -= a[j * n + p] * a[j * n + p];
        }
        if d <= PIVOT_EPS * scale {
            return None;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for p in 0..j {
                s -= a[i * n + p] * a[j * n + p];
            }
            a[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for p in 0..i {
            s -= a[i * n + p] * b[p];
        }
        b[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for p in i + 1..n {
            s -= a[p * n + i] * b[p];
        }
        b[i] = s / a[i * n + i];
    }
    Some(b.to_vec())
}
