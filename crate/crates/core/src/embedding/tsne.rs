use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Embedding, EmbeddingError, FeatureMatrix, Method};

const ENTROPY_TOL: f64 = 1e-5;
const MAX_BISECTIONS: usize = 50;
const PROB_FLOOR: f64 = 1e-12;
const INIT_SD: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct TsneParams {
    pub perplexity: f64,
    pub seed: u64,
    pub iters: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    /// Iterations run with exaggerated affinities and the initial momentum.
    pub exaggeration_iters: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
}

impl Default for TsneParams {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            seed: 0,
            iters: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsneResult {
    pub embedding: Embedding,
    /// KL(P || Q) at the random initialization.
    pub initial_kl: f64,
    /// KL(P || Q) after the last iteration.
    pub final_kl: f64,
}

/// Exact O(n^2) t-SNE into two dimensions.
pub fn tsne_embed(x: &FeatureMatrix, params: &TsneParams) -> Result<TsneResult, EmbeddingError> {
    let n = x.nrows();
    if n < 5 {
        return Err(EmbeddingError::TooFewPoints { needed: 5, got: n });
    }
    let max_perplexity = (n - 1) as f64 / 3.0;
    if !(params.perplexity > 1.0 && params.perplexity < max_perplexity) {
        return Err(EmbeddingError::PerplexityTooLarge { perplexity: params.perplexity, max: max_perplexity });
    }

    let p = joint_probabilities(&squared_distances(x.data()), params.perplexity);

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let normal = Normal::new(0.0, INIT_SD).expect("valid sd");
    let mut y: Vec<[f64; 2]> = (0..n).map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)]).collect();
    let initial_kl = kl_divergence(&p, &y);

    let mut update = vec![[0.0f64; 2]; n];
    let mut num = vec![0.0f64; n * n];
    let mut grad = vec![[0.0f64; 2]; n];
    for iter in 0..params.iters {
        let early = iter < params.exaggeration_iters;
        let exaggeration = if early { params.early_exaggeration } else { 1.0 };
        let momentum = if early { params.initial_momentum } else { params.final_momentum };

        let z = student_t_kernel(&y, &mut num);
        for i in 0..n {
            let mut g = [0.0f64; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let q = (num[i * n + j] / z).max(PROB_FLOOR);
                let coeff = (exaggeration * p[i * n + j] - q) * num[i * n + j];
                g[0] += coeff * (y[i][0] - y[j][0]);
                g[1] += coeff * (y[i][1] - y[j][1]);
            }
            grad[i] = [4.0 * g[0], 4.0 * g[1]];
        }
        for i in 0..n {
            for c in 0..2 {
                update[i][c] = momentum * update[i][c] - params.learning_rate * grad[i][c];
                y[i][c] += update[i][c];
            }
        }
        recenter(&mut y);
    }
    let final_kl = kl_divergence(&p, &y);

    let coords = DMatrix::from_fn(n, 2, |i, c| y[i][c]);
    let params_record = BTreeMap::from([
        ("perplexity".to_string(), params.perplexity),
        ("seed".to_string(), params.seed as f64),
        ("iters".to_string(), params.iters as f64),
        ("learning_rate".to_string(), params.learning_rate),
        ("early_exaggeration".to_string(), params.early_exaggeration),
    ]);
    Ok(TsneResult {
        embedding: Embedding {
            ids: x.ids().to_vec(),
            coords,
            method: Method::Tsne,
            params: params_record,
            labels: x.labels().map(<[String]>::to_vec),
        },
        initial_kl,
        final_kl,
    })
}

fn squared_distances(data: &DMatrix<f64>) -> Vec<f64> {
    let n = data.nrows();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let mut s = 0.0;
            for c in 0..data.ncols() {
                let diff = data[(i, c)] - data[(j, c)];
                s += diff * diff;
            }
            d[i * n + j] = s;
            d[j * n + i] = s;
        }
    }
    d
}

/// Row-conditional Gaussian affinities with a per-row precision found by
/// bisection on the entropy, then symmetrized to a joint distribution.
fn joint_probabilities(dist: &[f64], perplexity: f64) -> Vec<f64> {
    let n = (dist.len() as f64).sqrt() as usize;
    let target = perplexity.ln();
    let mut cond = vec![0.0; n * n];
    let mut row = vec![0.0; n];
    for i in 0..n {
        let d = &dist[i * n..(i + 1) * n];
        let d_min = d
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min);
        let mut beta = 1.0;
        let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
        for _ in 0..MAX_BISECTIONS {
            let h = row_entropy(d, i, d_min, beta, &mut row);
            let diff = h - target;
            if diff.abs() < ENTROPY_TOL {
                break;
            }
            if diff > 0.0 {
                lo = beta;
                beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = 0.5 * (beta + lo);
            }
        }
        row_entropy(d, i, d_min, beta, &mut row);
        cond[i * n..(i + 1) * n].copy_from_slice(&row);
    }
    let mut p = vec![0.0; n * n];
    let scale = 1.0 / (2.0 * n as f64);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] = ((cond[i * n + j] + cond[j * n + i]) * scale).max(PROB_FLOOR);
            }
        }
    }
    p
}

// Fills `row` with the normalized conditional distribution and returns its
// entropy in nats. Distances are shifted by the row minimum for stability.
fn row_entropy(d: &[f64], i: usize, d_min: f64, beta: f64, row: &mut [f64]) -> f64 {
    let mut sum = 0.0;
    for (j, v) in row.iter_mut().enumerate() {
        *v = if j == i { 0.0 } else { (-(d[j] - d_min) * beta).exp() };
        sum += *v;
    }
    let mut weighted = 0.0;
    for (j, v) in row.iter_mut().enumerate() {
        *v /= sum;
        weighted += *v * (d[j] - d_min);
    }
    sum.ln() + beta * weighted
}

fn student_t_kernel(y: &[[f64; 2]], num: &mut [f64]) -> f64 {
    let n = y.len();
    let mut z = 0.0;
    for i in 0..n {
        num[i * n + i] = 0.0;
        for j in i + 1..n {
            let dx = y[i][0] - y[j][0];
            let dy = y[i][1] - y[j][1];
            let v = 1.0 / (1.0 + dx * dx + dy * dy);
            num[i * n + j] = v;
            num[j * n + i] = v;
            z += 2.0 * v;
        }
    }
    z
}

fn recenter(y: &mut [[f64; 2]]) {
    let n = y.len() as f64;
    let mx = y.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = y.iter().map(|p| p[1]).sum::<f64>() / n;
    for p in y.iter_mut() {
        p[0] -= mx;
        p[1] -= my;
    }
}

/// KL(P || Q) for a joint affinity matrix `p` (row-major `n x n`) and 2-D
/// coordinates `y`.
pub fn kl_divergence(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let n = y.len();
    let mut num = vec![0.0; n * n];
    let z = student_t_kernel(y, &mut num);
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let pij = p[i * n + j];
                let q = (num[i * n + j] / z).max(PROB_FLOOR);
                kl += pij * (pij / q).ln();
            }
        }
    }
    kl
}
