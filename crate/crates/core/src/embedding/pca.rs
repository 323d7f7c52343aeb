use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::{fix_signs, EmbeddingError, FeatureMatrix, LinearProjection, Method};

/// Principal axes from the SVD of the mean-centered data. Components are
/// ordered by decreasing variance.
pub fn pca_fit(x: &FeatureMatrix, k: usize) -> Result<LinearProjection, EmbeddingError> {
    let (n, d) = (x.nrows(), x.ncols());
    if n < 2 {
        return Err(EmbeddingError::TooFewPoints { needed: 2, got: n });
    }
    let max_k = (n - 1).min(d);
    if k == 0 || k > max_k {
        return Err(EmbeddingError::InvalidComponentCount { k, max: max_k });
    }

    let mean = x.column_mean();
    let centered = x.centered(&mean);
    let total_variance = centered.norm_squared() / (n - 1) as f64;

    let svd = centered.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));

    let s_max = svd.singular_values[order[0]];
    let tol = s_max * n.max(d) as f64 * f64::EPSILON;
    let rank = order.iter().filter(|&&i| svd.singular_values[i] > tol).count();
    if k > rank {
        return Err(EmbeddingError::RankDeficient { k, rank });
    }

    let mut components = DMatrix::from_fn(d, k, |row, col| v_t[(order[col], row)]);
    fix_signs(&mut components);
    let eigenvalues = order[..k]
        .iter()
        .map(|&i| svd.singular_values[i].powi(2) / (n - 1) as f64)
        .collect();

    Ok(LinearProjection {
        method: Method::Pca,
        mean,
        components,
        eigenvalues,
        total_variance: Some(total_variance),
        params: BTreeMap::from([("k".to_string(), k as f64)]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    fn matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
        let ids = (0..rows.len()).map(|i| format!("r{i}")).collect();
        FeatureMatrix::from_rows(ids, rows, None).unwrap()
    }

    #[test]
    fn points_on_a_line() {
        let rows: Vec<Vec<f64>> = [-2.0, -0.5, 0.0, 1.0, 3.5].iter().map(|&t| vec![t, 2.0 * t]).collect();
        let proj = pca_fit(&matrix(&rows), 1).unwrap();
        let s = 5f64.sqrt();
        assert_abs_diff_eq!(proj.components[(0, 0)], 1.0 / s, epsilon = 1e-12);
        assert_abs_diff_eq!(proj.components[(1, 0)], 2.0 / s, epsilon = 1e-12);
        assert_abs_diff_eq!(proj.explained_variance_ratio().unwrap()[0], 1.0, epsilon = 1e-12);
        // a second component does not exist numerically
        assert!(matches!(pca_fit(&matrix(&rows), 2), Err(EmbeddingError::RankDeficient { k: 2, rank: 1 })));
    }

    #[test]
    fn mean_row_maps_to_origin_and_full_rank_round_trips() {
        let rows = vec![
            vec![1.0, 2.0, 0.5],
            vec![-1.0, 0.3, 2.0],
            vec![0.7, -0.4, 1.1],
            vec![2.2, 1.0, -0.3],
            vec![0.1, 0.9, 0.4],
        ];
        let x = matrix(&rows);
        let proj = pca_fit(&x, 3).unwrap();
        let gram = proj.components.transpose() * &proj.components;
        assert!((gram - DMatrix::identity(3, 3)).amax() < 1e-8);

        let mean_row = FeatureMatrix::from_rows(vec!["m".into()], &[proj.mean.iter().copied().collect()], None).unwrap();
        assert!(proj.transform(&mean_row).unwrap().coords.amax() < 1e-12);

        let emb = proj.transform(&x).unwrap();
        let back = &emb.coords * proj.components.transpose();
        for i in 0..5 {
            for j in 0..3 {
                assert_abs_diff_eq!(back[(i, j)] + proj.mean[j], rows[i][j], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn single_point_projection_is_a_dot_product() {
        // fixed projection, hand arithmetic: (3 - 1, 4 - 2) . (0.6, 0.8) = 2.8
        let proj = LinearProjection {
            method: Method::Pca,
            mean: DVector::from_vec(vec![1.0, 2.0]),
            components: DMatrix::from_column_slice(2, 1, &[0.6, 0.8]),
            eigenvalues: vec![1.0],
            total_variance: None,
            params: BTreeMap::new(),
        };
        let emb = proj.transform(&matrix(&[vec![3.0, 4.0]])).unwrap();
        assert_abs_diff_eq!(emb.coords[(0, 0)], 2.8, epsilon = 1e-12);
        assert!(matches!(
            proj.transform(&matrix(&[vec![1.0, 2.0, 3.0]])),
            Err(EmbeddingError::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn component_count_bounds() {
        let rows = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 3.0], vec![2.0, 2.0, 0.0]];
        assert!(matches!(pca_fit(&matrix(&rows), 0), Err(EmbeddingError::InvalidComponentCount { .. })));
        assert!(matches!(pca_fit(&matrix(&rows), 3), Err(EmbeddingError::InvalidComponentCount { k: 3, max: 2 })));
        assert!(matches!(pca_fit(&matrix(&rows[..1]), 1), Err(EmbeddingError::TooFewPoints { .. })));
    }

    #[test]
    fn projection_json_round_trip() {
        let rows = vec![vec![0.0, 1.0], vec![1.0, 0.5], vec![2.0, 2.0]];
        let proj = pca_fit(&matrix(&rows), 2).unwrap();
        assert_eq!(LinearProjection::from_json(&proj.to_json()).unwrap(), proj);
    }
}
