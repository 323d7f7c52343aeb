use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{fix_signs, EmbeddingError, FeatureMatrix, LinearProjection, Method};

/// Relative ridge added to the within-class scatter.
const RIDGE: f64 = 1e-6;

/// Fisher discriminant directions: the leading eigenvectors of
/// `(Sw + eps I)^-1 Sb`, with `eps = 1e-6 * trace(Sw) / d`.
///
/// The generalized problem is solved in symmetric form through the
/// Cholesky factor `L` of the regularized within-class scatter:
/// `L^-1 Sb L^-T v = lambda v`, `w = L^-T v`. Directions are scaled to unit
/// length.
pub fn lda_fit(x: &FeatureMatrix, k: usize) -> Result<LinearProjection, EmbeddingError> {
    let labels = x.labels().ok_or(EmbeddingError::MissingLabels)?;
    let d = x.ncols();

    let mut classes: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        classes.entry(l.as_str()).or_default().push(i);
    }
    if classes.len() < 2 {
        return Err(EmbeddingError::TooFewClasses(classes.len()));
    }
    if let Some((name, _)) = classes.iter().find(|(_, rows)| rows.len() < 2) {
        return Err(EmbeddingError::DegenerateClass((*name).to_string()));
    }
    let max_k = (classes.len() - 1).min(d);
    if k == 0 || k > max_k {
        return Err(EmbeddingError::InvalidComponentCount { k, max: max_k });
    }

    let data = x.data();
    let mean = x.column_mean();
    let mut within = DMatrix::<f64>::zeros(d, d);
    let mut between = DMatrix::<f64>::zeros(d, d);
    for rows in classes.values() {
        let class_mean = rows
            .iter()
            .fold(DVector::zeros(d), |acc, &i| acc + data.row(i).transpose())
            / rows.len() as f64;
        for &i in rows {
            let diff = data.row(i).transpose() - &class_mean;
            within.syger(1.0, &diff, &diff, 1.0);
        }
        let shift = &class_mean - &mean;
        between.syger(rows.len() as f64, &shift, &shift, 1.0);
    }
    within.fill_upper_triangle_with_lower_triangle();
    between.fill_upper_triangle_with_lower_triangle();

    let eps = RIDGE * within.trace() / d as f64;
    for i in 0..d {
        within[(i, i)] += eps;
    }
    let chol = within.cholesky().ok_or(EmbeddingError::SingularScatter)?;
    let l = chol.l();
    let l_inv_b = l
        .solve_lower_triangular(&between)
        .ok_or(EmbeddingError::SingularScatter)?;
    let mut whitened = l
        .solve_lower_triangular(&l_inv_b.transpose())
        .ok_or(EmbeddingError::SingularScatter)?;
    whitened = (&whitened + whitened.transpose()) * 0.5;

    let eig = SymmetricEigen::new(whitened);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let lt = l.transpose();
    let mut components = DMatrix::zeros(d, k);
    for (col, &idx) in order[..k].iter().enumerate() {
        let w = lt
            .solve_upper_triangular(&eig.eigenvectors.column(idx).into_owned())
            .ok_or(EmbeddingError::SingularScatter)?;
        let norm = w.norm();
        components.set_column(col, &(w / norm));
    }
    fix_signs(&mut components);

    Ok(LinearProjection {
        method: Method::Lda,
        mean,
        components,
        eigenvalues: order[..k].iter().map(|&i| eig.eigenvalues[i]).collect(),
        total_variance: None,
        params: BTreeMap::from([("k".to_string(), k as f64), ("ridge".to_string(), eps)]),
    })
}
