//! Low-dimensional projections of feature vectors: PCA, LDA and exact
//! t-SNE.

mod lda;
mod pca;
mod tsne;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lda::lda_fit;
pub use pca::pca_fit;
pub use tsne::{kl_divergence, tsne_embed, TsneParams, TsneResult};

#[derive(Debug, Error, PartialEq)]
pub enum EmbeddingError {
    #[error("expected {expected} feature columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("{labels} labels for {rows} rows")]
    LabelCountMismatch { rows: usize, labels: usize },
    #[error("{ids} ids for {rows} rows")]
    IdCountMismatch { rows: usize, ids: usize },
    #[error("need at least {needed} rows, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("k = {k} is outside 1..={max}")]
    InvalidComponentCount { k: usize, max: usize },
    #[error("k = {k} exceeds the numerical rank {rank}")]
    RankDeficient { k: usize, rank: usize },
    #[error("labels are required")]
    MissingLabels,
    #[error("need at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("class {0:?} has fewer than 2 samples")]
    DegenerateClass(String),
    #[error("within-class scatter is singular")]
    SingularScatter,
    #[error("perplexity {perplexity} must lie in (1, {max})")]
    PerplexityTooLarge { perplexity: f64, max: f64 },
    #[error("line {line}: {message}")]
    MalformedCsv { line: usize, message: String },
}

/// `n` rows of `d` features, with row ids and optional class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    ids: Vec<String>,
    data: DMatrix<f64>,
    labels: Option<Vec<String>>,
}

impl FeatureMatrix {
    pub fn new(ids: Vec<String>, data: DMatrix<f64>, labels: Option<Vec<String>>) -> Result<Self, EmbeddingError> {
        if ids.len() != data.nrows() {
            return Err(EmbeddingError::IdCountMismatch { rows: data.nrows(), ids: ids.len() });
        }
        if let Some(l) = &labels {
            if l.len() != data.nrows() {
                return Err(EmbeddingError::LabelCountMismatch { rows: data.nrows(), labels: l.len() });
            }
        }
        for col in 0..data.ncols() {
            for row in 0..data.nrows() {
                if !data[(row, col)].is_finite() {
                    return Err(EmbeddingError::NonFinite { row, col });
                }
            }
        }
        Ok(Self { ids, data, labels })
    }

    pub fn from_rows(ids: Vec<String>, rows: &[Vec<f64>], labels: Option<Vec<String>>) -> Result<Self, EmbeddingError> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(EmbeddingError::DimensionMismatch { expected: d, got: bad.len() });
        }
        let data = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        Self::new(ids, data, labels)
    }

    /// Reads `id,f0,f1,..` rows after a header line; the header names are
    /// not interpreted.
    pub fn read_csv<R: std::io::Read>(stream: R) -> Result<Self, EmbeddingError> {
        let mut reader = csv::Reader::from_reader(stream);
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let bad = |message: String| EmbeddingError::MalformedCsv { line, message };
            let record = record.map_err(|e| bad(e.to_string()))?;
            let mut fields = record.iter();
            let id = fields.next().ok_or_else(|| bad("empty record".into()))?;
            let values = fields
                .enumerate()
                .map(|(j, f)| f.trim().parse::<f64>().map_err(|_| bad(format!("column {}: not a number: {f:?}", j + 2))))
                .collect::<Result<Vec<f64>, _>>()?;
            ids.push(id.to_string());
            rows.push(values);
        }
        Self::from_rows(ids, &rows, None)
    }

    pub fn with_labels(self, labels: Vec<String>) -> Result<Self, EmbeddingError> {
        Self::new(self.ids, self.data, Some(labels))
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Standardizes every column to zero mean and unit sample variance.
    /// Constant columns are only centered.
    pub fn z_scored(&self) -> Self {
        let n = self.nrows();
        let mut data = self.data.clone();
        for mut col in data.column_iter_mut() {
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = if n > 1 { col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
            let sd = var.sqrt();
            for v in col.iter_mut() {
                *v -= mean;
                if sd > 0.0 {
                    *v /= sd;
                }
            }
        }
        Self { ids: self.ids.clone(), data, labels: self.labels.clone() }
    }

    fn column_mean(&self) -> DVector<f64> {
        let n = self.nrows() as f64;
        DVector::from_iterator(self.ncols(), self.data.column_iter().map(|c| c.iter().sum::<f64>() / n))
    }

    fn centered(&self, mean: &DVector<f64>) -> DMatrix<f64> {
        let mut c = self.data.clone();
        for mut row in c.row_iter_mut() {
            for (v, m) in row.iter_mut().zip(mean.iter()) {
                *v -= m;
            }
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pca,
    Lda,
    Tsne,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pca => "pca",
            Method::Lda => "lda",
            Method::Tsne => "tsne",
        }
    }
}

/// A fitted linear map `x -> (x - mean) * components`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProjection {
    pub method: Method,
    pub mean: DVector<f64>,
    /// `d x k`, one direction per column.
    pub components: DMatrix<f64>,
    /// Explained variances (PCA) or discriminant eigenvalues (LDA), decreasing.
    pub eigenvalues: Vec<f64>,
    /// Total variance of the fitted data (PCA only).
    pub total_variance: Option<f64>,
    pub params: BTreeMap<String, f64>,
}

impl LinearProjection {
    pub fn dim(&self) -> usize {
        self.components.nrows()
    }

    pub fn k(&self) -> usize {
        self.components.ncols()
    }

    pub fn explained_variance_ratio(&self) -> Option<Vec<f64>> {
        let total = self.total_variance?;
        Some(self.eigenvalues.iter().map(|v| if total > 0.0 { v / total } else { 0.0 }).collect())
    }

    pub fn transform(&self, x: &FeatureMatrix) -> Result<Embedding, EmbeddingError> {
        if x.ncols() != self.dim() {
            return Err(EmbeddingError::DimensionMismatch { expected: self.dim(), got: x.ncols() });
        }
        let coords = x.centered(&self.mean) * &self.components;
        Ok(Embedding {
            ids: x.ids.clone(),
            coords,
            method: self.method,
            params: self.params.clone(),
            labels: x.labels.clone(),
        })
    }

    pub fn to_json(&self) -> String {
        let file = ProjectionFile {
            d: self.dim(),
            k: self.k(),
            method: self.method,
            params: self.params.clone(),
            mean: self.mean.iter().copied().collect(),
            components: self.components.row_iter().map(|r| r.iter().copied().collect()).collect(),
            eigenvalues: self.eigenvalues.clone(),
            total_variance: self.total_variance,
        };
        serde_json::to_string_pretty(&file).expect("projection serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let f: ProjectionFile = serde_json::from_str(text)?;
        if f.mean.len() != f.d || f.components.len() != f.d || f.components.iter().any(|r| r.len() != f.k) {
            return Err(serde::de::Error::custom("projection shape does not match its header"));
        }
        Ok(Self {
            method: f.method,
            mean: DVector::from_vec(f.mean),
            components: DMatrix::from_fn(f.d, f.k, |i, j| f.components[i][j]),
            eigenvalues: f.eigenvalues,
            total_variance: f.total_variance,
            params: f.params,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ProjectionFile {
    d: usize,
    k: usize,
    method: Method,
    params: BTreeMap<String, f64>,
    mean: Vec<f64>,
    /// row-major `d x k`
    components: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
    #[serde(default)]
    total_variance: Option<f64>,
}

/// Flips each column so its largest-magnitude entry is positive.
fn fix_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let mut best = 0.0f64;
        for &v in col.iter() {
            if v.abs() > best.abs() {
                best = v;
            }
        }
        if best < 0.0 {
            col.neg_mut();
        }
    }
}

/// Per-row low-dimensional coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub ids: Vec<String>,
    /// `n x k`
    pub coords: DMatrix<f64>,
    pub method: Method,
    pub params: BTreeMap<String, f64>,
    pub labels: Option<Vec<String>>,
}

impl Embedding {
    /// `face_id,x,y[,label]` for two dimensions, `face_id,x[,label]` for one
    /// and `face_id,x0,..` otherwise.
    pub fn to_csv(&self) -> String {
        let k = self.coords.ncols();
        let mut out = String::from("face_id");
        if k == 1 {
            out.push_str(",x");
        } else if k == 2 {
            out.push_str(",x,y");
        } else {
            for j in 0..k {
                let _ = write!(out, ",x{j}");
            }
        }
        if self.labels.is_some() {
            out.push_str(",label");
        }
        out.push('\n');
        for (i, id) in self.ids.iter().enumerate() {
            out.push_str(&csv_field(id));
            for j in 0..k {
                let _ = write!(out, ",{:.9}", self.coords[(i, j)]);
            }
            if let Some(labels) = &self.labels {
                out.push(',');
                out.push_str(&csv_field(&labels[i]));
            }
            out.push('\n');
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
