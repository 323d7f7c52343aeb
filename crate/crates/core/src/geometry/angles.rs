use std::collections::BTreeSet;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::{normalize_left, require, GeometryError};
use crate::corpus::{LandmarkKind, LandmarkSet, Point};

/// Two points closer than this are treated as coincident.
pub const DEGENERATE_DISTANCE: f64 = 1e-12;

/// Landmark kinds used for angle features, in canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HighQualitySet(Vec<LandmarkKind>);

impl HighQualitySet {
    /// Sorts into canonical order and drops duplicates. Needs at least
    /// three kinds.
    pub fn new(kinds: impl IntoIterator<Item = LandmarkKind>) -> Result<Self, GeometryError> {
        let kinds: Vec<LandmarkKind> = kinds.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        if kinds.len() < 3 {
            return Err(GeometryError::EmptySelection(kinds.len()));
        }
        Ok(Self(kinds))
    }

    /// The nine low-error kinds (eyes, mouth corners, nose wings) plus the
    /// three jawline points on the side away from the facing direction.
    pub fn default_set() -> Self {
        use LandmarkKind::*;
        Self::new([
            LeftEyeCenter,
            RightEyeCenter,
            MouthLeft,
            MouthRight,
            NoseLeft,
            NoseRight,
            JawUpperRight,
            JawMidRight,
            ChinBottom,
        ])
        .expect("nine kinds")
    }

    pub fn kinds(&self) -> &[LandmarkKind] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Three angles per unordered triplet.
    pub fn feature_len(&self) -> usize {
        let n = self.0.len();
        n * (n - 1) * (n - 2) / 2
    }

    /// Triplets `(i, j, k)` with `i < j < k`, lexicographic.
    pub fn triplets(&self) -> impl Iterator<Item = (LandmarkKind, LandmarkKind, LandmarkKind)> + '_ {
        let n = self.0.len();
        (0..n).flat_map(move |i| {
            (i + 1..n).flat_map(move |j| (j + 1..n).map(move |k| (self.0[i], self.0[j], self.0[k])))
        })
    }

    /// One name per line.
    pub fn parse(text: &str) -> Result<Self, crate::corpus::CorpusError> {
        let mut kinds = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let name = line.trim();
            if name.is_empty() || name.starts_with('#') {
                continue;
            }
            let kind = name.parse::<LandmarkKind>().map_err(|_| {
                crate::corpus::CorpusError::UnknownLandmarkName { line: i + 1, name: name.to_string() }
            })?;
            kinds.push(kind);
        }
        Self::new(kinds).map_err(|e| crate::corpus::CorpusError::MalformedRecord { line: 0, message: e.to_string() })
    }

    pub fn to_text(&self) -> String {
        self.0.iter().map(|k| format!("{k}\n")).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleFeatureVector {
    pub face_id: String,
    /// Degrees; per triplet `(i, j, k)` the angles at `i`, `j`, `k`.
    pub values: Vec<f64>,
}

fn angle_at(vertex: Point, p: Point, q: Point) -> f64 {
    let (ux, uy) = (p.x - vertex.x, p.y - vertex.y);
    let (vx, vy) = (q.x - vertex.x, q.y - vertex.y);
    let cross = ux * vy - uy * vx;
    let dot = ux * vx + uy * vy;
    cross.abs().atan2(dot).to_degrees()
}

fn coincide(p: Point, q: Point) -> bool {
    (p.x - q.x).hypot(p.y - q.y) < DEGENERATE_DISTANCE
}

/// Interior angles (degrees) of the triangle `abc` at `a`, `b` and `c`.
pub fn triplet_angles(a: Point, b: Point, c: Point) -> Result<[f64; 3], GeometryError> {
    if coincide(a, b) {
        return Err(GeometryError::DegenerateTriplet(0, 1));
    }
    if coincide(a, c) {
        return Err(GeometryError::DegenerateTriplet(0, 2));
    }
    if coincide(b, c) {
        return Err(GeometryError::DegenerateTriplet(1, 2));
    }
    Ok([angle_at(a, b, c), angle_at(b, a, c), angle_at(c, a, b)])
}

/// Angle features of a face that is already normalized to face left.
/// Coordinates are scaled to pixels first so the image aspect ratio is
/// respected.
pub fn angle_features(set: &LandmarkSet, hq: &HighQualitySet) -> Result<AngleFeatureVector, GeometryError> {
    let mut pts = [Point::new(0.0, 0.0); LandmarkKind::COUNT];
    for &kind in hq.kinds() {
        require(set, kind)?;
        pts[kind.index()] = set.pixel(kind).expect("checked above");
    }
    let mut values = Vec::with_capacity(hq.feature_len());
    for (a, b, c) in hq.triplets() {
        let angles = triplet_angles(pts[a.index()], pts[b.index()], pts[c.index()]).map_err(|_| {
            GeometryError::DegenerateFaceTriplet { face_id: set.face_id(), a, b, c }
        })?;
        values.extend_from_slice(&angles);
    }
    Ok(AngleFeatureVector { face_id: set.face_id(), values })
}

/// `face_id,ang_000,..` with angles printed to 6 decimal places. Every
/// vector must have `len` values.
pub fn features_to_csv(vectors: &[AngleFeatureVector], len: usize) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let header = std::iter::once("face_id".to_string()).chain((0..len).map(|i| format!("ang_{i:03}")));
    writer.write_record(header).expect("writing to memory");
    for v in vectors {
        assert_eq!(v.values.len(), len, "feature length of {}", v.face_id);
        let row = std::iter::once(v.face_id.clone()).chain(v.values.iter().map(|a| format!("{a:.6}")));
        writer.write_record(row).expect("writing to memory");
    }
    String::from_utf8(writer.into_inner().expect("flushing to memory")).expect("utf-8 fields")
}

/// Normalizes each face to look left, then extracts its angle features.
/// Output order matches input order.
pub fn angle_features_batch(
    sets: &[LandmarkSet],
    hq: &HighQualitySet,
) -> Vec<Result<AngleFeatureVector, GeometryError>> {
    let one = |set: &LandmarkSet| normalize_left(set).and_then(|s| angle_features(&s, hq));
    #[cfg(feature = "parallel")]
    {
        sets.par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        sets.iter().map(one).collect()
    }
}
