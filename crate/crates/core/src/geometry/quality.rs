use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{normalize_left, GeometryError, HighQualitySet};
use crate::corpus::{CorpusError, LandmarkKind, LandmarkSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KindError {
    pub mean_error_px: f64,
    pub n_samples: usize,
}

/// Mean detection error per landmark kind. Kinds never observed in both
/// members of a pair are absent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QualityReport {
    pub per_kind: BTreeMap<LandmarkKind, KindError>,
}

impl QualityReport {
    pub fn from_means(entries: impl IntoIterator<Item = (LandmarkKind, f64, usize)>) -> Self {
        Self {
            per_kind: entries
                .into_iter()
                .map(|(k, mean_error_px, n_samples)| (k, KindError { mean_error_px, n_samples }))
                .collect(),
        }
    }

    pub fn get(&self, kind: LandmarkKind) -> Option<KindError> {
        self.per_kind.get(&kind).copied()
    }

    /// `kind,mean_error_px,n_samples`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,mean_error_px,n_samples\n");
        for (kind, e) in &self.per_kind {
            out.push_str(&format!("{kind},{:.6},{}\n", e.mean_error_px, e.n_samples));
        }
        out
    }

    /// Parses the format written by [`QualityReport::to_csv`].
    pub fn from_csv<R: std::io::Read>(stream: R) -> Result<Self, CorpusError> {
        #[derive(serde::Deserialize)]
        struct Row {
            kind: String,
            mean_error_px: f64,
            n_samples: usize,
        }
        let mut per_kind = BTreeMap::new();
        let mut reader = csv::Reader::from_reader(stream);
        for (i, row) in reader.deserialize::<Row>().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| CorpusError::MalformedRecord { line, message: e.to_string() })?;
            let kind: LandmarkKind =
                row.kind.parse().map_err(|_| CorpusError::UnknownLandmarkName { line, name: row.kind.clone() })?;
            if !(row.mean_error_px >= 0.0 && row.mean_error_px.is_finite()) {
                return Err(CorpusError::MalformedRecord { line, message: format!("bad mean error {}", row.mean_error_px) });
            }
            let error = KindError { mean_error_px: row.mean_error_px, n_samples: row.n_samples };
            if per_kind.insert(kind, error).is_some() {
                return Err(CorpusError::MalformedRecord { line, message: format!("{kind} listed twice") });
            }
        }
        Ok(Self { per_kind })
    }
}

/// Compares detected landmarks with expert annotations of the same faces.
/// Both sides are normalized to face left, and distances are measured in
/// pixels of the detected set's image.
pub fn quality_report(detected: &[LandmarkSet], expert: &[LandmarkSet]) -> Result<QualityReport, GeometryError> {
    let experts: HashMap<(&str, u32), &LandmarkSet> =
        expert.iter().map(|s| ((s.image_id.as_str(), s.face_index), s)).collect();

    let mut sums: BTreeMap<LandmarkKind, (f64, usize)> = BTreeMap::new();
    let mut pairs = 0usize;
    for det in detected {
        let Some(exp) = experts.get(&(det.image_id.as_str(), det.face_index)) else {
            continue;
        };
        pairs += 1;
        let det = normalize_left(det)?;
        let exp = normalize_left(exp)?;
        let (w, h) = (f64::from(det.image_width), f64::from(det.image_height));
        for (kind, d) in &det.points {
            if let Some(e) = exp.get(*kind) {
                let dist = ((d.x - e.x) * w).hypot((d.y - e.y) * h);
                let entry = sums.entry(*kind).or_insert((0.0, 0));
                entry.0 += dist;
                entry.1 += 1;
            }
        }
    }
    if pairs == 0 {
        return Err(GeometryError::NoPairedSamples);
    }
    Ok(QualityReport {
        per_kind: sums
            .into_iter()
            .map(|(k, (sum, n))| (k, KindError { mean_error_px: sum / n as f64, n_samples: n }))
            .collect(),
    })
}

/// Kinds whose mean error is below `threshold`, minus `exclusions`, plus
/// `jaw_exceptions`.
pub fn select_high_quality(
    report: &QualityReport,
    threshold: f64,
    jaw_exceptions: &BTreeSet<LandmarkKind>,
    exclusions: &BTreeSet<LandmarkKind>,
) -> Result<HighQualitySet, GeometryError> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(GeometryError::InvalidThreshold(threshold));
    }
    let mut chosen: BTreeSet<LandmarkKind> = report
        .per_kind
        .iter()
        .filter(|(k, e)| e.mean_error_px < threshold && !exclusions.contains(k))
        .map(|(k, _)| *k)
        .collect();
    chosen.extend(jaw_exceptions.iter().copied());
    HighQualitySet::new(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use LandmarkKind::*;

    fn face(id: &str, w: u32, h: u32) -> LandmarkSet {
        LandmarkSet::new(id, 0, w, h)
            .with_point(LeftEyeCenter, 0.3, 0.4)
            .with_point(RightEyeCenter, 0.6, 0.4)
            .with_point(NoseCenter, 0.4, 0.5)
            .with_point(MouthLeft, 0.35, 0.7)
    }

    #[test]
    fn identical_annotations_have_zero_error() {
        let sets = vec![face("a", 100, 100), face("b", 300, 200)];
        let report = quality_report(&sets, &sets).unwrap();
        assert_eq!(report.per_kind.len(), 4);
        assert!(report.per_kind.values().all(|e| e.mean_error_px == 0.0 && e.n_samples == 2));
    }

    #[test]
    fn three_four_five() {
        let det = face("a", 100, 200);
        let mut exp = det.clone();
        exp.points.insert(MouthLeft, crate::corpus::Point::new(0.35 + 0.03, 0.7 + 0.02));
        let report = quality_report(&[det], &[exp]).unwrap();
        assert!((report.get(MouthLeft).unwrap().mean_error_px - 5.0).abs() < 1e-9);
        assert_eq!(report.get(NoseCenter).unwrap().mean_error_px, 0.0);
        assert_eq!(report.get(ChinBottom), None);
    }

    #[test]
    fn sides_are_normalized_before_comparison() {
        // expert annotated the mirrored image: same face after normalization
        let det = face("a", 100, 100);
        let exp = crate::geometry::reflect(&det);
        let report = quality_report(&[det], &[exp]).unwrap();
        assert!(report.per_kind.values().all(|e| e.mean_error_px < 1e-9));
    }

    #[test]
    fn unpaired_inputs_rejected() {
        assert_eq!(
            quality_report(&[face("a", 10, 10)], &[face("b", 10, 10)]).unwrap_err(),
            GeometryError::NoPairedSamples
        );
    }

    #[test]
    fn selection_rules() {
        let report = QualityReport::from_means([(LeftEyeCenter, 30.0, 1), (NoseLeft, 25.0, 1), (ChinBottom, 40.0, 1)]);
        let none = BTreeSet::new();
        assert_eq!(select_high_quality(&report, 20.0, &none, &none).unwrap_err(), GeometryError::EmptySelection(0));
        let all = select_high_quality(&report, f64::INFINITY, &none, &none).unwrap();
        assert_eq!(all.kinds(), [LeftEyeCenter, NoseLeft, ChinBottom]);
        assert!(matches!(select_high_quality(&report, 0.0, &none, &none), Err(GeometryError::InvalidThreshold(_))));
    }
}
