use std::collections::{BTreeMap, HashMap};

use super::{CorpusError, FaceRecord};

pub const UNKNOWN_PAINTER: &str = "(unknown)";

/// Counts year-bearing faces in bins `[start, start + bin_width)`, keyed by
/// bin start. Bins are aligned to multiples of `bin_width`.
pub fn year_histogram(records: &[FaceRecord], bin_width: i32) -> Result<BTreeMap<i32, usize>, CorpusError> {
    if bin_width < 1 {
        return Err(CorpusError::InvalidBinWidth(bin_width));
    }
    let mut bins = BTreeMap::new();
    for year in records.iter().filter_map(FaceRecord::year) {
        *bins.entry(year.div_euclid(bin_width) * bin_width).or_insert(0) += 1;
    }
    Ok(bins)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PainterRow {
    pub painter: String,
    pub face_count: usize,
    pub min_year: Option<i32>,
    pub max_year: Option<i32>,
}

/// Faces per painter, most prolific first, ties by name.
pub fn painter_summary(records: &[FaceRecord]) -> Vec<PainterRow> {
    let mut rows: HashMap<&str, PainterRow> = HashMap::new();
    for record in records {
        let name = record.painter().unwrap_or(UNKNOWN_PAINTER);
        let row = rows.entry(name).or_insert_with(|| PainterRow {
            painter: name.to_string(),
            face_count: 0,
            min_year: None,
            max_year: None,
        });
        row.face_count += 1;
        if let Some(year) = record.year() {
            row.min_year = Some(row.min_year.map_or(year, |y| y.min(year)));
            row.max_year = Some(row.max_year.map_or(year, |y| y.max(year)));
        }
    }
    let mut rows: Vec<PainterRow> = rows.into_values().collect();
    rows.sort_by(|a, b| b.face_count.cmp(&a.face_count).then_with(|| a.painter.cmp(&b.painter)));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{LandmarkSet, MetadataRecord};

    fn face(i: usize, painter: &str, year: Option<i32>) -> FaceRecord {
        let landmarks = LandmarkSet::new(format!("img{i}"), 0, 1, 1);
        FaceRecord {
            face_id: landmarks.face_id(),
            landmarks,
            metadata: Some(MetadataRecord {
                object_id: format!("img{i}"),
                title: String::new(),
                painter: painter.into(),
                format: String::new(),
                year,
            }),
        }
    }

    fn faces_with_years(years: &[Option<i32>]) -> Vec<FaceRecord> {
        years.iter().enumerate().map(|(i, y)| face(i, "p", *y)).collect()
    }

    #[test]
    fn unit_bins_count_each_year() {
        let h = year_histogram(&faces_with_years(&[Some(1849), Some(1849), Some(1850)]), 1).unwrap();
        assert_eq!(h, BTreeMap::from([(1849, 2), (1850, 1)]));
    }

    #[test]
    fn decade_bins() {
        let h = year_histogram(&faces_with_years(&[Some(1805), Some(1849), Some(1895)]), 10).unwrap();
        assert_eq!(h, BTreeMap::from([(1800, 1), (1840, 1), (1890, 1)]));
    }

    #[test]
    fn yearless_records_give_empty_histogram() {
        let mut faces = faces_with_years(&[None, None]);
        faces[0].metadata = None;
        assert!(year_histogram(&faces, 5).unwrap().is_empty());
    }

    #[test]
    fn zero_bin_width_rejected() {
        assert!(matches!(year_histogram(&[], 0), Err(CorpusError::InvalidBinWidth(0))));
    }

    #[test]
    fn painters_sorted_by_count_then_name() {
        let faces = vec![
            face(0, "B", Some(1830)),
            face(1, "A", Some(1850)),
            face(2, "A", Some(1840)),
            face(3, "C", None),
        ];
        let rows = painter_summary(&faces);
        let names: Vec<_> = rows.iter().map(|r| r.painter.as_str()).collect();
        assert_eq!(names, ["A", "B", "C"]);
        assert_eq!(rows[0], PainterRow { painter: "A".into(), face_count: 2, min_year: Some(1840), max_year: Some(1850) });
        assert_eq!((rows[2].min_year, rows[2].max_year), (None, None));
    }

    #[test]
    fn empty_painters_grouped_as_unknown() {
        let mut faces = vec![face(0, "", Some(1800)), face(1, "  ", None)];
        faces[1].metadata.as_mut().unwrap().painter = String::new();
        let mut no_meta = face(2, "", None);
        no_meta.metadata = None;
        faces.push(no_meta);
        let rows = painter_summary(&faces);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].painter, UNKNOWN_PAINTER);
        assert_eq!(rows[0].face_count, 3);
    }
}
