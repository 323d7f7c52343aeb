use std::collections::BTreeSet;
use std::fs::File;

use ukiyo_core::corpus::LandmarkKind::*;
use ukiyo_core::geometry::{select_high_quality, HighQualitySet, QualityReport};

fn table() -> QualityReport {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/landmark_errors.csv");
    QualityReport::from_csv(File::open(path).unwrap()).unwrap()
}

#[test]
fn published_error_table_selects_the_default_set() {
    let report = table();
    assert_eq!(report.per_kind.len(), 18);
    let jaw = BTreeSet::from([JawUpperRight, JawMidRight, ChinBottom]);
    let excl = BTreeSet::from([RightEyebrowLeft]);
    let hq = select_high_quality(&report, 20.0, &jaw, &excl).unwrap();
    assert_eq!(
        hq.kinds(),
        [LeftEyeCenter, RightEyeCenter, MouthLeft, MouthRight, NoseLeft, NoseRight, JawUpperRight, JawMidRight, ChinBottom]
    );
    assert_eq!(hq, HighQualitySet::default_set());
    assert_eq!(hq.feature_len(), 252);
}

#[test]
fn without_the_eyebrow_exclusion_ten_kinds_are_chosen() {
    let jaw = BTreeSet::from([JawUpperRight, JawMidRight, ChinBottom]);
    let hq = select_high_quality(&table(), 20.0, &jaw, &BTreeSet::new()).unwrap();
    assert_eq!(hq.len(), 10);
    assert_eq!(hq.feature_len(), 360);
}

#[test]
fn report_csv_round_trips() {
    let report = table();
    let again = QualityReport::from_csv(report.to_csv().as_bytes()).unwrap();
    assert_eq!(again, report);
}
