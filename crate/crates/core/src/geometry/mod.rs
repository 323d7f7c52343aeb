//! Face orientation, alignment, landmark quality and angle features.

mod align;
mod angles;
mod quality;

use thiserror::Error;

use crate::corpus::{LandmarkKind, LandmarkSet, Point};

pub use align::{alignment_quad, crop_face, AlignmentQuad, MIN_CROP_SIZE};
pub use angles::{
    angle_features, angle_features_batch, features_to_csv, triplet_angles, AngleFeatureVector, HighQualitySet,
    DEGENERATE_DISTANCE,
};
pub use quality::{quality_report, select_high_quality, KindError, QualityReport};

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("face {face_id}: missing landmark {kind}")]
    MissingLandmark { face_id: String, kind: LandmarkKind },
    #[error("face {face_id}: degenerate face geometry ({reason})")]
    DegenerateFace { face_id: String, reason: &'static str },
    #[error("degenerate triplet: points {0} and {1} coincide")]
    DegenerateTriplet(usize, usize),
    #[error("face {face_id}: degenerate triplet ({a}, {b}, {c})")]
    DegenerateFaceTriplet { face_id: String, a: LandmarkKind, b: LandmarkKind, c: LandmarkKind },
    #[error("image is empty")]
    EmptyImage,
    #[error("output size {0} is below the minimum of {MIN_CROP_SIZE}")]
    InvalidOutputSize(u32),
    #[error("no detected/expert pairs share an (image_id, face_index) key")]
    NoPairedSamples,
    #[error("threshold must be positive, got {0}")]
    InvalidThreshold(f64),
    #[error("only {0} landmark kinds selected; at least 3 are needed to form angles")]
    EmptySelection(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Facing {
    Left,
    Right,
}

fn require(set: &LandmarkSet, kind: LandmarkKind) -> Result<Point, GeometryError> {
    set.get(kind)
        .ok_or_else(|| GeometryError::MissingLandmark { face_id: set.face_id(), kind })
}

/// A face looks right when its nose lies right of the midpoint between the
/// eye centers. "Right" is measured along the left-to-right eye axis in
/// pixels, which for level eyes is the image x axis, so the answer survives
/// rotating the whole face. Ties count as left.
pub fn facing_direction(set: &LandmarkSet) -> Result<Facing, GeometryError> {
    for kind in [LandmarkKind::NoseCenter, LandmarkKind::LeftEyeCenter, LandmarkKind::RightEyeCenter] {
        require(set, kind)?;
    }
    let px = |kind| set.pixel(kind).expect("checked above");
    let (nose, left, right) = (px(LandmarkKind::NoseCenter), px(LandmarkKind::LeftEyeCenter), px(LandmarkKind::RightEyeCenter));
    let mid = left.midpoint(right);
    let along = (nose.x - mid.x) * (right.x - left.x) + (nose.y - mid.y) * (right.y - left.y);
    if along > 0.0 {
        Ok(Facing::Right)
    } else {
        Ok(Facing::Left)
    }
}

/// Horizontal reflection `x -> 1 - x` with every kind relabelled to its
/// mirror partner. Applying it twice restores the input.
pub fn reflect(set: &LandmarkSet) -> LandmarkSet {
    let mut out = set.clone();
    out.points = set
        .points
        .iter()
        .map(|(kind, p)| (kind.mirror(), Point::new(1.0 - p.x, p.y)))
        .collect();
    out
}

/// Returns the set reflected if it faces right, unchanged otherwise.
pub fn normalize_left(set: &LandmarkSet) -> Result<LandmarkSet, GeometryError> {
    Ok(match facing_direction(set)? {
        Facing::Left => set.clone(),
        Facing::Right => reflect(set),
    })
}
