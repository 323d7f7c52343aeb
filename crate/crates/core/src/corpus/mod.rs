//! Artwork metadata, landmark annotations, and the face-level corpus that
//! joins them.

mod landmarks;
mod metadata;
mod stats;

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Read};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use landmarks::{import_landmarks, LandmarkKind, LandmarkSet, Point};
pub use metadata::{parse_metadata, parse_year, MetadataFormat, MetadataRecord, ParseWarning, MAX_YEAR, MIN_YEAR};
pub use stats::{painter_summary, year_histogram, PainterRow, UNKNOWN_PAINTER};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("unreadable input: {0}")]
    UnreadableStream(String),
    #[error("line {line}: malformed record: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("line {line}: duplicate object_id {object_id:?}")]
    DuplicateObjectId { line: usize, object_id: String },
    #[error("line {line}: duplicate face {face_id:?}")]
    DuplicateFace { line: usize, face_id: String },
    #[error("line {line}: unknown landmark name {name:?}")]
    UnknownLandmarkName { line: usize, name: String },
    #[error("line {line}: face {face_id}: {kind} at ({x}, {y}) lies outside the unit square")]
    CoordinateOutOfRange { line: usize, face_id: String, kind: LandmarkKind, x: f64, y: f64 },
    #[error("bin width must be at least 1 year, got {0}")]
    InvalidBinWidth(i32),
}

impl CorpusError {
    fn at_line(self, line_no: usize) -> Self {
        match self {
            CorpusError::CoordinateOutOfRange { face_id, kind, x, y, .. } => {
                CorpusError::CoordinateOutOfRange { line: line_no, face_id, kind, x, y }
            }
            CorpusError::UnknownLandmarkName { name, .. } => CorpusError::UnknownLandmarkName { line: line_no, name },
            other => other,
        }
    }
}

/// One face with the metadata of the artwork it was found on, when known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceRecord {
    pub face_id: String,
    pub landmarks: LandmarkSet,
    pub metadata: Option<MetadataRecord>,
}

impl FaceRecord {
    pub fn year(&self) -> Option<i32> {
        self.metadata.as_ref().and_then(|m| m.year)
    }

    pub fn painter(&self) -> Option<&str> {
        self.metadata.as_ref().map(|m| m.painter.as_str()).filter(|p| !p.is_empty())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct JoinOutcome {
    pub faces: Vec<FaceRecord>,
    /// Object ids of metadata rows that matched no face, in input order.
    pub unmatched_metadata: Vec<String>,
}

/// Attaches metadata to each landmark set by `image_id == object_id`.
/// Output order and length follow `landmarks`.
pub fn join_faces(metadata: &[MetadataRecord], landmarks: &[LandmarkSet]) -> JoinOutcome {
    let by_id: HashMap<&str, &MetadataRecord> =
        metadata.iter().map(|m| (m.object_id.as_str(), m)).collect();
    let mut used = HashSet::new();
    let faces = landmarks
        .iter()
        .map(|set| {
            let meta = by_id.get(set.image_id.as_str()).copied();
            if meta.is_some() {
                used.insert(set.image_id.as_str());
            }
            FaceRecord { face_id: set.face_id(), landmarks: set.clone(), metadata: meta.cloned() }
        })
        .collect();
    let unmatched_metadata = metadata
        .iter()
        .filter(|m| !used.contains(m.object_id.as_str()))
        .map(|m| m.object_id.clone())
        .collect();
    JoinOutcome { faces, unmatched_metadata }
}

/// Corpus files are JSONL, one [`FaceRecord`] per line.
pub fn read_corpus<R: Read>(stream: R) -> Result<Vec<FaceRecord>, CorpusError> {
    let mut faces = Vec::new();
    for (i, line) in BufReader::new(stream).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::UnreadableStream(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let face: FaceRecord = serde_json::from_str(&line)
            .map_err(|e| CorpusError::MalformedRecord { line: i + 1, message: e.to_string() })?;
        face.landmarks.validate().map_err(|e| e.at_line(i + 1))?;
        faces.push(face);
    }
    Ok(faces)
}

pub fn write_corpus(faces: &[FaceRecord]) -> String {
    let mut out = String::new();
    for face in faces {
        out.push_str(&serde_json::to_string(face).expect("face records always serialize"));
        out.push('\n');
    }
    out
}
