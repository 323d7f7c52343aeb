//! The 30-point facial landmark schema and per-face landmark sets.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Read};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::CorpusError;

/// A 2D point. In a [`LandmarkSet`] the coordinates are normalized to the
/// image, so `(0, 0)` is the top-left corner and `(1, 1)` the bottom-right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new((self.x + other.x) * 0.5, (self.y + other.y) * 0.5)
    }
}

macro_rules! landmark_kinds {
    ($($name:ident),+ $(,)?) => {
        /// Named facial landmark. Declaration order is the canonical order
        /// used for feature layout and for every sorted output.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum LandmarkKind {
            $($name),+
        }

        impl LandmarkKind {
            pub const ALL: [LandmarkKind; 30] = [$(LandmarkKind::$name),+];

            pub fn name(self) -> &'static str {
                match self {
                    $(LandmarkKind::$name => stringify!($name)),+
                }
            }
        }

        impl FromStr for LandmarkKind {
            type Err = CorpusError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $(stringify!($name) => Ok(LandmarkKind::$name),)+
                    other => Err(CorpusError::UnknownLandmarkName {
                        line: 0,
                        name: other.to_string(),
                    }),
                }
            }
        }
    };
}

landmark_kinds!(
    LeftEyeCenter,
    LeftEyeLeft,
    LeftEyeRight,
    LeftEyeUp,
    LeftEyeDown,
    RightEyeCenter,
    RightEyeLeft,
    RightEyeRight,
    RightEyeUp,
    RightEyeDown,
    LeftEyebrowLeft,
    LeftEyebrowRight,
    LeftEyebrowUp,
    RightEyebrowLeft,
    RightEyebrowRight,
    RightEyebrowUp,
    LeftPupilCenter,
    RightPupilCenter,
    MouthLeft,
    MouthRight,
    MouthUp,
    MouthDown,
    NoseCenter,
    NoseLeft,
    NoseRight,
    JawUpperLeft,
    JawUpperRight,
    JawMidLeft,
    JawMidRight,
    ChinBottom,
);

impl LandmarkKind {
    pub const COUNT: usize = 30;

    /// Position in the canonical order.
    pub fn index(self) -> usize {
        self as usize
    }

    /// The landmark that occupies this one's place after a horizontal
    /// reflection of the face. Both the side prefix and the left/right
    /// sub-position swap, so the outer corner of one eye maps to the outer
    /// corner of the other.
    pub fn mirror(self) -> LandmarkKind {
        use LandmarkKind::*;
        match self {
            LeftEyeCenter => RightEyeCenter,
            LeftEyeLeft => RightEyeRight,
            LeftEyeRight => RightEyeLeft,
            LeftEyeUp => RightEyeUp,
            LeftEyeDown => RightEyeDown,
            RightEyeCenter => LeftEyeCenter,
            RightEyeLeft => LeftEyeRight,
            RightEyeRight => LeftEyeLeft,
            RightEyeUp => LeftEyeUp,
            RightEyeDown => LeftEyeDown,
            LeftEyebrowLeft => RightEyebrowRight,
            LeftEyebrowRight => RightEyebrowLeft,
            LeftEyebrowUp => RightEyebrowUp,
            RightEyebrowLeft => LeftEyebrowRight,
            RightEyebrowRight => LeftEyebrowLeft,
            RightEyebrowUp => LeftEyebrowUp,
            LeftPupilCenter => RightPupilCenter,
            RightPupilCenter => LeftPupilCenter,
            MouthLeft => MouthRight,
            MouthRight => MouthLeft,
            MouthUp => MouthUp,
            MouthDown => MouthDown,
            NoseCenter => NoseCenter,
            NoseLeft => NoseRight,
            NoseRight => NoseLeft,
            JawUpperLeft => JawUpperRight,
            JawUpperRight => JawUpperLeft,
            JawMidLeft => JawMidRight,
            JawMidRight => JawMidLeft,
            ChinBottom => ChinBottom,
        }
    }
}

impl fmt::Display for LandmarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for LandmarkKind {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for LandmarkKind {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse()
            .map_err(|_| serde::de::Error::custom(format!("unknown landmark name {s:?}")))
    }
}

/// Landmarks of one detected face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSet {
    pub image_id: String,
    pub face_index: u32,
    pub image_width: u32,
    pub image_height: u32,
    #[serde(rename = "landmarks")]
    pub points: BTreeMap<LandmarkKind, Point>,
}

impl LandmarkSet {
    pub fn new(image_id: impl Into<String>, face_index: u32, image_width: u32, image_height: u32) -> Self {
        Self {
            image_id: image_id.into(),
            face_index,
            image_width,
            image_height,
            points: BTreeMap::new(),
        }
    }

    pub fn with_point(mut self, kind: LandmarkKind, x: f64, y: f64) -> Self {
        self.points.insert(kind, Point::new(x, y));
        self
    }

    pub fn get(&self, kind: LandmarkKind) -> Option<Point> {
        self.points.get(&kind).copied()
    }

    pub fn is_complete(&self) -> bool {
        self.points.len() == LandmarkKind::COUNT
    }

    pub fn missing(&self) -> Vec<LandmarkKind> {
        LandmarkKind::ALL
            .into_iter()
            .filter(|k| !self.points.contains_key(k))
            .collect()
    }

    /// `image_id#face_index`
    pub fn face_id(&self) -> String {
        format!("{}#{}", self.image_id, self.face_index)
    }

    /// Point in pixel units.
    pub fn pixel(&self, kind: LandmarkKind) -> Option<Point> {
        self.get(kind).map(|p| {
            Point::new(p.x * f64::from(self.image_width), p.y * f64::from(self.image_height))
        })
    }

    /// Checks that every present coordinate lies in the unit square.
    pub fn validate(&self) -> Result<(), CorpusError> {
        for (kind, p) in &self.points {
            if !(0.0..=1.0).contains(&p.x) || !(0.0..=1.0).contains(&p.y) {
                return Err(CorpusError::CoordinateOutOfRange {
                    line: 0,
                    face_id: self.face_id(),
                    kind: *kind,
                    x: p.x,
                    y: p.y,
                });
            }
        }
        Ok(())
    }

    /// One JSONL line in the landmark interchange format.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("landmark sets always serialize")
    }
}

#[derive(Deserialize)]
struct RawLandmarkLine {
    image_id: String,
    face_index: u32,
    image_width: u32,
    image_height: u32,
    landmarks: BTreeMap<String, Point>,
}

/// Reads landmark JSONL, one face per line. Blank lines are skipped.
pub fn import_landmarks<R: Read>(stream: R) -> Result<Vec<LandmarkSet>, CorpusError> {
    let reader = BufReader::new(stream);
    let mut sets = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| CorpusError::UnreadableStream(format!("line {line_no}: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawLandmarkLine = serde_json::from_str(&line)
            .map_err(|e| CorpusError::MalformedRecord { line: line_no, message: e.to_string() })?;
        let mut set = LandmarkSet::new(raw.image_id, raw.face_index, raw.image_width, raw.image_height);
        for (name, p) in raw.landmarks {
            let kind: LandmarkKind = name
                .parse()
                .map_err(|_| CorpusError::UnknownLandmarkName { line: line_no, name: name.clone() })?;
            set.points.insert(kind, p);
        }
        set.validate().map_err(|e| e.at_line(line_no))?;
        if !seen.insert((set.image_id.clone(), set.face_index)) {
            return Err(CorpusError::DuplicateFace { line: line_no, face_id: set.face_id() });
        }
        sets.push(set);
    }
    Ok(sets)
}
