use image::{Rgb, RgbImage};

use super::{require, GeometryError};
use crate::corpus::{LandmarkKind, LandmarkSet, Point};

pub const MIN_CROP_SIZE: u32 = 16;

const EYE_SCALE: f64 = 2.0;
const MOUTH_SCALE: f64 = 1.8;
const CENTER_SHIFT: f64 = 0.1;

/// Square face frame. Corners are kept in pixel units of the source image
/// and ordered top-left, bottom-left, bottom-right, top-right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentQuad {
    pub corners_px: [Point; 4],
    pub image_width: u32,
    pub image_height: u32,
}

impl AlignmentQuad {
    /// Quad covering the whole image.
    pub fn full_image(width: u32, height: u32) -> Self {
        let (w, h) = (f64::from(width), f64::from(height));
        Self {
            corners_px: [Point::new(0.0, 0.0), Point::new(0.0, h), Point::new(w, h), Point::new(w, 0.0)],
            image_width: width,
            image_height: height,
        }
    }

    pub fn corners_normalized(&self) -> [Point; 4] {
        let (w, h) = (f64::from(self.image_width), f64::from(self.image_height));
        self.corners_px.map(|p| Point::new(p.x / w, p.y / h))
    }

    /// Side length in pixels.
    pub fn side_length(&self) -> f64 {
        let [tl, bl, ..] = self.corners_px;
        (bl.x - tl.x).hypot(bl.y - tl.y)
    }

    pub fn center(&self) -> Point {
        let [tl, _, br, _] = self.corners_px;
        tl.midpoint(br)
    }
}

fn sub(a: Point, b: Point) -> Point {
    Point::new(a.x - b.x, a.y - b.y)
}

fn add(a: Point, b: Point) -> Point {
    Point::new(a.x + b.x, a.y + b.y)
}

fn scale(a: Point, s: f64) -> Point {
    Point::new(a.x * s, a.y * s)
}

// (x, y) -> (-y, x) in y-down image coordinates
fn rot90(a: Point) -> Point {
    Point::new(-a.y, a.x)
}

fn norm(a: Point) -> f64 {
    a.x.hypot(a.y)
}

/// FFHQ-style rotated square crop frame from the eye centers and mouth
/// corners. Computed in pixel space so the frame stays square on
/// non-square images.
pub fn alignment_quad(set: &LandmarkSet) -> Result<AlignmentQuad, GeometryError> {
    let px = |kind: LandmarkKind| -> Result<Point, GeometryError> {
        require(set, kind)?;
        Ok(set.pixel(kind).expect("checked above"))
    };
    let eye_l = px(LandmarkKind::LeftEyeCenter)?;
    let eye_r = px(LandmarkKind::RightEyeCenter)?;
    let mouth_l = px(LandmarkKind::MouthLeft)?;
    let mouth_r = px(LandmarkKind::MouthRight)?;

    let eye_to_eye = sub(eye_r, eye_l);
    let eye_avg = eye_l.midpoint(eye_r);
    let eye_to_mouth = sub(mouth_l.midpoint(mouth_r), eye_avg);
    if norm(eye_to_eye) == 0.0 {
        return Err(GeometryError::DegenerateFace { face_id: set.face_id(), reason: "coincident eye centers" });
    }
    if norm(eye_to_mouth) == 0.0 {
        return Err(GeometryError::DegenerateFace { face_id: set.face_id(), reason: "mouth at eye midpoint" });
    }

    let axis = sub(eye_to_eye, rot90(eye_to_mouth));
    let axis_len = norm(axis);
    if axis_len == 0.0 {
        return Err(GeometryError::DegenerateFace { face_id: set.face_id(), reason: "zero frame axis" });
    }
    let half = (norm(eye_to_eye) * EYE_SCALE).max(norm(eye_to_mouth) * MOUTH_SCALE);
    let x = scale(axis, half / axis_len);
    let y = rot90(x);
    let c = add(eye_avg, scale(eye_to_mouth, CENTER_SHIFT));

    Ok(AlignmentQuad {
        corners_px: [sub(sub(c, x), y), add(sub(c, x), y), add(add(c, x), y), sub(add(c, x), y)],
        image_width: set.image_width,
        image_height: set.image_height,
    })
}

/// Resamples the quad into an `out_size`-square image. The quad is mapped
/// through normalized coordinates, so `image` may be any resolution of the
/// annotated picture.
pub fn crop_face(image: &RgbImage, quad: &AlignmentQuad, out_size: u32) -> Result<RgbImage, GeometryError> {
    if out_size < MIN_CROP_SIZE {
        return Err(GeometryError::InvalidOutputSize(out_size));
    }
    warp_quad(image, quad, out_size)
}

pub(crate) fn warp_quad(image: &RgbImage, quad: &AlignmentQuad, out_size: u32) -> Result<RgbImage, GeometryError> {
    if image.width() == 0 || image.height() == 0 {
        return Err(GeometryError::EmptyImage);
    }
    let (w, h) = (f64::from(image.width()), f64::from(image.height()));
    let [tl, bl, _, tr] = quad.corners_normalized().map(|p| Point::new(p.x * w, p.y * h));
    let across = sub(tr, tl);
    let down = sub(bl, tl);
    let n = f64::from(out_size);

    let mut out = RgbImage::new(out_size, out_size);
    for (i, j, pixel) in out.enumerate_pixels_mut() {
        let u = (f64::from(i) + 0.5) / n;
        let v = (f64::from(j) + 0.5) / n;
        let src = add(tl, add(scale(across, u), scale(down, v)));
        *pixel = sample_bilinear(image, src.x - 0.5, src.y - 0.5);
    }
    Ok(out)
}

// (x, y) in pixel-center coordinates; out-of-range reads clamp to the edge.
fn sample_bilinear(image: &RgbImage, x: f64, y: f64) -> Rgb<u8> {
    let max_x = i64::from(image.width()) - 1;
    let max_y = i64::from(image.height()) - 1;
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let at = |xi: f64, yi: f64| {
        let cx = (xi as i64).clamp(0, max_x) as u32;
        let cy = (yi as i64).clamp(0, max_y) as u32;
        image.get_pixel(cx, cy).0
    };
    let p00 = at(x0, y0);
    let p10 = at(x0 + 1.0, y0);
    let p01 = at(x0, y0 + 1.0);
    let p11 = at(x0 + 1.0, y0 + 1.0);
    let mut rgb = [0u8; 3];
    for c in 0..3 {
        let top = f64::from(p00[c]) * (1.0 - fx) + f64::from(p10[c]) * fx;
        let bottom = f64::from(p01[c]) * (1.0 - fx) + f64::from(p11[c]) * fx;
        let v = top * (1.0 - fy) + bottom * fy;
        rgb[c] = v.round().clamp(0.0, 255.0) as u8;
    }
    Rgb(rgb)
}
