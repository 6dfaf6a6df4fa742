//! In-memory point clouds in the camera frame.
//!
//! Coordinates are meters in the standard camera frame: x right, y down,
//! z forward along the optical axis. Points behind the camera (z <= 0) are
//! legal here; they are rejected at projection time, not at parse time.

use std::collections::BTreeMap;

/// One 3-D point in camera coordinates (meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    /// True when all three components are finite (no NaN/Inf).
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// An ordered set of points plus capture bookkeeping.
///
/// `frame_id` is the frame index within one video; `capture_meta` carries
/// free-form key-value tags (video type, child id, figure point counts).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub frame_id: u32,
    pub capture_meta: BTreeMap<String, String>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Self {
        PointCloud {
            points,
            frame_id: 0,
            capture_meta: BTreeMap::new(),
        }
    }

    pub fn with_frame_id(mut self, frame_id: u32) -> Self {
        self.frame_id = frame_id;
        self
    }

    pub fn with_meta(mut self, key: &str, value: &str) -> Self {
        self.capture_meta.insert(key.to_string(), value.to_string());
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_check_rejects_nan_and_inf() {
        assert!(Point3::new(0.0, -1.5, 2.0).is_finite());
        assert!(!Point3::new(f64::NAN, 0.0, 1.0).is_finite());
        assert!(!Point3::new(0.0, f64::INFINITY, 1.0).is_finite());
    }

    #[test]
    fn empty_cloud_is_well_formed() {
        let c = PointCloud::new(vec![]);
        assert!(c.is_empty());
        assert_eq!(c.frame_id, 0);
    }
}
