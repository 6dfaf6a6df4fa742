//! Dense metric depth images and the pinhole projection between clouds and
//! images.
//!
//! Depths are stored as unsigned 16-bit millimeters; 0 is the "no return"
//! sentinel, so valid depths span 1..=65535 mm. Projection uses
//! `u = round(fx*x/z + cx)`, `v = round(fy*y/z + cy)` with rounding half away
//! from zero, and nearest-z wins when several points land in one cell.

use crate::camera::CameraIntrinsics;
use crate::cloud::{Point3, PointCloud};

/// Row-major grid of millimeter depths plus the intrinsics that created it.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: u32,
    pub height: u32,
    pub depths_mm: Vec<u16>,
    pub intrinsics: CameraIntrinsics,
}

impl DepthImage {
    /// All-zero (no return) image for the given intrinsics.
    pub fn empty(intrinsics: CameraIntrinsics) -> Self {
        DepthImage {
            width: intrinsics.width,
            height: intrinsics.height,
            depths_mm: vec![0; intrinsics.width as usize * intrinsics.height as usize],
            intrinsics,
        }
    }

    pub fn at(&self, u: u32, v: u32) -> u16 {
        self.depths_mm[v as usize * self.width as usize + u as usize]
    }

    pub fn set(&mut self, u: u32, v: u32, depth_mm: u16) {
        self.depths_mm[v as usize * self.width as usize + u as usize] = depth_mm;
    }

    /// Number of cells holding a depth return.
    pub fn nonzero_count(&self) -> usize {
        self.depths_mm.iter().filter(|&&d| d != 0).count()
    }
}

/// Where every input point went. `projected + skipped + occluded` equals the
/// input point count.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProjectionStats {
    /// Points that own a cell in the output.
    pub projected: usize,
    /// Points behind the camera, outside the frame, or out of depth range.
    pub skipped: usize,
    /// Points that landed on a cell won by a nearer point.
    pub occluded: usize,
}

/// Project a cloud into a depth image.
///
/// Points with z <= 0, points whose pixel falls outside the frame, and
/// points whose depth rounds outside 1..=65535 mm are skipped. Among points
/// sharing a cell, the smallest z wins; on an exact z tie the earliest point
/// in input order is the one counted as projected.
pub fn project(cloud: &PointCloud, intr: &CameraIntrinsics) -> (DepthImage, ProjectionStats) {
    let w = intr.width as i64;
    let h = intr.height as i64;
    let cells = (w * h) as usize;

    // (cell, z, mm) for accepted points, in input order; None for skipped.
    let locate = |p: &Point3| -> Option<(usize, f64, u16)> {
        if !(p.z > 0.0) {
            return None;
        }
        let u = (intr.fx * p.x / p.z + intr.cx).round();
        let v = (intr.fy * p.y / p.z + intr.cy).round();
        if !u.is_finite() || !v.is_finite() {
            return None;
        }
        let (u, v) = (u as i64, v as i64);
        if u < 0 || u >= w || v < 0 || v >= h {
            return None;
        }
        let mm = (p.z * 1000.0).round();
        if mm < 1.0 || mm > 65535.0 {
            return None;
        }
        Some(((v * w + u) as usize, p.z, mm as u16))
    };

    let mut min_z = vec![f64::INFINITY; cells];
    for p in &cloud.points {
        if let Some((cell, z, _)) = locate(p) {
            if z < min_z[cell] {
                min_z[cell] = z;
            }
        }
    }

    let mut img = DepthImage::empty(*intr);
    let mut claimed = vec![false; cells];
    let mut stats = ProjectionStats::default();
    for p in &cloud.points {
        match locate(p) {
            None => stats.skipped += 1,
            Some((cell, z, mm)) => {
                if z == min_z[cell] && !claimed[cell] {
                    claimed[cell] = true;
                    img.depths_mm[cell] = mm;
                    stats.projected += 1;
                } else {
                    stats.occluded += 1;
                }
            }
        }
    }

    (img, stats)
}

/// Invert [`project`]: one point per nonzero cell, through the image's own
/// intrinsics.
pub fn backproject(img: &DepthImage) -> PointCloud {
    let intr = &img.intrinsics;
    let mut points = Vec::with_capacity(img.nonzero_count());
    for v in 0..img.height {
        for u in 0..img.width {
            let d = img.at(u, v);
            if d == 0 {
                continue;
            }
            let z = d as f64 / 1000.0;
            points.push(Point3::new(
                (u as f64 - intr.cx) * z / intr.fx,
                (v as f64 - intr.cy) * z / intr.fy,
                z,
            ));
        }
    }
    PointCloud::new(points)
}
