//! Pinhole camera intrinsics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum IntrinsicsError {
    #[error("invalid intrinsics: {0}")]
    Invalid(String),
}

/// 4-parameter pinhole model (no distortion), plus the image size it maps
/// into. Serializes to/from the JSON sidecar `{fx, fy, cx, cy, width, height}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    /// Focal length in pixels, x axis.
    pub fx: f64,
    /// Focal length in pixels, y axis.
    pub fy: f64,
    /// Principal point x, pixels.
    pub cx: f64,
    /// Principal point y, pixels.
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
    ) -> Result<Self, IntrinsicsError> {
        let intr = CameraIntrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        intr.validate()?;
        Ok(intr)
    }

    /// Defaults sized for a standing child at ~2 m filling a 240x180 frame.
    pub fn default_240x180() -> Self {
        CameraIntrinsics {
            fx: 220.0,
            fy: 220.0,
            cx: 120.0,
            cy: 90.0,
            width: 240,
            height: 180,
        }
    }

    /// Same field of view at a different resolution (focal lengths and
    /// principal point scale with the image size).
    pub fn scaled_to(&self, width: u32, height: u32) -> Self {
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        CameraIntrinsics {
            fx: self.fx * sx,
            fy: self.fy * sy,
            cx: self.cx * sx,
            cy: self.cy * sy,
            width,
            height,
        }
    }

    pub fn validate(&self) -> Result<(), IntrinsicsError> {
        if !(self.fx > 0.0 && self.fy > 0.0) || !self.fx.is_finite() || !self.fy.is_finite() {
            return Err(IntrinsicsError::Invalid("fx and fy must be positive".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(IntrinsicsError::Invalid("image size must be positive".into()));
        }
        if !(0.0..self.width as f64).contains(&self.cx)
            || !(0.0..self.height as f64).contains(&self.cy)
        {
            return Err(IntrinsicsError::Invalid(
                "principal point must lie inside the image".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, IntrinsicsError> {
        let intr: CameraIntrinsics = serde_json::from_slice(bytes)
            .map_err(|e| IntrinsicsError::Invalid(format!("bad intrinsics JSON: {e}")))?;
        intr.validate()?;
        Ok(intr)
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(self).expect("intrinsics serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(CameraIntrinsics::new(0.0, 220.0, 120.0, 90.0, 240, 180).is_err());
        assert!(CameraIntrinsics::new(220.0, 220.0, 240.0, 90.0, 240, 180).is_err());
        assert!(CameraIntrinsics::new(220.0, 220.0, 120.0, 90.0, 0, 180).is_err());
        assert!(CameraIntrinsics::default_240x180().validate().is_ok());
    }

    #[test]
    fn json_sidecar_round_trips() {
        let intr = CameraIntrinsics::default_240x180();
        let back = CameraIntrinsics::from_json(&intr.to_json()).unwrap();
        assert_eq!(intr, back);
    }

    #[test]
    fn scaling_preserves_field_of_view() {
        let intr = CameraIntrinsics::default_240x180();
        let half = intr.scaled_to(120, 90);
        assert_eq!(half.fx, 110.0);
        assert_eq!(half.cy, 45.0);
        // Angular half-extent unchanged.
        let full_tan = (intr.width as f64 / 2.0) / intr.fx;
        let half_tan = (half.width as f64 / 2.0) / half.fx;
        assert!((full_tan - half_tan).abs() < 1e-12);
    }
}
