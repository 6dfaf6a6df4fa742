//! Estimate the standing height of young children from depth images.
//!
//! The pipeline has three stages:
//!
//! 1. **Capture / synthesis** — point clouds of a standing figure in front of
//!    a wall, either parsed from ASCII PCD files ([`pcd`]) or generated with
//!    exact ground truth by the synthetic scene generator ([`synth`]).
//! 2. **Projection** — pinhole projection of each cloud into a dense metric
//!    depth image ([`depth`]), stored losslessly as 16-bit PGM ([`pgm`]).
//! 3. **Regression** — a small deterministic CNN trained from scratch on the
//!    depth images ([`nn`]), evaluated with MAE / MAPE / in-range fractions
//!    and the SMART standardisation-test statistics ([`eval`]).
//!
//! Dataset bookkeeping (manifests, quality grades, child-disjoint splits)
//! lives in [`manifest`].

pub mod camera;
pub mod cloud;
pub mod depth;
pub mod eval;
pub mod manifest;
pub mod nn;
pub mod pcd;
pub mod pgm;
pub mod rng;
pub mod synth;

pub use camera::CameraIntrinsics;
pub use cloud::{Point3, PointCloud};
pub use depth::{DepthImage, ProjectionStats};
