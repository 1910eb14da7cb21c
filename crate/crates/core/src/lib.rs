//! Visual odometry and semantic mapping for scenes with moving objects.
//!
//! Frames are tracked with sparse optical flow, points that break the
//! epipolar constraint mark moving objects found by semantic segmentation,
//! and only the remaining static points drive pose estimation and the
//! occupancy map.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod epipolar;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod kv;
pub mod octomap;
pub mod odometry;
pub mod pipeline;
pub mod rejection;
pub mod scalar;
pub mod segmentation;
pub mod synthbench;
pub mod tum_io;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Pose = tum_io::PoseSE3<f64>;
pub type Trajectory = tum_io::Trajectory<f64>;
pub type Fundamental = epipolar::FundamentalMatrix<f64>;
pub type Intrinsics = odometry::CameraIntrinsics<f64>;
pub type Stats = evaluation::MetricStats<f64>;
pub type Octree = octomap::SemanticOctree<f64>;
pub type MotionConfig = epipolar::MotionCheckConfig<f64>;

pub type Posef = tum_io::PoseSE3<f32>;
pub type Fundamentalf = epipolar::FundamentalMatrix<f32>;
