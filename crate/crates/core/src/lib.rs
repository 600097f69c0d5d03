//! Lossless LiDAR range-image compression and motion-forecasting
//! evaluation.

pub mod codec;
pub mod config;
pub mod grid;
pub mod metrics;
pub mod parallel;
pub mod pointcloud;
pub mod range_image;
pub mod raw_frame;
pub mod scenario;
pub mod synth;

pub use grid::Grid;
