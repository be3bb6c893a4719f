//! LOD1 building reconstruction from classified LiDAR point clouds and
//! building-footprint masks, morphology extraction, and evaluation of how
//! footprint accuracy propagates into height, area and wall-area errors.

pub mod error;
pub mod eval;
pub mod footprint;
pub mod geometry;
pub mod heights;
pub mod morphology;
pub mod pointcloud;
pub mod raster;
pub mod reconstruct;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{Bounds, Footprint, Point2, Ring, Source};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
