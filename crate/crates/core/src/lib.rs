//! Building-footprint extraction toolkit.
//!
//! Ground-truth target generation from polygon annotations, probability-map
//! fusion, seeded instance extraction with polygonization, object-level
//! scoring, dataset tiling and the loss/schedule numerics used in training.

pub mod annotations;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod extract;
pub mod formats;
pub mod fusion;
pub mod raster;
pub mod targets;
pub mod trainmath;

pub use error::{Error, Result};
