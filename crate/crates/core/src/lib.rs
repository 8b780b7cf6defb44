//! Mines uniform-texture crops from photographs and turns them into PBR
//! material map sets.
//!
//! The detection path is `raster` → `grid` → `detect`. Images become color
//! and gradient feature planes with one histogram per square cell, and the
//! detector looks for square windows whose cells are pairwise similar under
//! the Jensen-Shannon distance. `pbr` synthesizes materials from the crops
//! and `pipeline` runs the whole thing over a directory.

pub mod detect;
pub mod error;
pub mod grid;
pub mod pbr;
pub mod pipeline;
pub mod raster;
pub mod seed;
pub mod serve;

pub use error::{Error, Result};
