//! Figure-ground organization from border-ownership grouping cells.
//!
//! The crate computes, for every pixel of an RGB image, which side of a
//! contour belongs to the occluding figure. Local feature contrast drives
//! center-surround grouping cells whose feedback modulates edge responses;
//! two optional local cues (spectral anisotropy and T-junctions) add their own
//! modulation terms. The `eval` module scores the resulting ownership maps
//! against ground truth and searches cue weights.

pub mod bo;
pub mod channels;
pub mod cues;
pub mod error;
pub mod eval;
pub mod exec;
pub mod export;
pub mod filters;
pub mod grid;
pub mod oriented;

pub use error::{Error, Result};
pub use grid::{FeatureMap, LabelMap};
