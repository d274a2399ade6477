//! Local figure-ground cues computed at native resolution.

pub mod junctions;
pub mod sa;
pub mod tj;

pub use junctions::{
    classify_junction, classify_junction_angle, classify_junction_area, detect_junctions,
    find_junction_candidates, AngleOutcome, AreaOutcome, Candidate, Rejection, TJunction, TjParams,
};
pub use sa::{compute_sa_maps, SaParams};
pub use tj::{build_tj_maps, local_orientation_of_contours, orientation_bin, OrientationField};

use crate::error::Result;
use crate::grid::LabelMap;
use crate::oriented::DirectedCueMaps;

/// Neighborhood radius of the contour orientation fit.
pub const ORIENTATION_FIT_RADIUS: usize = 3;

/// Detected junctions plus their painted cue maps.
#[derive(Debug, Clone, PartialEq)]
pub struct TjAnalysis {
    pub junctions: Vec<TJunction>,
    pub maps: DirectedCueMaps,
}

/// Junction detection, classification and painting in one pass.
pub fn compute_tj_maps(
    contours: &LabelMap,
    segments: &LabelMap,
    params: &TjParams,
) -> Result<TjAnalysis> {
    let junctions = detect_junctions(contours, segments, params)?;
    let field = local_orientation_of_contours(contours, ORIENTATION_FIT_RADIUS);
    let maps = build_tj_maps(contours, segments, &junctions, &field, params)?;
    Ok(TjAnalysis { junctions, maps })
}
