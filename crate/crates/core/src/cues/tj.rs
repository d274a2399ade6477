//! Contour orientation estimates and the sparse T-junction cue maps.

use std::f64::consts::PI;

use super::junctions::{TJunction, TjParams};
use crate::channels::N_ORIENT;
use crate::error::{Error, Result};
use crate::grid::LabelMap;
use crate::oriented::{direction_angle, DirectedCueMaps, Side};

/// Per-pixel contour orientation in `[0, pi)`; `None` off-contour or where
/// the estimate is undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationField {
    rows: usize,
    cols: usize,
    data: Vec<Option<f64>>,
}

impl OrientationField {
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.data[row * self.cols + col]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

/// Least-squares line orientation over same-id pixels within `radius`.
pub fn local_orientation_of_contours(contours: &LabelMap, radius: usize) -> OrientationField {
    let (rows, cols) = contours.dims();
    let rad = radius as isize;
    let mut data = vec![None; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let id = contours.get(r, c);
            if id == 0 {
                continue;
            }
            let mut pts = Vec::new();
            for dy in -rad..=rad {
                for dx in -rad..=rad {
                    if dx * dx + dy * dy <= rad * rad
                        && contours.get_signed(r as isize + dy, c as isize + dx) == Some(id)
                    {
                        pts.push((dx as f64, dy as f64));
                    }
                }
            }
            if pts.len() < 2 {
                continue;
            }
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
            for &(x, y) in &pts {
                sxx += (x - mx) * (x - mx);
                syy += (y - my) * (y - my);
                sxy += (x - mx) * (y - my);
            }
            let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
            data[r * cols + c] = Some(theta.rem_euclid(PI) % PI);
        }
    }
    OrientationField { rows, cols, data }
}

/// Nearest of the eight orientation bins.
pub fn orientation_bin(theta: f64) -> usize {
    let step = PI / N_ORIENT as f64;
    ((theta.rem_euclid(PI) / step).round() as usize) % N_ORIENT
}

/// Paints `+1` on hat-contour pixels around every matched junction, in the
/// map of the pixel's orientation bin and the side facing the figure region.
pub fn build_tj_maps(
    contours: &LabelMap,
    segments: &LabelMap,
    junctions: &[TJunction],
    orientation: &OrientationField,
    params: &TjParams,
) -> Result<DirectedCueMaps> {
    if contours.dims() != segments.dims() || contours.dims() != orientation.dims() {
        return Err(Error::Argument("T-junction inputs differ in dims".into()));
    }
    let (rows, cols) = contours.dims();
    let mut maps = DirectedCueMaps::zeros(rows, cols);
    let rad = params.influence_radius as isize;
    for j in junctions {
        let (Some((h1, h2)), Some(figure)) = (j.matched_hat(), j.figure_region()) else {
            continue;
        };
        for dy in -rad..=rad {
            for dx in -rad..=rad {
                if dx * dx + dy * dy > rad * rad {
                    continue;
                }
                let (y, x) = (j.y as isize + dy, j.x as isize + dx);
                let Some(id) = contours.get_signed(y, x) else {
                    continue;
                };
                if id != h1 && id != h2 {
                    continue;
                }
                let (y, x) = (y as usize, x as usize);
                let Some(theta) = orientation.get(y, x) else {
                    continue;
                };
                let bin = orientation_bin(theta);
                match probe_side(segments, x, y, bin, figure, params) {
                    Some(side) => maps.get_mut(bin, side).set(y, x, 1.0),
                    None => log::debug!("no figure side at ({x}, {y}) for junction ({}, {})", j.x, j.y),
                }
            }
        }
    }
    Ok(maps)
}

/// Steps 1..=probe length along both normals; the first distance at which
/// exactly one normal lands in the figure region decides.
fn probe_side(
    segments: &LabelMap,
    x: usize,
    y: usize,
    bin: usize,
    figure: u32,
    params: &TjParams,
) -> Option<Side> {
    for d in 1..=params.normal_probe_length {
        let hit = |side: Side| {
            let (s, c) = direction_angle(bin, side).sin_cos();
            let px = (x as f64 + d as f64 * c).round() as isize;
            let py = (y as f64 + d as f64 * s).round() as isize;
            segments.get_signed(py, px) == Some(figure)
        };
        match (hit(Side::Plus), hit(Side::Minus)) {
            (true, false) => return Some(Side::Plus),
            (false, true) => return Some(Side::Minus),
            _ => {}
        }
    }
    None
}
