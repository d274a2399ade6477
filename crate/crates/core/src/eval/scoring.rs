//! Per-pixel figure decisions and FGCA scoring.

use super::ground_truth::FgGroundTruth;
use crate::bo::EvalCache;
use crate::error::{Error, Result};
use crate::oriented::{direction_angle, OrientedPairSet, Side, N_DIRECTED};

/// Read access to the 16 final BO values at a native pixel.
pub trait FinalLookup {
    fn dims(&self) -> (usize, usize);

    /// Values in oriented-pair slot order; `None` when the pixel is not
    /// available.
    fn values(&self, row: usize, col: usize) -> Option<[f64; N_DIRECTED]>;
}

impl FinalLookup for OrientedPairSet {
    fn dims(&self) -> (usize, usize) {
        OrientedPairSet::dims(self)
    }

    fn values(&self, row: usize, col: usize) -> Option<[f64; N_DIRECTED]> {
        Some(std::array::from_fn(|s| self.maps()[s].get(row, col)))
    }
}

/// Final values at the query points of an [`EvalCache`].
#[derive(Debug, Clone)]
pub struct SparseFinal<'a> {
    pub cache: &'a EvalCache,
    pub values: Vec<[f64; N_DIRECTED]>,
}

impl FinalLookup for SparseFinal<'_> {
    fn dims(&self) -> (usize, usize) {
        self.cache.dims()
    }

    fn values(&self, row: usize, col: usize) -> Option<[f64; N_DIRECTED]> {
        self.cache.lookup(row, col).map(|k| self.values[k])
    }
}

fn slot_side(slot: usize) -> (usize, Side) {
    (slot / 2, if slot.is_multiple_of(2) { Side::Plus } else { Side::Minus })
}

/// A figure direction, or a tie when the evidence does not pick one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decision {
    Direction { theta_index: usize, side: Side, dx: f64, dy: f64 },
    Tie,
}

/// Native pixels a decision at `(x, y)` reads.
pub fn decision_window(x: usize, y: usize, radius: usize, dims: (usize, usize)) -> impl Iterator<Item = (usize, usize)> {
    let (rows, cols) = dims;
    let (r0, r1) = (y.saturating_sub(radius), (y + radius).min(rows - 1));
    let (c0, c1) = (x.saturating_sub(radius), (x + radius).min(cols - 1));
    (r0..=r1).flat_map(move |r| (c0..=c1).map(move |c| (r, c)))
}

/// The strongest of the 16 final responses within a square window of
/// `radius` around `(x, y)`. All-zero evidence, or a maximum shared by the
/// two sides of one orientation, is a tie; any other shared maximum goes to
/// the first slot in storage order.
pub fn decide_figure(f: &impl FinalLookup, x: usize, y: usize, radius: usize) -> Decision {
    let mut best = 0.0f64;
    let mut hits = [false; N_DIRECTED];
    for (r, c) in decision_window(x, y, radius, f.dims()) {
        let Some(v) = f.values(r, c) else {
            debug_assert!(false, "decision window pixel ({r}, {c}) unavailable");
            continue;
        };
        for (slot, &val) in v.iter().enumerate() {
            if val > best {
                best = val;
                hits = [false; N_DIRECTED];
                hits[slot] = true;
            } else if val == best && best > 0.0 {
                hits[slot] = true;
            }
        }
    }
    if best <= 0.0 || (0..N_DIRECTED / 2).any(|i| hits[2 * i] && hits[2 * i + 1]) {
        return Decision::Tie;
    }
    let slot = hits.iter().position(|&h| h).expect("a positive maximum has a slot");
    let (theta_index, side) = slot_side(slot);
    // Snap round-off so axis directions are exact and a decision
    // perpendicular to a normal scores dot = 0, not the sign of noise.
    let snap = |v: f64| if v.abs() < 1e-12 { 0.0 } else { v };
    let (dy, dx) = direction_angle(theta_index, side).sin_cos();
    Decision::Direction {
        theta_index,
        side,
        dx: snap(dx),
        dy: snap(dy),
    }
}

/// Credit for one decision: 1 when within 90 degrees of the normal, 0.5 for
/// a tie, else 0.
pub fn decision_credit(d: Decision, nx: f64, ny: f64) -> f64 {
    match d {
        Decision::Tie => 0.5,
        Decision::Direction { dx, dy, .. } => {
            if dx * nx + dy * ny > 0.0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Scores against one ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct GtScore {
    /// Per-record credit in record order.
    pub credits: Vec<f64>,
    pub ties: usize,
}

impl GtScore {
    pub fn total(&self) -> usize {
        self.credits.len()
    }

    pub fn correct(&self) -> f64 {
        self.credits.iter().sum()
    }

    /// `None` for an empty ground truth.
    pub fn accuracy(&self) -> Option<f64> {
        (!self.credits.is_empty()).then(|| self.correct() / self.total() as f64)
    }
}

pub fn score_ground_truth(f: &impl FinalLookup, gt: &FgGroundTruth, radius: usize) -> Result<GtScore> {
    if f.dims() != gt.dims() {
        return Err(Error::Dimension(format!(
            "final maps {:?} vs ground truth {:?}",
            f.dims(),
            gt.dims()
        )));
    }
    let mut ties = 0;
    let credits = gt
        .records
        .iter()
        .map(|rec| {
            let d = decide_figure(f, rec.x, rec.y, radius);
            if d == Decision::Tie {
                ties += 1;
            }
            decision_credit(d, rec.nx, rec.ny)
        })
        .collect();
    Ok(GtScore { credits, ties })
}

/// Accuracy of one image over one or more annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageScore {
    pub id: String,
    pub per_gt: Vec<GtScore>,
}

impl ImageScore {
    /// Mean accuracy over the non-empty annotations.
    pub fn accuracy(&self) -> Option<f64> {
        let accs: Vec<f64> = self.per_gt.iter().filter_map(GtScore::accuracy).collect();
        (!accs.is_empty()).then(|| accs.iter().sum::<f64>() / accs.len() as f64)
    }

    pub fn boundary_pixels(&self) -> usize {
        self.per_gt.iter().map(GtScore::total).sum()
    }

    pub fn ties(&self) -> usize {
        self.per_gt.iter().map(|g| g.ties).sum()
    }
}

pub fn score_image(id: &str, f: &impl FinalLookup, gts: &[FgGroundTruth], radius: usize) -> Result<ImageScore> {
    Ok(ImageScore {
        id: id.to_string(),
        per_gt: gts
            .iter()
            .map(|gt| score_ground_truth(f, gt, radius))
            .collect::<Result<_>>()?,
    })
}

/// Native pixels any decision for these annotations reads.
pub fn query_points(gts: &[FgGroundTruth], radius: usize) -> Vec<(usize, usize)> {
    let mut pts = Vec::new();
    for gt in gts {
        for rec in &gt.records {
            pts.extend(decision_window(rec.x, rec.y, radius, gt.dims()));
        }
    }
    pts.sort_unstable();
    pts.dedup();
    pts
}
