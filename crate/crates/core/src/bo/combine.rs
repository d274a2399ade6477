//! Cue combination, winner-take-all across orientations and the final
//! cross-scale maps.

use super::weights::ModelWeights;
use crate::channels::N_ORIENT;
use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{cross_scale_sum, FeatureMap};
use crate::oriented::{OrientedPairSet, Side};

/// A BO pyramid for each of the 16 directed entries, stored level by level.
#[derive(Debug, Clone, PartialEq)]
pub struct BoPyramidSet {
    levels: Vec<OrientedPairSet>,
}

impl BoPyramidSet {
    pub fn new(levels: Vec<OrientedPairSet>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Argument("BO pyramid set with no levels".into()));
        }
        Ok(Self { levels })
    }

    /// From per-entry pyramids: `pyr(i, side)[k]` is level `k` of entry `(i, side)`.
    pub fn from_entries(mut pyr: impl FnMut(usize, Side) -> Vec<FeatureMap>) -> Result<Self> {
        let mut entries: Vec<Vec<FeatureMap>> = Vec::with_capacity(2 * N_ORIENT);
        for i in 0..N_ORIENT {
            for side in Side::BOTH {
                entries.push(pyr(i, side));
            }
        }
        let n = entries[0].len();
        if entries.iter().any(|e| e.len() != n) {
            return Err(Error::Argument("BO entries differ in level count".into()));
        }
        let mut levels = Vec::with_capacity(n);
        for k in 0..n {
            levels.push(OrientedPairSet::new(entries.iter().map(|e| e[k].clone()).collect())?);
        }
        Self::new(levels)
    }

    pub fn levels(&self) -> &[OrientedPairSet] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> &OrientedPairSet {
        &self.levels[k]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    fn check_aligned(&self, other: &Self) -> Result<()> {
        if self.levels.len() != other.levels.len()
            || self.levels.iter().zip(&other.levels).any(|(a, b)| a.dims() != b.dims())
        {
            return Err(Error::Argument("BO pyramid sets are not level-aligned".into()));
        }
        Ok(())
    }

    /// `self += s * other`, entry by entry.
    fn add_scaled(&mut self, other: &Self, s: f64) -> Result<()> {
        self.check_aligned(other)?;
        for (a, b) in self.levels.iter_mut().zip(&other.levels) {
            for i in 0..N_ORIENT {
                for side in Side::BOTH {
                    a.get_mut(i, side).add_scaled(b.get(i, side), s)?;
                }
            }
        }
        Ok(())
    }

    fn scaled(&self, s: f64) -> Self {
        Self {
            levels: self
                .levels
                .iter()
                .map(|l| {
                    OrientedPairSet::new(l.maps().iter().map(|m| m.scale(s)).collect())
                        .expect("same layout")
                })
                .collect(),
        }
    }
}

/// `alpha_ref (L + D) + alpha_SA B_SA + alpha_TJ B_TJ`. Terms whose weight
/// is zero are skipped entirely, so their inputs cannot affect the result.
pub fn combine_bo(
    light_dark: &BoPyramidSet,
    sa: Option<&BoPyramidSet>,
    tj: Option<&BoPyramidSet>,
    w: &ModelWeights,
) -> Result<BoPyramidSet> {
    w.validate()?;
    let mut out = light_dark.scaled(w.alpha_ref);
    for (alpha, entry, name) in [(w.alpha_sa, sa, "spectral anisotropy"), (w.alpha_tj, tj, "T-junction")] {
        if alpha == 0.0 {
            continue;
        }
        let entry = entry.ok_or_else(|| {
            Error::Argument(format!("{name} weight is {alpha} but no {name} BO pyramids were given"))
        })?;
        out.add_scaled(entry, alpha)?;
    }
    Ok(out)
}

/// Per pixel, keeps only the orientation with the largest `|B_+ - B_-|` and
/// only its positive side. Ties go to the lowest orientation index.
pub fn winning_level(combined: &OrientedPairSet) -> OrientedPairSet {
    let (rows, cols) = combined.dims();
    let mut out = OrientedPairSet::zeros(rows, cols);
    let planes: Vec<(&[f64], &[f64])> = (0..N_ORIENT)
        .map(|i| {
            (
                combined.get(i, Side::Plus).as_slice(),
                combined.get(i, Side::Minus).as_slice(),
            )
        })
        .collect();
    for idx in 0..rows * cols {
        let (best, delta) = winning_at(|i| planes[i].0[idx] - planes[i].1[idx]);
        let (r, c) = (idx / cols, idx % cols);
        if delta > 0.0 {
            out.get_mut(best, Side::Plus).set(r, c, delta);
        } else if delta < 0.0 {
            out.get_mut(best, Side::Minus).set(r, c, -delta);
        }
    }
    out
}

/// Relative gap below which two `|delta|` count as tied. Mirror-symmetric
/// orientations tie in exact arithmetic but not in floating point, and
/// without a margin the pick would follow the round-off.
const TIE_REL: f64 = 1e-9;

/// `(argmax_i |delta(i)|, delta(argmax))` with first-index tie-breaking.
#[inline]
pub(crate) fn winning_at(delta: impl Fn(usize) -> f64) -> (usize, f64) {
    let mut best = 0;
    let mut best_delta = delta(0);
    for i in 1..N_ORIENT {
        let d = delta(i);
        if d.abs() > best_delta.abs() * (1.0 + TIE_REL) {
            best = i;
            best_delta = d;
        }
    }
    (best, best_delta)
}

pub fn winning_bo(combined: &BoPyramidSet) -> BoPyramidSet {
    BoPyramidSet {
        levels: exec::map_slice(&combined.levels, winning_level),
    }
}

/// `sum_k resample(sum_f w_f B_f^k)` at `rows x cols`, per directed entry.
pub fn final_bo_maps(features: &[(&BoPyramidSet, f64)], rows: usize, cols: usize) -> Result<OrientedPairSet> {
    let (first, _) = features
        .first()
        .ok_or_else(|| Error::Argument("final maps need at least one feature".into()))?;
    for (f, _) in &features[1..] {
        first.check_aligned(f)?;
    }
    let slots: Vec<(usize, Side)> = (0..N_ORIENT)
        .flat_map(|i| Side::BOTH.map(|s| (i, s)))
        .collect();
    let maps = exec::map_slice(&slots, |&(i, side)| -> Result<FeatureMap> {
        let per_level = (0..first.len())
            .map(|k| {
                let mut acc = features[0].0.level(k).get(i, side).scale(features[0].1);
                for (f, w) in &features[1..] {
                    acc.add_scaled(f.level(k).get(i, side), *w)?;
                }
                Ok(acc)
            })
            .collect::<Result<Vec<_>>>()?;
        cross_scale_sum(&per_level, rows, cols)
    });
    OrientedPairSet::new(maps.into_iter().collect::<Result<Vec<_>>>()?)
}
