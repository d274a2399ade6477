//! Sixteen directed maps: one per (orientation, side) pair.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use crate::channels::{orientation_angle, N_ORIENT};
use crate::error::{Error, Result};
use crate::grid::FeatureMap;

/// Which normal of an edge with orientation `theta` a map refers to.
///
/// `Plus` is the direction `theta + pi/2`, `Minus` is `theta - pi/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Plus, Side::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
        })
    }
}

/// Direction angle `theta_i +- pi/2` of a directed entry.
pub fn direction_angle(i: usize, side: Side) -> f64 {
    orientation_angle(i) + side.sign() * FRAC_PI_2
}

/// Number of directed entries.
pub const N_DIRECTED: usize = 2 * N_ORIENT;

#[inline]
fn slot(i: usize, side: Side) -> usize {
    assert!(i < N_ORIENT, "orientation index {i} out of range");
    2 * i
        + match side {
            Side::Plus => 0,
            Side::Minus => 1,
        }
}

/// Maps indexed by `(theta_i, side)`, all of equal dims.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedPairSet {
    maps: Vec<FeatureMap>,
}

/// Local-cue maps share the oriented-pair layout.
pub type DirectedCueMaps = OrientedPairSet;

impl OrientedPairSet {
    /// `maps` in order `(0, Plus), (0, Minus), (1, Plus), ...`.
    pub fn new(maps: Vec<FeatureMap>) -> Result<Self> {
        if maps.len() != N_DIRECTED {
            return Err(Error::Argument(format!(
                "expected {N_DIRECTED} directed maps, got {}",
                maps.len()
            )));
        }
        for m in &maps[1..] {
            maps[0].check_same_dims(m)?;
        }
        Ok(Self { maps })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            maps: vec![FeatureMap::zeros(rows, cols); N_DIRECTED],
        }
    }

    /// Builds each entry from `f(i, side)`.
    pub fn try_from_fn(mut f: impl FnMut(usize, Side) -> Result<FeatureMap>) -> Result<Self> {
        let mut maps = Vec::with_capacity(N_DIRECTED);
        for i in 0..N_ORIENT {
            for side in Side::BOTH {
                maps.push(f(i, side)?);
            }
        }
        Self::new(maps)
    }

    pub fn get(&self, i: usize, side: Side) -> &FeatureMap {
        &self.maps[slot(i, side)]
    }

    pub fn get_mut(&mut self, i: usize, side: Side) -> &mut FeatureMap {
        &mut self.maps[slot(i, side)]
    }

    pub fn dims(&self) -> (usize, usize) {
        self.maps[0].dims()
    }

    /// `(i, side, map)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, Side, &FeatureMap)> {
        self.maps
            .iter()
            .enumerate()
            .map(|(k, m)| (k / 2, if k % 2 == 0 { Side::Plus } else { Side::Minus }, m))
    }

    pub fn maps(&self) -> &[FeatureMap] {
        &self.maps
    }

    pub fn into_maps(self) -> Vec<FeatureMap> {
        self.maps
    }

    /// Cell-wise sum with another set of equal dims.
    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        for (a, b) in self.maps.iter_mut().zip(&other.maps) {
            a.add_assign(b)?;
        }
        Ok(())
    }
}
