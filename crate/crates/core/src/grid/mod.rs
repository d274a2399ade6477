//! Dense real grids, integer label grids and the numeric substrate the rest of
//! the engine computes on.
//!
//! Cells are addressed as `(row, col)`. Where geometry matters (angles,
//! offsets, normals) the convention throughout the crate is `x = col`,
//! `y = row`, and an angle `phi` denotes the vector `(cos phi, sin phi)` in
//! that `(x, y)` frame.

mod io;
mod ops;
mod pyramid;

pub use io::{
    format_feature_map, format_label_map, parse_feature_map, parse_label_map, read_feature_map,
    read_label_map, write_feature_map, write_label_map,
};
pub use ops::{
    correlate2d, correlate_replicate, cross_scale_sum, normalize_map, rescale_to_range, resample,
    NormalizationParams,
};
pub(crate) use io::parse_grid_text;
pub(crate) use ops::resample_coord;
pub use pyramid::{level_dims, Pyramid, PyramidFactor, PyramidSpec};

use crate::error::{Error, Result};

/// Dense 2D grid of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("empty map {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values for a {rows}x{cols} map",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!(
                "non-finite value at ({}, {})",
                i / cols,
                i % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Internal constructor for buffers that are finite by construction.
    pub(crate) fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert!(rows > 0 && cols > 0 && data.len() == rows * cols);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        assert!(rows > 0 && cols > 0, "empty map");
        assert!(value.is_finite());
        Self::from_vec(rows, cols, vec![value; rows * cols])
    }

    /// Builds a map from `f(row, col)`. Panics on non-finite output.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(rows > 0 && cols > 0, "empty map");
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let v = f(r, c);
                assert!(v.is_finite(), "non-finite value at ({r}, {c})");
                data.push(v);
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        assert!(value.is_finite());
        self.data[row * self.cols + col] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    /// Cell-wise transform. Panics if `f` produces a non-finite value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let data: Vec<f64> = self.data.iter().map(|&v| f(v)).collect();
        assert!(data.iter().all(|v| v.is_finite()), "non-finite map output");
        Self::from_vec(self.rows, self.cols, data)
    }

    /// Cell-wise combination of two maps of equal dims.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_dims(other)?;
        let data: Vec<f64> = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("non-finite zip output".into()));
        }
        Ok(Self::from_vec(self.rows, self.cols, data))
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    /// `self += other` in place.
    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.check_same_dims(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    /// `self += s * other` in place.
    pub fn add_scaled(&mut self, other: &Self, s: f64) -> Result<()> {
        self.check_same_dims(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dims(), other.dims());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Bilinear sample at fractional `(x = col, y = row)`. Points outside the
    /// cell-center hull return `None`.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> Option<f64> {
        let eps = 1e-9;
        if !(x >= -eps && y >= -eps)
            || x > (self.cols - 1) as f64 + eps
            || y > (self.rows - 1) as f64 + eps
        {
            return None;
        }
        let x = x.clamp(0.0, (self.cols - 1) as f64);
        let y = y.clamp(0.0, (self.rows - 1) as f64);
        Some(bilinear(self, y, x))
    }

    pub(crate) fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

/// Bilinear interpolation at an in-range fractional (row, col).
#[inline]
pub(crate) fn bilinear(map: &FeatureMap, r: f64, c: f64) -> f64 {
    let (taps, fr, fc) = bilinear_taps(map.rows, map.cols, r, c);
    bilinear_combine(taps.map(|i| map.data[i]), fr, fc)
}

/// Row-major indices of the four cells `bilinear` reads, plus the fractional
/// offsets. Corners past the last row or column collapse onto it.
#[inline]
pub(crate) fn bilinear_taps(rows: usize, cols: usize, r: f64, c: f64) -> ([usize; 4], f64, f64) {
    let r0 = (r.floor() as usize).min(rows - 1);
    let c0 = (c.floor() as usize).min(cols - 1);
    let r1 = (r0 + 1).min(rows - 1);
    let c1 = (c0 + 1).min(cols - 1);
    (
        [r0 * cols + c0, r0 * cols + c1, r1 * cols + c0, r1 * cols + c1],
        r - r0 as f64,
        c - c0 as f64,
    )
}

#[inline]
pub(crate) fn bilinear_combine(v: [f64; 4], fr: f64, fc: f64) -> f64 {
    // `a + f (b - a)` returns `a` exactly when `a == b`, so constant maps
    // resample to themselves bit for bit.
    let lerp = |a: f64, b: f64, f: f64| a + f * (b - a);
    lerp(lerp(v[0], v[1], fc), lerp(v[2], v[3], fc), fr)
}

/// Dense grid of non-negative integer labels; 0 means "no label".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    rows: usize,
    cols: usize,
    labels: Vec<u32>,
}

impl LabelMap {
    pub fn new(rows: usize, cols: usize, labels: Vec<u32>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("empty label map {rows}x{cols}")));
        }
        if labels.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} labels for a {rows}x{cols} map",
                labels.len()
            )));
        }
        Ok(Self { rows, cols, labels })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty label map");
        Self {
            rows,
            cols,
            labels: vec![0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> u32) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.labels[r * cols + c] = f(r, c);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.cols + col]
    }

    /// Label at signed coordinates, `None` outside the grid.
    #[inline]
    pub fn get_signed(&self, row: isize, col: isize) -> Option<u32> {
        if row < 0 || col < 0 || row as usize >= self.rows || col as usize >= self.cols {
            None
        } else {
            Some(self.get(row as usize, col as usize))
        }
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, label: u32) {
        self.labels[row * self.cols + col] = label;
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.labels
    }
}
