use std::fmt;
use std::str::FromStr;

use super::{resample, FeatureMap};
use crate::error::{Error, Result};

/// Resolution ratio between adjacent pyramid levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PyramidFactor {
    /// sqrt(2) per level.
    #[default]
    HalfOctave,
    /// 2 per level.
    Octave,
}

impl PyramidFactor {
    pub fn value(self) -> f64 {
        match self {
            PyramidFactor::HalfOctave => std::f64::consts::SQRT_2,
            PyramidFactor::Octave => 2.0,
        }
    }
}

impl fmt::Display for PyramidFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PyramidFactor::HalfOctave => f.write_str("sqrt2"),
            PyramidFactor::Octave => f.write_str("2"),
        }
    }
}

impl FromStr for PyramidFactor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sqrt2" | "1.4142135623730951" | "1.414" | "half-octave" => Ok(Self::HalfOctave),
            "2" | "2.0" | "octave" => Ok(Self::Octave),
            other => Err(Error::Config(format!(
                "pyramid factor must be sqrt2 or 2, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PyramidSpec {
    pub levels: usize,
    pub factor: PyramidFactor,
}

impl Default for PyramidSpec {
    fn default() -> Self {
        Self {
            levels: 10,
            factor: PyramidFactor::HalfOctave,
        }
    }
}

/// Level dims for a base of `rows x cols`: level k+1 = ceil(level k / factor).
///
/// Fails when the nominal size `dim / factor^(N-1)` of the coarsest level
/// drops below one pixel, i.e. the pyramid would ask for sub-pixel detail.
pub fn level_dims(rows: usize, cols: usize, spec: &PyramidSpec) -> Result<Vec<(usize, usize)>> {
    if spec.levels == 0 {
        return Err(Error::Config("pyramid needs at least one level".into()));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension(format!("empty base {rows}x{cols}")));
    }
    let f = spec.factor.value();
    let shrink = f.powi(spec.levels as i32 - 1);
    if (rows.min(cols) as f64) / shrink < 1.0 - 1e-12 {
        return Err(Error::Config(format!(
            "{} levels at factor {} collapse a {rows}x{cols} base below 1x1",
            spec.levels, spec.factor
        )));
    }
    let mut dims = Vec::with_capacity(spec.levels);
    let (mut r, mut c) = (rows, cols);
    dims.push((r, c));
    for _ in 1..spec.levels {
        r = shrink_dim(r, f);
        c = shrink_dim(c, f);
        dims.push((r, c));
    }
    Ok(dims)
}

fn shrink_dim(n: usize, f: f64) -> usize {
    // Guard ceil against round-off just above an integer (e.g. 4 / 2).
    let q = n as f64 / f;
    let rounded = q.round();
    let next = if (q - rounded).abs() < 1e-9 { rounded } else { q.ceil() };
    (next as usize).max(1)
}

/// Multiscale stack, level 0 here is scale k = 1 (finest).
#[derive(Debug, Clone, PartialEq)]
pub struct Pyramid {
    levels: Vec<FeatureMap>,
    factor: PyramidFactor,
}

impl Pyramid {
    /// Successive bilinear downsampling of `base`.
    pub fn build(base: &FeatureMap, spec: &PyramidSpec) -> Result<Self> {
        let dims = level_dims(base.rows(), base.cols(), spec)?;
        let mut levels = Vec::with_capacity(dims.len());
        levels.push(base.clone());
        for &(r, c) in &dims[1..] {
            let next = resample(levels.last().expect("non-empty"), r, c)?;
            levels.push(next);
        }
        Ok(Self {
            levels,
            factor: spec.factor,
        })
    }

    /// Wraps already-computed levels; dims must follow the level rule.
    pub fn from_levels(levels: Vec<FeatureMap>, factor: PyramidFactor) -> Result<Self> {
        let first = levels
            .first()
            .ok_or_else(|| Error::Argument("pyramid with no levels".into()))?;
        let spec = PyramidSpec {
            levels: levels.len(),
            factor,
        };
        let dims = level_dims(first.rows(), first.cols(), &spec)?;
        for (k, (l, d)) in levels.iter().zip(&dims).enumerate() {
            if l.dims() != *d {
                return Err(Error::Dimension(format!(
                    "level {} is {:?}, expected {:?}",
                    k + 1,
                    l.dims(),
                    d
                )));
            }
        }
        Ok(Self { levels, factor })
    }

    pub fn levels(&self) -> &[FeatureMap] {
        &self.levels
    }

    pub fn into_levels(self) -> Vec<FeatureMap> {
        self.levels
    }

    pub fn level(&self, k: usize) -> &FeatureMap {
        &self.levels[k]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn factor(&self) -> PyramidFactor {
        self.factor
    }

    pub fn dims(&self) -> Vec<(usize, usize)> {
        self.levels.iter().map(FeatureMap::dims).collect()
    }

    pub fn spec(&self) -> PyramidSpec {
        PyramidSpec {
            levels: self.levels.len(),
            factor: self.factor,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle_dims(mut n: usize, levels: usize, f: f64) -> Vec<usize> {
        let mut v = vec![n];
        for _ in 1..levels {
            n = (n as f64 / f).ceil() as usize;
            v.push(n);
        }
        v
    }

    #[test]
    fn half_octave_dims_follow_ceil_rule() {
        let spec = PyramidSpec::default();
        let dims = level_dims(321, 481, &spec).unwrap();
        let rows = oracle_dims(321, 10, std::f64::consts::SQRT_2);
        let cols = oracle_dims(481, 10, std::f64::consts::SQRT_2);
        let expect: Vec<_> = rows.into_iter().zip(cols).collect();
        assert_eq!(dims, expect);
        assert_eq!(dims[9], (16, 23));
    }

    #[test]
    fn octave_collapse_is_config_error() {
        let spec = PyramidSpec {
            levels: 10,
            factor: PyramidFactor::Octave,
        };
        assert!(matches!(level_dims(321, 481, &spec), Err(Error::Config(_))));
        let spec = PyramidSpec {
            levels: 5,
            factor: PyramidFactor::Octave,
        };
        assert_eq!(
            level_dims(64, 32, &spec).unwrap(),
            vec![(64, 32), (32, 16), (16, 8), (8, 4), (4, 2)]
        );
    }

    #[test]
    fn single_level_is_base() {
        let base = FeatureMap::from_fn(5, 4, |r, c| (r * 4 + c) as f64);
        let p = Pyramid::build(
            &base,
            &PyramidSpec {
                levels: 1,
                factor: PyramidFactor::HalfOctave,
            },
        )
        .unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.level(0), &base);
    }

    #[test]
    fn constant_stays_constant() {
        let base = FeatureMap::filled(64, 48, 0.3);
        let p = Pyramid::build(&base, &PyramidSpec::default()).unwrap();
        for l in p.levels() {
            assert!(l.as_slice().iter().all(|&v| (v - 0.3).abs() < 1e-15));
        }
    }
}
