//! Spectral anisotropy: complex-cell energy pooled over scales, sampled on
//! one side of each pixel.

use std::f64::consts::PI;

use crate::channels::{orientation_angle, N_ORIENT};
use crate::error::{Error, Result};
use crate::exec;
use crate::filters::{complex_response_with, make_gabor, GaborParams, Parity};
use crate::grid::{bilinear, FeatureMap};
use crate::oriented::{direction_angle, DirectedCueMaps, Side};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaParams {
    pub min_filter_size: usize,
    pub max_filter_size: usize,
    pub size_step: usize,
    pub gamma: f64,
    pub n_lobes_even: f64,
    pub n_lobes_odd: f64,
    /// `sigma = sigma_factor * r`.
    pub sigma_factor: f64,
}

impl Default for SaParams {
    fn default() -> Self {
        Self {
            min_filter_size: 9,
            max_filter_size: 25,
            size_step: 2,
            gamma: 0.8,
            n_lobes_even: 4.0,
            n_lobes_odd: 5.0,
            sigma_factor: 0.6,
        }
    }
}

impl SaParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.min_filter_size >= 3
            && self.min_filter_size % 2 == 1
            && self.max_filter_size >= self.min_filter_size
            && self.size_step > 0
            && self.size_step.is_multiple_of(2)
            && self.gamma > 0.0
            && self.n_lobes_even > 0.0
            && self.n_lobes_odd > 0.0
            && self.sigma_factor > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid spectral anisotropy parameters {self:?}")))
        }
    }

    /// Odd filter sizes `2r` from min to max inclusive.
    pub fn filter_sizes(&self) -> Vec<usize> {
        (self.min_filter_size..=self.max_filter_size)
            .step_by(self.size_step)
            .collect()
    }

    /// `(even, odd)` Gabor parameters for a filter of side `size` at `theta`.
    pub fn gabor_pair(&self, size: usize, theta: f64) -> (GaborParams, GaborParams) {
        let r = size as f64 / 2.0;
        let base = GaborParams {
            theta,
            sigma: self.sigma_factor * r,
            gamma: self.gamma,
            omega: 0.0,
            size,
        };
        (
            GaborParams {
                omega: carrier_frequency(self.n_lobes_even, r),
                ..base
            },
            GaborParams {
                omega: carrier_frequency(self.n_lobes_odd, r),
                ..base
            },
        )
    }
}

/// `omega_r = pi * n_lobes / (2 r)`.
pub fn carrier_frequency(n_lobes: f64, r: f64) -> f64 {
    PI * n_lobes / (2.0 * r)
}

/// Samples `map` at `(row + dy, col + dx)`; points off the grid give 0.
fn shifted(map: &FeatureMap, dx: f64, dy: f64) -> FeatureMap {
    let (rows, cols) = map.dims();
    let max_r = (rows - 1) as f64;
    let max_c = (cols - 1) as f64;
    let eps = 1e-9;
    FeatureMap::from_fn(rows, cols, |r, c| {
        let y = r as f64 + dy;
        let x = c as f64 + dx;
        if y < -eps || x < -eps || y > max_r + eps || x > max_c + eps {
            0.0
        } else {
            bilinear(map, y.clamp(0.0, max_r), x.clamp(0.0, max_c))
        }
    })
}

/// The 16 dense SA maps of an intensity image.
pub fn compute_sa_maps(intensity: &FeatureMap, params: &SaParams) -> Result<DirectedCueMaps> {
    params.validate()?;
    let sizes = params.filter_sizes();
    let jobs: Vec<(usize, usize)> = (0..N_ORIENT)
        .flat_map(|i| sizes.iter().map(move |&s| (i, s)))
        .collect();
    // Per (orientation, size): the two shifted energy maps.
    let parts = exec::map_slice(&jobs, |&(i, size)| -> Result<[FeatureMap; 2]> {
        let (pe, po) = params.gabor_pair(size, orientation_angle(i));
        let even = make_gabor(&pe, Parity::Even)?;
        let odd = make_gabor(&po, Parity::Odd)?;
        let energy = complex_response_with(intensity, &even, &odd)?;
        let r = size as f64 / 2.0;
        Ok(Side::BOTH.map(|side| {
            let (s, c) = direction_angle(i, side).sin_cos();
            shifted(&energy, r * c, r * s)
        }))
    });
    let (rows, cols) = intensity.dims();
    let mut out = DirectedCueMaps::zeros(rows, cols);
    for (&(i, _), part) in jobs.iter().zip(parts) {
        let [plus, minus] = part?;
        out.get_mut(i, Side::Plus).add_assign(&plus)?;
        out.get_mut(i, Side::Minus).add_assign(&minus)?;
    }
    Ok(out)
}
