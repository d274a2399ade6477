//! Kernel factories: quadrature Gabor pairs, difference-of-Gaussians
//! center-surround kernels and direction-concentrated von Mises kernels.
//!
//! Kernels live on a centred `size x size` lattice; row offset is `y`,
//! column offset is `x`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{correlate_replicate, FeatureMap};

/// Smallest odd integer `>= x` (and `>= 3`).
pub fn odd_size_at_least(x: f64) -> usize {
    let n = x.ceil().max(3.0) as usize;
    if n.is_multiple_of(2) {
        n + 1
    } else {
        n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Simple-cell receptive field parameters.
///
/// `theta` is the preferred edge orientation: the kernel's major axis runs
/// along `theta` and the carrier oscillates along the normal `theta + pi/2`,
/// so `C_theta` peaks on edges whose tangent points at `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaborParams {
    pub theta: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub omega: f64,
    pub size: usize,
}

impl GaborParams {
    /// Kernel side defaults to the next odd integer `>= 6 sigma + 1`.
    pub fn new(theta: f64, sigma: f64, gamma: f64, omega: f64) -> Self {
        Self {
            theta,
            sigma,
            gamma,
            omega,
            size: odd_size_at_least(6.0 * sigma + 1.0),
        }
    }

    pub fn with_theta(self, theta: f64) -> Self {
        Self { theta, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.sigma > 0.0
            && self.gamma > 0.0
            && self.omega > 0.0
            && self.theta.is_finite()
            && self.sigma.is_finite()
            && self.gamma.is_finite()
            && self.omega.is_finite();
        if !ok {
            return Err(Error::Argument(format!("invalid Gabor parameters {self:?}")));
        }
        if self.size < 3 || self.size.is_multiple_of(2) {
            return Err(Error::Argument(format!(
                "Gabor size {} must be odd and >= 3",
                self.size
            )));
        }
        Ok(())
    }
}

/// Gabor profile exactly as the formula gives it, no DC correction.
pub fn make_gabor_uncorrected(params: &GaborParams, parity: Parity) -> Result<FeatureMap> {
    params.validate()?;
    let h = (params.size / 2) as f64;
    let (s, c) = params.theta.sin_cos();
    let two_sigma2 = 2.0 * params.sigma * params.sigma;
    let g2 = params.gamma * params.gamma;
    Ok(FeatureMap::from_fn(params.size, params.size, |r, col| {
        let x = col as f64 - h;
        let y = r as f64 - h;
        // Carrier coordinate along the normal, envelope long axis along theta.
        let across = -x * s + y * c;
        let along = x * c + y * s;
        let env = (-(across * across + g2 * along * along) / two_sigma2).exp();
        match parity {
            Parity::Even => env * (params.omega * across).cos(),
            Parity::Odd => env * (params.omega * across).sin(),
        }
    }))
}

/// Gabor kernel; the even kernel is mean-subtracted to zero DC.
pub fn make_gabor(params: &GaborParams, parity: Parity) -> Result<FeatureMap> {
    let k = make_gabor_uncorrected(params, parity)?;
    Ok(match parity {
        Parity::Even => zero_mean(&k),
        Parity::Odd => k,
    })
}

/// Subtracts the kernel mean so the taps sum to zero.
pub fn zero_mean(kernel: &FeatureMap) -> FeatureMap {
    let mean = kernel.mean();
    kernel.map(|v| v - mean)
}

/// Complex-cell energy `sqrt(S_e^2 + S_o^2)` of a quadrature pair.
pub fn complex_response(image: &FeatureMap, params: &GaborParams) -> Result<FeatureMap> {
    let even = make_gabor(params, Parity::Even)?;
    let odd = make_gabor(params, Parity::Odd)?;
    complex_response_with(image, &even, &odd)
}

/// Complex-cell energy for an arbitrary even/odd kernel pair.
pub fn complex_response_with(
    image: &FeatureMap,
    even: &FeatureMap,
    odd: &FeatureMap,
) -> Result<FeatureMap> {
    let se = correlate_replicate(image, even)?;
    let so = correlate_replicate(image, odd)?;
    se.zip_map(&so, |a, b| (a * a + b * b).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoGParams {
    pub sigma_in: f64,
    pub sigma_out: f64,
    pub size: usize,
}

impl DoGParams {
    /// Kernel side defaults to the next odd integer `>= 6 sigma_out + 1`.
    pub fn new(sigma_in: f64, sigma_out: f64) -> Self {
        Self {
            sigma_in,
            sigma_out,
            size: odd_size_at_least(6.0 * sigma_out + 1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_in > 0.0 && self.sigma_in < self.sigma_out && self.sigma_out.is_finite()) {
            return Err(Error::Argument(format!(
                "center-surround needs 0 < sigma_in < sigma_out, got {} / {}",
                self.sigma_in, self.sigma_out
            )));
        }
        if self.size.is_multiple_of(2) {
            return Err(Error::Argument(format!("DoG size {} must be odd", self.size)));
        }
        Ok(())
    }
}

/// ON (excitatory centre) or OFF difference-of-Gaussians kernel.
pub fn make_center_surround(params: &DoGParams, polarity: Polarity) -> Result<FeatureMap> {
    params.validate()?;
    let h = (params.size / 2) as f64;
    let gauss = |rho2: f64, s: f64| (-rho2 / (2.0 * s * s)).exp() / (2.0 * PI * s * s);
    let sign = match polarity {
        Polarity::On => 1.0,
        Polarity::Off => -1.0,
    };
    Ok(FeatureMap::from_fn(params.size, params.size, |r, c| {
        let x = c as f64 - h;
        let y = r as f64 - h;
        let rho2 = x * x + y * y;
        sign * (gauss(rho2, params.sigma_in) - gauss(rho2, params.sigma_out))
    }))
}

/// Angular profile of the von Mises kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VonMisesForm {
    /// `exp[(rho - R0) cos(phi - mu)]`: concentrated toward `mu`.
    #[default]
    Cosine,
    /// `exp[(rho - R0) sin(phi - mu)]`, the alternative angular term.
    Sine,
}

impl fmt::Display for VonMisesForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VonMisesForm::Cosine => "cos",
            VonMisesForm::Sine => "sin",
        })
    }
}

impl FromStr for VonMisesForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "cos" | "cosine" => Ok(Self::Cosine),
            "sin" | "sine" => Ok(Self::Sine),
            other => Err(Error::Config(format!("von Mises form {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VonMisesParams {
    /// Mean direction, i.e. the border-ownership direction `theta +- pi/2`.
    pub bo_direction: f64,
    pub r0: f64,
    pub size: usize,
    pub form: VonMisesForm,
}

impl VonMisesParams {
    /// Kernel side defaults to the next odd integer `>= 4 R0 + 5`.
    pub fn new(bo_direction: f64, r0: f64) -> Self {
        Self {
            bo_direction,
            r0,
            size: odd_size_at_least(4.0 * r0 + 5.0),
            form: VonMisesForm::default(),
        }
    }

    pub fn with_form(self, form: VonMisesForm) -> Self {
        Self { form, ..self }
    }
}

/// Modified Bessel function of the first kind, order zero (power series).
pub fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term < 1e-17 * sum {
            return sum;
        }
        k += 1.0;
    }
}

/// Un-normalized von Mises value at lattice offset `(x, y)`.
pub fn von_mises_raw(params: &VonMisesParams, x: f64, y: f64) -> f64 {
    let rho = (x * x + y * y).sqrt();
    let phi = y.atan2(x);
    let d = rho - params.r0;
    let angular = match params.form {
        VonMisesForm::Cosine => (phi - params.bo_direction).cos(),
        VonMisesForm::Sine => (phi - params.bo_direction).sin(),
    };
    (d * angular).exp() / bessel_i0(d.abs())
}

/// Von Mises kernel scaled so its maximum tap is exactly 1.
pub fn make_von_mises(params: &VonMisesParams) -> Result<FeatureMap> {
    if !(params.r0 > 0.0 && params.r0.is_finite()) || params.size.is_multiple_of(2) {
        return Err(Error::Argument(format!("invalid von Mises parameters {params:?}")));
    }
    let h = (params.size / 2) as f64;
    let raw = FeatureMap::from_fn(params.size, params.size, |r, c| {
        von_mises_raw(params, c as f64 - h, r as f64 - h)
    });
    let peak = raw.max();
    Ok(raw.map(|v| v / peak))
}
