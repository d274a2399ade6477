use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Feature channels in the order used by [`ModelWeights::feature_weights`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feature {
    Color,
    Intensity,
    Orientation,
}

impl Feature {
    pub const ALL: [Feature; 3] = [Feature::Color, Feature::Intensity, Feature::Orientation];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Cue mixing weights. `alpha_*` lie on the unit simplex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelWeights {
    pub alpha_ref: f64,
    pub alpha_sa: f64,
    pub alpha_tj: f64,
    pub w_opp: f64,
    /// Color, intensity, orientation.
    pub feature_weights: [f64; 3],
}

pub const SIMPLEX_TOL: f64 = 1e-9;

impl Default for ModelWeights {
    fn default() -> Self {
        Preset::Reference.weights()
    }
}

impl ModelWeights {
    pub fn with_alphas(alpha_ref: f64, alpha_sa: f64, alpha_tj: f64) -> Self {
        Self {
            alpha_ref,
            alpha_sa,
            alpha_tj,
            ..Self::default()
        }
    }

    pub fn alphas(&self) -> [f64; 3] {
        [self.alpha_ref, self.alpha_sa, self.alpha_tj]
    }

    pub fn feature_weight(&self, f: Feature) -> f64 {
        self.feature_weights[f.index()]
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.alphas();
        if a.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Argument(format!("cue weights must be finite and >= 0: {a:?}")));
        }
        let sum: f64 = a.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Argument(format!("cue weights {a:?} sum to {sum}, not 1")));
        }
        if !(self.w_opp.is_finite() && self.w_opp >= 0.0) {
            return Err(Error::Argument(format!("w_opp must be >= 0, got {}", self.w_opp)));
        }
        if self.feature_weights.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Argument(format!(
                "feature weights must be >= 0: {:?}",
                self.feature_weights
            )));
        }
        Ok(())
    }

    /// Moves the T-junction mass onto `alpha_ref` (used when no label maps
    /// are available).
    pub fn without_tj(self) -> Self {
        Self {
            alpha_ref: self.alpha_ref + self.alpha_tj,
            alpha_tj: 0.0,
            ..self
        }
    }
}

impl fmt::Display for ModelWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.alpha_ref, self.alpha_sa, self.alpha_tj)
    }
}

/// Parses `a,b,c` into the three alphas (other fields default).
impl FromStr for ModelWeights {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!("weights need 3 comma-separated values, got {s:?}")));
        }
        let mut v = [0.0; 3];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p
                .parse()
                .map_err(|e| Error::Config(format!("bad weight {p:?}: {e}")))?;
        }
        let w = Self::with_alphas(v[0], v[1], v[2]);
        w.validate()?;
        Ok(w)
    }
}

/// Named weight settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Reference,
    WithSa,
    WithTj,
    WithBoth,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Reference, Preset::WithSa, Preset::WithTj, Preset::WithBoth];

    pub fn weights(self) -> ModelWeights {
        let (r, s, t) = match self {
            Preset::Reference => (1.0, 0.0, 0.0),
            Preset::WithSa => (0.35, 0.65, 0.0),
            Preset::WithTj => (0.03, 0.0, 0.97),
            Preset::WithBoth => (0.05, 0.15, 0.80),
        };
        ModelWeights {
            alpha_ref: r,
            alpha_sa: s,
            alpha_tj: t,
            w_opp: 1.0,
            feature_weights: [1.0; 3],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Reference => "reference",
            Preset::WithSa => "with-sa",
            Preset::WithTj => "with-tj",
            Preset::WithBoth => "with-both",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown preset {s:?}")))
    }
}
