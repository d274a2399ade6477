//! Flat `key=value` run configuration.
//!
//! Sources apply in order: defaults, config file, `--set` pairs, dedicated
//! flags, then `FGO_SEED`. Later writes win, so `preset=with-sa` followed by
//! `alphaSA=0.5` edits the preset; the weight simplex is checked only once
//! every source has been applied.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use fgo_core::bo::{ModelParams, ModelWeights, Preset};
use fgo_core::channels::default_gabor;
use fgo_core::cues::{SaParams, TjParams};
use fgo_core::eval::SearchParams;
use fgo_core::filters::{DoGParams, GaborParams, VonMisesForm};
use fgo_core::grid::{NormalizationParams, PyramidFactor, PyramidSpec};

pub const SEED_ENV: &str = "FGO_SEED";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub gamma: f64,
    pub sigma: f64,
    pub omega: f64,
    pub sigma_in: f64,
    pub sigma_out: f64,
    pub r0: f64,
    /// Center-surround Gabor of the orientation channel.
    pub sigma1: f64,
    pub gamma1: f64,
    pub omega1: f64,
    pub levels: usize,
    pub factor: PyramidFactor,
    pub von_mises: VonMisesForm,
    pub norm: NormalizationParams,
    /// Also carries `w_opp`.
    pub weights: ModelWeights,
    pub sa: SaParams,
    pub tj: TjParams,
    pub top_layers: Option<usize>,
    pub seed: u64,
    /// Decision neighbourhood radius in pixels.
    pub radius: usize,
    pub search: SearchParams,
    pub image: Option<PathBuf>,
    pub contours: Option<PathBuf>,
    pub segments: Option<PathBuf>,
    pub ground_truth: Vec<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = ModelParams::default();
        let g = default_gabor();
        Self {
            gamma: g.gamma,
            sigma: g.sigma,
            omega: g.omega,
            sigma_in: m.dog.sigma_in,
            sigma_out: m.dog.sigma_out,
            r0: m.r0,
            sigma1: m.cs_gabor.sigma,
            gamma1: m.cs_gabor.gamma,
            omega1: m.cs_gabor.omega,
            levels: m.pyramid.levels,
            factor: m.pyramid.factor,
            von_mises: m.von_mises,
            norm: m.norm,
            weights: Preset::Reference.weights(),
            sa: m.sa,
            tj: m.tj,
            top_layers: m.top_layers,
            seed: 0,
            radius: 1,
            search: SearchParams::default(),
            image: None,
            contours: None,
            segments: None,
            ground_truth: Vec::new(),
            manifest: None,
            out: PathBuf::from("."),
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| anyhow!("{key}: cannot parse {value:?}: {e}"))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "gamma" => self.gamma = num(key, v)?,
            "sigma" => self.sigma = num(key, v)?,
            "omega" => self.omega = num(key, v)?,
            "sigmaIn" => self.sigma_in = num(key, v)?,
            "sigmaOut" => self.sigma_out = num(key, v)?,
            "R0" | "r0" => self.r0 = num(key, v)?,
            "wOpp" => self.weights.w_opp = num(key, v)?,
            "sigma1" => self.sigma1 = num(key, v)?,
            "gamma1" => self.gamma1 = num(key, v)?,
            "omega1" => self.omega1 = num(key, v)?,
            "levels" | "Ns" => self.levels = num(key, v)?,
            "pyramidFactor" => self.factor = v.parse()?,
            "vonMises" => self.von_mises = v.parse()?,
            "normMax" => self.norm.m = num(key, v)?,
            "localMaxWindow" => self.norm.local_max_window = num(key, v)?,
            "preset" => {
                let p: Preset = v.parse()?;
                let w = p.weights();
                (self.weights.alpha_ref, self.weights.alpha_sa, self.weights.alpha_tj) = (w.alpha_ref, w.alpha_sa, w.alpha_tj);
            }
            "weights" => {
                let w: ModelWeights = v.parse()?;
                (self.weights.alpha_ref, self.weights.alpha_sa, self.weights.alpha_tj) = (w.alpha_ref, w.alpha_sa, w.alpha_tj);
            }
            "alphaRef" => self.weights.alpha_ref = num(key, v)?,
            "alphaSA" => self.weights.alpha_sa = num(key, v)?,
            "alphaTJ" => self.weights.alpha_tj = num(key, v)?,
            "colorWeight" => self.weights.feature_weights[0] = num(key, v)?,
            "intensityWeight" => self.weights.feature_weights[1] = num(key, v)?,
            "orientationWeight" => self.weights.feature_weights[2] = num(key, v)?,
            "minFilterSize" => self.sa.min_filter_size = num(key, v)?,
            "maxFilterSize" => self.sa.max_filter_size = num(key, v)?,
            "sizeStep" => self.sa.size_step = num(key, v)?,
            "gammaSA" => self.sa.gamma = num(key, v)?,
            "nLobesEven" => self.sa.n_lobes_even = num(key, v)?,
            "nLobesOdd" => self.sa.n_lobes_odd = num(key, v)?,
            "sigmaFactor" => self.sa.sigma_factor = num(key, v)?,
            "areaMaskRadius" => self.tj.area_mask_radius = num(key, v)?,
            "angleTrackLength" => self.tj.angle_track_length = num(key, v)?,
            "minTrackLength" => self.tj.min_track_length = num(key, v)?,
            "influenceRadius" => self.tj.influence_radius = num(key, v)?,
            "normalProbeLength" => self.tj.normal_probe_length = num(key, v)?,
            "yJunctionCenter" => self.tj.y_junction_center = num(key, v)?,
            "yJunctionBand" => self.tj.y_junction_band = num(key, v)?,
            "arrowThreshold" => self.tj.arrow_threshold = num(key, v)?,
            "mergeRadius" => self.tj.merge_radius = num(key, v)?,
            "regionRadius" => self.tj.region_radius = num(key, v)?,
            "topLayersOnly" => {
                self.top_layers = match v {
                    "" | "all" | "none" | "0" => None,
                    _ => Some(num(key, v)?),
                }
            }
            "seed" => self.seed = num(key, v)?,
            "radius" => self.radius = num(key, v)?,
            "coarseStep" => self.search.coarse_step = num(key, v)?,
            "tolerance" => self.search.tolerance = num(key, v)?,
            "maxRounds" => self.search.max_rounds = num(key, v)?,
            "image" => self.image = Some(v.into()),
            "contours" => self.contours = Some(v.into()),
            "segments" => self.segments = Some(v.into()),
            "gt" => self.ground_truth = v.split(',').filter(|s| !s.is_empty()).map(PathBuf::from).collect(),
            "manifest" => self.manifest = Some(v.into()),
            "out" => self.out = v.into(),
            other => bail!("unknown config key {other:?}"),
        }
        Ok(())
    }

    /// Applies `key=value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.apply_pair(line).with_context(|| format!("{origin}:{}", n + 1))?;
        }
        Ok(())
    }

    pub fn apply_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| anyhow!("expected key=value, got {pair:?}"))?;
        self.set(k, v)
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        self.apply_text(&text, &path.display().to_string())
    }

    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(s) = std::env::var(SEED_ENV) {
            self.seed = num(SEED_ENV, &s)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        self.model_params().validate()?;
        self.tj.validate()?;
        if self.search.coarse_step <= 0.0 || self.search.coarse_step > 1.0 {
            bail!("coarseStep must lie in (0, 1], got {}", self.search.coarse_step);
        }
        Ok(())
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            gabor: GaborParams::new(0.0, self.sigma, self.gamma, self.omega),
            dog: DoGParams::new(self.sigma_in, self.sigma_out),
            cs_gabor: GaborParams::new(0.0, self.sigma1, self.gamma1, self.omega1),
            r0: self.r0,
            von_mises: self.von_mises,
            norm: self.norm,
            pyramid: PyramidSpec {
                levels: self.levels,
                factor: self.factor,
            },
            sa: self.sa,
            tj: self.tj,
            top_layers: self.top_layers,
        }
    }

    /// Every model and search key, re-readable by [`RunConfig::apply_text`].
    /// Paths are left out.
    pub fn to_text(&self) -> String {
        let w = &self.weights;
        let pairs: Vec<(&str, String)> = vec![
            ("gamma", self.gamma.to_string()),
            ("sigma", self.sigma.to_string()),
            ("omega", self.omega.to_string()),
            ("sigmaIn", self.sigma_in.to_string()),
            ("sigmaOut", self.sigma_out.to_string()),
            ("R0", self.r0.to_string()),
            ("wOpp", w.w_opp.to_string()),
            ("sigma1", self.sigma1.to_string()),
            ("gamma1", self.gamma1.to_string()),
            ("omega1", self.omega1.to_string()),
            ("levels", self.levels.to_string()),
            ("pyramidFactor", self.factor.to_string()),
            ("vonMises", self.von_mises.to_string()),
            ("normMax", self.norm.m.to_string()),
            ("localMaxWindow", self.norm.local_max_window.to_string()),
            ("alphaRef", w.alpha_ref.to_string()),
            ("alphaSA", w.alpha_sa.to_string()),
            ("alphaTJ", w.alpha_tj.to_string()),
            ("colorWeight", w.feature_weights[0].to_string()),
            ("intensityWeight", w.feature_weights[1].to_string()),
            ("orientationWeight", w.feature_weights[2].to_string()),
            ("minFilterSize", self.sa.min_filter_size.to_string()),
            ("maxFilterSize", self.sa.max_filter_size.to_string()),
            ("sizeStep", self.sa.size_step.to_string()),
            ("gammaSA", self.sa.gamma.to_string()),
            ("nLobesEven", self.sa.n_lobes_even.to_string()),
            ("nLobesOdd", self.sa.n_lobes_odd.to_string()),
            ("sigmaFactor", self.sa.sigma_factor.to_string()),
            ("areaMaskRadius", self.tj.area_mask_radius.to_string()),
            ("angleTrackLength", self.tj.angle_track_length.to_string()),
            ("minTrackLength", self.tj.min_track_length.to_string()),
            ("influenceRadius", self.tj.influence_radius.to_string()),
            ("normalProbeLength", self.tj.normal_probe_length.to_string()),
            ("yJunctionCenter", self.tj.y_junction_center.to_string()),
            ("yJunctionBand", self.tj.y_junction_band.to_string()),
            ("arrowThreshold", self.tj.arrow_threshold.to_string()),
            ("mergeRadius", self.tj.merge_radius.to_string()),
            ("regionRadius", self.tj.region_radius.to_string()),
            ("topLayersOnly", self.top_layers.map_or("all".into(), |k| k.to_string())),
            ("seed", self.seed.to_string()),
            ("radius", self.radius.to_string()),
            ("coarseStep", self.search.coarse_step.to_string()),
            ("tolerance", self.search.tolerance.to_string()),
            ("maxRounds", self.search.max_rounds.to_string()),
        ];
        let mut s = String::new();
        for (k, v) in pairs {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }
}
