//! Grouping feedback: normalized evidence pyramids are pooled by the von
//! Mises kernels, weighted by `2^-j`, summed across coarser scales and used to
//! modulate the edge responses `C_theta`.

use super::cs::CsPair;
use crate::error::{Error, Result};
use crate::exec;
use crate::filters::{make_von_mises, VonMisesForm, VonMisesParams};
use crate::grid::{correlate_replicate, normalize_map, resample, FeatureMap, NormalizationParams, Pyramid};
use crate::oriented::{direction_angle, OrientedPairSet, Side};

/// Sixteen von Mises kernels in oriented-pair layout: entry `(i, side)` is
/// concentrated toward `theta_i + side * pi/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct VonMisesBank(OrientedPairSet);

impl VonMisesBank {
    pub fn new(r0: f64, form: VonMisesForm) -> Result<Self> {
        Ok(Self(OrientedPairSet::try_from_fn(|i, side| {
            make_von_mises(&VonMisesParams::new(direction_angle(i, side), r0).with_form(form))
        })?))
    }

    pub fn kernel(&self, i: usize, side: Side) -> &FeatureMap {
        self.0.get(i, side)
    }
}

/// Everything the feedback stage needs besides the pyramids themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct Grouping {
    pub bank: VonMisesBank,
    pub w_opp: f64,
    pub norm: NormalizationParams,
}

impl Grouping {
    pub fn new(r0: f64, form: VonMisesForm, w_opp: f64, norm: NormalizationParams) -> Result<Self> {
        norm.validate()?;
        Ok(Self {
            bank: VonMisesBank::new(r0, form)?,
            w_opp,
            norm,
        })
    }
}

/// Per-level normalized maps `N(X^j)`, with all-zero levels flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedPyramid {
    levels: Vec<FeatureMap>,
    zero: Vec<bool>,
}

impl NormalizedPyramid {
    pub fn new(p: &Pyramid, norm: &NormalizationParams) -> Self {
        let levels: Vec<FeatureMap> = exec::map_slice(p.levels(), |l| normalize_map(l, norm));
        let zero = levels.iter().map(|l| l.as_slice().iter().all(|&v| v == 0.0)).collect();
        Self { levels, zero }
    }

    pub fn levels(&self) -> &[FeatureMap] {
        &self.levels
    }

    pub fn is_zero(&self) -> bool {
        self.zero.iter().all(|&z| z)
    }
}

/// `M^k = sum_{j >= k} 2^-j * resample(K * N(X^j), dims_k)` for every level,
/// with 1-based `j`. Terms are added in increasing `j`.
pub fn accumulate_modulation(np: &NormalizedPyramid, kernel: &FeatureMap) -> Result<Vec<FeatureMap>> {
    let dims: Vec<(usize, usize)> = np.levels.iter().map(FeatureMap::dims).collect();
    let terms = exec::map_range(np.levels.len(), |j| -> Result<Option<FeatureMap>> {
        if np.zero[j] {
            return Ok(None);
        }
        let weight = 0.5f64.powi(j as i32 + 1);
        Ok(Some(correlate_replicate(&np.levels[j], kernel)?.scale(weight)))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    exec::map_range(dims.len(), |k| -> Result<FeatureMap> {
        let (r, c) = dims[k];
        let mut acc = FeatureMap::zeros(r, c);
        for term in terms[k..].iter().flatten() {
            acc.add_assign(&resample(term, r, c)?)?;
        }
        Ok(acc)
    })
    .into_iter()
    .collect()
}

/// `max(0, C^k (1 + E^k - w_opp I^k))` on the first `active` levels; `C^k`
/// unchanged above that.
pub fn modulate(
    c: &Pyramid,
    excite: &[FeatureMap],
    inhibit: &[FeatureMap],
    w_opp: f64,
    active: usize,
) -> Result<Vec<FeatureMap>> {
    if excite.len() != c.len() || inhibit.len() != c.len() {
        return Err(Error::Argument(format!(
            "modulation has {} / {} levels for a {}-level edge pyramid",
            excite.len(),
            inhibit.len(),
            c.len()
        )));
    }
    c.levels()
        .iter()
        .enumerate()
        .map(|(k, ck)| {
            if k >= active {
                return Ok(ck.clone());
            }
            let gain = excite[k].zip_map(&inhibit[k], |e, i| 1.0 + e - w_opp * i)?;
            ck.zip_map(&gain, |cv, g| (cv * g).max(0.0))
        })
        .collect()
}

/// One BO pyramid per side for the light and the dark pathway.
#[derive(Debug, Clone, PartialEq)]
pub struct LightDarkBo {
    pub light_plus: Vec<FeatureMap>,
    pub light_minus: Vec<FeatureMap>,
    pub dark_plus: Vec<FeatureMap>,
    pub dark_minus: Vec<FeatureMap>,
}

impl LightDarkBo {
    /// Contrast-polarity-invariant sum `B_L + B_D` for one side.
    pub fn sum(&self, side: Side) -> Result<Vec<FeatureMap>> {
        let (l, d) = match side {
            Side::Plus => (&self.light_plus, &self.dark_plus),
            Side::Minus => (&self.light_minus, &self.dark_minus),
        };
        l.iter()
            .zip(d)
            .map(|(a, b)| a.zip_map(b, |x, y| x + y))
            .collect()
    }
}

/// Accumulated light/dark modulation for one orientation.
#[derive(Debug, Clone)]
pub(crate) struct LightDarkTerms<'a> {
    pub light_plus: &'a [FeatureMap],
    pub light_minus: &'a [FeatureMap],
    pub dark_plus: &'a [FeatureMap],
    pub dark_minus: &'a [FeatureMap],
}

pub(crate) fn light_dark_from_terms(
    c: &Pyramid,
    t: &LightDarkTerms<'_>,
    w_opp: f64,
) -> Result<LightDarkBo> {
    let n = c.len();
    Ok(LightDarkBo {
        light_plus: modulate(c, t.light_plus, t.dark_minus, w_opp, n)?,
        light_minus: modulate(c, t.light_minus, t.dark_plus, w_opp, n)?,
        dark_plus: modulate(c, t.dark_plus, t.light_minus, w_opp, n)?,
        dark_minus: modulate(c, t.dark_minus, t.light_plus, w_opp, n)?,
    })
}

/// Light and dark BO pyramids of orientation `theta_i` for one feature.
pub fn compute_bo_light_dark(
    c: &Pyramid,
    cs: &CsPair,
    i: usize,
    g: &Grouping,
) -> Result<LightDarkBo> {
    if cs.light.dims() != c.dims() || cs.dark.dims() != c.dims() {
        return Err(Error::Argument("center-surround and edge pyramids are not level-aligned".into()));
    }
    let nl = NormalizedPyramid::new(&cs.light, &g.norm);
    let nd = NormalizedPyramid::new(&cs.dark, &g.norm);
    light_dark_from_normalized(c, &nl, &nd, i, g)
}

pub(crate) fn light_dark_from_normalized(
    c: &Pyramid,
    nl: &NormalizedPyramid,
    nd: &NormalizedPyramid,
    i: usize,
    g: &Grouping,
) -> Result<LightDarkBo> {
    let lp = accumulate_modulation(nl, g.bank.kernel(i, Side::Plus))?;
    let lm = accumulate_modulation(nl, g.bank.kernel(i, Side::Minus))?;
    let dp = accumulate_modulation(nd, g.bank.kernel(i, Side::Plus))?;
    let dm = accumulate_modulation(nd, g.bank.kernel(i, Side::Minus))?;
    light_dark_from_terms(
        c,
        &LightDarkTerms {
            light_plus: &lp,
            light_minus: &lm,
            dark_plus: &dp,
            dark_minus: &dm,
        },
        g.w_opp,
    )
}

/// BO pyramids of orientation `theta_i` driven by a directed local cue: the
/// same-side cue excites, the opposite-side cue inhibits. Levels past
/// `top_layers` (when set) are left unmodulated.
pub fn compute_bo_local_cue(
    c: &Pyramid,
    cue_plus: &Pyramid,
    cue_minus: &Pyramid,
    i: usize,
    g: &Grouping,
    top_layers: Option<usize>,
) -> Result<[Vec<FeatureMap>; 2]> {
    if cue_plus.dims() != c.dims() || cue_minus.dims() != c.dims() {
        return Err(Error::Argument("cue and edge pyramids are not level-aligned".into()));
    }
    let np = NormalizedPyramid::new(cue_plus, &g.norm);
    let nm = NormalizedPyramid::new(cue_minus, &g.norm);
    cue_bo_from_normalized(c, &np, &nm, i, g, top_layers)
}

pub(crate) fn cue_bo_from_normalized(
    c: &Pyramid,
    np: &NormalizedPyramid,
    nm: &NormalizedPyramid,
    i: usize,
    g: &Grouping,
    top_layers: Option<usize>,
) -> Result<[Vec<FeatureMap>; 2]> {
    let active = top_layers.unwrap_or(c.len()).min(c.len());
    if np.is_zero() && nm.is_zero() || active == 0 {
        return Ok([c.levels().to_vec(), c.levels().to_vec()]);
    }
    let ep = accumulate_modulation(np, g.bank.kernel(i, Side::Plus))?;
    let em = accumulate_modulation(nm, g.bank.kernel(i, Side::Minus))?;
    Ok([
        modulate(c, &ep, &em, g.w_opp, active)?,
        modulate(c, &em, &ep, g.w_opp, active)?,
    ])
}
