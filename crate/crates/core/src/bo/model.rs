//! The full model: channels, cue maps and BO pyramids for one image, cached
//! so that cue weights can be varied without recomputing any filtering.
//!
//! Only the orientation channel carries local cues. Color and intensity have
//! `alpha_sa = alpha_tj = 0`, so the simplex puts their whole mass on the
//! light/dark term and their native final maps do not depend on the cue
//! weights at all. The orientation channel keeps its three per-cue pyramid
//! sets and is recombined per query.

use std::collections::HashMap;

use super::combine::{combine_bo, final_bo_maps, winning_at, winning_bo, BoPyramidSet};
use super::cs::{compute_cs_pyramids, CsKind};
use super::modulation::{cue_bo_from_normalized, light_dark_from_normalized, Grouping, NormalizedPyramid};
use super::weights::{Feature, ModelWeights};
use crate::channels::{build_channel_pyramids, default_gabor, orientation_angle, ChannelSet, RgbImage, N_ORIENT};
use crate::cues::{compute_sa_maps, compute_tj_maps, SaParams, TJunction, TjParams};
use crate::error::{Error, Result};
use crate::exec;
use crate::filters::{DoGParams, GaborParams, VonMisesForm};
use crate::grid::{
    bilinear_combine, bilinear_taps, resample_coord, FeatureMap, LabelMap, NormalizationParams, Pyramid,
    PyramidSpec,
};
use crate::oriented::{DirectedCueMaps, OrientedPairSet, Side, N_DIRECTED};

/// Every tunable of the pipeline apart from the cue weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Orientation-channel Gabor; `theta` is ignored.
    pub gabor: GaborParams,
    pub dog: DoGParams,
    /// Even Gabor used as the orientation channel's center-surround kernel.
    pub cs_gabor: GaborParams,
    pub r0: f64,
    pub von_mises: VonMisesForm,
    pub norm: NormalizationParams,
    pub pyramid: PyramidSpec,
    pub sa: SaParams,
    pub tj: TjParams,
    /// Restrict local-cue modulation to this many finest levels.
    pub top_layers: Option<usize>,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            gabor: default_gabor(),
            dog: DoGParams::new(0.9, 2.7),
            // The tabulated frequency, kept as printed rather than pi/4.
            #[allow(clippy::approx_constant)]
            cs_gabor: GaborParams::new(0.0, 3.2, 0.8, 0.7854),
            r0: 2.0,
            von_mises: VonMisesForm::default(),
            norm: NormalizationParams::default(),
            pyramid: PyramidSpec::default(),
            sa: SaParams::default(),
            tj: TjParams::default(),
            top_layers: None,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        self.gabor.validate()?;
        self.dog.validate()?;
        self.cs_gabor.validate()?;
        self.norm.validate()?;
        self.sa.validate()?;
        if !(self.r0 >= 0.0 && self.r0.is_finite()) {
            return Err(Error::Config(format!("von Mises radius {}", self.r0)));
        }
        if self.pyramid.levels == 0 {
            return Err(Error::Config("pyramid needs at least one level".into()));
        }
        Ok(())
    }

    pub fn grouping(&self, w_opp: f64) -> Result<Grouping> {
        Grouping::new(self.r0, self.von_mises, w_opp, self.norm)
    }
}

/// Which parts of the model to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Needs {
    pub features: [bool; 3],
    pub sa: bool,
    pub tj: bool,
}

impl Needs {
    pub fn all() -> Self {
        Self {
            features: [true; 3],
            sa: true,
            tj: true,
        }
    }

    /// Just what `w` gives nonzero weight to.
    pub fn for_weights(w: &ModelWeights) -> Self {
        let features = Feature::ALL.map(|f| w.feature_weight(f) != 0.0);
        let o = features[Feature::Orientation.index()];
        Self {
            features,
            sa: o && w.alpha_sa != 0.0,
            tj: o && w.alpha_tj != 0.0,
        }
    }
}

/// How a feature pyramid is center-surround filtered for orientation `i`.
#[derive(Debug, Clone, Copy)]
pub enum FeatureInput<'a> {
    /// One pyramid shared by all orientations, filtered isotropically.
    Symmetric(&'a Pyramid, DoGParams),
    /// The orientation's own edge pyramid, filtered with this Gabor turned
    /// to the orientation.
    Oriented(GaborParams),
}

/// `B_L + B_D` for all 16 directed entries of one feature.
pub fn light_dark_set(edges: &[Pyramid], input: FeatureInput<'_>, g: &Grouping) -> Result<BoPyramidSet> {
    check_edges(edges)?;
    let shared = match input {
        FeatureInput::Symmetric(p, dog) => Some(normalized_cs(p, &CsKind::Symmetric(dog), g)?),
        FeatureInput::Oriented(_) => None,
    };
    let per_theta = exec::map_range(N_ORIENT, |i| -> Result<[Vec<FeatureMap>; 2]> {
        let own;
        let (nl, nd) = match (&shared, input) {
            (Some((nl, nd)), _) => (nl, nd),
            (None, FeatureInput::Oriented(gp)) => {
                own = normalized_cs(&edges[i], &CsKind::Oriented(gp.with_theta(orientation_angle(i))), g)?;
                (&own.0, &own.1)
            }
            (None, FeatureInput::Symmetric(..)) => unreachable!("symmetric input is always shared"),
        };
        let ld = light_dark_from_normalized(&edges[i], nl, nd, i, g)?;
        Ok([ld.sum(Side::Plus)?, ld.sum(Side::Minus)?])
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    from_per_theta(per_theta)
}

/// Local-cue BO for all 16 entries; `cue` is in oriented-pair slot order.
pub fn local_cue_set(edges: &[Pyramid], cue: &[Pyramid], g: &Grouping, top_layers: Option<usize>) -> Result<BoPyramidSet> {
    check_edges(edges)?;
    if cue.len() != N_DIRECTED {
        return Err(Error::Argument(format!("{} cue pyramids, expected {N_DIRECTED}", cue.len())));
    }
    let per_theta = exec::map_range(N_ORIENT, |i| -> Result<[Vec<FeatureMap>; 2]> {
        let (p, m) = (&cue[2 * i], &cue[2 * i + 1]);
        if p.dims() != edges[i].dims() || m.dims() != edges[i].dims() {
            return Err(Error::Argument("cue and edge pyramids are not level-aligned".into()));
        }
        let np = NormalizedPyramid::new(p, &g.norm);
        let nm = NormalizedPyramid::new(m, &g.norm);
        cue_bo_from_normalized(&edges[i], &np, &nm, i, g, top_layers)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    from_per_theta(per_theta)
}

/// Native-resolution final maps of a cue-free feature: the cross-scale sum
/// of the (summed) winning sets.
pub fn passive_feature_final(sets: &[BoPyramidSet], rows: usize, cols: usize) -> Result<OrientedPairSet> {
    let winning: Vec<BoPyramidSet> = sets.iter().map(winning_bo).collect();
    let weighted: Vec<(&BoPyramidSet, f64)> = winning.iter().map(|w| (w, 1.0)).collect();
    final_bo_maps(&weighted, rows, cols)
}

fn normalized_cs(p: &Pyramid, kind: &CsKind, g: &Grouping) -> Result<(NormalizedPyramid, NormalizedPyramid)> {
    let cs = compute_cs_pyramids(p, kind)?;
    Ok((NormalizedPyramid::new(&cs.light, &g.norm), NormalizedPyramid::new(&cs.dark, &g.norm)))
}

fn check_edges(edges: &[Pyramid]) -> Result<()> {
    if edges.len() != N_ORIENT {
        return Err(Error::Argument(format!("{} edge pyramids, expected {N_ORIENT}", edges.len())));
    }
    Ok(())
}

fn from_per_theta(mut per_theta: Vec<[Vec<FeatureMap>; 2]>) -> Result<BoPyramidSet> {
    BoPyramidSet::from_entries(|i, side| {
        let k = match side {
            Side::Plus => 0,
            Side::Minus => 1,
        };
        std::mem::take(&mut per_theta[i][k])
    })
}

fn cue_pyramids(maps: &DirectedCueMaps, spec: &PyramidSpec) -> Result<Vec<Pyramid>> {
    exec::map_slice(maps.maps(), |m| Pyramid::build(m, spec))
        .into_iter()
        .collect()
}

/// Orientation-channel BO pyramid sets, one per cue.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationSets {
    pub light_dark: BoPyramidSet,
    pub sa: Option<BoPyramidSet>,
    pub tj: Option<BoPyramidSet>,
}

/// Weight-independent model state for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct Components {
    rows: usize,
    cols: usize,
    w_opp: f64,
    /// Native final maps of the summed color sub-channels.
    pub color: Option<OrientedPairSet>,
    pub intensity: Option<OrientedPairSet>,
    pub orientation: Option<OrientationSets>,
    pub junctions: Vec<TJunction>,
}

impl Components {
    /// `labels` are `(contours, segments)`; they are required when the
    /// T-junction cue is needed.
    pub fn compute(
        image: &RgbImage,
        labels: Option<(&LabelMap, &LabelMap)>,
        params: &ModelParams,
        w_opp: f64,
        needs: Needs,
    ) -> Result<Self> {
        params.validate()?;
        let (rows, cols) = image.dims();
        let g = params.grouping(w_opp)?;
        let channels = ChannelSet::compute(image, &params.gabor)?;
        let pyr = build_channel_pyramids(&channels, &params.pyramid)?;
        let edges = &pyr.orientation;
        let [need_c, need_i, need_o] = [Feature::Color, Feature::Intensity, Feature::Orientation]
            .map(|f| needs.features[f.index()]);

        let color = if need_c {
            let sets = pyr
                .color
                .iter()
                .map(|p| light_dark_set(edges, FeatureInput::Symmetric(p, params.dog), &g))
                .collect::<Result<Vec<_>>>()?;
            Some(passive_feature_final(&sets, rows, cols)?)
        } else {
            None
        };
        let intensity = if need_i {
            let set = light_dark_set(edges, FeatureInput::Symmetric(&pyr.intensity, params.dog), &g)?;
            Some(passive_feature_final(&[set], rows, cols)?)
        } else {
            None
        };

        let mut junctions = Vec::new();
        let orientation = if need_o {
            let light_dark = light_dark_set(edges, FeatureInput::Oriented(params.cs_gabor), &g)?;
            let sa = if needs.sa {
                let maps = compute_sa_maps(&channels.intensity, &params.sa)?;
                Some(local_cue_set(edges, &cue_pyramids(&maps, &params.pyramid)?, &g, params.top_layers)?)
            } else {
                None
            };
            let tj = if needs.tj {
                let (contours, segments) = labels.ok_or_else(|| {
                    Error::Argument("the T-junction cue needs contour and segment label maps".into())
                })?;
                if contours.dims() != (rows, cols) || segments.dims() != (rows, cols) {
                    return Err(Error::Dimension(format!(
                        "label maps {:?} / {:?} for a {rows}x{cols} image",
                        contours.dims(),
                        segments.dims()
                    )));
                }
                let analysis = compute_tj_maps(contours, segments, &params.tj)?;
                junctions = analysis.junctions;
                Some(local_cue_set(edges, &cue_pyramids(&analysis.maps, &params.pyramid)?, &g, params.top_layers)?)
            } else {
                None
            };
            Some(OrientationSets { light_dark, sa, tj })
        } else {
            None
        };

        Ok(Self {
            rows,
            cols,
            w_opp,
            color,
            intensity,
            orientation,
            junctions,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn w_opp(&self) -> f64 {
        self.w_opp
    }

    fn check_weights(&self, w: &ModelWeights) -> Result<()> {
        w.validate()?;
        if w.w_opp != self.w_opp {
            return Err(Error::Argument(format!(
                "components were computed with w_opp = {}, not {}",
                self.w_opp, w.w_opp
            )));
        }
        let missing = |name: &str| Error::Argument(format!("weights need the {name} term, which was not computed"));
        if w.feature_weight(Feature::Color) != 0.0 && self.color.is_none() {
            return Err(missing("color"));
        }
        if w.feature_weight(Feature::Intensity) != 0.0 && self.intensity.is_none() {
            return Err(missing("intensity"));
        }
        if w.feature_weight(Feature::Orientation) != 0.0 {
            let o = self.orientation.as_ref().ok_or_else(|| missing("orientation"))?;
            if w.alpha_sa != 0.0 && o.sa.is_none() {
                return Err(missing("spectral anisotropy"));
            }
            if w.alpha_tj != 0.0 && o.tj.is_none() {
                return Err(missing("T-junction"));
            }
        }
        Ok(())
    }

    /// Orientation-channel winning set under `w`.
    pub fn orientation_winning(&self, w: &ModelWeights) -> Result<Option<BoPyramidSet>> {
        let Some(o) = &self.orientation else {
            return Ok(None);
        };
        let combined = combine_bo(&o.light_dark, o.sa.as_ref(), o.tj.as_ref(), w)?;
        Ok(Some(winning_bo(&combined)))
    }

    /// The 16 native final BO maps under `w`.
    pub fn final_maps(&self, w: &ModelWeights) -> Result<OrientedPairSet> {
        self.check_weights(w)?;
        let (rows, cols) = (self.rows, self.cols);
        let w_o = w.feature_weight(Feature::Orientation);
        let orientation = if w_o != 0.0 {
            let win = self.orientation_winning(w)?.expect("checked above");
            Some(final_bo_maps(&[(&win, 1.0)], rows, cols)?)
        } else {
            None
        };
        let terms = self.terms(w, orientation.as_ref());
        OrientedPairSet::try_from_fn(|i, side| {
            let mut out = FeatureMap::zeros(rows, cols);
            for (set, s) in &terms {
                out.add_scaled(set.get(i, side), *s)?;
            }
            Ok(out)
        })
    }

    /// Nonzero `(native map set, scale)` terms of the final sum, in order.
    fn terms<'a>(&'a self, w: &ModelWeights, orientation: Option<&'a OrientedPairSet>) -> Vec<(&'a OrientedPairSet, f64)> {
        let mut terms = Vec::with_capacity(3);
        let w_o = w.feature_weight(Feature::Orientation);
        if let Some(o) = orientation.filter(|_| w_o != 0.0) {
            terms.push((o, w_o));
        }
        for (set, f) in [(&self.color, Feature::Color), (&self.intensity, Feature::Intensity)] {
            let s = w.feature_weight(f);
            if let Some(set) = set.as_ref().filter(|_| s != 0.0) {
                terms.push((set, s));
            }
        }
        terms
    }
}

/// One pyramid level of the sparse cache: the cells bilinear resampling
/// reads for the query points, and each point's taps into them.
#[derive(Debug, Clone)]
struct SparseLevel {
    light_dark: Vec<[f64; N_DIRECTED]>,
    sa: Option<Vec<[f64; N_DIRECTED]>>,
    tj: Option<Vec<[f64; N_DIRECTED]>>,
    taps: Vec<([u32; 4], f64, f64)>,
}

/// Final-map values at a fixed set of native pixels, recomputable for any
/// weights from a small fraction of the pyramid cells. Results are
/// bit-identical to [`Components::final_maps`] at those pixels.
#[derive(Debug, Clone)]
pub struct EvalCache {
    rows: usize,
    cols: usize,
    w_opp: f64,
    points: Vec<(usize, usize)>,
    index: HashMap<(usize, usize), usize>,
    color: Option<Vec<[f64; N_DIRECTED]>>,
    intensity: Option<Vec<[f64; N_DIRECTED]>>,
    levels: Option<Vec<SparseLevel>>,
}

fn gather(set: &OrientedPairSet, flat: usize) -> [f64; N_DIRECTED] {
    std::array::from_fn(|s| set.maps()[s].as_slice()[flat])
}

impl EvalCache {
    /// `points` are native `(row, col)` pixels; duplicates are merged.
    pub fn new(c: &Components, points: &[(usize, usize)]) -> Result<Self> {
        let (rows, cols) = c.dims();
        let mut uniq = Vec::with_capacity(points.len());
        let mut index = HashMap::with_capacity(points.len());
        for &(r, col) in points {
            if r >= rows || col >= cols {
                return Err(Error::Argument(format!("query point ({r}, {col}) outside {rows}x{cols}")));
            }
            index.entry((r, col)).or_insert_with(|| {
                uniq.push((r, col));
                uniq.len() - 1
            });
        }
        let pick = |set: &Option<OrientedPairSet>| {
            set.as_ref()
                .map(|s| uniq.iter().map(|&(r, col)| gather(s, r * cols + col)).collect::<Vec<_>>())
        };
        let levels = c.orientation.as_ref().map(|o| {
            (0..o.light_dark.len())
                .map(|k| {
                    let (lr, lc) = o.light_dark.level(k).dims();
                    let mut cell_of: HashMap<usize, u32> = HashMap::new();
                    let mut cells = Vec::new();
                    let taps = uniq
                        .iter()
                        .map(|&(r, col)| {
                            let (t, fr, fc) =
                                bilinear_taps(lr, lc, resample_coord(r, rows, lr), resample_coord(col, cols, lc));
                            let ids = t.map(|flat| {
                                *cell_of.entry(flat).or_insert_with(|| {
                                    cells.push(flat);
                                    (cells.len() - 1) as u32
                                })
                            });
                            (ids, fr, fc)
                        })
                        .collect();
                    let take = |set: &BoPyramidSet| cells.iter().map(|&f| gather(set.level(k), f)).collect::<Vec<_>>();
                    SparseLevel {
                        light_dark: take(&o.light_dark),
                        sa: o.sa.as_ref().map(take),
                        tj: o.tj.as_ref().map(take),
                        taps,
                    }
                })
                .collect()
        });
        let (color, intensity) = (pick(&c.color), pick(&c.intensity));
        Ok(Self {
            rows,
            cols,
            w_opp: c.w_opp,
            points: uniq,
            index,
            color,
            intensity,
            levels,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn points(&self) -> &[(usize, usize)] {
        &self.points
    }

    /// Position of a pixel in [`Self::points`].
    pub fn lookup(&self, row: usize, col: usize) -> Option<usize> {
        self.index.get(&(row, col)).copied()
    }

    /// Final values at every query point, in [`Self::points`] order and
    /// oriented-pair slot order.
    pub fn evaluate(&self, w: &ModelWeights) -> Result<Vec<[f64; N_DIRECTED]>> {
        w.validate()?;
        if w.w_opp != self.w_opp {
            return Err(Error::Argument(format!(
                "cache was built with w_opp = {}, not {}",
                self.w_opp, w.w_opp
            )));
        }
        let n = self.points.len();
        let w_o = w.feature_weight(Feature::Orientation);
        let orientation = if w_o != 0.0 {
            let levels = self
                .levels
                .as_ref()
                .ok_or_else(|| Error::Argument("weights need the orientation term, which was not cached".into()))?;
            Some(self.orientation_sum(levels, w)?)
        } else {
            None
        };
        let mut terms: Vec<(&[[f64; N_DIRECTED]], f64)> = Vec::with_capacity(3);
        if let Some(o) = &orientation {
            terms.push((o, w_o));
        }
        for (set, f, name) in [
            (&self.color, Feature::Color, "color"),
            (&self.intensity, Feature::Intensity, "intensity"),
        ] {
            let s = w.feature_weight(f);
            if s == 0.0 {
                continue;
            }
            let set = set
                .as_ref()
                .ok_or_else(|| Error::Argument(format!("weights need the {name} term, which was not cached")))?;
            terms.push((set, s));
        }
        let mut out = vec![[0.0; N_DIRECTED]; n];
        for (vals, s) in terms {
            for (o, v) in out.iter_mut().zip(vals) {
                for slot in 0..N_DIRECTED {
                    o[slot] += s * v[slot];
                }
            }
        }
        Ok(out)
    }

    fn orientation_sum(&self, levels: &[SparseLevel], w: &ModelWeights) -> Result<Vec<[f64; N_DIRECTED]>> {
        let cues = [(w.alpha_sa, "spectral anisotropy"), (w.alpha_tj, "T-junction")];
        let mut acc = vec![[0.0; N_DIRECTED]; self.points.len()];
        for level in levels {
            let extra = [level.sa.as_ref(), level.tj.as_ref()];
            for ((alpha, name), e) in cues.iter().zip(extra) {
                if *alpha != 0.0 && e.is_none() {
                    return Err(Error::Argument(format!(
                        "{name} weight is {alpha} but the cache holds no {name} term"
                    )));
                }
            }
            // Combine then keep the winner, cell by cell.
            let winning: Vec<[f64; N_DIRECTED]> = (0..level.light_dark.len())
                .map(|cell| {
                    let mut v = level.light_dark[cell].map(|x| x * w.alpha_ref);
                    for ((alpha, _), e) in cues.iter().zip(extra) {
                        if *alpha != 0.0 {
                            let e = &e.expect("checked above")[cell];
                            for slot in 0..N_DIRECTED {
                                v[slot] += alpha * e[slot];
                            }
                        }
                    }
                    let (best, delta) = winning_at(|i| v[2 * i] - v[2 * i + 1]);
                    let mut out = [0.0; N_DIRECTED];
                    if delta > 0.0 {
                        out[2 * best] = delta;
                    } else if delta < 0.0 {
                        out[2 * best + 1] = -delta;
                    }
                    out
                })
                .collect();
            for (a, &(ids, fr, fc)) in acc.iter_mut().zip(&level.taps) {
                for slot in 0..N_DIRECTED {
                    let v = ids.map(|id| winning[id as usize][slot]);
                    a[slot] += bilinear_combine(v, fr, fc);
                }
            }
        }
        Ok(acc)
    }
}
