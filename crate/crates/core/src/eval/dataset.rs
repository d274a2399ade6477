//! Dataset manifests, per-image preparation and aggregate reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::ground_truth::{load_ground_truth, read_signed_map, FgGroundTruth};
use super::scoring::{query_points, score_image, ImageScore, SparseFinal};
use super::search::{grid_search_weights, Alpha, SearchParams, SearchResult};
use super::stats::right_tailed_t_test;
use crate::bo::{Components, EvalCache, ModelParams, ModelWeights, Needs};
use crate::channels::RgbImage;
use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{read_label_map, LabelMap};

/// One manifest line: `id=<id> image=<ppm> gt=<signed map> [gt2=...]
/// [contours=<lm1> segments=<lm1>]`. Relative paths resolve against the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: String,
    pub image: PathBuf,
    pub ground_truths: Vec<PathBuf>,
    pub contours: Option<PathBuf>,
    pub segments: Option<PathBuf>,
}

pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestEntry>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let ctx = format!("manifest line {}", lineno + 1);
        let (mut id, mut image, mut gts, mut contours, mut segments) = (None, None, Vec::new(), None, None);
        for field in line.split_whitespace() {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| Error::parse(&ctx, format!("field {field:?} is not key=value")))?;
            let path = || base.join(v);
            match k {
                "id" => id = Some(v.to_string()),
                "image" => image = Some(path()),
                "gt" | "gt1" | "gt2" => gts.push(path()),
                "contours" => contours = Some(path()),
                "segments" => segments = Some(path()),
                other => return Err(Error::parse(&ctx, format!("unknown key {other:?}"))),
            }
        }
        let id = id.ok_or_else(|| Error::parse(&ctx, "missing id"))?;
        let image = image.ok_or_else(|| Error::parse(&ctx, "missing image"))?;
        if gts.is_empty() {
            return Err(Error::parse(&ctx, "missing gt"));
        }
        if contours.is_some() != segments.is_some() {
            return Err(Error::parse(&ctx, "contours and segments must be given together"));
        }
        out.push(ManifestEntry {
            id,
            image,
            ground_truths: gts,
            contours,
            segments,
        });
    }
    let mut ids: Vec<&str> = out.iter().map(|e| e.id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::parse("manifest", format!("duplicate id {:?}", w[0])));
    }
    Ok(out)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Image, annotations and optional label maps held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedImage {
    pub id: String,
    pub image: RgbImage,
    pub ground_truths: Vec<FgGroundTruth>,
    /// `(contours, segments)`.
    pub labels: Option<(LabelMap, LabelMap)>,
}

impl LoadedImage {
    pub fn load(e: &ManifestEntry) -> Result<Self> {
        let image = RgbImage::read_ppm(&e.image)?;
        let ground_truths = e
            .ground_truths
            .iter()
            .map(|p| read_signed_map(p).map(|m| load_ground_truth(&m)))
            .collect::<Result<Vec<_>>>()?;
        let labels = match (&e.contours, &e.segments) {
            (Some(c), Some(s)) => Some((read_label_map(c)?, read_label_map(s)?)),
            _ => None,
        };
        let img = Self {
            id: e.id.clone(),
            image,
            ground_truths,
            labels,
        };
        img.check_dims()?;
        Ok(img)
    }

    fn check_dims(&self) -> Result<()> {
        let dims = self.image.dims();
        let bad_gt = self.ground_truths.iter().any(|g| g.dims() != dims);
        let bad_labels = self
            .labels
            .as_ref()
            .is_some_and(|(c, s)| c.dims() != dims || s.dims() != dims);
        if bad_gt || bad_labels {
            return Err(Error::Dimension(format!("{}: annotations do not match image dims {dims:?}", self.id)));
        }
        Ok(())
    }

    fn label_refs(&self) -> Option<(&LabelMap, &LabelMap)> {
        self.labels.as_ref().map(|(c, s)| (c, s))
    }
}

/// Everything needed to score one image under any cue weights.
#[derive(Debug, Clone)]
pub struct PreparedImage {
    pub id: String,
    pub cache: EvalCache,
    pub ground_truths: Vec<FgGroundTruth>,
    pub junctions: usize,
    pub has_labels: bool,
}

impl PreparedImage {
    /// Runs the filtering stages once. Without label maps the T-junction
    /// term is left out, even if `needs` asks for it.
    pub fn new(img: &LoadedImage, params: &ModelParams, w_opp: f64, mut needs: Needs, radius: usize) -> Result<Self> {
        img.check_dims()?;
        if img.labels.is_none() {
            needs.tj = false;
        }
        let comps = Components::compute(&img.image, img.label_refs(), params, w_opp, needs)?;
        let cache = EvalCache::new(&comps, &query_points(&img.ground_truths, radius))?;
        Ok(Self {
            id: img.id.clone(),
            cache,
            ground_truths: img.ground_truths.clone(),
            junctions: comps.junctions.len(),
            has_labels: img.labels.is_some(),
        })
    }

    /// Scores under `w`; images without label maps fall back to
    /// [`ModelWeights::without_tj`].
    pub fn score(&self, w: &ModelWeights, radius: usize) -> Result<ImageScore> {
        let w = if self.has_labels { *w } else { w.without_tj() };
        let f = SparseFinal {
            cache: &self.cache,
            values: self.cache.evaluate(&w)?,
        };
        score_image(&self.id, &f, &self.ground_truths, radius)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub images: Vec<ImageScore>,
    /// Correct decisions over all boundary pixels of all images.
    pub aggregate: f64,
    pub per_image_mean: f64,
    /// Sample standard deviation of the per-image accuracies.
    pub std_dev: f64,
    pub p_value: Option<f64>,
}

impl EvalReport {
    pub fn from_scores(images: Vec<ImageScore>) -> Result<Self> {
        let (mut correct, mut total) = (0.0, 0usize);
        for s in &images {
            if s.accuracy().is_none() {
                log::warn!("{}: empty ground truth, excluded", s.id);
                continue;
            }
            for g in &s.per_gt {
                correct += g.correct();
                total += g.total();
            }
        }
        let accs: Vec<f64> = images.iter().filter_map(ImageScore::accuracy).collect();
        if accs.is_empty() {
            return Err(Error::Argument("no image has a non-empty ground truth".into()));
        }
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        let std_dev = if accs.len() > 1 {
            (accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (accs.len() - 1) as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            images,
            aggregate: correct / total as f64,
            per_image_mean: mean,
            std_dev,
            p_value: None,
        })
    }

    /// Every per-decision credit, image by image, for significance tests.
    pub fn credits(&self) -> Vec<f64> {
        self.images
            .iter()
            .flat_map(|s| s.per_gt.iter().flat_map(|g| g.credits.iter().copied()))
            .collect()
    }

    /// p-value of `self` beating `other`, and records it.
    pub fn compare(&mut self, other: &EvalReport) -> Result<f64> {
        let p = right_tailed_t_test(&self.credits(), &other.credits())?;
        self.p_value = Some(p);
        Ok(p)
    }

    pub fn to_text(&self, label: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {label}");
        let _ = writeln!(s, "{:<24} {:>9} {:>9} {:>6}", "image", "fgca", "pixels", "ties");
        for img in &self.images {
            let acc = img.accuracy().map_or("n/a".to_string(), |a| format!("{:.4}", a * 100.0));
            let _ = writeln!(s, "{:<24} {:>9} {:>9} {:>6}", img.id, acc, img.boundary_pixels(), img.ties());
        }
        let _ = writeln!(s, "aggregate {:.4}%  per-image mean {:.4}%  std {:.4}", self.aggregate * 100.0, self.per_image_mean * 100.0, self.std_dev);
        if let Some(p) = self.p_value {
            let _ = writeln!(s, "p-value {p:.6e}");
        }
        s
    }

    pub fn to_key_values(&self, label: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "model={label}");
        let _ = writeln!(s, "images={}", self.images.len());
        let _ = writeln!(s, "aggregate_fgca={}", self.aggregate);
        let _ = writeln!(s, "per_image_mean_fgca={}", self.per_image_mean);
        let _ = writeln!(s, "std_dev={}", self.std_dev);
        if let Some(p) = self.p_value {
            let _ = writeln!(s, "p_value={p}");
        }
        for img in &self.images {
            let acc = img.accuracy().map_or("nan".to_string(), |a| a.to_string());
            let _ = writeln!(s, "image.{}={} {} {}", img.id, acc, img.boundary_pixels(), img.ties());
        }
        s
    }
}

pub fn evaluate(prepared: &[PreparedImage], w: &ModelWeights, radius: usize) -> Result<EvalReport> {
    let scores = exec::map_slice(prepared, |p| p.score(w, radius))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    EvalReport::from_scores(scores)
}

/// Grid search of the free cue weights maximizing the aggregate FGCA.
pub fn tune(
    prepared: &[PreparedImage],
    free: &[Alpha],
    base: &ModelWeights,
    search: &SearchParams,
    radius: usize,
) -> Result<SearchResult> {
    if prepared.is_empty() {
        return Err(Error::Argument("cannot tune on an empty training set".into()));
    }
    grid_search_weights(free, search, |a| {
        let w = ModelWeights {
            alpha_ref: a[0],
            alpha_sa: a[1],
            alpha_tj: a[2],
            ..*base
        };
        Ok(evaluate(prepared, &w, radius)?.aggregate)
    })
}
