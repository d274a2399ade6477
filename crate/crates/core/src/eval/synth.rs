//! Synthetic stimuli with exact figure/ground ground truth.
//!
//! Ground truth convention: the outermost pixel ring of each visible figure
//! region is marked `-1` wherever it borders background or a surface further
//! back, and the ring just inside it `+1`, so every record's normal points
//! into the figure.

use std::fmt;
use std::str::FromStr;

use super::ground_truth::{load_ground_truth, FgGroundTruth, SignedMap};
use crate::channels::RgbImage;
use crate::error::{Error, Result};
use crate::grid::{FeatureMap, LabelMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StimulusKind {
    IsolatedSquare,
    OverlappingSquares,
    ShadedEdge,
    Annulus,
}

impl StimulusKind {
    pub const ALL: [StimulusKind; 4] = [
        StimulusKind::IsolatedSquare,
        StimulusKind::OverlappingSquares,
        StimulusKind::ShadedEdge,
        StimulusKind::Annulus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StimulusKind::IsolatedSquare => "isolated-square",
            StimulusKind::OverlappingSquares => "overlapping-squares",
            StimulusKind::ShadedEdge => "shaded-edge",
            StimulusKind::Annulus => "annulus",
        }
    }
}

impl fmt::Display for StimulusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StimulusKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        StimulusKind::ALL
            .into_iter()
            .find(|k| k.name().replace('-', "") == norm)
            .ok_or_else(|| Error::parse("stimulus kind", format!("unknown kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    /// Image side in pixels.
    pub size: usize,
    /// Square side; defaults to `3 * size / 8` when 0.
    pub square: usize,
    /// Amplitude of the shading ramp on the figure side.
    pub gradient: f64,
    /// Annulus outer radius; defaults to `size / 3` when 0.
    pub radius: f64,
    pub inner_radius: Option<f64>,
    pub figure: f64,
    pub ground: f64,
    /// Intensity of the occluded square in the overlapping stimulus.
    pub back: f64,
    /// Mirror the stimulus left-right and top-bottom.
    pub flip: bool,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            size: 64,
            square: 0,
            gradient: 0.0,
            radius: 0.0,
            inner_radius: None,
            figure: 0.8,
            ground: 0.2,
            back: 0.05,
            flip: false,
        }
    }
}

/// A rendered stimulus with its annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct Stimulus {
    pub image: RgbImage,
    pub signed: SignedMap,
    pub ground_truth: FgGroundTruth,
    pub contours: LabelMap,
    pub segments: LabelMap,
}

/// Depth-ordered figure masks (back first) plus per-pixel contour ids.
struct Scene {
    n: usize,
    masks: Vec<Vec<bool>>,
}

impl Scene {
    fn visible(&self, k: usize, idx: usize) -> bool {
        self.masks[k][idx] && !self.masks[k + 1..].iter().any(|m| m[idx])
    }

    fn in_front(&self, k: usize, idx: usize) -> bool {
        self.masks[k + 1..].iter().any(|m| m[idx])
    }

    fn neighbors(&self, idx: usize, diag: bool) -> impl Iterator<Item = Option<usize>> + '_ {
        let n = self.n as isize;
        let (r, c) = ((idx / self.n) as isize, (idx % self.n) as isize);
        let offs: &[(isize, isize)] = if diag {
            &[(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
        } else {
            &[(-1, 0), (0, -1), (0, 1), (1, 0)]
        };
        offs.iter().map(move |&(dr, dc)| {
            let (rr, cc) = (r + dr, c + dc);
            (rr >= 0 && cc >= 0 && rr < n && cc < n).then(|| (rr * n + cc) as usize)
        })
    }

    /// Visible pixels of figure `k` with a 4-neighbour that is not visible
    /// figure `k` and not part of a nearer figure. The image border counts
    /// as background.
    fn owned_outline(&self, k: usize) -> Vec<bool> {
        (0..self.n * self.n)
            .map(|idx| {
                self.visible(k, idx)
                    && self.neighbors(idx, false).any(|q| match q {
                        None => false,
                        Some(q) => !self.visible(k, q) && !self.in_front(k, q),
                    })
            })
            .collect()
    }

    fn signed_map(&self) -> Result<SignedMap> {
        let mut signed = SignedMap::zeros(self.n, self.n);
        let mut inner_marks = Vec::new();
        for k in 0..self.masks.len() {
            let outline = self.owned_outline(k);
            for (idx, &o) in outline.iter().enumerate() {
                if o {
                    signed.set(idx / self.n, idx % self.n, -1);
                }
            }
            for idx in 0..self.n * self.n {
                if outline[idx] || !self.visible(k, idx) {
                    continue;
                }
                let touches_outline = self.neighbors(idx, true).flatten().any(|q| outline[q]);
                let touches_front = self.neighbors(idx, true).flatten().any(|q| self.in_front(k, q));
                if touches_outline && !touches_front {
                    inner_marks.push(idx);
                }
            }
        }
        for idx in inner_marks {
            if signed.get(idx / self.n, idx % self.n) == 0 {
                signed.set(idx / self.n, idx % self.n, 1);
            }
        }
        Ok(signed)
    }
}

fn mask(n: usize, f: impl Fn(usize, usize) -> bool) -> Vec<bool> {
    (0..n * n).map(|i| f(i / n, i % n)).collect()
}

fn gray(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<RgbImage> {
    RgbImage::gray(FeatureMap::from_fn(n, n, |r, c| f(r, c).clamp(0.0, 1.0)))
}

fn flip_labels(m: &LabelMap) -> LabelMap {
    let (rows, cols) = m.dims();
    LabelMap::from_fn(rows, cols, |r, c| m.get(rows - 1 - r, cols - 1 - c))
}

fn flip_signed(m: &SignedMap) -> SignedMap {
    let (rows, cols) = m.dims();
    let mut out = SignedMap::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            out.set(r, c, m.get(rows - 1 - r, cols - 1 - c));
        }
    }
    out
}

fn flip_image(img: &RgbImage) -> Result<RgbImage> {
    let (rows, cols) = img.dims();
    RgbImage::from_fn(rows, cols, |r, c| img.pixel(rows - 1 - r, cols - 1 - c))
}

pub fn generate_synthetic_stimulus(kind: StimulusKind, p: &SynthParams) -> Result<Stimulus> {
    let n = p.size;
    if n < 32 {
        return Err(Error::Argument(format!("stimulus size {n} is below 32")));
    }
    if !(0.0..=1.0).contains(&p.figure) || !(0.0..=1.0).contains(&p.ground) || !(0.0..=1.0).contains(&p.back) {
        return Err(Error::Argument("stimulus intensities must lie in [0, 1]".into()));
    }
    if !p.gradient.is_finite() {
        return Err(Error::Argument(format!("gradient {}", p.gradient)));
    }
    let (image, scene, contours, segments) = match kind {
        StimulusKind::IsolatedSquare => isolated_square(p)?,
        StimulusKind::OverlappingSquares => overlapping_squares(p)?,
        StimulusKind::ShadedEdge => shaded_edge(p)?,
        StimulusKind::Annulus => annulus(p)?,
    };
    let mut signed = scene.signed_map()?;
    let (mut image, mut contours, mut segments) = (image, contours, segments);
    if p.flip {
        image = flip_image(&image)?;
        signed = flip_signed(&signed);
        contours = flip_labels(&contours);
        segments = flip_labels(&segments);
    }
    let ground_truth = load_ground_truth(&signed);
    Ok(Stimulus {
        image,
        signed,
        ground_truth,
        contours,
        segments,
    })
}

type Parts = (RgbImage, Scene, LabelMap, LabelMap);

fn square_side(p: &SynthParams) -> usize {
    if p.square == 0 {
        3 * p.size / 8
    } else {
        p.square
    }
}

/// Darkening toward the border of a figure region, linear over `width`
/// pixels of distance `d` from its outline.
fn bevel(d: f64, width: f64, amplitude: f64) -> f64 {
    -amplitude * (1.0 - (d / width).min(1.0))
}

fn isolated_square(p: &SynthParams) -> Result<Parts> {
    let n = p.size;
    let s = square_side(p);
    if s < 8 || s + 4 > n {
        return Err(Error::Argument(format!("square side {s} does not fit a {n}-pixel image")));
    }
    let lo = (n - s) / 2;
    let inside = |r: usize, c: usize| (lo..lo + s).contains(&r) && (lo..lo + s).contains(&c);
    let edge_dist = |r: usize, c: usize| (r - lo).min(c - lo).min(lo + s - 1 - r).min(lo + s - 1 - c) as f64;
    let image = gray(n, |r, c| {
        if inside(r, c) {
            p.figure + bevel(edge_dist(r, c), s as f64 / 4.0, p.gradient)
        } else {
            p.ground
        }
    })?;
    let scene = Scene {
        n,
        masks: vec![mask(n, inside)],
    };
    let outline = scene.owned_outline(0);
    let contours = LabelMap::from_fn(n, n, |r, c| u32::from(outline[r * n + c]));
    let segments = LabelMap::from_fn(n, n, |r, c| if inside(r, c) { 2 } else { 1 });
    Ok((image, scene, contours, segments))
}

/// A dark square partly hidden behind a bright one. The front square's
/// outline is split into two contours where the back square's outline meets
/// it, giving two T-junctions.
fn overlapping_squares(p: &SynthParams) -> Result<Parts> {
    let n = p.size;
    let m = n / 6;
    let s = 5 * n / 12;
    let (b0, f0) = (m, n - m - s);
    if f0 <= b0 + 2 || f0 + 2 >= b0 + s {
        return Err(Error::Argument(format!("size {n} leaves no proper overlap")));
    }
    let in_back = |r: usize, c: usize| (b0..b0 + s).contains(&r) && (b0..b0 + s).contains(&c);
    let in_front = |r: usize, c: usize| (f0..f0 + s).contains(&r) && (f0..f0 + s).contains(&c);
    let front_dist = |r: usize, c: usize| (r - f0).min(c - f0).min(f0 + s - 1 - r).min(f0 + s - 1 - c) as f64;
    let image = gray(n, |r, c| {
        if in_front(r, c) {
            p.figure + bevel(front_dist(r, c), s as f64 / 4.0, p.gradient)
        } else if in_back(r, c) {
            p.back
        } else {
            p.ground
        }
    })?;
    let scene = Scene {
        n,
        masks: vec![mask(n, in_back), mask(n, in_front)],
    };
    let back_outline = scene.owned_outline(0);
    let front_outline = scene.owned_outline(1);
    let contours = LabelMap::from_fn(n, n, |r, c| {
        let idx = r * n + c;
        if front_outline[idx] {
            // The stretch of the front outline lying over the back square.
            if in_back(r, c) {
                1
            } else {
                2
            }
        } else if back_outline[idx] {
            3
        } else {
            0
        }
    });
    let segments = LabelMap::from_fn(n, n, |r, c| {
        if in_front(r, c) {
            3
        } else if in_back(r, c) {
            2
        } else {
            1
        }
    });
    Ok((image, scene, contours, segments))
}

/// Horizontal step edge at the middle row, figure below. The figure carries
/// a vertical ramp of amplitude `gradient`; the edge row holds the midpoint
/// of the step so a ramp-free edge is mirror symmetric about it.
fn shaded_edge(p: &SynthParams) -> Result<Parts> {
    let n = p.size;
    let y0 = (n - 1) / 2;
    let span = (n - 1 - y0) as f64;
    let image = gray(n, |r, _| {
        if r < y0 {
            p.ground
        } else if r == y0 {
            0.5 * (p.ground + p.figure)
        } else {
            p.figure - p.gradient * 0.5 * (r - y0) as f64 / span
        }
    })?;
    let below = |r: usize, _c: usize| r >= y0;
    let scene = Scene {
        n,
        masks: vec![mask(n, below)],
    };
    let contours = LabelMap::from_fn(n, n, |r, _| u32::from(r == y0));
    let segments = LabelMap::from_fn(n, n, |r, _| if r >= y0 { 2 } else { 1 });
    Ok((image, scene, contours, segments))
}

/// A bright ring; its figure side faces inward on the outer circle and
/// outward on the inner one.
fn annulus(p: &SynthParams) -> Result<Parts> {
    let n = p.size;
    let outer = if p.radius > 0.0 { p.radius } else { n as f64 / 3.0 };
    let inner = p.inner_radius.unwrap_or(outer / 2.0);
    let c = (n as f64 - 1.0) / 2.0;
    if !(outer + 2.0 < c && inner >= 0.0 && outer - inner >= 5.0) {
        return Err(Error::Argument(format!("annulus radii {inner}..{outer} do not fit a {n}-pixel image")));
    }
    let dist = |r: usize, col: usize| (r as f64 - c).hypot(col as f64 - c);
    let in_ring = |r: usize, col: usize| {
        let d = dist(r, col);
        d >= inner && d < outer
    };
    let width = outer - inner;
    let image = gray(n, |r, col| {
        if in_ring(r, col) {
            let d = dist(r, col);
            p.figure + bevel((d - inner).min(outer - d), width / 2.0, p.gradient)
        } else {
            p.ground
        }
    })?;
    let scene = Scene {
        n,
        masks: vec![mask(n, in_ring)],
    };
    let outline = scene.owned_outline(0);
    let contours = LabelMap::from_fn(n, n, |r, col| {
        if !outline[r * n + col] {
            0
        } else if dist(r, col) > (inner + outer) / 2.0 {
            1
        } else {
            2
        }
    });
    let segments = LabelMap::from_fn(n, n, |r, col| {
        let d = dist(r, col);
        if d < inner {
            3
        } else if d < outer {
            2
        } else {
            1
        }
    });
    Ok((image, scene, contours, segments))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cues::{detect_junctions, find_junction_candidates, TjParams};

    #[test]
    fn isolated_square_records() {
        let p = SynthParams {
            square: 24,
            ..SynthParams::default()
        };
        let s = generate_synthetic_stimulus(StimulusKind::IsolatedSquare, &p).unwrap();
        assert_eq!(s.ground_truth.len(), 92);
        let c = 31.5;
        for r in &s.ground_truth.records {
            let (dx, dy) = (c - r.x as f64, c - r.y as f64);
            assert!(r.nx * dx + r.ny * dy > 0.0, "{r:?}");
        }
        assert_eq!(s.image.dims(), (64, 64));
    }

    #[test]
    fn overlapping_squares_have_two_matched_junctions() {
        let p = SynthParams {
            size: 96,
            ..SynthParams::default()
        };
        let s = generate_synthetic_stimulus(StimulusKind::OverlappingSquares, &p).unwrap();
        let tj = TjParams::default();
        assert_eq!(find_junction_candidates(&s.contours, &s.segments, &tj).unwrap().len(), 2);
        let js = detect_junctions(&s.contours, &s.segments, &tj).unwrap();
        assert_eq!(js.len(), 2);
        for j in &js {
            assert!(j.matched, "{j:?}");
            assert_eq!(j.matched_hat(), Some((1, 2)));
            assert_eq!(j.figure_region(), Some(3));
        }
        // Records exist for both squares and none sit inside the front one
        // away from its outline.
        assert!(s.ground_truth.len() > 200);
    }

    #[test]
    fn shaded_edge_records_point_down() {
        let s = generate_synthetic_stimulus(StimulusKind::ShadedEdge, &SynthParams::default()).unwrap();
        assert_eq!(s.ground_truth.len(), 64);
        assert!(s.ground_truth.records.iter().all(|r| r.ny > 0.0 && r.y == 31));
    }

    #[test]
    fn annulus_normals_point_into_the_ring() {
        let p = SynthParams {
            radius: 20.0,
            ..SynthParams::default()
        };
        let s = generate_synthetic_stimulus(StimulusKind::Annulus, &p).unwrap();
        let c = 31.5;
        let mid = 15.0;
        for r in &s.ground_truth.records {
            let (dx, dy) = (r.x as f64 - c, r.y as f64 - c);
            let radial = (r.nx * dx + r.ny * dy) / dx.hypot(dy);
            if dx.hypot(dy) > mid {
                assert!(radial < -0.9, "{r:?}");
            } else {
                assert!(radial > 0.9, "{r:?}");
            }
        }
    }

    #[test]
    fn flip_mirrors_everything() {
        let p = SynthParams::default();
        let a = generate_synthetic_stimulus(StimulusKind::ShadedEdge, &p).unwrap();
        let b = generate_synthetic_stimulus(StimulusKind::ShadedEdge, &SynthParams { flip: true, ..p }).unwrap();
        assert_eq!(a.ground_truth.len(), b.ground_truth.len());
        assert!(b.ground_truth.records.iter().all(|r| r.ny < 0.0));
        assert_eq!(a.image.pixel(0, 0), b.image.pixel(63, 63));
    }

    #[test]
    fn bad_geometry() {
        let small = SynthParams {
            size: 16,
            ..SynthParams::default()
        };
        assert!(generate_synthetic_stimulus(StimulusKind::IsolatedSquare, &small).is_err());
        let big = SynthParams {
            square: 70,
            ..SynthParams::default()
        };
        assert!(generate_synthetic_stimulus(StimulusKind::IsolatedSquare, &big).is_err());
        assert_eq!("overlapping-squares".parse::<StimulusKind>().unwrap(), StimulusKind::OverlappingSquares);
        assert_eq!("overlappingSquares".parse::<StimulusKind>().unwrap(), StimulusKind::OverlappingSquares);
        assert!("triangle".parse::<StimulusKind>().is_err());
    }
}
