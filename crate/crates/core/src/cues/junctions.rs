//! T-junction detection and figure-side classification from contour and
//! segmentation label maps.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::LabelMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TjParams {
    pub area_mask_radius: usize,
    pub angle_track_length: usize,
    /// Shortest acceptable track when a contour ends early.
    pub min_track_length: usize,
    pub influence_radius: usize,
    pub normal_probe_length: usize,
    pub y_junction_center: f64,
    pub y_junction_band: f64,
    pub arrow_threshold: f64,
    /// Qualifying pixels closer than this (Chebyshev) merge into one junction.
    pub merge_radius: usize,
    /// Radius of the segmentation neighborhood in the candidate test.
    pub region_radius: usize,
}

impl Default for TjParams {
    fn default() -> Self {
        Self {
            area_mask_radius: 6,
            angle_track_length: 7,
            min_track_length: 3,
            influence_radius: 15,
            normal_probe_length: 3,
            y_junction_center: 120.0,
            y_junction_band: 10.0,
            arrow_threshold: 180.0,
            merge_radius: 2,
            region_radius: 2,
        }
    }
}

impl TjParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.area_mask_radius > 0
            && self.angle_track_length >= self.min_track_length
            && self.min_track_length >= 2
            && self.influence_radius > 0
            && (1..=3).contains(&self.normal_probe_length)
            && self.y_junction_band >= 0.0
            && self.arrow_threshold > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid T-junction parameters {self:?}")))
        }
    }
}

/// Location where exactly three contours and three regions meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub x: usize,
    pub y: usize,
    /// Sorted ascending.
    pub contour_ids: [u32; 3],
    /// Sorted ascending.
    pub region_ids: [u32; 3],
}

fn distinct_nonzero(
    map: &LabelMap,
    x: usize,
    y: usize,
    radius: isize,
    disk: bool,
) -> BTreeSet<u32> {
    let mut ids = BTreeSet::new();
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            if disk && dx * dx + dy * dy > radius * radius {
                continue;
            }
            if let Some(v) = map.get_signed(y as isize + dy, x as isize + dx) {
                if v != 0 {
                    ids.insert(v);
                }
            }
        }
    }
    ids
}

fn as_triple(ids: &BTreeSet<u32>) -> Option<[u32; 3]> {
    let v: Vec<u32> = ids.iter().copied().collect();
    <[u32; 3]>::try_from(v).ok()
}

fn check_dims(contours: &LabelMap, segments: &LabelMap) -> Result<()> {
    if contours.dims() != segments.dims() {
        return Err(Error::Argument(format!(
            "contour map {:?} vs segmentation map {:?}",
            contours.dims(),
            segments.dims()
        )));
    }
    Ok(())
}

/// Sum over the candidate's contours of the squared distance to that
/// contour's nearest pixel within the 3x3 window.
fn meeting_cost(contours: &LabelMap, c: &Candidate) -> usize {
    c.contour_ids
        .iter()
        .map(|&id| {
            let mut best = usize::MAX;
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    if contours.get_signed(c.y as isize + dy, c.x as isize + dx) == Some(id) {
                        best = best.min((dx * dx + dy * dy) as usize);
                    }
                }
            }
            best
        })
        .sum()
}

/// Junction candidates in row-major order of their (merged) location.
pub fn find_junction_candidates(
    contours: &LabelMap,
    segments: &LabelMap,
    params: &TjParams,
) -> Result<Vec<Candidate>> {
    check_dims(contours, segments)?;
    let (rows, cols) = contours.dims();
    let mut hits: Vec<Candidate> = Vec::new();
    for y in 0..rows {
        for x in 0..cols {
            let Some(cids) = as_triple(&distinct_nonzero(contours, x, y, 1, false)) else {
                continue;
            };
            let rr = params.region_radius as isize;
            let Some(rids) = as_triple(&distinct_nonzero(segments, x, y, rr, true)) else {
                continue;
            };
            hits.push(Candidate {
                x,
                y,
                contour_ids: cids,
                region_ids: rids,
            });
        }
    }

    // Single-linkage clusters of hits within the merge radius.
    let n = hits.len();
    let mut cluster = vec![usize::MAX; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let link = params.merge_radius;
    for start in 0..n {
        if cluster[start] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        let mut members = vec![start];
        cluster[start] = id;
        let mut queue = VecDeque::from([start]);
        while let Some(a) = queue.pop_front() {
            for b in 0..n {
                if cluster[b] == usize::MAX
                    && hits[a].x.abs_diff(hits[b].x) <= link
                    && hits[a].y.abs_diff(hits[b].y) <= link
                {
                    cluster[b] = id;
                    members.push(b);
                    queue.push_back(b);
                }
            }
        }
        members.sort_unstable();
        clusters.push(members);
    }

    // A cluster whose members see more than three contours or regions in
    // total straddles a higher-order junction and is dropped.
    let consistent = |members: &Vec<usize>| {
        let cids: BTreeSet<u32> = members.iter().flat_map(|&m| hits[m].contour_ids).collect();
        let rids: BTreeSet<u32> = members.iter().flat_map(|&m| hits[m].region_ids).collect();
        cids.len() == 3 && rids.len() == 3
    };
    let mut out: Vec<Candidate> = clusters
        .iter()
        .filter(|m| consistent(m))
        .map(|members| {
            let k = members.len() as f64;
            let cx = members.iter().map(|&m| hits[m].x as f64).sum::<f64>() / k;
            let cy = members.iter().map(|&m| hits[m].y as f64).sum::<f64>() / k;
            let centroid = |m: usize| (hits[m].x as f64 - cx).powi(2) + (hits[m].y as f64 - cy).powi(2);
            // The centroid leans toward the narrow sectors, so the junction
            // is the member closest to all three contours, nearest the
            // centroid among equals.
            let key = |m: usize| (meeting_cost(contours, &hits[m]), centroid(m));
            let best = members
                .iter()
                .copied()
                .min_by(|&a, &b| key(a).partial_cmp(&key(b)).expect("finite"))
                .expect("non-empty cluster");
            hits[best]
        })
        .collect();
    out.sort_by_key(|c| (c.y, c.x));
    Ok(out)
}

/// Outcome of the area rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AreaOutcome {
    Figure { region: u32, hat: (u32, u32) },
    Tie,
}

fn malformed(c: &Candidate, reason: impl Into<String>) -> Error {
    Error::MalformedCandidate {
        x: c.x,
        y: c.y,
        reason: reason.into(),
    }
}

fn disk_offsets(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let mut v = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                v.push((dx, dy));
            }
        }
    }
    v
}

/// Pixel counts of the candidate's three regions inside the area disk.
pub fn region_counts(segments: &LabelMap, cand: &Candidate, params: &TjParams) -> [usize; 3] {
    let mut counts = [0usize; 3];
    for (dx, dy) in disk_offsets(params.area_mask_radius) {
        if let Some(v) = segments.get_signed(cand.y as isize + dy, cand.x as isize + dx) {
            if let Some(k) = cand.region_ids.iter().position(|&id| id == v) {
                counts[k] += 1;
            }
        }
    }
    counts
}

/// Largest region inside the disk is the figure; the hat is the pair of
/// contours that most consistently border it.
pub fn classify_junction_area(
    contours: &LabelMap,
    segments: &LabelMap,
    cand: &Candidate,
    params: &TjParams,
) -> Result<AreaOutcome> {
    check_dims(contours, segments)?;
    let counts = region_counts(segments, cand, params);
    if let Some(k) = counts.iter().position(|&n| n == 0) {
        return Err(malformed(
            cand,
            format!("region {} absent from area disk", cand.region_ids[k]),
        ));
    }
    let best = *counts.iter().max().expect("three counts");
    if counts.iter().filter(|&&n| n == best).count() > 1 {
        return Ok(AreaOutcome::Tie);
    }
    let winner = cand.region_ids[counts.iter().position(|&n| n == best).expect("max exists")];

    // Fraction of each contour's disk pixels that touch the figure region.
    let mut touching = [0usize; 3];
    let mut total = [0usize; 3];
    for (dx, dy) in disk_offsets(params.area_mask_radius) {
        let (y, x) = (cand.y as isize + dy, cand.x as isize + dx);
        let Some(cid) = contours.get_signed(y, x) else {
            continue;
        };
        let Some(k) = cand.contour_ids.iter().position(|&id| id == cid) else {
            continue;
        };
        total[k] += 1;
        let touches = (-1..=1).any(|ey| {
            (-1..=1).any(|ex| segments.get_signed(y + ey, x + ex) == Some(winner))
        });
        if touches {
            touching[k] += 1;
        }
    }
    if let Some(k) = total.iter().position(|&n| n == 0) {
        return Err(malformed(
            cand,
            format!("contour {} absent from area disk", cand.contour_ids[k]),
        ));
    }
    let frac: Vec<f64> = (0..3).map(|k| touching[k] as f64 / total[k] as f64).collect();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| frac[b].total_cmp(&frac[a]).then(a.cmp(&b)));
    Ok(AreaOutcome::Figure {
        region: winner,
        hat: ordered_pair(cand.contour_ids[order[0]], cand.contour_ids[order[1]]),
    })
}

fn ordered_pair(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

/// Why a junction does not contribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rejection {
    #[default]
    None,
    YJunction,
    ArrowJunction,
    Tie,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rejection::None => "none",
            Rejection::YJunction => "yJunction",
            Rejection::ArrowJunction => "arrowJunction",
            Rejection::Tie => "tie",
        })
    }
}

impl FromStr for Rejection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Rejection::None),
            "yJunction" => Ok(Rejection::YJunction),
            "arrowJunction" => Ok(Rejection::ArrowJunction),
            "tie" => Ok(Rejection::Tie),
            other => Err(Error::parse("junction record", format!("rejection {other:?}"))),
        }
    }
}

/// Outcome of the angle rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleOutcome {
    /// Sector angles in degrees between consecutive contour directions,
    /// in ascending order of the directions' polar angle; they sum to 360.
    pub sectors: [f64; 3],
    pub hat: Option<(u32, u32)>,
    pub rejection: Rejection,
}

/// Applies the sector rule to three direction vectors given in degrees.
pub fn classify_directions(ids: [u32; 3], angles_deg: [f64; 3], params: &TjParams) -> AngleOutcome {
    let mut order = [0usize, 1, 2];
    let norm = |a: f64| a.rem_euclid(360.0);
    order.sort_by(|&a, &b| norm(angles_deg[a]).total_cmp(&norm(angles_deg[b])).then(a.cmp(&b)));
    let a: Vec<f64> = order.iter().map(|&k| norm(angles_deg[k])).collect();
    let sectors = [a[1] - a[0], a[2] - a[1], 360.0 - (a[2] - a[0])];
    // Sector s is bounded by sorted directions s and s+1 (mod 3).
    let (largest, &span) = sectors
        .iter()
        .enumerate()
        .fold((0, &f64::MIN), |acc, (k, v)| if *v > *acc.1 { (k, v) } else { acc });
    let lo = params.y_junction_center - params.y_junction_band;
    let hi = params.y_junction_center + params.y_junction_band;
    let (hat, rejection) = if span > params.arrow_threshold {
        (None, Rejection::ArrowJunction)
    } else if sectors.iter().all(|&s| (lo..=hi).contains(&s)) {
        (None, Rejection::YJunction)
    } else {
        let p = ids[order[largest]];
        let q = ids[order[(largest + 1) % 3]];
        (Some(ordered_pair(p, q)), Rejection::None)
    };
    AngleOutcome {
        sectors,
        hat,
        rejection,
    }
}

/// Walks along one contour from the junction; returns the end of the track
/// as `(x, y)`.
fn track_contour(
    contours: &LabelMap,
    cand: &Candidate,
    id: u32,
    params: &TjParams,
) -> Result<(f64, f64)> {
    let (jx, jy) = (cand.x as isize, cand.y as isize);
    let d2 = |x: isize, y: isize| (x - jx).pow(2) + (y - jy).pow(2);
    // Seed: the contour's pixel closest to the junction.
    let reach = 2isize;
    let mut seed: Option<(isize, isize)> = None;
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let (x, y) = (jx + dx, jy + dy);
            if contours.get_signed(y, x) == Some(id) && seed.is_none_or(|(sx, sy)| d2(x, y) < d2(sx, sy)) {
                seed = Some((x, y));
            }
        }
    }
    let seed = seed.ok_or_else(|| malformed(cand, format!("contour {id} not near junction")))?;

    let (rows, cols) = contours.dims();
    let mut depth = vec![usize::MAX; rows * cols];
    let at = |x: isize, y: isize| y as usize * cols + x as usize;
    depth[at(seed.0, seed.1)] = 0;
    let mut frontier = vec![seed];
    let target = params.angle_track_length - 1;
    let mut reached = 0;
    while reached < target {
        let mut next = Vec::new();
        for &(x, y) in &frontier {
            for ey in -1..=1 {
                for ex in -1..=1 {
                    let (nx, ny) = (x + ex, y + ey);
                    if contours.get_signed(ny, nx) == Some(id) && depth[at(nx, ny)] == usize::MAX {
                        depth[at(nx, ny)] = reached + 1;
                        next.push((nx, ny));
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_by_key(|&(x, y)| (y, x));
        frontier = next;
        reached += 1;
    }
    if reached + 1 < params.min_track_length {
        return Err(malformed(
            cand,
            format!("contour {id} traceable for only {} px", reached + 1),
        ));
    }
    let far = frontier
        .iter()
        .copied()
        .fold(None::<(isize, isize)>, |best, p| match best {
            Some(b) if d2(b.0, b.1) >= d2(p.0, p.1) => Some(b),
            _ => Some(p),
        })
        .expect("non-empty frontier");
    Ok(((far.0 - jx) as f64, (far.1 - jy) as f64))
}

/// Tracks each contour away from the junction and applies the sector rule.
pub fn classify_junction_angle(
    contours: &LabelMap,
    cand: &Candidate,
    params: &TjParams,
) -> Result<AngleOutcome> {
    let mut angles = [0.0; 3];
    for (k, &id) in cand.contour_ids.iter().enumerate() {
        let (vx, vy) = track_contour(contours, cand, id, params)?;
        if vx == 0.0 && vy == 0.0 {
            return Err(malformed(cand, format!("contour {id} has no direction")));
        }
        angles[k] = vy.atan2(vx).to_degrees();
    }
    Ok(classify_directions(cand.contour_ids, angles, params))
}

/// Fully classified junction.
#[derive(Debug, Clone, PartialEq)]
pub struct TJunction {
    pub x: usize,
    pub y: usize,
    pub contour_ids: [u32; 3],
    pub region_ids: [u32; 3],
    /// Hat pair and figure region from the area rule.
    pub hat_by_area: Option<((u32, u32), u32)>,
    pub hat_by_angle: Option<(u32, u32)>,
    pub angles: [f64; 3],
    pub matched: bool,
    pub rejected: Rejection,
}

impl TJunction {
    pub fn figure_region(&self) -> Option<u32> {
        self.hat_by_area.map(|(_, r)| r)
    }

    /// Hat pair when both rules agree.
    pub fn matched_hat(&self) -> Option<(u32, u32)> {
        if self.matched {
            self.hat_by_angle
        } else {
            None
        }
    }

    /// `x y c1 c2 c3 hat1 hat2 figureRegion matched rejectedReason`.
    pub fn to_record(&self) -> String {
        let (h1, h2) = self
            .hat_by_area
            .map(|(h, _)| h)
            .or(self.hat_by_angle)
            .unwrap_or((0, 0));
        let [c1, c2, c3] = self.contour_ids;
        format!(
            "{} {} {c1} {c2} {c3} {h1} {h2} {} {} {}",
            self.x,
            self.y,
            self.figure_region().unwrap_or(0),
            self.matched,
            self.rejected
        )
    }
}

/// Runs both rules on one candidate.
pub fn classify_junction(
    contours: &LabelMap,
    segments: &LabelMap,
    cand: &Candidate,
    params: &TjParams,
) -> Result<TJunction> {
    let area = classify_junction_area(contours, segments, cand, params)?;
    let angle = classify_junction_angle(contours, cand, params)?;
    let hat_by_area = match area {
        AreaOutcome::Figure { region, hat } => Some((hat, region)),
        AreaOutcome::Tie => None,
    };
    let rejected = match (area, angle.rejection) {
        (_, r @ (Rejection::YJunction | Rejection::ArrowJunction)) => r,
        (AreaOutcome::Tie, _) => Rejection::Tie,
        _ => Rejection::None,
    };
    let matched = rejected == Rejection::None
        && hat_by_area.map(|(h, _)| h) == angle.hat
        && angle.hat.is_some();
    Ok(TJunction {
        x: cand.x,
        y: cand.y,
        contour_ids: cand.contour_ids,
        region_ids: cand.region_ids,
        hat_by_area,
        hat_by_angle: angle.hat,
        angles: angle.sectors,
        matched,
        rejected,
    })
}

/// Detects and classifies every junction; malformed candidates are skipped.
pub fn detect_junctions(
    contours: &LabelMap,
    segments: &LabelMap,
    params: &TjParams,
) -> Result<Vec<TJunction>> {
    params.validate()?;
    let mut out = Vec::new();
    for cand in find_junction_candidates(contours, segments, params)? {
        match classify_junction(contours, segments, &cand, params) {
            Ok(j) => out.push(j),
            Err(e @ Error::MalformedCandidate { .. }) => log::debug!("skipping junction: {e}"),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
