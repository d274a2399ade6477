//! File exports of final maps and their 8-bit visualizations.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::eval::{decide_figure, decision_credit, FgGroundTruth, FinalLookup};
use crate::grid::write_feature_map;
use crate::oriented::{direction_angle, OrientedPairSet};

/// Gray level of pixels outside the ground-truth boundary.
pub const BACKGROUND: u8 = 128;
/// Gray level of boundary pixels whose decision is a tie.
pub const TIE: u8 = 64;

/// 8-bit single-channel raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u8>,
}

impl GrayImage {
    pub fn filled(rows: usize, cols: usize, v: u8) -> Self {
        Self {
            rows,
            cols,
            data: vec![v; rows * cols],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.cols + col]
    }

    /// Binary (P5) PGM.
    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut bytes = format!("P5\n{} {}\n255\n", self.cols, self.rows).into_bytes();
        bytes.extend_from_slice(&self.data);
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }
}

pub fn final_map_file(theta_index: usize, side: crate::oriented::Side) -> String {
    format!("final_t{theta_index}_{side}.fm1")
}

/// Writes the 16 maps as FM1 files plus `index.txt`, one key=value line per
/// map in slot order. Returns the index path.
pub fn write_final_maps(dir: impl AsRef<Path>, f: &OrientedPairSet) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (rows, cols) = f.dims();
    let mut index = format!("rows={rows} cols={cols} maps=16\n");
    for (slot, (i, side, map)) in f.iter().enumerate() {
        let name = final_map_file(i, side);
        write_feature_map(dir.join(&name), map)?;
        let deg = direction_angle(i, side).to_degrees().rem_euclid(360.0);
        let _ = writeln!(index, "slot={slot} theta_index={i} side={side} direction_deg={deg} file={name}");
    }
    let path = dir.join("index.txt");
    fs::write(&path, index).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Figure direction as gray level: 0 where every response is zero,
/// otherwise `1 + round(254 * angle / 360)` for the strongest direction
/// (angle in degrees, y down, lowest slot on ties).
pub fn direction_image(f: &OrientedPairSet) -> GrayImage {
    let (rows, cols) = f.dims();
    let mut img = GrayImage::filled(rows, cols, 0);
    for r in 0..rows {
        for c in 0..cols {
            let Some(v) = f.values(r, c) else { continue };
            let (slot, best) = v
                .iter()
                .enumerate()
                .fold((0, 0.0), |acc, (k, &x)| if x > acc.1 { (k, x) } else { acc });
            if best > 0.0 {
                let side = crate::oriented::Side::BOTH[slot % 2];
                let deg = direction_angle(slot / 2, side).to_degrees().rem_euclid(360.0);
                img.data[r * cols + c] = 1 + (254.0 * deg / 360.0).round() as u8;
            }
        }
    }
    img
}

/// White where the decision at a boundary pixel is correct, black where it
/// is wrong, [`TIE`] for ties and [`BACKGROUND`] elsewhere.
pub fn correctness_image(f: &impl FinalLookup, gt: &FgGroundTruth, radius: usize) -> Result<GrayImage> {
    if f.dims() != gt.dims() {
        return Err(Error::Dimension(format!(
            "final maps {:?} vs ground truth {:?}",
            f.dims(),
            gt.dims()
        )));
    }
    let (rows, cols) = gt.dims();
    let mut img = GrayImage::filled(rows, cols, BACKGROUND);
    for rec in &gt.records {
        let credit = decision_credit(decide_figure(f, rec.x, rec.y, radius), rec.nx, rec.ny);
        img.data[rec.y * cols + rec.x] = match credit {
            c if c >= 1.0 => 255,
            c if c <= 0.0 => 0,
            _ => TIE,
        };
    }
    Ok(img)
}
