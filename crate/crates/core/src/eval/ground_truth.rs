//! Signed figure/ground label maps and the boundary records derived from them.
//!
//! Text format: `SM1 <rows> <cols>` (an `LM1` header is also accepted)
//! followed by row-major cells in `{-1, 0, 1}`. `+1` marks the figure side
//! of a boundary, `-1` the ground side.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::parse_grid_text;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedMap {
    rows: usize,
    cols: usize,
    data: Vec<i8>,
}

impl SignedMap {
    pub fn new(rows: usize, cols: usize, data: Vec<i8>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Dimension(format!("{} cells for a {rows}x{cols} signed map", data.len())));
        }
        if let Some(v) = data.iter().find(|v| !(-1..=1).contains(*v)) {
            return Err(Error::Argument(format!("signed map value {v}")));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: i8) {
        assert!((-1..=1).contains(&v), "signed map value {v}");
        self.data[row * self.cols + col] = v;
    }

    fn get_signed(&self, row: isize, col: isize) -> Option<i8> {
        if row < 0 || col < 0 || row as usize >= self.rows || col as usize >= self.cols {
            None
        } else {
            Some(self.get(row as usize, col as usize))
        }
    }
}

pub fn format_signed_map(map: &SignedMap) -> String {
    let mut s = String::with_capacity(map.data.len() * 3 + 32);
    let _ = writeln!(s, "SM1 {} {}", map.rows, map.cols);
    for row in map.data.chunks(map.cols) {
        let line: Vec<String> = row.iter().map(i8::to_string).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

pub fn parse_signed_map(text: &str) -> Result<SignedMap> {
    let (_, rows, cols, body) = parse_grid_text(text, &["SM1", "LM1"], "signed map")?;
    let data = body
        .iter()
        .map(|t| match *t {
            "-1" => Ok(-1),
            "0" => Ok(0),
            "1" | "+1" => Ok(1),
            other => Err(Error::parse("signed map", format!("value {other:?} is not -1, 0 or 1"))),
        })
        .collect::<Result<Vec<_>>>()?;
    SignedMap::new(rows, cols, data)
}

pub fn read_signed_map(path: impl AsRef<Path>) -> Result<SignedMap> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_signed_map(&text)
}

pub fn write_signed_map(path: impl AsRef<Path>, map: &SignedMap) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_signed_map(map)).map_err(|e| Error::io(path, e))
}

/// A ground-side boundary pixel and the unit normal toward the figure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GtRecord {
    pub x: usize,
    pub y: usize,
    pub nx: f64,
    pub ny: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FgGroundTruth {
    rows: usize,
    cols: usize,
    pub records: Vec<GtRecord>,
}

impl FgGroundTruth {
    pub fn new(rows: usize, cols: usize, records: Vec<GtRecord>) -> Self {
        Self { rows, cols, records }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// One record per `-1` cell with a `+1` cell among its 8 neighbours; the
/// normal is the normalized mean offset to those neighbours. Cells whose
/// offsets cancel carry no direction and are skipped.
pub fn load_ground_truth(map: &SignedMap) -> FgGroundTruth {
    let mut records = Vec::new();
    let mut cancelled = 0usize;
    for y in 0..map.rows {
        for x in 0..map.cols {
            if map.get(y, x) != -1 {
                continue;
            }
            let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    if (dx, dy) != (0, 0) && map.get_signed(y as isize + dy, x as isize + dx) == Some(1) {
                        sx += dx as f64;
                        sy += dy as f64;
                        n += 1;
                    }
                }
            }
            if n == 0 {
                continue;
            }
            let len = sx.hypot(sy);
            if len < 1e-12 {
                cancelled += 1;
                continue;
            }
            records.push(GtRecord {
                x,
                y,
                nx: sx / len,
                ny: sy / len,
            });
        }
    }
    if cancelled > 0 {
        log::debug!("{cancelled} boundary cells had no net figure direction");
    }
    if records.is_empty() {
        log::warn!("ground truth has no figure/ground interface");
    }
    FgGroundTruth::new(map.rows, map.cols, records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_cell_row() {
        let m = SignedMap::new(1, 3, vec![1, -1, 0]).unwrap();
        let gt = load_ground_truth(&m);
        assert_eq!(gt.records, vec![GtRecord { x: 1, y: 0, nx: -1.0, ny: 0.0 }]);
    }

    #[test]
    fn all_zero_is_empty() {
        assert!(load_ground_truth(&SignedMap::zeros(5, 7)).is_empty());
    }

    #[test]
    fn ring_normals_point_inward() {
        // Disk outline marked -1, the ring just inside it +1.
        let (n, c) = (61isize, 30.0);
        let inside = |r: isize, col: isize| ((r as f64 - c).hypot(col as f64 - c)) < 20.0;
        let outline = |r: isize, col: isize| {
            inside(r, col) && [(-1, 0), (1, 0), (0, -1), (0, 1)].iter().any(|(dr, dc)| !inside(r + dr, col + dc))
        };
        let mut m = SignedMap::zeros(n as usize, n as usize);
        for r in 0..n {
            for col in 0..n {
                if outline(r, col) {
                    m.set(r as usize, col as usize, -1);
                } else if inside(r, col) && (-1..=1).any(|dr| (-1..=1).any(|dc| outline(r + dr, col + dc))) {
                    m.set(r as usize, col as usize, 1);
                }
            }
        }
        let gt = load_ground_truth(&m);
        assert!(gt.len() > 100);
        for r in &gt.records {
            let (dx, dy) = (c - r.x as f64, c - r.y as f64);
            let cos = (r.nx * dx + r.ny * dy) / dx.hypot(dy);
            assert!(cos > 25f64.to_radians().cos(), "{r:?}");
            assert!((r.nx.hypot(r.ny) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn text_round_trip_and_errors() {
        let m = SignedMap::new(2, 3, vec![1, -1, 0, 0, 1, -1]).unwrap();
        let text = format_signed_map(&m);
        assert_eq!(parse_signed_map(&text).unwrap(), m);
        assert_eq!(parse_signed_map("LM1 1 2\n-1 +1\n").unwrap().get(0, 1), 1);
        assert!(parse_signed_map("SM1 1 2\n-1 2\n").is_err());
        assert!(parse_signed_map("FM1 1 1\n0\n").is_err());
        assert!(parse_signed_map("SM1 2 2\n0 0 0\n").is_err());
    }
}
