//! Plain-text grid formats.
//!
//! `FM1 <rows> <cols>` followed by `rows` lines of space-separated reals, and
//! `LM1 <rows> <cols>` followed by rows of non-negative integers. Reals are
//! written in shortest round-trip form so a write/read cycle is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{FeatureMap, LabelMap};
use crate::error::{Error, Result};

pub fn format_feature_map(map: &FeatureMap) -> String {
    let mut s = String::with_capacity(map.len() * 8 + 32);
    let _ = writeln!(s, "FM1 {} {}", map.rows(), map.cols());
    for r in 0..map.rows() {
        let mut first = true;
        for v in map.row(r) {
            if !first {
                s.push(' ');
            }
            first = false;
            let _ = write!(s, "{v:?}");
        }
        s.push('\n');
    }
    s
}

pub fn format_label_map(map: &LabelMap) -> String {
    let mut s = String::with_capacity(map.rows() * map.cols() * 3 + 32);
    let _ = writeln!(s, "LM1 {} {}", map.rows(), map.cols());
    for r in 0..map.rows() {
        let row = &map.as_slice()[r * map.cols()..(r + 1) * map.cols()];
        let line: Vec<String> = row.iter().map(u32::to_string).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

/// Splits the header `<magic> <rows> <cols>` off a grid text and returns the
/// dims plus the remaining whitespace-separated tokens.
pub(crate) fn parse_grid_text<'a>(
    text: &'a str,
    magic: &[&str],
    context: &str,
) -> Result<(&'a str, usize, usize, Vec<&'a str>)> {
    let mut tokens = text.split_whitespace();
    let tag = tokens
        .next()
        .ok_or_else(|| Error::parse(context, "empty input"))?;
    if !magic.contains(&tag) {
        return Err(Error::parse(
            context,
            format!("expected header {:?}, found {tag:?}", magic),
        ));
    }
    let mut dim = |name: &str| -> Result<usize> {
        let t = tokens
            .next()
            .ok_or_else(|| Error::parse(context, format!("missing {name}")))?;
        t.parse::<usize>()
            .map_err(|e| Error::parse(context, format!("bad {name} {t:?}: {e}")))
    };
    let rows = dim("rows")?;
    let cols = dim("cols")?;
    let body: Vec<&str> = tokens.collect();
    if body.len() != rows * cols {
        return Err(Error::parse(
            context,
            format!("expected {} values, found {}", rows * cols, body.len()),
        ));
    }
    Ok((tag, rows, cols, body))
}

pub fn parse_feature_map(text: &str) -> Result<FeatureMap> {
    let (_, rows, cols, body) = parse_grid_text(text, &["FM1"], "FM1")?;
    let data = body
        .iter()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| Error::parse("FM1", format!("bad value {t:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    FeatureMap::new(rows, cols, data)
}

pub fn parse_label_map(text: &str) -> Result<LabelMap> {
    let (_, rows, cols, body) = parse_grid_text(text, &["LM1"], "LM1")?;
    let labels = body
        .iter()
        .map(|t| {
            t.parse::<u32>()
                .map_err(|e| Error::parse("LM1", format!("bad label {t:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    LabelMap::new(rows, cols, labels)
}

pub fn read_feature_map(path: impl AsRef<Path>) -> Result<FeatureMap> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_feature_map(&text)
}

pub fn write_feature_map(path: impl AsRef<Path>, map: &FeatureMap) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_feature_map(map)).map_err(|e| Error::io(path, e))
}

pub fn read_label_map(path: impl AsRef<Path>) -> Result<LabelMap> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_label_map(&text)
}

pub fn write_label_map(path: impl AsRef<Path>, map: &LabelMap) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_label_map(map)).map_err(|e| Error::io(path, e))
}
