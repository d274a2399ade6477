//! Multi-resolution grid search over the cue-weight simplex.
//!
//! Points are kept as integer numerators over a per-round denominator so the
//! incumbent lies exactly on every finer grid.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exec;

/// The three mixing weights, in `ModelWeights::alphas` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Alpha {
    Ref,
    Sa,
    Tj,
}

impl Alpha {
    pub const ALL: [Alpha; 3] = [Alpha::Ref, Alpha::Sa, Alpha::Tj];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Alpha::Ref => "alphaRef",
            Alpha::Sa => "alphaSA",
            Alpha::Tj => "alphaTJ",
        })
    }
}

impl FromStr for Alpha {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "alpharef" | "ref" => Ok(Alpha::Ref),
            "alphasa" | "sa" => Ok(Alpha::Sa),
            "alphatj" | "tj" => Ok(Alpha::Tj),
            other => Err(Error::parse("weight name", format!("unknown weight {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    pub coarse_step: f64,
    /// Stop once the best objective moves by less than this between rounds.
    pub tolerance: f64,
    pub max_rounds: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            coarse_step: 0.1,
            tolerance: 0.005,
            max_rounds: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub round: usize,
    pub step: f64,
    pub alphas: [f64; 3],
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The best objective changed by less than the tolerance.
    Converged,
    MaxRounds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub alphas: [f64; 3],
    pub objective: f64,
    /// Every evaluated point in evaluation order.
    pub trace: Vec<TracePoint>,
    /// Incumbent after each round.
    pub incumbents: Vec<TracePoint>,
    pub stop: StopReason,
    pub final_step: f64,
}

/// Simplex points over `free` with numerators in `[lo_i, hi_i]` summing to
/// `denom`, in lexicographic order.
fn simplex_points(free: usize, denom: i64, lo: &[i64], hi: &[i64]) -> Vec<Vec<i64>> {
    fn rec(k: usize, left: i64, lo: &[i64], hi: &[i64], cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if k + 1 == lo.len() {
            if (lo[k]..=hi[k]).contains(&left) {
                cur.push(left);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        for v in lo[k]..=hi[k].min(left) {
            cur.push(v);
            rec(k + 1, left - v, lo, hi, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    debug_assert_eq!(lo.len(), free);
    rec(0, denom, lo, hi, &mut Vec::with_capacity(free), &mut out);
    out
}

/// Maximizes `objective` over the simplex of the `free` weights (the others
/// stay 0). Grid points are evaluated in parallel; ties keep the earliest
/// point in scan order.
pub fn grid_search_weights<F>(free: &[Alpha], params: &SearchParams, objective: F) -> Result<SearchResult>
where
    F: Fn([f64; 3]) -> Result<f64> + Sync + Send,
{
    let mut free = free.to_vec();
    free.sort();
    free.dedup();
    if free.is_empty() {
        return Err(Error::Argument("grid search needs at least one free weight".into()));
    }
    let steps = (1.0 / params.coarse_step).round();
    if !(params.coarse_step > 0.0 && (steps * params.coarse_step - 1.0).abs() < 1e-9) {
        return Err(Error::Argument(format!("coarse step {} does not divide 1", params.coarse_step)));
    }
    if params.max_rounds == 0 {
        return Err(Error::Argument("grid search needs at least one round".into()));
    }
    let to_alphas = |nums: &[i64], denom: i64| {
        let mut a = [0.0; 3];
        for (w, &n) in free.iter().zip(nums) {
            a[w.index()] = n as f64 / denom as f64;
        }
        a
    };

    let mut denom = steps as i64;
    let mut trace = Vec::new();
    let mut incumbents: Vec<TracePoint> = Vec::new();
    let mut best_nums: Vec<i64> = Vec::new();
    let mut stop = StopReason::MaxRounds;
    for round in 0..params.max_rounds {
        let (lo, hi): (Vec<i64>, Vec<i64>) = if round == 0 {
            (vec![0; free.len()], vec![denom; free.len()])
        } else {
            // Refine within one previous step of the incumbent.
            denom *= 2;
            best_nums.iter_mut().for_each(|n| *n *= 2);
            best_nums.iter().map(|&n| ((n - 2).max(0), (n + 2).min(denom))).unzip()
        };
        let points = simplex_points(free.len(), denom, &lo, &hi);
        let values = exec::map_slice(&points, |p| objective(to_alphas(p, denom)))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let step = 1.0 / denom as f64;
        let mut round_best: Option<(usize, f64)> = None;
        for (k, (p, &v)) in points.iter().zip(&values).enumerate() {
            if !v.is_finite() {
                return Err(Error::Argument(format!("objective is {v} at {:?}", to_alphas(p, denom))));
            }
            trace.push(TracePoint {
                round,
                step,
                alphas: to_alphas(p, denom),
                objective: v,
            });
            if round_best.is_none_or(|(_, b)| v > b) {
                round_best = Some((k, v));
            }
        }
        let (k, v) = round_best.expect("every round has a point");
        // The incumbent is always on the refined grid, so v never drops.
        best_nums = points[k].clone();
        let prev = incumbents.last().map(|t| t.objective);
        incumbents.push(TracePoint {
            round,
            step,
            alphas: to_alphas(&best_nums, denom),
            objective: v,
        });
        if let Some(prev) = prev {
            if (v - prev).abs() < params.tolerance {
                stop = StopReason::Converged;
                break;
            }
        }
    }
    let last = *incumbents.last().expect("at least one round");
    Ok(SearchResult {
        alphas: last.alphas,
        objective: last.objective,
        trace,
        final_step: last.step,
        incumbents,
        stop,
    })
}
