//! Significance testing and seeded dataset splits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, ss)
}

/// Pooled-variance two-sample t statistic and its degrees of freedom.
pub fn pooled_t(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Argument(format!(
            "t-test needs two samples of size >= 2, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (ma, ssa) = mean_var(a);
    let (mb, ssb) = mean_var(b);
    let df = (a.len() + b.len() - 2) as f64;
    let sp2 = (ssa + ssb) / df;
    let se = (sp2 * (1.0 / a.len() as f64 + 1.0 / b.len() as f64)).sqrt();
    if se == 0.0 {
        return Ok((
            if ma > mb {
                f64::INFINITY
            } else if ma < mb {
                f64::NEG_INFINITY
            } else {
                f64::NAN
            },
            df,
        ));
    }
    Ok(((ma - mb) / se, df))
}

/// `P(T >= t)` for the unpaired test of mean(a) > mean(b).
///
/// Both samples constant: the test has no spread to work with. Distinct
/// means are then certain (`p = 0` or `1`); equal means are a degenerate
/// input.
pub fn right_tailed_t_test(a: &[f64], b: &[f64]) -> Result<f64> {
    let (t, df) = pooled_t(a, b)?;
    if t.is_nan() {
        return Err(Error::Degenerate("both samples are constant with equal means".into()));
    }
    if t.is_infinite() {
        return Ok(if t > 0.0 { 0.0 } else { 1.0 });
    }
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Argument(e.to_string()))?;
    Ok(dist.sf(t))
}

/// Seeded shuffle; the first half trains, the rest tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
}

pub fn make_split(ids: &[String], seed: u64) -> Result<SplitSpec> {
    if ids.len() < 2 {
        return Err(Error::Argument(format!("cannot split {} ids", ids.len())));
    }
    let mut shuffled = ids.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = shuffled.split_off(ids.len() / 2);
    Ok(SplitSpec {
        train: shuffled,
        test,
        seed,
    })
}
