use super::{bilinear, FeatureMap};
use crate::error::{Error, Result};
use crate::exec;

/// Ranges at or below this (relative to the map's magnitude, floor 1) are
/// treated as flat by [`rescale_to_range`].
const FLAT_EPS: f64 = 1e-12;

/// Relative tolerance for the strict local-maximum test in [`normalize_map`].
const PEAK_EPS: f64 = 1e-9;

/// 2D correlation with replicate-edge padding, anchored at the kernel centre.
///
/// The kernel must have odd dims and be no larger than the input.
pub fn correlate2d(input: &FeatureMap, kernel: &FeatureMap) -> Result<FeatureMap> {
    if kernel.rows() > input.rows() || kernel.cols() > input.cols() {
        return Err(Error::Dimension(format!(
            "kernel {}x{} larger than input {}x{}",
            kernel.rows(),
            kernel.cols(),
            input.rows(),
            input.cols()
        )));
    }
    correlate_replicate(input, kernel)
}

/// Same as [`correlate2d`] without the size restriction: replicate padding is
/// well defined for any kernel extent, which the coarse pyramid levels need.
pub fn correlate_replicate(input: &FeatureMap, kernel: &FeatureMap) -> Result<FeatureMap> {
    if kernel.rows().is_multiple_of(2) || kernel.cols().is_multiple_of(2) {
        return Err(Error::Argument(format!(
            "kernel dims must be odd, got {}x{}",
            kernel.rows(),
            kernel.cols()
        )));
    }
    let (rows, cols) = input.dims();
    let (kr, kc) = kernel.dims();
    let (hr, hc) = (kr / 2, kc / 2);
    let pcols = cols + 2 * hc;
    let prows = rows + 2 * hr;

    let mut padded = Vec::with_capacity(prows * pcols);
    for pr in 0..prows {
        let r = pr.saturating_sub(hr).min(rows - 1);
        let src = input.row(r);
        for pc in 0..pcols {
            let c = pc.saturating_sub(hc).min(cols - 1);
            padded.push(src[c]);
        }
    }

    let k = kernel.as_slice();
    let mut out = vec![0.0; rows * cols];
    exec::for_each_row(&mut out, cols, |r, out_row| {
        for (c, o) in out_row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for u in 0..kr {
                let prow = &padded[(r + u) * pcols + c..(r + u) * pcols + c + kc];
                let krow = &k[u * kc..(u + 1) * kc];
                for (a, b) in krow.iter().zip(prow) {
                    acc += a * b;
                }
            }
            *o = acc;
        }
    });
    Ok(FeatureMap::from_vec(rows, cols, out))
}

/// Corner-aligned bilinear resampling to `target_rows x target_cols`.
///
/// Output cell `i` samples source coordinate `i * (n_src - 1) / (n_dst - 1)`;
/// a single-cell target axis samples the source centre.
pub fn resample(input: &FeatureMap, target_rows: usize, target_cols: usize) -> Result<FeatureMap> {
    if target_rows == 0 || target_cols == 0 {
        return Err(Error::Argument(format!(
            "resample target {target_rows}x{target_cols}"
        )));
    }
    if input.dims() == (target_rows, target_cols) {
        return Ok(input.clone());
    }
    let (rows, cols) = input.dims();
    let col_coords: Vec<f64> = (0..target_cols).map(|j| resample_coord(j, target_cols, cols)).collect();
    let mut out = vec![0.0; target_rows * target_cols];
    exec::for_each_row(&mut out, target_cols, |i, out_row| {
        let r = resample_coord(i, target_rows, rows);
        for (o, &c) in out_row.iter_mut().zip(&col_coords) {
            *o = bilinear(input, r, c);
        }
    });
    Ok(FeatureMap::from_vec(target_rows, target_cols, out))
}

/// Source coordinate sampled by output cell `i` of a resampled axis.
#[inline]
pub(crate) fn resample_coord(i: usize, n_dst: usize, n_src: usize) -> f64 {
    if n_dst == 1 {
        (n_src - 1) as f64 / 2.0
    } else {
        i as f64 * (n_src - 1) as f64 / (n_dst - 1) as f64
    }
}

/// Affine map of `[min, max]` onto `[0, m]`. A flat map becomes all zeros.
pub fn rescale_to_range(input: &FeatureMap, m: f64) -> FeatureMap {
    let lo = input.min();
    let hi = input.max();
    let range = hi - lo;
    if range <= FLAT_EPS * hi.abs().max(lo.abs()).max(1.0) {
        return FeatureMap::zeros(input.rows(), input.cols());
    }
    input.map(|v| ((v - lo) / range * m).clamp(0.0, m))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationParams {
    /// Top of the common range.
    pub m: f64,
    /// Odd window side for the local-maximum test.
    pub local_max_window: usize,
}

impl Default for NormalizationParams {
    fn default() -> Self {
        Self {
            m: 1.0,
            local_max_window: 3,
        }
    }
}

impl NormalizationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::Argument(format!("normalization top M = {}", self.m)));
        }
        if self.local_max_window < 3 || self.local_max_window.is_multiple_of(2) {
            return Err(Error::Argument(format!(
                "local-maximum window {} must be odd and >= 3",
                self.local_max_window
            )));
        }
        Ok(())
    }
}

/// Peak-promoting normalization: rescale to `[0, M]`, then multiply by
/// `(M - mean_other_peaks)^2`, where the mean runs over local maxima other
/// than one instance of the global one.
///
/// A local maximum is a plateau: a window-connected set of cells within
/// `1e-9 * M` of each other whose every other window neighbour is lower by
/// more than that margin. An isolated cell is the one-cell case. Each plateau
/// counts once, so a flat ridge competes like a point peak of the same
/// height. The margin is also the minimum peak height.
pub fn normalize_map(input: &FeatureMap, params: &NormalizationParams) -> FeatureMap {
    let m = params.m;
    let scaled = rescale_to_range(input, m);
    let global = scaled.max();
    if global <= 0.0 {
        return scaled;
    }
    let peaks = local_maxima(&scaled, params.local_max_window, PEAK_EPS * m);
    let mut excluded_global = false;
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in peaks {
        if !excluded_global && v == global {
            excluded_global = true;
            continue;
        }
        sum += v;
        count += 1;
    }
    let mean_other = if count == 0 { 0.0 } else { sum / count as f64 };
    let factor = (m - mean_other) * (m - mean_other);
    scaled.scale(factor)
}

/// Heights of plateau maxima, ordered by the row-major position of the
/// first cell of each plateau.
fn local_maxima(map: &FeatureMap, window: usize, margin: f64) -> Vec<f64> {
    let h = (window / 2) as isize;
    let (rows, cols) = (map.rows() as isize, map.cols() as isize);
    let at = |r: isize, c: isize| map.get(r as usize, c as usize);
    let neighbours = move |r: isize, c: isize| {
        (-h..=h)
            .flat_map(move |dr| (-h..=h).map(move |dc| (r + dr, c + dc)))
            .filter(move |&(rr, cc)| (rr, cc) != (r, c) && rr >= 0 && cc >= 0 && rr < rows && cc < cols)
    };
    let mut visited = vec![false; map.len()];
    let idx = |r: isize, c: isize| (r * cols + c) as usize;
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let seed = at(r, c);
            if visited[idx(r, c)] || seed <= margin {
                continue;
            }
            // Grow the plateau of cells within the margin of the seed.
            visited[idx(r, c)] = true;
            stack.push((r, c));
            let mut is_peak = true;
            let mut top = seed;
            while let Some((pr, pc)) = stack.pop() {
                top = top.max(at(pr, pc));
                for (nr, nc) in neighbours(pr, pc) {
                    let v = at(nr, nc);
                    if (v - seed).abs() <= margin {
                        if !visited[idx(nr, nc)] {
                            visited[idx(nr, nc)] = true;
                            stack.push((nr, nc));
                        }
                    } else if v > seed {
                        is_peak = false;
                    }
                }
            }
            if is_peak {
                out.push(top);
            }
        }
    }
    out
}

/// Resamples every level to the target dims and sums them in list order.
pub fn cross_scale_sum(
    levels: &[FeatureMap],
    target_rows: usize,
    target_cols: usize,
) -> Result<FeatureMap> {
    if levels.is_empty() {
        return Err(Error::Argument("cross-scale sum of no levels".into()));
    }
    let resampled = exec::map_slice(levels, |l| resample(l, target_rows, target_cols));
    let mut acc = FeatureMap::zeros(target_rows, target_cols);
    for level in resampled {
        acc.add_assign(&level?)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_map(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> FeatureMap {
        FeatureMap::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    /// Quadruple loop with explicit clamping, written independently of the
    /// padded-buffer implementation.
    fn correlate_oracle(input: &FeatureMap, kernel: &FeatureMap) -> FeatureMap {
        let (rows, cols) = input.dims();
        let (kr, kc) = kernel.dims();
        FeatureMap::from_fn(rows, cols, |r, c| {
            let mut acc = 0.0;
            for u in 0..kr {
                for v in 0..kc {
                    let rr = (r as isize + u as isize - (kr / 2) as isize)
                        .clamp(0, rows as isize - 1) as usize;
                    let cc = (c as isize + v as isize - (kc / 2) as isize)
                        .clamp(0, cols as isize - 1) as usize;
                    acc += kernel.get(u, v) * input.get(rr, cc);
                }
            }
            acc
        })
    }

    #[test]
    fn identity_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_map(&mut rng, 7, 9);
        let k = FeatureMap::filled(1, 1, 1.0);
        assert_eq!(correlate2d(&x, &k).unwrap(), x);
    }

    #[test]
    fn constant_map_times_kernel_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = FeatureMap::filled(10, 12, 0.7);
        let k = random_map(&mut rng, 5, 3);
        let out = correlate2d(&x, &k).unwrap();
        let expect = 0.7 * k.sum();
        for &v in out.as_slice() {
            assert!((v - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_nested_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_map(&mut rng, 8, 8);
        let k = random_map(&mut rng, 3, 3);
        let got = correlate2d(&x, &k).unwrap();
        assert!(got.max_abs_diff(&correlate_oracle(&x, &k)) < 1e-12);
    }

    #[test]
    fn oversized_kernel_is_a_dimension_error() {
        let x = FeatureMap::zeros(4, 4);
        let k = FeatureMap::zeros(5, 5);
        assert!(matches!(correlate2d(&x, &k), Err(Error::Dimension(_))));
        // The unrestricted variant still agrees with the clamping oracle.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_map(&mut rng, 4, 3);
        let k = random_map(&mut rng, 7, 9);
        let got = correlate_replicate(&x, &k).unwrap();
        assert!(got.max_abs_diff(&correlate_oracle(&x, &k)) < 1e-12);
    }

    #[test]
    fn even_kernel_is_an_argument_error() {
        let x = FeatureMap::zeros(6, 6);
        let k = FeatureMap::zeros(2, 3);
        assert!(matches!(correlate2d(&x, &k), Err(Error::Argument(_))));
    }

    #[test]
    fn correlation_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_map(&mut rng, 16, 16);
        let y = random_map(&mut rng, 16, 16);
        let k = random_map(&mut rng, 5, 5);
        let (a, b) = (0.3, -1.7);
        let lhs = correlate2d(&x.zip_map(&y, |p, q| a * p + b * q).unwrap(), &k).unwrap();
        let cx = correlate2d(&x, &k).unwrap();
        let cy = correlate2d(&y, &k).unwrap();
        let rhs = cx.zip_map(&cy, |p, q| a * p + b * q).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-10);
    }

    #[test]
    fn resample_identity_and_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = random_map(&mut rng, 5, 6);
        assert_eq!(resample(&x, 5, 6).unwrap(), x);
        let c = FeatureMap::filled(9, 7, 0.25);
        for (r, cc) in [(1, 1), (3, 11), (20, 2)] {
            let out = resample(&c, r, cc).unwrap();
            assert!(out.as_slice().iter().all(|&v| (v - 0.25).abs() < 1e-15));
        }
        assert!(resample(&c, 0, 3).is_err());
    }

    #[test]
    fn resample_ramp_by_hand() {
        // v(r, c) = 4r + c on a 4x4 grid; corner-aligned 2x2 picks the corners.
        let ramp = FeatureMap::from_fn(4, 4, |r, c| (4 * r + c) as f64);
        let out = resample(&ramp, 2, 2).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 3.0, 12.0, 15.0]);
        // 4 -> 3 samples rows/cols 0, 1.5, 3.
        let out = resample(&ramp, 3, 3).unwrap();
        let hand = |r: f64, c: f64| 4.0 * r + c;
        for (i, r) in [0.0, 1.5, 3.0].iter().enumerate() {
            for (j, c) in [0.0, 1.5, 3.0].iter().enumerate() {
                assert!((out.get(i, j) - hand(*r, *c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn resample_bilinear_function_exact() {
        let f = |r: f64, c: f64| 0.5 + 0.2 * r - 0.1 * c + 0.03 * r * c;
        let src = FeatureMap::from_fn(11, 13, |r, c| f(r as f64, c as f64));
        let out = resample(&src, 7, 5).unwrap();
        for i in 0..7 {
            for j in 0..5 {
                let r = i as f64 * 10.0 / 6.0;
                let c = j as f64 * 12.0 / 4.0;
                assert!((out.get(i, j) - f(r, c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rescale_examples() {
        let m = FeatureMap::new(1, 3, vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(rescale_to_range(&m, 1.0), m);
        let flat = FeatureMap::filled(3, 3, 4.2);
        assert_eq!(rescale_to_range(&flat, 1.0), FeatureMap::zeros(3, 3));
        let m = FeatureMap::new(1, 3, vec![-2.0, 0.0, 2.0]).unwrap();
        assert_eq!(rescale_to_range(&m, 1.0).as_slice(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn normalize_single_peak_unchanged() {
        let mut m = FeatureMap::zeros(7, 7);
        m.set(3, 3, 1.0);
        let out = normalize_map(&m, &NormalizationParams::default());
        assert_eq!(out, m);
        let z = FeatureMap::zeros(5, 5);
        assert_eq!(normalize_map(&z, &NormalizationParams::default()), z);
    }

    #[test]
    fn normalize_secondary_peak_factor() {
        // Brute-force window scan: peaks at 1.0 and 0.6 only.
        let mut m = FeatureMap::zeros(9, 9);
        m.set(2, 2, 1.0);
        m.set(6, 6, 0.6);
        let out = normalize_map(&m, &NormalizationParams::default());
        let expect = m.scale(0.16);
        assert!(out.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn plateaus_count_once() {
        // A flat two-cell ridge at 0.5 is one peak: factor (1 - 0.5)^2.
        let mut m = FeatureMap::zeros(9, 9);
        m.set(1, 1, 1.0);
        m.set(6, 5, 0.5);
        m.set(6, 6, 0.5);
        let out = normalize_map(&m, &NormalizationParams::default());
        assert!(out.max_abs_diff(&m.scale(0.25)) < 1e-12);

        // Two tied global peaks cancel each other.
        let mut m = FeatureMap::zeros(9, 9);
        m.set(1, 1, 1.0);
        m.set(6, 6, 1.0);
        assert_eq!(normalize_map(&m, &NormalizationParams::default()).max(), 0.0);

        // A flat top block is one plateau, hence a lone global peak.
        let c = FeatureMap::from_fn(6, 6, |r, c| if r < 3 && c < 4 { 1.0 } else { 0.2 });
        let out = normalize_map(&c, &NormalizationParams::default());
        assert!(out.max_abs_diff(&rescale_to_range(&c, 1.0)) < 1e-12);
    }

    #[test]
    fn plateau_with_a_higher_neighbour_is_not_a_peak() {
        let m = FeatureMap::new(1, 5, vec![0.0, 0.4, 0.4, 0.6, 1.0]).unwrap();
        // Strictly increasing apart from the 0.4 pair, so only the end counts.
        let out = normalize_map(&m, &NormalizationParams::default());
        assert!(out.max_abs_diff(&m) < 1e-12);
    }

    #[test]
    fn cross_scale_sum_examples() {
        let a = FeatureMap::filled(6, 8, 1.5);
        assert_eq!(cross_scale_sum(std::slice::from_ref(&a), 6, 8).unwrap(), a);
        let b = FeatureMap::filled(3, 4, 0.25);
        let s = cross_scale_sum(&[a, b], 6, 8).unwrap();
        assert!(s.as_slice().iter().all(|&v| (v - 1.75).abs() < 1e-15));
        assert!(cross_scale_sum(&[], 2, 2).is_err());
    }
}
