//! Center-surround (light / dark) pyramids.

use crate::error::Result;
use crate::exec;
use crate::filters::{make_center_surround, make_gabor, zero_mean, DoGParams, GaborParams, Parity, Polarity};
use crate::grid::{correlate_replicate, FeatureMap, Pyramid};

/// Which center-surround kernel a feature pyramid is filtered with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CsKind {
    /// Isotropic difference of Gaussians.
    Symmetric(DoGParams),
    /// Even Gabor at the given orientation, for orientation feature maps.
    Oriented(GaborParams),
}

/// Rectified light and dark responses, level-aligned with the input.
#[derive(Debug, Clone, PartialEq)]
pub struct CsPair {
    pub light: Pyramid,
    pub dark: Pyramid,
}

/// ON kernel of a center-surround kind, forced to zero sum so a constant
/// input gives exactly no response and inverting the input swaps light and
/// dark.
pub fn on_kernel(kind: &CsKind) -> Result<FeatureMap> {
    Ok(match kind {
        CsKind::Symmetric(p) => zero_mean(&make_center_surround(p, Polarity::On)?),
        CsKind::Oriented(p) => make_gabor(p, Parity::Even)?,
    })
}

pub fn compute_cs_pyramids(feature: &Pyramid, kind: &CsKind) -> Result<CsPair> {
    let kernel = on_kernel(kind)?;
    let responses = exec::map_slice(feature.levels(), |level| correlate_replicate(level, &kernel))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let light = responses.iter().map(|r| r.map(|v| v.max(0.0))).collect();
    let dark = responses.iter().map(|r| r.map(|v| (-v).max(0.0))).collect();
    Ok(CsPair {
        light: Pyramid::from_levels(light, feature.factor())?,
        dark: Pyramid::from_levels(dark, feature.factor())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PyramidSpec;

    fn dog() -> CsKind {
        CsKind::Symmetric(DoGParams::new(0.9, 2.7))
    }

    fn spec(levels: usize) -> PyramidSpec {
        PyramidSpec {
            levels,
            ..PyramidSpec::default()
        }
    }

    #[test]
    fn constant_gives_nothing() {
        let p = Pyramid::build(&FeatureMap::filled(32, 32, 0.7), &spec(4)).unwrap();
        let cs = compute_cs_pyramids(&p, &dog()).unwrap();
        for l in cs.light.levels().iter().chain(cs.dark.levels()) {
            assert!(l.max() < 1e-12);
        }
    }

    #[test]
    fn bright_disk_light_inside_dark_outside() {
        let img = FeatureMap::from_fn(64, 64, |r, c| {
            let (x, y) = (c as f64 - 32.0, r as f64 - 32.0);
            if x * x + y * y <= 225.0 {
                1.0
            } else {
                0.0
            }
        });
        let p = Pyramid::build(&img, &spec(1)).unwrap();
        let cs = compute_cs_pyramids(&p, &dog()).unwrap();
        let (light, dark) = (cs.light.level(0), cs.dark.level(0));
        // Light peaks just inside the rim, dark just outside it.
        assert!(light.get(32, 46) > light.get(32, 49));
        assert!(dark.get(32, 48) > dark.get(32, 45));
        assert!(light.get(32, 46) > 0.0 && dark.get(32, 48) > 0.0);
        assert_eq!(light.get(32, 55), 0.0);
        let argmax = (0..64).max_by(|&a, &b| light.get(32, a).total_cmp(&light.get(32, b))).unwrap();
        assert!((17..=47).contains(&argmax));

        // Once the disk shrinks to blob size the centre is strictly light.
        let p = Pyramid::build(&img, &spec(7)).unwrap();
        let cs = compute_cs_pyramids(&p, &dog()).unwrap();
        let (light, dark) = (cs.light.level(6), cs.dark.level(6));
        let (r, c) = (light.rows() / 2, light.cols() / 2);
        assert!(light.get(r, c) > dark.get(r, c));
        assert!(light.get(r, c) > 0.0);
    }

    #[test]
    fn inversion_swaps_light_and_dark() {
        let img = FeatureMap::from_fn(40, 40, |r, c| ((r * 31 + c * 17) % 23) as f64 / 23.0);
        let inv = img.map(|v| 1.0 - v);
        for kind in [dog(), CsKind::Oriented(GaborParams::new(0.4, 3.2, 0.8, std::f64::consts::FRAC_PI_4))] {
            let a = compute_cs_pyramids(&Pyramid::build(&img, &spec(3)).unwrap(), &kind).unwrap();
            let b = compute_cs_pyramids(&Pyramid::build(&inv, &spec(3)).unwrap(), &kind).unwrap();
            for k in 0..3 {
                assert!(a.light.level(k).max_abs_diff(b.dark.level(k)) < 1e-10);
                assert!(a.dark.level(k).max_abs_diff(b.light.level(k)) < 1e-10);
            }
        }
    }
}
