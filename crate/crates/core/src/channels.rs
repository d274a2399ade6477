//! Intensity, color-opponency and orientation feature channels.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};
use crate::exec;
use crate::filters::{complex_response, GaborParams};
use crate::grid::{FeatureMap, Pyramid, PyramidSpec};

/// Number of orientation sub-channels, `theta_i = i * pi / 8`.
pub const N_ORIENT: usize = 8;

pub fn orientation_angle(i: usize) -> f64 {
    i as f64 * PI / N_ORIENT as f64
}

/// Default edge-detector parameters for the orientation channel.
pub fn default_gabor() -> GaborParams {
    GaborParams::new(0.0, 2.24, 0.5, 1.57)
}

/// RGB image with each plane in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    r: FeatureMap,
    g: FeatureMap,
    b: FeatureMap,
}

impl RgbImage {
    pub fn new(r: FeatureMap, g: FeatureMap, b: FeatureMap) -> Result<Self> {
        r.check_same_dims(&g)?;
        r.check_same_dims(&b)?;
        for plane in [&r, &g, &b] {
            if plane.min() < 0.0 || plane.max() > 1.0 {
                return Err(Error::Argument("RGB values must lie in [0, 1]".into()));
            }
        }
        Ok(Self { r, g, b })
    }

    /// Same-valued planes.
    pub fn gray(plane: FeatureMap) -> Result<Self> {
        Self::new(plane.clone(), plane.clone(), plane)
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> [f64; 3],
    ) -> Result<Self> {
        let mut planes = [
            Vec::with_capacity(rows * cols),
            Vec::with_capacity(rows * cols),
            Vec::with_capacity(rows * cols),
        ];
        for r in 0..rows {
            for c in 0..cols {
                let px = f(r, c);
                for (p, v) in planes.iter_mut().zip(px) {
                    p.push(v);
                }
            }
        }
        let [r, g, b] = planes;
        Self::new(
            FeatureMap::new(rows, cols, r)?,
            FeatureMap::new(rows, cols, g)?,
            FeatureMap::new(rows, cols, b)?,
        )
    }

    pub fn rows(&self) -> usize {
        self.r.rows()
    }

    pub fn cols(&self) -> usize {
        self.r.cols()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.r.dims()
    }

    pub fn r(&self) -> &FeatureMap {
        &self.r
    }

    pub fn g(&self) -> &FeatureMap {
        &self.g
    }

    pub fn b(&self) -> &FeatureMap {
        &self.b
    }

    pub fn pixel(&self, row: usize, col: usize) -> [f64; 3] {
        [
            self.r.get(row, col),
            self.g.get(row, col),
            self.b.get(row, col),
        ]
    }

    /// Reads a binary (P6) or plain (P3) PPM; samples are scaled by 1/255.
    pub fn read_ppm(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img_err = |e: image::ImageError| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        let decoded = image::ImageReader::open(path)
            .map_err(|e| Error::io(path, e))?
            .with_guessed_format()
            .map_err(|e| Error::io(path, e))?
            .decode()
            .map_err(img_err)?
            .to_rgb8();
        let (w, h) = decoded.dimensions();
        Self::from_fn(h as usize, w as usize, |r, c| {
            let p = decoded.get_pixel(c as u32, r as u32).0;
            [
                f64::from(p[0]) / 255.0,
                f64::from(p[1]) / 255.0,
                f64::from(p[2]) / 255.0,
            ]
        })
    }

    /// Writes an 8-bit binary PPM, rounding each sample to the nearest level.
    pub fn write_ppm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut bytes = format!("P6\n{} {}\n255\n", self.cols(), self.rows()).into_bytes();
        for r in 0..self.rows() {
            for c in 0..self.cols() {
                for v in self.pixel(r, c) {
                    bytes.push((v * 255.0).round() as u8);
                }
            }
        }
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }
}

pub fn compute_intensity(img: &RgbImage) -> FeatureMap {
    let sum = img.r.zip_map(&img.g, |a, b| a + b).expect("same dims");
    sum.zip_map(&img.b, |s, b| (s + b) / 3.0).expect("same dims")
}

/// Rectified opponency maps in the order RG, GR, BY, YB.
pub fn compute_color_opponency(img: &RgbImage) -> [FeatureMap; 4] {
    let intensity = compute_intensity(img);
    let floor = 0.1 * intensity.max();
    let (rows, cols) = img.dims();
    let mut out: [Vec<f64>; 4] = Default::default();
    for o in out.iter_mut() {
        o.reserve(rows * cols);
    }
    for (i, &lum) in intensity.as_slice().iter().enumerate() {
        let (r, g, b) = if lum > floor {
            (
                img.r.as_slice()[i] / lum,
                img.g.as_slice()[i] / lum,
                img.b.as_slice()[i] / lum,
            )
        } else {
            (0.0, 0.0, 0.0)
        };
        let red = (r - (g + b) / 2.0).max(0.0);
        let green = (g - (r + b) / 2.0).max(0.0);
        let blue = (b - (g + r) / 2.0).max(0.0);
        let yellow = ((r + g) / 2.0 - (r - g).abs() / 2.0 - b).max(0.0);
        out[0].push((red - green).max(0.0));
        out[1].push((green - red).max(0.0));
        out[2].push((blue - yellow).max(0.0));
        out[3].push((yellow - blue).max(0.0));
    }
    out.map(|v| FeatureMap::from_vec(rows, cols, v))
}

/// Complex-cell energy at the eight orientations `i * pi / 8`.
pub fn compute_orientation_channels(
    intensity: &FeatureMap,
    base: &GaborParams,
) -> Result<Vec<FeatureMap>> {
    exec::map_range(N_ORIENT, |i| {
        complex_response(intensity, &base.with_theta(orientation_angle(i)))
    })
    .into_iter()
    .collect()
}

/// All 13 native-resolution sub-channel maps.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub intensity: FeatureMap,
    /// RG, GR, BY, YB.
    pub color: [FeatureMap; 4],
    /// `C_theta` for `theta = i * pi / 8`.
    pub orientation: Vec<FeatureMap>,
}

impl ChannelSet {
    pub fn compute(img: &RgbImage, gabor: &GaborParams) -> Result<Self> {
        let intensity = compute_intensity(img);
        let color = compute_color_opponency(img);
        let orientation = compute_orientation_channels(&intensity, gabor)?;
        Ok(Self {
            intensity,
            color,
            orientation,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPyramids {
    pub intensity: Pyramid,
    pub color: Vec<Pyramid>,
    pub orientation: Vec<Pyramid>,
}

pub fn build_channel_pyramids(ch: &ChannelSet, spec: &PyramidSpec) -> Result<ChannelPyramids> {
    let mut maps: Vec<&FeatureMap> = Vec::with_capacity(13);
    maps.push(&ch.intensity);
    maps.extend(ch.color.iter());
    maps.extend(ch.orientation.iter());
    let mut built = exec::map_slice(&maps, |m| Pyramid::build(m, spec))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let orientation = built.split_off(5);
    let color = built.split_off(1);
    let intensity = built.pop().expect("intensity pyramid");
    Ok(ChannelPyramids {
        intensity,
        color,
        orientation,
    })
}
