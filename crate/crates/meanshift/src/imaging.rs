//! RGB ↔ CIE 1976 L*u*v* conversion and mean-shift image filtering.
//!
//! Color pipeline: sRGB primaries, IEC 61966-2-1 transfer function, D65
//! reference white. The feature space is color-only (`luv3`) by default;
//! `joint5` stacks spatial coordinates, scaled down by `spatial_scale`,
//! in front of the Luv channels.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::knn_bandwidths;
use crate::data::PointSet;
use crate::engine::{seek_mode, EngineConfig};
use crate::error::{Error, Result};
use crate::strategies::StrategyParams;

/// 8-bit RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::InvalidParameter(
                "pixel buffer does not match image dimensions".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Reads an 8-bit PNG; grayscale inputs are promoted to RGB.
    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let img = image::open(path)?.into_rgb8();
        let (width, height) = (img.width() as usize, img.height() as usize);
        let pixels = img.pixels().map(|p| [p[0], p[1], p[2]]).collect();
        Image::new(width, height, pixels)
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = image::RgbImage::new(self.width as u32, self.height as u32);
        for (i, px) in self.pixels.iter().enumerate() {
            let x = (i % self.width) as u32;
            let y = (i / self.width) as u32;
            buf.put_pixel(x, y, image::Rgb(*px));
        }
        buf.save(path.as_ref())?;
        Ok(())
    }
}

/// Which feature vector each pixel contributes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSpace {
    /// (L, u, v) only.
    Luv3,
    /// (x/s, y/s, L, u, v) with spatial scale `s`.
    Joint5 { spatial_scale: f64 },
}

// sRGB → XYZ (D65), IEC 61966-2-1.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

// Reference white taken as the matrix image of linear RGB (1,1,1), i.e.
// the row sums, so the neutral axis lands exactly on u = v = 0.
const WHITE_X: f64 = RGB_TO_XYZ[0][0] + RGB_TO_XYZ[0][1] + RGB_TO_XYZ[0][2];
const WHITE_Y: f64 = RGB_TO_XYZ[1][0] + RGB_TO_XYZ[1][1] + RGB_TO_XYZ[1][2];
const WHITE_Z: f64 = RGB_TO_XYZ[2][0] + RGB_TO_XYZ[2][1] + RGB_TO_XYZ[2][2];

fn u_prime(x: f64, y: f64, z: f64) -> f64 {
    let denom = x + 15.0 * y + 3.0 * z;
    if denom == 0.0 {
        0.0
    } else {
        4.0 * x / denom
    }
}

fn v_prime(x: f64, y: f64, z: f64) -> f64 {
    let denom = x + 15.0 * y + 3.0 * z;
    if denom == 0.0 {
        0.0
    } else {
        9.0 * y / denom
    }
}

fn srgb_to_linear(c: u8) -> f64 {
    let c = c as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn linear_to_srgb(c: f64) -> f64 {
    if c <= 0.0031308 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

/// sRGB → linear RGB → XYZ (D65) → CIE 1976 L*u*v*.
pub fn rgb_to_luv(rgb: [u8; 3]) -> [f64; 3] {
    let r = srgb_to_linear(rgb[0]);
    let g = srgb_to_linear(rgb[1]);
    let b = srgb_to_linear(rgb[2]);
    let x = RGB_TO_XYZ[0][0] * r + RGB_TO_XYZ[0][1] * g + RGB_TO_XYZ[0][2] * b;
    let y = RGB_TO_XYZ[1][0] * r + RGB_TO_XYZ[1][1] * g + RGB_TO_XYZ[1][2] * b;
    let z = RGB_TO_XYZ[2][0] * r + RGB_TO_XYZ[2][1] * g + RGB_TO_XYZ[2][2] * b;

    let yr = y / WHITE_Y;
    let cbrt_eps = (6.0f64 / 29.0).powi(3);
    let l = if yr > cbrt_eps {
        116.0 * yr.cbrt() - 16.0
    } else {
        (29.0f64 / 3.0).powi(3) * yr
    };
    if l <= 0.0 {
        return [0.0, 0.0, 0.0];
    }
    let un = u_prime(WHITE_X, WHITE_Y, WHITE_Z);
    let vn = v_prime(WHITE_X, WHITE_Y, WHITE_Z);
    let u = 13.0 * l * (u_prime(x, y, z) - un);
    let v = 13.0 * l * (v_prime(x, y, z) - vn);
    [l, u, v]
}

/// Inverse of [`rgb_to_luv`] with channel clamping to [0, 255].
pub fn luv_to_rgb(luv: [f64; 3]) -> [u8; 3] {
    let [l, u, v] = luv;
    if l <= 0.0 {
        return [0, 0, 0];
    }
    let un = u_prime(WHITE_X, WHITE_Y, WHITE_Z);
    let vn = v_prime(WHITE_X, WHITE_Y, WHITE_Z);
    let up = u / (13.0 * l) + un;
    let vp = v / (13.0 * l) + vn;
    let y = if l > 8.0 {
        WHITE_Y * ((l + 16.0) / 116.0).powi(3)
    } else {
        WHITE_Y * l * (3.0f64 / 29.0).powi(3)
    };
    let (x, z) = if vp == 0.0 {
        (0.0, 0.0)
    } else {
        (
            y * 9.0 * up / (4.0 * vp),
            y * (12.0 - 3.0 * up - 20.0 * vp) / (4.0 * vp),
        )
    };

    let r = 3.2404542 * x - 1.5371385 * y - 0.4985314 * z;
    let g = -0.9692660 * x + 1.8760108 * y + 0.0415560 * z;
    let b = 0.0556434 * x - 0.2040259 * y + 1.0572252 * z;
    let quantize = |c: f64| (linear_to_srgb(c) * 255.0).round().clamp(0.0, 255.0) as u8;
    [quantize(r), quantize(g), quantize(b)]
}

/// Drives every pixel's feature vector to its mode and writes the mode's
/// color back. Pixels with identical features share one seek.
pub fn filter_image(
    image: &Image,
    space: FeatureSpace,
    params: &StrategyParams<f64>,
    config: &EngineConfig<f64>,
) -> Result<Image> {
    params.validate()?;
    config.validate()?;
    if let FeatureSpace::Joint5 { spatial_scale } = space {
        if spatial_scale <= 0.0 {
            return Err(Error::InvalidParameter(
                "spatial scale must be positive".into(),
            ));
        }
    }

    // unique feature vectors and, per pixel, the index of its feature
    let (features, pixel_feature): (Vec<Vec<f64>>, Vec<usize>) = match space {
        FeatureSpace::Luv3 => {
            let mut index_of: HashMap<[u8; 3], usize> = HashMap::new();
            let mut feats = Vec::new();
            let mut map = Vec::with_capacity(image.pixels.len());
            for &px in &image.pixels {
                let idx = *index_of.entry(px).or_insert_with(|| {
                    feats.push(rgb_to_luv(px).to_vec());
                    feats.len() - 1
                });
                map.push(idx);
            }
            (feats, map)
        }
        FeatureSpace::Joint5 { spatial_scale } => {
            let feats = image
                .pixels
                .iter()
                .enumerate()
                .map(|(i, &px)| {
                    let x = (i % image.width) as f64 / spatial_scale;
                    let y = (i / image.width) as f64 / spatial_scale;
                    let luv = rgb_to_luv(px);
                    vec![x, y, luv[0], luv[1], luv[2]]
                })
                .collect();
            (feats, (0..image.pixels.len()).collect())
        }
    };

    if features.len() == 1 {
        return Ok(image.clone());
    }

    let points = PointSet::from_rows(&features)?;
    let k = params.k_neighbors.min(points.len() - 1);
    let field = knn_bandwidths(&points, k)?;
    let mut params = *params;
    params.k_neighbors = k;

    let modes: Vec<[u8; 3]> = (0..points.len())
        .into_par_iter()
        .map(|i| -> Result<[u8; 3]> {
            let (mode, _, _) = seek_mode(points.point(i), &points, &field, &params, config)?;
            let luv = match space {
                FeatureSpace::Luv3 => [mode[0], mode[1], mode[2]],
                FeatureSpace::Joint5 { .. } => [mode[2], mode[3], mode[4]],
            };
            Ok(luv_to_rgb(luv))
        })
        .collect::<Result<_>>()?;

    let pixels = pixel_feature.iter().map(|&f| modes[f]).collect();
    Image::new(image.width, image.height, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelProfile;
    use crate::strategies::Strategy;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn black_maps_to_origin() {
        assert_eq!(rgb_to_luv([0, 0, 0]), [0.0, 0.0, 0.0]);
        assert_eq!(luv_to_rgb([0.0, 0.0, 0.0]), [0, 0, 0]);
    }

    #[test]
    fn white_maps_to_l_100() {
        let [l, u, v] = rgb_to_luv([255, 255, 255]);
        assert!((l - 100.0).abs() < 1e-3);
        assert!(u.abs() < 1e-3);
        assert!(v.abs() < 1e-3);
    }

    #[test]
    fn mid_gray_luminance() {
        let [l, u, v] = rgb_to_luv([128, 128, 128]);
        assert!((l - 53.585).abs() < 1e-2, "L = {l}");
        assert!(u.abs() < 1e-6);
        assert!(v.abs() < 1e-6);
    }

    #[test]
    fn neutral_axis_has_zero_chroma() {
        for g in 0..=255u8 {
            let [_, u, v] = rgb_to_luv([g, g, g]);
            assert!(u.abs() <= 1e-6 && v.abs() <= 1e-6, "gray {g}: u={u} v={v}");
        }
    }

    #[test]
    fn gray_round_trip_within_one() {
        for g in 0..=255u8 {
            let rgb = luv_to_rgb(rgb_to_luv([g, g, g]));
            for c in rgb {
                assert!((c as i32 - g as i32).abs() <= 1, "gray {g} -> {rgb:?}");
            }
        }
    }

    #[test]
    fn out_of_gamut_clamps() {
        assert_eq!(luv_to_rgb([200.0, 0.0, 0.0]), [255, 255, 255]);
    }

    #[test]
    fn filter_uniform_image_is_identity() {
        let img = Image::new(8, 8, vec![[40, 90, 200]; 64]).unwrap();
        let params = StrategyParams::defaults(Strategy::Eams, KernelProfile::Epanechnikov);
        let cfg = EngineConfig {
            epsilon: 1e-3,
            max_iter: 100,
            merge_tol: 5e-3,
            mode: crate::engine::EngineMode::Probe,
        };
        let out = filter_image(&img, FeatureSpace::Luv3, &params, &cfg).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn filter_two_flat_regions_unchanged() {
        let mut pixels = Vec::new();
        for _ in 0..8 {
            pixels.extend(std::iter::repeat([0u8, 0, 0]).take(4));
            pixels.extend(std::iter::repeat([255u8, 255, 255]).take(4));
        }
        let img = Image::new(8, 8, pixels).unwrap();
        let params = StrategyParams::defaults(Strategy::Eams, KernelProfile::Epanechnikov);
        let cfg = EngineConfig {
            epsilon: 1e-3,
            max_iter: 100,
            merge_tol: 5e-3,
            mode: crate::engine::EngineMode::Probe,
        };
        let out = filter_image(&img, FeatureSpace::Luv3, &params, &cfg).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn filter_reduces_within_region_variance() {
        // seeded two-tone image with channel noise
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let side = 16usize;
        let mut pixels = Vec::with_capacity(side * side);
        for i in 0..side * side {
            let x = i % side;
            let base: [i32; 3] = if x < side / 2 { [60, 60, 60] } else { [200, 200, 200] };
            let px: Vec<u8> = base
                .iter()
                .map(|&b| (b + rng.gen_range(-12..=12)).clamp(0, 255) as u8)
                .collect();
            pixels.push([px[0], px[1], px[2]]);
        }
        let img = Image::new(side, side, pixels).unwrap();
        let mut params = StrategyParams::defaults(Strategy::Eams, KernelProfile::Gaussian);
        params.k_neighbors = 20;
        let cfg = EngineConfig {
            epsilon: 0.05,
            max_iter: 50,
            merge_tol: 0.25,
            mode: crate::engine::EngineMode::Probe,
        };
        let out = filter_image(&img, FeatureSpace::Luv3, &params, &cfg).unwrap();
        assert_eq!((out.width, out.height), (img.width, img.height));

        let region_var = |im: &Image, left: bool| -> f64 {
            let vals: Vec<f64> = im
                .pixels
                .iter()
                .enumerate()
                .filter(|(i, _)| (i % side < side / 2) == left)
                .map(|(_, p)| p[0] as f64)
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64
        };
        assert!(region_var(&out, true) < region_var(&img, true));
        assert!(region_var(&out, false) < region_var(&img, false));
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.png");
        let img = Image::new(3, 2, vec![[1, 2, 3], [4, 5, 6], [7, 8, 9], [10, 11, 12], [13, 14, 15], [16, 17, 18]]).unwrap();
        img.save_png(&path).unwrap();
        assert_eq!(Image::load_png(&path).unwrap(), img);
    }
}
