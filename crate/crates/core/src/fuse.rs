//! Multi-exposure fusion and HDR synthesis.
//!
//! Fusion follows the classic pyramid recipe: per-image quality weights
//! (contrast x saturation x well-exposedness), per-pixel normalization,
//! then Laplacian pyramids of the images blended with Gaussian pyramids
//! of the weights. The pyramid gets one extra level over the standard
//! full decomposition, which suppresses halos around strong edges.
//!
//! HDR synthesis inverts the camera response per exposure, divides by
//! exposure time and hat-weights the estimates; samples clipped to 0 or
//! 255 carry no radiance information and are excluded.

use crate::crf::Crf;
use crate::error::{Error, Result};
use crate::image::{quantize, LdrImage, Plane, RadianceImage};
use crate::pyramid;

/// Gauss curve width of the well-exposedness factor ([0,1] scale).
const WELL_EXPOSED_SIGMA: f64 = 0.2;

/// Floor added to quality weights so normalization never divides by zero.
const WEIGHT_FLOOR: f64 = 1e-12;

/// Constant amplification applied to the input image's weight map. The
/// argument is the pixel's luma, kept for signature fidelity; only the
/// ratio against the synthetic images' unit gain matters after
/// normalization.
pub fn input_amplification(_luma: f64) -> f64 {
    2.0
}

/// Per-pixel quality weight: |Laplacian of luma| x RGB standard deviation
/// x per-channel Gauss well-exposedness, plus a tiny floor.
pub fn quality_weight(image: &LdrImage) -> Plane {
    let (w, h) = (image.width(), image.height());
    let luma = image.luma_plane();
    let mut out = Plane::zeros(w, h);
    let at = |x: isize, y: isize| -> f64 {
        let xc = x.clamp(0, w as isize - 1) as usize;
        let yc = y.clamp(0, h as isize - 1) as usize;
        luma.get(xc, yc)
    };
    for y in 0..h {
        for x in 0..w {
            let (xi, yi) = (x as isize, y as isize);
            let contrast = (at(xi - 1, yi) + at(xi + 1, yi) + at(xi, yi - 1) + at(xi, yi + 1)
                - 4.0 * at(xi, yi))
            .abs();

            let px = image.pixel(x, y);
            let rgb = [
                px[0] as f64 / 255.0,
                px[1] as f64 / 255.0,
                px[2] as f64 / 255.0,
            ];
            let mean = (rgb[0] + rgb[1] + rgb[2]) / 3.0;
            let var = rgb.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / 3.0;
            let saturation = var.sqrt();

            let well_exposed: f64 = rgb
                .iter()
                .map(|c| (-((c - 0.5) * (c - 0.5)) / (2.0 * WELL_EXPOSED_SIGMA.powi(2))).exp())
                .product();

            out.set(x, y, contrast * saturation * well_exposed + WEIGHT_FLOOR);
        }
    }
    out
}

/// Normalized per-pixel weight maps for the three exposures. The input
/// image's map is doubled before normalization.
#[derive(Debug, Clone)]
pub struct WeightMaps {
    pub maps: [Plane; 3],
}

pub fn combined_weights(dark: &LdrImage, input: &LdrImage, bright: &LdrImage) -> Result<WeightMaps> {
    for img in [input, bright] {
        if img.width() != dark.width() || img.height() != dark.height() {
            return Err(Error::DimensionMismatch {
                expected: (dark.width(), dark.height()),
                got: (img.width(), img.height()),
            });
        }
    }
    let mut w0 = quality_weight(dark);
    let mut w1 = quality_weight(input);
    let mut w2 = quality_weight(bright);
    let luma1 = input.luma_plane();
    for (i, v) in w1.data_mut().iter_mut().enumerate() {
        *v *= input_amplification(luma1.data()[i]);
    }
    for i in 0..w0.data().len() {
        let total = w0.data()[i] + w1.data()[i] + w2.data()[i];
        w0.data_mut()[i] /= total;
        w1.data_mut()[i] /= total;
        w2.data_mut()[i] /= total;
    }
    Ok(WeightMaps {
        maps: [w0, w1, w2],
    })
}

/// Pyramid-blend the three exposures with an explicit level count.
pub fn mef_fuse_with_levels(
    dark: &LdrImage,
    input: &LdrImage,
    bright: &LdrImage,
    levels: usize,
) -> Result<LdrImage> {
    let (w, h) = (dark.width(), dark.height());
    if w < 8 || h < 8 {
        return Err(Error::ImageTooSmall {
            got: (w, h),
            min: (8, 8),
        });
    }
    let weights = combined_weights(dark, input, bright)?;
    let images = [dark, input, bright];

    // Blend per channel: sum over images of W_gauss * L_laplacian.
    let mut fused_levels: Vec<Vec<Plane>> = Vec::new(); // [level][channel]
    for (img, wmap) in images.iter().zip(&weights.maps) {
        let wpyr = pyramid::gaussian_pyramid(wmap, levels);
        for c in 0..3 {
            let plane = {
                let data = img
                    .data()
                    .chunks_exact(3)
                    .map(|px| px[c] as f64 / 255.0)
                    .collect();
                Plane::new(w, h, data)
            };
            let lpyr = pyramid::laplacian_pyramid(&plane, levels);
            if fused_levels.is_empty() {
                fused_levels = (0..levels)
                    .map(|l| {
                        (0..3)
                            .map(|_| Plane::zeros(lpyr[l].width(), lpyr[l].height()))
                            .collect()
                    })
                    .collect();
            }
            for l in 0..levels {
                let dst = &mut fused_levels[l][c];
                for (i, v) in dst.data_mut().iter_mut().enumerate() {
                    *v += wpyr[l].data()[i] * lpyr[l].data()[i];
                }
            }
        }
    }

    let mut channels = Vec::with_capacity(3);
    for c in 0..3 {
        let pyr: Vec<Plane> = fused_levels.iter().map(|lv| lv[c].clone()).collect();
        channels.push(pyramid::collapse(&pyr));
    }
    let mut data = vec![0u8; w * h * 3];
    for i in 0..w * h {
        for c in 0..3 {
            data[i * 3 + c] = quantize(channels[c].data()[i] * 255.0);
        }
    }
    LdrImage::new(w, h, data)
}

/// Pyramid-blend the three exposures; `extra_levels = 1` adds one level
/// over the standard full decomposition (the default).
pub fn mef_fuse(
    dark: &LdrImage,
    input: &LdrImage,
    bright: &LdrImage,
    extra_levels: i32,
) -> Result<LdrImage> {
    let levels = pyramid::level_count(dark.width(), dark.height(), extra_levels);
    mef_fuse_with_levels(dark, input, bright, levels)
}

/// Hat weight over interior levels; clipped samples are excluded by the
/// caller.
fn hat_weight(z: u8) -> f64 {
    (z.min(255 - z)) as f64 + 1.0
}

/// Merge differently exposed captures of a static scene into relative
/// linear radiance.
///
/// Per sample: `E = sum_j w(z_j) f_inv(z_j) / dt_j / sum_j w(z_j)` over
/// exposures where the sample is not clipped to 0 or 255. Samples clipped
/// everywhere fall back to the least-clipped exposure's estimate: the
/// shortest exposure when bright-clipped, otherwise the longest.
pub fn hdr_merge(images: &[&LdrImage], times: &[f64], crf: &Crf) -> Result<RadianceImage> {
    if images.is_empty() || images.len() != times.len() {
        return Err(Error::InvalidConfig(format!(
            "need matching non-empty stacks, got {} images and {} times",
            images.len(),
            times.len()
        )));
    }
    for &t in times {
        if t <= 0.0 || !t.is_finite() {
            return Err(Error::NonPositiveExposure(t));
        }
    }
    let (w, h) = (images[0].width(), images[0].height());
    for img in images {
        if img.width() != w || img.height() != h {
            return Err(Error::DimensionMismatch {
                expected: (w, h),
                got: (img.width(), img.height()),
            });
        }
    }
    let shortest = times
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let longest = times
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();

    let mut data = vec![0.0f64; w * h * 3];
    for i in 0..w * h {
        for c in 0..3 {
            let mut num = 0.0;
            let mut den = 0.0;
            for (j, img) in images.iter().enumerate() {
                let z = img.data()[i * 3 + c];
                if z == 0 || z == 255 {
                    continue;
                }
                let wgt = hat_weight(z);
                num += wgt * crf.invert(z, c) / times[j];
                den += wgt;
            }
            data[i * 3 + c] = if den > 0.0 {
                num / den
            } else {
                // Clipped in every exposure.
                let z_short = images[shortest].data()[i * 3 + c];
                if z_short == 255 {
                    crf.invert(255, c) / times[shortest]
                } else {
                    crf.invert(images[longest].data()[i * 3 + c], c) / times[longest]
                }
            };
        }
    }
    RadianceImage::new(w, h, data)
}
