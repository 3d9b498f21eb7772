//! Model-based synthesis of darker/brighter exposures from one image.
//!
//! An intensity mapping function (IMF) per channel predicts the level a
//! pixel would take under a different exposure time:
//!
//! ```text
//! imf(z) = f(f_inv(z) * dt_dst / dt_src)
//! ```
//!
//! Where the IMF is reliable (no channel clipped toward the target
//! direction) it is applied directly. Elsewhere a single per-pixel ratio
//! is fitted by weighted least squares and applied to all three channels,
//! which avoids color casts and seams at region boundaries.

use rayon::prelude::*;

use crate::config::{BrightRange, ExposureConfig};
use crate::crf::Crf;
use crate::error::Result;
use crate::image::{quantize, LdrImage};

/// Which exposure the mapping targets, starting from the input image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImfDirection {
    ToDark,
    ToBright,
}

/// Per-channel 256-entry intensity mapping table (real-valued levels).
#[derive(Debug, Clone)]
pub struct ImfLut {
    pub direction: ImfDirection,
    table: [[f64; 256]; 3],
}

impl ImfLut {
    pub fn value(&self, z: u8, channel: usize) -> f64 {
        self.table[channel][z as usize]
    }

    pub fn table(&self, channel: usize) -> &[f64; 256] {
        &self.table[channel]
    }
}

/// Build the IMF table for mapping levels captured at `dt_src` to the
/// levels expected at `dt_dst`.
pub fn build_imf(crf: &Crf, dt_src: f64, dt_dst: f64) -> ImfLut {
    assert!(dt_src > 0.0 && dt_dst > 0.0, "exposure times must be positive");
    let k = dt_dst / dt_src;
    let mut table = [[0.0f64; 256]; 3];
    for (channel, channel_table) in table.iter_mut().enumerate() {
        for (z, entry) in channel_table.iter_mut().enumerate() {
            *entry = crf.apply(crf.invert(z as u8, channel) * k, channel);
        }
    }
    ImfLut {
        direction: if k < 1.0 {
            ImfDirection::ToDark
        } else {
            ImfDirection::ToBright
        },
        table,
    }
}

/// Reliability weight flavour.
///
/// `Verbatim` follows the printed piecewise form, which jumps from 128 to
/// 0 at the upper threshold and stays nearly constant across the band.
/// `Smooth` replaces the band with `128 * (3h^2 - 2h^3)` so the weight
/// falls continuously from 128 to 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightMode {
    #[default]
    Verbatim,
    Smooth,
}

impl std::str::FromStr for WeightMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "verbatim" => Ok(WeightMode::Verbatim),
            "smooth" => Ok(WeightMode::Smooth),
            other => Err(format!("unknown weight mode `{other}`")),
        }
    }
}

/// Reliability weight for darkening, in [0, 128].
///
/// Zero above `xi_u` (clipped highlights), 128 at or below `xi_l`, and a
/// cubic ramp of `h = (xi_u - z) / (xi_u - xi_l)` across the band.
pub fn reliability_weight(z: u8, xi_u: u8, xi_l: u8, mode: WeightMode) -> f64 {
    debug_assert!(xi_l < xi_u);
    let zf = z as f64;
    let (u, l) = (xi_u as f64, xi_l as f64);
    if zf > u {
        0.0
    } else if zf > l {
        let h = (u - zf) / (u - l);
        match mode {
            WeightMode::Verbatim => 128.0 - 3.0 * h * h + 2.0 * h * h * h,
            WeightMode::Smooth => 128.0 * (3.0 * h * h - 2.0 * h * h * h),
        }
    } else {
        128.0
    }
}

/// Mirrored reliability weight for brightening: zero below `lower`
/// (clipped shadows), 128 at or above `upper`, ramp in between with
/// `h = (z - lower) / (upper - lower)`.
pub fn brightside_weight(z: u8, lower: u8, upper: u8, mode: WeightMode) -> f64 {
    debug_assert!(lower < upper);
    let zf = z as f64;
    let (lo, hi) = (lower as f64, upper as f64);
    if zf < lo {
        0.0
    } else if zf < hi {
        let h = (zf - lo) / (hi - lo);
        match mode {
            WeightMode::Verbatim => 128.0 - 3.0 * h * h + 2.0 * h * h * h,
            WeightMode::Smooth => 128.0 * (3.0 * h * h - 2.0 * h * h * h),
        }
    } else {
        128.0
    }
}

/// Closed-form minimizer of the weighted per-pixel objective
/// `sum_l w(z_l) * (imf(z_l) - ratio * z_l)^2`.
///
/// When every weighted term vanishes the ratio falls back to the IMF
/// slope at the reliability boundary, which keeps the fixed-ratio region
/// continuous with the IMF region. An all-zero pixel degenerates to the
/// slope at level 1.
fn fixed_ratio_impl(
    pixel: [u8; 3],
    imf: &ImfLut,
    weight: impl Fn(u8) -> f64,
    boundary: u8,
) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (channel, &z) in pixel.iter().enumerate() {
        let w = weight(z);
        let zf = z as f64;
        num += w * imf.value(z, channel) * zf;
        den += w * zf * zf;
    }
    if den > 0.0 {
        num / den
    } else if pixel == [0, 0, 0] {
        imf.value(1, 0) / 1.0
    } else {
        imf.value(boundary, 0) / boundary as f64
    }
}

/// Fixed ratio for the dark direction (unreliable above `xi_u`).
pub fn fixed_ratio(pixel: [u8; 3], imf: &ImfLut, xi_u: u8, xi_l: u8, mode: WeightMode) -> f64 {
    fixed_ratio_impl(
        pixel,
        imf,
        |z| reliability_weight(z, xi_u, xi_l, mode),
        xi_u,
    )
}

/// Fixed ratio for the bright direction (unreliable below `range.lower`).
pub fn fixed_ratio_bright(
    pixel: [u8; 3],
    imf: &ImfLut,
    range: BrightRange,
    mode: WeightMode,
) -> f64 {
    fixed_ratio_impl(
        pixel,
        imf,
        |z| brightside_weight(z, range.lower, range.upper, mode),
        range.lower,
    )
}

/// Output of a synthesis pass, with per-pixel bookkeeping.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub image: LdrImage,
    /// True where the fixed-ratio path fired instead of the IMF.
    pub fallback: Vec<bool>,
    /// Fitted ratio where the fallback fired, 0.0 elsewhere.
    pub ratio_map: Vec<f64>,
}

fn synthesize(
    input: &LdrImage,
    imf: &ImfLut,
    reliable: impl Fn([u8; 3]) -> bool + Sync,
    ratio: impl Fn([u8; 3]) -> f64 + Sync,
) -> Synthesis {
    let (w, h) = (input.width(), input.height());
    let n = w * h;
    let mut data = vec![0u8; n * 3];
    let mut fallback = vec![false; n];
    let mut ratio_map = vec![0.0f64; n];

    data.par_chunks_mut(w * 3)
        .zip(fallback.par_chunks_mut(w))
        .zip(ratio_map.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, ((row, fb_row), ratio_row))| {
            for x in 0..w {
                let px = input.pixel(x, y);
                let out = &mut row[x * 3..x * 3 + 3];
                if reliable(px) {
                    for c in 0..3 {
                        out[c] = quantize(imf.value(px[c], c));
                    }
                } else {
                    let g = ratio(px);
                    fb_row[x] = true;
                    ratio_row[x] = g;
                    for c in 0..3 {
                        out[c] = quantize(g * px[c] as f64);
                    }
                }
            }
        });

    Synthesis {
        image: LdrImage::new(w, h, data).expect("same dimensions as input"),
        fallback,
        ratio_map,
    }
}

/// Synthesize the darker exposure (`dt0`) with per-pixel diagnostics.
pub fn synthesize_dark_full(
    input: &LdrImage,
    crf: &Crf,
    cfg: &ExposureConfig,
    mode: WeightMode,
) -> Result<Synthesis> {
    cfg.validate()?;
    let imf = build_imf(crf, cfg.dt1, cfg.dt0);
    let (xi_u, xi_l) = (cfg.xi_u, cfg.xi_l);
    Ok(synthesize(
        input,
        &imf,
        |px| px.iter().all(|&z| z <= xi_u),
        |px| fixed_ratio(px, &imf, xi_u, xi_l, mode),
    ))
}

/// Synthesize the darker exposure (`dt0`).
pub fn synthesize_dark(
    input: &LdrImage,
    crf: &Crf,
    cfg: &ExposureConfig,
    mode: WeightMode,
) -> Result<LdrImage> {
    Ok(synthesize_dark_full(input, crf, cfg, mode)?.image)
}

/// Synthesize the brighter exposure (`dt2`) with per-pixel diagnostics.
pub fn synthesize_bright_full(
    input: &LdrImage,
    crf: &Crf,
    cfg: &ExposureConfig,
    range: BrightRange,
    mode: WeightMode,
) -> Result<Synthesis> {
    cfg.validate()?;
    range.validate()?;
    let imf = build_imf(crf, cfg.dt1, cfg.dt2);
    let lower = range.lower;
    Ok(synthesize(
        input,
        &imf,
        |px| px.iter().all(|&z| z >= lower),
        |px| fixed_ratio_bright(px, &imf, range, mode),
    ))
}

/// Synthesize the brighter exposure (`dt2`).
pub fn synthesize_bright(
    input: &LdrImage,
    crf: &Crf,
    cfg: &ExposureConfig,
    range: BrightRange,
    mode: WeightMode,
) -> Result<LdrImage> {
    Ok(synthesize_bright_full(input, crf, cfg, range, mode)?.image)
}
