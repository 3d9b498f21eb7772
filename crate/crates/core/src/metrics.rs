//! Restoration objectives and image quality metrics.
//!
//! The loss functions score an enhanced synthetic image
//! `base + residual` against its ground truth: a noise-deweighted squared
//! restoration term, a per-pixel RGB color-angle term, and a feature-space
//! term evaluated through a pluggable extractor. All losses sum over
//! pixels; divide by the sample count for a mean.
//!
//! Quality metrics: MSE/PSNR on [0,1]-normalized values, single-scale
//! SSIM (8x8 uniform windows, stride 1, on BT.601 luma), and MEF-SSIM
//! for scoring a fused image against a multi-exposure reference stack.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{LdrImage, Plane, RealImage};
use crate::tensor::FeatureMap;

/// Weights of the combined objective, plus the noise threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub w_c: f64,
    pub w_f: f64,
    pub nu: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            w_c: 0.01,
            w_f: 0.01,
            nu: 6.0,
        }
    }
}

/// Noise deweighting for the restoration term: 1 when the synthetic level
/// is at least `nu`, otherwise `1 / (nu - z)`. Levels below `nu` are
/// likely shadow noise and count less.
pub fn restoration_weight(z: f64, nu: f64) -> f64 {
    if z >= nu {
        1.0
    } else {
        1.0 / (nu - z)
    }
}

fn check_same_size_ldr(a: &LdrImage, b: &LdrImage) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::DimensionMismatch {
            expected: (a.width(), a.height()),
            got: (b.width(), b.height()),
        });
    }
    Ok(())
}

/// Weighted squared restoration loss of `base + residual` against the
/// ground truth, with weights read from the initial synthetic `base`.
pub fn restoration_loss(
    ground_truth: &LdrImage,
    base: &LdrImage,
    residual: &RealImage,
    nu: f64,
) -> Result<f64> {
    check_same_size_ldr(ground_truth, base)?;
    if residual.width() != base.width() || residual.height() != base.height() {
        return Err(Error::DimensionMismatch {
            expected: (base.width(), base.height()),
            got: (residual.width(), residual.height()),
        });
    }
    let mut sum = 0.0;
    for ((&t, &z), &r) in ground_truth
        .data()
        .iter()
        .zip(base.data())
        .zip(residual.data())
    {
        let err = t as f64 - r - z as f64;
        sum += restoration_weight(z as f64, nu) * err * err;
    }
    Ok(sum)
}

/// Sum of per-pixel angles (radians) between ground-truth RGB vectors and
/// predicted RGB vectors. Predictions are clamped non-negative first;
/// zero-length vectors on either side contribute nothing.
///
/// Computed as `atan2(|a x b|, a . b)`, which is exact for parallel and
/// orthogonal vectors and well conditioned at small angles.
pub fn color_angle_loss(ground_truth: &LdrImage, prediction: &RealImage) -> Result<f64> {
    if prediction.width() != ground_truth.width() || prediction.height() != ground_truth.height() {
        return Err(Error::DimensionMismatch {
            expected: (ground_truth.width(), ground_truth.height()),
            got: (prediction.width(), prediction.height()),
        });
    }
    let mut sum = 0.0;
    for (t, p) in ground_truth
        .data()
        .chunks_exact(3)
        .zip(prediction.data().chunks_exact(3))
    {
        let a = [t[0] as f64, t[1] as f64, t[2] as f64];
        let b = [p[0].max(0.0), p[1].max(0.0), p[2].max(0.0)];
        if a == [0.0; 3] || b == [0.0; 3] {
            continue;
        }
        let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let cross = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        let cross_norm = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
        sum += cross_norm.atan2(dot);
    }
    Ok(sum)
}

/// A named set of deterministic feature stages.
pub trait FeatureExtractor {
    fn stage_names(&self) -> Vec<String>;
    fn extract(&self, image: &RealImage, stage: &str) -> Result<FeatureMap>;
}

/// Mean squared feature difference at one extractor stage.
pub fn feature_loss(
    a: &RealImage,
    b: &RealImage,
    extractor: &dyn FeatureExtractor,
    stage: &str,
) -> Result<f64> {
    if !a.same_size(b) {
        return Err(Error::DimensionMismatch {
            expected: (a.width(), a.height()),
            got: (b.width(), b.height()),
        });
    }
    let fa = extractor.extract(a, stage)?;
    let fb = extractor.extract(b, stage)?;
    if !fa.same_shape(&fb) {
        return Err(Error::ShapeMismatch {
            expected: fa.shape(),
            got: fb.shape(),
        });
    }
    let n = fa.data().len() as f64;
    let sum: f64 = fa
        .data()
        .iter()
        .zip(fb.data())
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum();
    Ok(sum / n)
}

/// Combined objective: `l_r + w_c * l_c + w_f * l_f`.
pub fn total_loss(l_r: f64, l_c: f64, l_f: f64, weights: &LossWeights) -> f64 {
    l_r + weights.w_c * l_c + weights.w_f * l_f
}

/// Fixed handcrafted kernel bank: identity, 5-tap binomial blur, and
/// horizontal/vertical central differences, each at full and half scale.
/// Deterministic, hand-checkable, and a stand-in for learned extractors.
#[derive(Debug, Clone, Default)]
pub struct KernelBankExtractor;

const BANK_KERNELS: [&str; 4] = ["identity", "gauss5", "dx", "dy"];

impl KernelBankExtractor {
    fn convolve(plane_in: &FeatureMap, kernel: &str) -> FeatureMap {
        let (c, h, w) = plane_in.shape();
        let mut out = FeatureMap::zeros(c, h, w);
        match kernel {
            "identity" => out.data_mut().copy_from_slice(plane_in.data()),
            "gauss5" => {
                let k = [1.0, 4.0, 6.0, 4.0, 1.0].map(|v| v / 16.0);
                for ch in 0..c {
                    for y in 0..h {
                        for x in 0..w {
                            let mut acc = 0.0;
                            for (i, &ky) in k.iter().enumerate() {
                                let sy = y as isize + i as isize - 2;
                                if sy < 0 || sy >= h as isize {
                                    continue;
                                }
                                for (j, &kx) in k.iter().enumerate() {
                                    let sx = x as isize + j as isize - 2;
                                    if sx < 0 || sx >= w as isize {
                                        continue;
                                    }
                                    acc += ky * kx * plane_in.get(ch, sy as usize, sx as usize);
                                }
                            }
                            out.set(ch, y, x, acc);
                        }
                    }
                }
            }
            "dx" | "dy" => {
                for ch in 0..c {
                    for y in 0..h {
                        for x in 0..w {
                            let (pa, pb) = if kernel == "dx" {
                                let xl = x.checked_sub(1).map(|sx| plane_in.get(ch, y, sx));
                                let xr = (x + 1 < w).then(|| plane_in.get(ch, y, x + 1));
                                (xl.unwrap_or(0.0), xr.unwrap_or(0.0))
                            } else {
                                let yu = y.checked_sub(1).map(|sy| plane_in.get(ch, sy, x));
                                let yd = (y + 1 < h).then(|| plane_in.get(ch, y + 1, x));
                                (yu.unwrap_or(0.0), yd.unwrap_or(0.0))
                            };
                            out.set(ch, y, x, 0.5 * (pb - pa));
                        }
                    }
                }
            }
            other => unreachable!("unknown kernel {other}"),
        }
        out
    }

    fn half_scale(src: &FeatureMap) -> FeatureMap {
        let (c, h, w) = src.shape();
        let (dh, dw) = (h.div_ceil(2), w.div_ceil(2));
        let mut out = FeatureMap::zeros(c, dh, dw);
        for ch in 0..c {
            for y in 0..dh {
                for x in 0..dw {
                    let mut acc = 0.0;
                    let mut count = 0.0;
                    for dy in 0..2 {
                        for dx in 0..2 {
                            let (sy, sx) = (y * 2 + dy, x * 2 + dx);
                            if sy < h && sx < w {
                                acc += src.get(ch, sy, sx);
                                count += 1.0;
                            }
                        }
                    }
                    out.set(ch, y, x, acc / count);
                }
            }
        }
        out
    }

    fn normalized(image: &RealImage) -> FeatureMap {
        let (w, h) = (image.width(), image.height());
        let mut data = vec![0.0; 3 * h * w];
        for y in 0..h {
            for x in 0..w {
                let px = image.pixel(x, y);
                for c in 0..3 {
                    data[(c * h + y) * w + x] = px[c] / 255.0;
                }
            }
        }
        FeatureMap::new(3, h, w, data).expect("shape consistent")
    }
}

impl FeatureExtractor for KernelBankExtractor {
    fn stage_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for scale in [1, 2] {
            for k in BANK_KERNELS {
                names.push(format!("{k}/{scale}"));
            }
        }
        names
    }

    fn extract(&self, image: &RealImage, stage: &str) -> Result<FeatureMap> {
        let (kernel, scale) = stage.split_once('/').ok_or_else(|| {
            Error::InvalidConfig(format!("bad stage `{stage}`, expected `<kernel>/<scale>`"))
        })?;
        if !BANK_KERNELS.contains(&kernel) {
            return Err(Error::InvalidConfig(format!("unknown kernel `{kernel}`")));
        }
        let base = Self::normalized(image);
        let scaled = match scale {
            "1" => base,
            "2" => Self::half_scale(&base),
            other => {
                return Err(Error::InvalidConfig(format!("unknown scale `{other}`")));
            }
        };
        Ok(Self::convolve(&scaled, kernel))
    }
}

fn check_same_size_real(a: &RealImage, b: &RealImage) -> Result<()> {
    if !a.same_size(b) {
        return Err(Error::DimensionMismatch {
            expected: (a.width(), a.height()),
            got: (b.width(), b.height()),
        });
    }
    Ok(())
}

/// Mean squared error on [0,1]-normalized values, over all samples.
pub fn mse(a: &RealImage, b: &RealImage) -> Result<f64> {
    check_same_size_real(a, b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = (x - y) / 255.0;
            d * d
        })
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// Peak PSNR cap in dB for identical (or nearly identical) inputs.
pub const PSNR_CAP_DB: f64 = 99.0;

/// PSNR in dB against a unit peak, capped at [`PSNR_CAP_DB`].
pub fn psnr(a: &RealImage, b: &RealImage) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (1.0 / m).log10()).min(PSNR_CAP_DB))
}

const SSIM_WINDOW: usize = 8;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

/// Summed-area table with a zero top row/left column.
struct Integral {
    width: usize,
    data: Vec<f64>,
}

impl Integral {
    fn build(plane: &Plane) -> Self {
        let (w, h) = (plane.width(), plane.height());
        let stride = w + 1;
        let mut data = vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0.0;
            for x in 0..w {
                row += plane.get(x, y);
                data[(y + 1) * stride + x + 1] = data[y * stride + x + 1] + row;
            }
        }
        Self { width: w, data }
    }

    fn build_product(a: &Plane, b: &Plane) -> Self {
        let (w, h) = (a.width(), a.height());
        let stride = w + 1;
        let mut data = vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0.0;
            for x in 0..w {
                row += a.get(x, y) * b.get(x, y);
                data[(y + 1) * stride + x + 1] = data[y * stride + x + 1] + row;
            }
        }
        Self { width: w, data }
    }

    /// Sum over the window with top-left (x, y), size `win`.
    fn window(&self, x: usize, y: usize, win: usize) -> f64 {
        let s = self.width + 1;
        self.data[(y + win) * s + x + win] + self.data[y * s + x]
            - self.data[y * s + x + win]
            - self.data[(y + win) * s + x]
    }
}

fn require_min_size(w: usize, h: usize) -> Result<()> {
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::ImageTooSmall {
            got: (w, h),
            min: (SSIM_WINDOW, SSIM_WINDOW),
        });
    }
    Ok(())
}

fn luma_plane_real(img: &RealImage) -> Plane {
    let data = img
        .data()
        .chunks_exact(3)
        .map(|px| crate::image::luma601(px[0], px[1], px[2]) / 255.0)
        .collect();
    Plane::new(img.width(), img.height(), data)
}

/// Single-scale SSIM on BT.601 luma, 8x8 uniform windows, stride 1.
pub fn ssim(a: &RealImage, b: &RealImage) -> Result<f64> {
    check_same_size_real(a, b)?;
    require_min_size(a.width(), a.height())?;
    let x = luma_plane_real(a);
    let y = luma_plane_real(b);
    let sx = Integral::build(&x);
    let sy = Integral::build(&y);
    let sxx = Integral::build_product(&x, &x);
    let syy = Integral::build_product(&y, &y);
    let sxy = Integral::build_product(&x, &y);

    let n = (SSIM_WINDOW * SSIM_WINDOW) as f64;
    let (w, h) = (a.width(), a.height());
    let rows = h - SSIM_WINDOW + 1;
    let cols = w - SSIM_WINDOW + 1;
    // Per-row partials collected in order, then summed sequentially, so
    // the result does not depend on the parallel schedule.
    let row_sums: Vec<f64> = (0..rows)
        .into_par_iter()
        .map(|wy| {
            let mut acc = 0.0;
            for wx in 0..cols {
                let mx = sx.window(wx, wy, SSIM_WINDOW) / n;
                let my = sy.window(wx, wy, SSIM_WINDOW) / n;
                let vx = sxx.window(wx, wy, SSIM_WINDOW) / n - mx * mx;
                let vy = syy.window(wx, wy, SSIM_WINDOW) / n - my * my;
                let cov = sxy.window(wx, wy, SSIM_WINDOW) / n - mx * my;
                acc += ((2.0 * mx * my + SSIM_C1) * (2.0 * cov + SSIM_C2))
                    / ((mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2));
            }
            acc
        })
        .collect();
    let total: f64 = row_sums.iter().sum();
    Ok(total / (rows * cols) as f64)
}

/// MEF-SSIM constants: SSIM's K2 on the 0..255 level scale, and the
/// structural-consistency exponent of the reference-structure weighting.
const MEF_C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);
const MEF_CONSISTENCY_POWER: i32 = 4;

/// MEF-SSIM of a fused image against its multi-exposure reference stack.
///
/// Per 8x8 window (stride 1) each reference patch splits into mean,
/// signal strength and unit structure. The desired patch takes the
/// maximum strength and the consistency-weighted mean structure; the
/// mean-removed fused patch is then compared SSIM-style (contrast and
/// structure terms) and the scores are averaged over all windows.
pub fn mef_ssim(fused: &LdrImage, refs: &[&LdrImage]) -> Result<f64> {
    if refs.is_empty() {
        return Err(Error::InvalidConfig("mef_ssim needs at least one reference".into()));
    }
    for r in refs {
        check_same_size_ldr(fused, r)?;
    }
    require_min_size(fused.width(), fused.height())?;

    let y = fused.luma_plane();
    let xs: Vec<Plane> = refs.iter().map(|r| r.luma_plane()).collect();
    // Work on the 0..255 level scale.
    let scale = |p: &Plane| {
        let data = p.data().iter().map(|v| v * 255.0).collect();
        Plane::new(p.width(), p.height(), data)
    };
    let y = scale(&y);
    let xs: Vec<Plane> = xs.iter().map(scale).collect();

    let k = xs.len();
    let s_y = Integral::build(&y);
    let s_yy = Integral::build_product(&y, &y);
    let s_x: Vec<Integral> = xs.iter().map(Integral::build).collect();
    let s_xx: Vec<Integral> = xs.iter().map(|x| Integral::build_product(x, x)).collect();
    let s_xy: Vec<Integral> = xs.iter().map(|x| Integral::build_product(x, &y)).collect();
    let mut s_cross = Vec::new(); // pairs (i, j), i < j
    for i in 0..k {
        for j in (i + 1)..k {
            s_cross.push(Integral::build_product(&xs[i], &xs[j]));
        }
    }
    let cross_index = |i: usize, j: usize, k: usize| -> usize {
        // i < j; offset into the upper-triangle list.
        i * k - i * (i + 1) / 2 + (j - i - 1)
    };

    let n = (SSIM_WINDOW * SSIM_WINDOW) as f64;
    let (w, h) = (fused.width(), fused.height());
    let rows = h - SSIM_WINDOW + 1;
    let cols = w - SSIM_WINDOW + 1;

    let row_sums: Vec<f64> = (0..rows)
        .into_par_iter()
        .map(|wy| {
            let mut acc = 0.0;
            let mut strength = vec![0.0; k];
            let mut weight = vec![0.0; k];
            let mut dot_y = vec![0.0; k];
            for wx in 0..cols {
                let sum_y = s_y.window(wx, wy, SSIM_WINDOW);
                let var_y = (s_yy.window(wx, wy, SSIM_WINDOW) - sum_y * sum_y / n).max(0.0);

                let mut c_hat = 0.0f64;
                let mut weight_sum = 0.0;
                for i in 0..k {
                    let sum_x = s_x[i].window(wx, wy, SSIM_WINDOW);
                    let ss = (s_xx[i].window(wx, wy, SSIM_WINDOW) - sum_x * sum_x / n).max(0.0);
                    strength[i] = ss.sqrt();
                    c_hat = c_hat.max(strength[i]);
                    weight[i] = strength[i].powi(MEF_CONSISTENCY_POWER);
                    weight_sum += weight[i];
                    dot_y[i] = s_xy[i].window(wx, wy, SSIM_WINDOW) - sum_x * sum_y / n;
                }

                // <s_bar, y~> and ||s_bar||^2 from pairwise centered dots.
                let mut sbar_dot_y = 0.0;
                let mut sbar_norm_sq = 0.0;
                if weight_sum > 0.0 {
                    for i in 0..k {
                        if weight[i] == 0.0 || strength[i] == 0.0 {
                            continue;
                        }
                        let wi = weight[i] / weight_sum;
                        sbar_dot_y += wi * dot_y[i] / strength[i];
                        for j in 0..k {
                            if weight[j] == 0.0 || strength[j] == 0.0 {
                                continue;
                            }
                            let wj = weight[j] / weight_sum;
                            let dot_ij = if i == j {
                                strength[i] * strength[i]
                            } else {
                                let (a, b) = if i < j { (i, j) } else { (j, i) };
                                let sum_a = s_x[a].window(wx, wy, SSIM_WINDOW);
                                let sum_b = s_x[b].window(wx, wy, SSIM_WINDOW);
                                s_cross[cross_index(a, b, k)].window(wx, wy, SSIM_WINDOW)
                                    - sum_a * sum_b / n
                            };
                            sbar_norm_sq += wi * wj * dot_ij / (strength[i] * strength[j]);
                        }
                    }
                }

                let (var_hat, cov_hat) = if sbar_norm_sq > 0.0 {
                    let sbar_norm = sbar_norm_sq.sqrt();
                    (c_hat * c_hat / n, c_hat * sbar_dot_y / sbar_norm / n)
                } else {
                    (0.0, 0.0)
                };
                let var_y = var_y / n;
                acc += (2.0 * cov_hat + MEF_C2) / (var_hat + var_y + MEF_C2);
            }
            acc
        })
        .collect();
    let total: f64 = row_sums.iter().sum();
    Ok(total / (rows * cols) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real_const(w: usize, h: usize, v: f64) -> RealImage {
        RealImage::new(w, h, vec![v; w * h * 3]).unwrap()
    }

    #[test]
    fn restoration_loss_values() {
        let zt = LdrImage::filled(2, 2, [7, 7, 7]).unwrap();
        let base = LdrImage::filled(2, 2, [7, 7, 7]).unwrap();
        let zero = RealImage::zeros(2, 2);
        assert_eq!(restoration_loss(&zt, &base, &zero, 6.0).unwrap(), 0.0);

        assert!((restoration_weight(3.0, 6.0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(restoration_weight(8.0, 6.0), 1.0);
        for z in 0..=255 {
            let w = restoration_weight(z as f64, 6.0);
            assert!(w <= 1.0, "weight {w} at z={z}");
            if z >= 6 {
                assert_eq!(w, 1.0);
            }
        }

        // Single nonzero contribution: Z_T = 10, Z_i = 8 (>= nu), residual 0.
        let zt = LdrImage::new(1, 1, vec![10, 0, 0]).unwrap();
        let base = LdrImage::new(1, 1, vec![8, 0, 0]).unwrap();
        let r = RealImage::zeros(1, 1);
        assert_eq!(restoration_loss(&zt, &base, &r, 6.0).unwrap(), 4.0);
    }

    #[test]
    fn color_angle_values() {
        let a = LdrImage::filled(3, 3, [12, 200, 31]).unwrap();
        assert_eq!(color_angle_loss(&a, &a.to_real()).unwrap(), 0.0);

        let zt = LdrImage::new(1, 1, vec![1, 0, 0]).unwrap();
        let pred = RealImage::new(1, 1, vec![0.0, 1.0, 0.0]).unwrap();
        let angle = color_angle_loss(&zt, &pred).unwrap();
        assert!((angle - std::f64::consts::FRAC_PI_2).abs() < 1e-12);

        let zt = LdrImage::new(1, 1, vec![2, 2, 2]).unwrap();
        let pred = RealImage::new(1, 1, vec![5.0, 5.0, 5.0]).unwrap();
        assert!(color_angle_loss(&zt, &pred).unwrap().abs() < 1e-7);
    }

    #[test]
    fn color_angle_is_scale_invariant() {
        let zt = LdrImage::new(2, 1, vec![10, 60, 200, 3, 9, 27]).unwrap();
        let pred = RealImage::new(2, 1, vec![20.0, 50.0, 190.0, 4.0, 9.5, 30.0]).unwrap();
        let base = color_angle_loss(&zt, &pred).unwrap();
        let scaled = RealImage::new(
            2,
            1,
            pred.data().iter().enumerate().map(|(i, v)| v * if i < 3 { 7.5 } else { 0.03 }).collect(),
        )
        .unwrap();
        let after = color_angle_loss(&zt, &scaled).unwrap();
        assert!((base - after).abs() < 1e-9);
    }

    #[test]
    fn feature_loss_identity_stage_equals_mse() {
        let fx = KernelBankExtractor;
        let a = RealImage::new(4, 4, (0..48).map(|i| (i * 5 % 256) as f64).collect()).unwrap();
        let b = RealImage::new(4, 4, (0..48).map(|i| (i * 7 % 256) as f64).collect()).unwrap();
        let lf = feature_loss(&a, &b, &fx, "identity/1").unwrap();
        let m = mse(&a, &b).unwrap();
        assert!((lf - m).abs() < 1e-15);
        assert_eq!(feature_loss(&a, &a, &fx, "gauss5/2").unwrap(), 0.0);
    }

    #[test]
    fn feature_loss_gauss_impulse_hand_value() {
        // Impulse of level 255 against a black image at the blur stage:
        // each channel response is the 5x5 binomial kernel, so the mean
        // squared difference is (sum of squared kernel weights) / (H*W).
        let mut data = vec![0.0; 16 * 16 * 3];
        for c in 0..3 {
            data[(8 * 16 + 8) * 3 + c] = 255.0;
        }
        let a = RealImage::new(16, 16, data).unwrap();
        let b = RealImage::zeros(16, 16);
        let lf = feature_loss(&a, &b, &KernelBankExtractor, "gauss5/1").unwrap();
        let expected = 4900.0 / 16777216.0; // (70/256)^2 / 256
        assert!((lf - expected).abs() < 1e-15, "got {lf}, want {expected}");
    }

    #[test]
    fn total_loss_arithmetic() {
        let w = LossWeights::default();
        assert_eq!(total_loss(0.0, 0.0, 0.0, &w), 0.0);
        assert!((total_loss(1.0, 1.0, 1.0, &w) - 1.02).abs() < 1e-12);
        let r_only = LossWeights {
            w_c: 0.0,
            w_f: 0.0,
            ..w
        };
        assert_eq!(total_loss(3.5, 100.0, 42.0, &r_only), 3.5);
    }

    #[test]
    fn mse_psnr_values() {
        let a = real_const(9, 9, 0.0);
        let b = real_const(9, 9, 25.5); // 0.1 apart on the normalized scale
        let m = mse(&a, &b).unwrap();
        assert!((m - 0.01).abs() < 1e-15);
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-12);
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP_DB);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn ssim_identical_and_checkerboard() {
        let img = LdrImage::from_fn(16, 16, |x, y| {
            [(x * 16) as u8, (y * 16) as u8, ((x + y) * 8) as u8]
        })
        .unwrap()
        .to_real();
        let s = ssim(&img, &img).unwrap();
        assert!((s - 1.0).abs() < 1e-9, "got {s}");

        let board = LdrImage::from_fn(16, 16, |x, y| {
            if (x + y) % 2 == 0 {
                [255, 255, 255]
            } else {
                [0, 0, 0]
            }
        })
        .unwrap();
        let inverse = LdrImage::from_fn(16, 16, |x, y| {
            if (x + y) % 2 == 0 {
                [0, 0, 0]
            } else {
                [255, 255, 255]
            }
        })
        .unwrap();
        let s = ssim(&board.to_real(), &inverse.to_real()).unwrap();
        assert!(s < 0.0, "anti-correlated structure must go negative, got {s}");
    }

    #[test]
    fn ssim_requires_window_sized_images() {
        let a = real_const(4, 4, 1.0);
        assert!(matches!(ssim(&a, &a), Err(Error::ImageTooSmall { .. })));
    }

    #[test]
    fn mef_ssim_degenerate_single_reference() {
        let img = LdrImage::from_fn(16, 16, |x, y| {
            [(x * 13 + 7) as u8, (y * 9 + 40) as u8, ((x * y) % 256) as u8]
        })
        .unwrap();
        let score = mef_ssim(&img, &[&img]).unwrap();
        assert!((score - 1.0).abs() < 1e-6, "got {score}");
    }

    #[test]
    fn mef_ssim_dimension_mismatch() {
        let a = LdrImage::filled(16, 16, [1, 2, 3]).unwrap();
        let b = LdrImage::filled(8, 16, [1, 2, 3]).unwrap();
        assert!(mef_ssim(&a, &[&b]).is_err());
    }

    #[test]
    fn losses_are_nonnegative_on_noise() {
        let zt = LdrImage::from_fn(8, 8, |x, y| [(x * 31) as u8, (y * 17) as u8, 77]).unwrap();
        let base = LdrImage::from_fn(8, 8, |x, y| [(x * 29) as u8, (y * 19) as u8, 70]).unwrap();
        let resid = RealImage::new(8, 8, (0..192).map(|i| ((i % 7) as f64) - 3.0).collect()).unwrap();
        assert!(restoration_loss(&zt, &base, &resid, 6.0).unwrap() >= 0.0);
        let pred = RealImage::new(
            8,
            8,
            base.data()
                .iter()
                .zip(resid.data())
                .map(|(&b, &r)| b as f64 + r)
                .collect(),
        )
        .unwrap();
        assert!(color_angle_loss(&zt, &pred).unwrap() >= 0.0);
    }
}
