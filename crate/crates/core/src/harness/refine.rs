//! Pluggable residual refiners for the synthetic exposures.
//!
//! A refiner predicts a signed residual image for an initial synthetic
//! exposure; the enhanced image is `quantize(initial + residual)`. The
//! identity refiner returns zeros (the pure model-based path). The
//! gain-bias refiner fits a per-channel affine residual against a known
//! target and exists for harness self-tests.

use crate::error::Result;
use crate::exposedness::BinaryMask;
use crate::image::{LdrImage, RealImage};

pub trait Refiner: Send + Sync {
    fn name(&self) -> &str;

    /// Predict a signed residual for `initial`, given the input image and
    /// the exposedness mask for this direction.
    fn refine(
        &self,
        input: &LdrImage,
        initial: &LdrImage,
        mask: &BinaryMask,
    ) -> Result<RealImage>;
}

/// Apply a residual and requantize.
pub fn apply_residual(initial: &LdrImage, residual: &RealImage) -> LdrImage {
    let data = initial
        .data()
        .iter()
        .zip(residual.data())
        .map(|(&z, &r)| crate::image::quantize(z as f64 + r))
        .collect();
    LdrImage::new(initial.width(), initial.height(), data).expect("same dims")
}

/// Zero-residual refiner: the enhanced image equals the initial one.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityRefiner;

impl Refiner for IdentityRefiner {
    fn name(&self) -> &str {
        "identity"
    }

    fn refine(
        &self,
        _input: &LdrImage,
        initial: &LdrImage,
        _mask: &BinaryMask,
    ) -> Result<RealImage> {
        Ok(RealImage::zeros(initial.width(), initial.height()))
    }
}

/// Per-channel affine residual `a * input + b`, least-squares fitted so
/// `initial + residual` approaches the target image.
#[derive(Debug, Clone)]
pub struct GainBiasRefiner {
    pub target: LdrImage,
}

impl Refiner for GainBiasRefiner {
    fn name(&self) -> &str {
        "gainbias"
    }

    fn refine(
        &self,
        input: &LdrImage,
        initial: &LdrImage,
        _mask: &BinaryMask,
    ) -> Result<RealImage> {
        let n = input.width() * input.height();
        let mut residual = RealImage::zeros(input.width(), input.height());
        for c in 0..3 {
            // Fit residual_c = a * input_c + b to (target - initial) by
            // ordinary least squares over all pixels.
            let mut sx = 0.0;
            let mut sy = 0.0;
            let mut sxx = 0.0;
            let mut sxy = 0.0;
            for i in 0..n {
                let x = input.data()[i * 3 + c] as f64;
                let y = self.target.data()[i * 3 + c] as f64 - initial.data()[i * 3 + c] as f64;
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
            }
            let nf = n as f64;
            let det = nf * sxx - sx * sx;
            let (a, b) = if det.abs() < 1e-12 {
                (0.0, sy / nf)
            } else {
                let a = (nf * sxy - sx * sy) / det;
                (a, (sy - a * sx) / nf)
            };
            for i in 0..n {
                let x = input.data()[i * 3 + c] as f64;
                residual.data_mut()[i * 3 + c] = a * x + b;
            }
        }
        Ok(residual)
    }
}

/// Look a refiner up by CLI name: `identity` or `gainbias:<target.png>`.
pub fn refiner_by_name(spec: &str) -> Result<Box<dyn Refiner>> {
    if spec == "identity" {
        return Ok(Box::new(IdentityRefiner));
    }
    if let Some(path) = spec.strip_prefix("gainbias:") {
        let target = LdrImage::open_png(path)?;
        return Ok(Box::new(GainBiasRefiner { target }));
    }
    Err(crate::error::Error::UnknownRefiner(spec.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exposedness::compute_masks;

    #[test]
    fn identity_refiner_returns_zeros() {
        let img = LdrImage::filled(4, 4, [9, 9, 9]).unwrap();
        let masks = compute_masks(&img, 250, 200);
        let r = IdentityRefiner
            .refine(&img, &img, &masks.m0)
            .unwrap();
        assert!(r.data().iter().all(|&v| v == 0.0));
        assert_eq!(apply_residual(&img, &r), img);
    }

    #[test]
    fn gain_bias_recovers_exact_affine_offsets() {
        let input = LdrImage::from_fn(8, 8, |x, y| [(x * 30) as u8, (y * 25) as u8, 100]).unwrap();
        // Target = initial + (0.5 * input + 3) exactly, per channel.
        let initial = LdrImage::from_fn(8, 8, |x, y| [(x * 10) as u8, (y * 5) as u8, 40]).unwrap();
        let target_real = RealImage::new(
            8,
            8,
            initial
                .data()
                .iter()
                .zip(input.data())
                .map(|(&i, &z)| i as f64 + 0.5 * z as f64 + 3.0)
                .collect(),
        )
        .unwrap();
        let target = target_real.quantize();
        let refiner = GainBiasRefiner {
            target: target.clone(),
        };
        let masks = compute_masks(&input, 250, 200);
        let residual = refiner.refine(&input, &initial, &masks.m0).unwrap();
        let enhanced = apply_residual(&initial, &residual);
        // Fit absorbs quantization, so the result matches within a level.
        for (a, b) in enhanced.data().iter().zip(target.data()) {
            assert!((*a as i16 - *b as i16).abs() <= 1);
        }
    }

    #[test]
    fn name_lookup() {
        assert_eq!(refiner_by_name("identity").unwrap().name(), "identity");
        assert!(refiner_by_name("nope").is_err());
    }
}
