//! Procedural radiance scenes for the virtual camera.
//!
//! Scenes are sums of smooth components (Gaussian blobs, linear ramps,
//! compact highlight spots) over a dark floor chosen so the scene spans
//! the requested dynamic range. Everything is deterministic from the
//! spec, and the random constructor is deterministic from its seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::image::RadianceImage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SceneComponent {
    /// Isotropic Gaussian radiance blob.
    Blob {
        cx: f64,
        cy: f64,
        sigma: f64,
        peak: f64,
    },
    /// Linear radiance ramp across the full image extent.
    Ramp {
        low: f64,
        high: f64,
        horizontal: bool,
    },
    /// Compact highlight disc with a smooth quartic falloff.
    Spot {
        cx: f64,
        cy: f64,
        radius: f64,
        peak: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub components: Vec<SceneComponent>,
    /// Target max/min radiance ratio, achieved within a factor of two.
    pub dynamic_range: f64,
}

impl SceneSpec {
    /// Deterministic random scene `index` of a seeded suite: a handful of
    /// blobs, a gentle ramp and a few hard highlights, peaking near
    /// `peak` so the mid exposure clips its highlights.
    pub fn random(seed: u64, index: u64, width: usize, height: usize, dynamic_range: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let peak = 2.5;
        // Ramp starts at zero so the dark floor controls the scene's
        // minimum and the dynamic-range target is met.
        let mut components = vec![SceneComponent::Ramp {
            low: 0.0,
            high: peak * 0.35,
            horizontal: rng.gen_bool(0.5),
        }];
        for _ in 0..rng.gen_range(4..=7) {
            components.push(SceneComponent::Blob {
                cx: rng.gen_range(0.05..0.95) * width as f64,
                cy: rng.gen_range(0.05..0.95) * height as f64,
                sigma: rng.gen_range(0.04..0.2) * width.min(height) as f64,
                peak: peak * rng.gen_range(0.05..0.5),
            });
        }
        for _ in 0..rng.gen_range(2..=4) {
            components.push(SceneComponent::Spot {
                cx: rng.gen_range(0.1..0.9) * width as f64,
                cy: rng.gen_range(0.1..0.9) * height as f64,
                radius: rng.gen_range(0.02..0.08) * width.min(height) as f64,
                peak: peak * rng.gen_range(0.6..1.0),
            });
        }
        Self {
            width,
            height,
            seed,
            components,
            dynamic_range,
        }
    }
}

/// Render the scene. The component sum gets a floor of
/// `max / dynamic_range` so the output ratio lands within a factor of
/// two of the target; an empty component list renders to zeros.
pub fn generate_scene(spec: &SceneSpec) -> RadianceImage {
    let (w, h) = (spec.width, spec.height);
    let mut data = vec![0.0f64; w * h * 3];
    // Slight per-channel tint keeps the channels from being identical
    // without changing the radiometric structure.
    let tint = [1.0, 0.94, 0.88];
    for y in 0..h {
        for x in 0..w {
            let (xf, yf) = (x as f64, y as f64);
            let mut v = 0.0;
            for comp in &spec.components {
                v += match comp {
                    SceneComponent::Blob {
                        cx,
                        cy,
                        sigma,
                        peak,
                    } => {
                        let d2 = (xf - cx).powi(2) + (yf - cy).powi(2);
                        peak * (-d2 / (2.0 * sigma * sigma)).exp()
                    }
                    SceneComponent::Ramp {
                        low,
                        high,
                        horizontal,
                    } => {
                        let t = if *horizontal {
                            xf / (w.max(2) - 1) as f64
                        } else {
                            yf / (h.max(2) - 1) as f64
                        };
                        low + (high - low) * t
                    }
                    SceneComponent::Spot {
                        cx,
                        cy,
                        radius,
                        peak,
                    } => {
                        let d2 = ((xf - cx).powi(2) + (yf - cy).powi(2)) / (radius * radius);
                        if d2 < 1.0 {
                            peak * (1.0 - d2) * (1.0 - d2)
                        } else {
                            0.0
                        }
                    }
                };
            }
            for c in 0..3 {
                data[(y * w + x) * 3 + c] = v * tint[c];
            }
        }
    }
    let max = data.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        let floor = max / spec.dynamic_range;
        for v in &mut data {
            *v += floor;
        }
    }
    RadianceImage::new(w, h, data).expect("components are finite and non-negative")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a = SceneSpec::random(1, 0, 32, 24, 1e4);
        let b = SceneSpec::random(1, 0, 32, 24, 1e4);
        assert_eq!(a, b);
        assert_eq!(generate_scene(&a), generate_scene(&b));
        let c = SceneSpec::random(2, 0, 32, 24, 1e4);
        assert_ne!(generate_scene(&a), generate_scene(&c));
    }

    #[test]
    fn empty_components_render_zero() {
        let spec = SceneSpec {
            width: 8,
            height: 8,
            seed: 0,
            components: vec![],
            dynamic_range: 1e4,
        };
        let img = generate_scene(&spec);
        assert!(img.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn blob_peak_lands_near_requested_value() {
        let spec = SceneSpec {
            width: 33,
            height: 33,
            seed: 0,
            components: vec![SceneComponent::Blob {
                cx: 16.0,
                cy: 16.0,
                sigma: 5.0,
                peak: 1.0,
            }],
            dynamic_range: 1e4,
        };
        let img = generate_scene(&spec);
        let max = img.max_value();
        assert!((max - 1.0).abs() < 0.01, "max {max}");
    }

    #[test]
    fn dynamic_range_within_factor_two() {
        let spec = SceneSpec::random(7, 3, 64, 64, 1e4);
        let img = generate_scene(&spec);
        let max = img.max_value();
        let min = img.min_positive().unwrap();
        let ratio = max / min;
        assert!(
            (0.5e4..=2e4).contains(&ratio),
            "dynamic range {ratio} out of band"
        );
    }
}
