//! Virtual camera: radiance in, 8-bit captures out.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::config::ExposureConfig;
use crate::crf::Crf;
use crate::error::{Error, Result};
use crate::image::{quantize, LdrImage, RadianceImage};

/// Sensor noise applied to the normalized exposure before the response
/// curve: Poisson shot noise with the given gain (exposure units per
/// photon) and Gaussian read noise.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum NoiseModel {
    #[default]
    None,
    Sensor {
        read_sigma: f64,
        poisson_gain: f64,
        seed: u64,
    },
}

/// Capture the radiance map at exposure time `dt`:
/// `z = quantize(f(clip(E * dt, 0, 1)))`, optionally with sensor noise.
/// Noiseless captures are fully deterministic; noisy captures are
/// deterministic from the model's seed (one RNG stream per row).
pub fn virtual_camera(
    radiance: &RadianceImage,
    crf: &Crf,
    dt: f64,
    noise: &NoiseModel,
) -> LdrImage {
    assert!(dt >= 0.0 && dt.is_finite(), "exposure time must be >= 0");
    let (w, h) = (radiance.width(), radiance.height());
    let mut data = vec![0u8; w * h * 3];
    for y in 0..h {
        let mut rng = match noise {
            NoiseModel::None => None,
            NoiseModel::Sensor { seed, .. } => {
                let mut r = ChaCha8Rng::seed_from_u64(*seed);
                r.set_stream(y as u64);
                Some(r)
            }
        };
        for x in 0..w {
            let px = radiance.pixel(x, y);
            for c in 0..3 {
                let mut exposure = px[c] * dt;
                if let (
                    NoiseModel::Sensor {
                        read_sigma,
                        poisson_gain,
                        ..
                    },
                    Some(rng),
                ) = (noise, rng.as_mut())
                {
                    if *poisson_gain > 0.0 && exposure > 0.0 {
                        let lambda = exposure / poisson_gain;
                        let photons = Poisson::new(lambda).map_or(lambda, |p| p.sample(rng));
                        exposure = photons * poisson_gain;
                    }
                    if *read_sigma > 0.0 {
                        exposure += Normal::new(0.0, *read_sigma)
                            .expect("sigma validated")
                            .sample(rng);
                    }
                }
                let clipped = exposure.clamp(0.0, 1.0);
                data[(y * w + x) * 3 + c] = quantize(crf.apply(clipped, c));
            }
        }
    }
    LdrImage::new(w, h, data).expect("radiance dims valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TripletRole {
    GroundTruth,
    Synthetic,
}

/// Three captures of one scene at strictly increasing exposure times.
#[derive(Debug, Clone)]
pub struct ExposureTriplet {
    pub dark: LdrImage,
    pub mid: LdrImage,
    pub bright: LdrImage,
    pub times: [f64; 3],
    pub role: TripletRole,
}

impl ExposureTriplet {
    pub fn new(
        dark: LdrImage,
        mid: LdrImage,
        bright: LdrImage,
        times: [f64; 3],
        role: TripletRole,
    ) -> Result<Self> {
        if !(times[0] > 0.0 && times[0] < times[1] && times[1] < times[2]) {
            return Err(Error::InvalidConfig(format!(
                "triplet times must be strictly increasing and positive: {times:?}"
            )));
        }
        Ok(Self {
            dark,
            mid,
            bright,
            times,
            role,
        })
    }

    pub fn images(&self) -> [&LdrImage; 3] {
        [&self.dark, &self.mid, &self.bright]
    }

    /// Merge this triplet into relative linear radiance.
    pub fn hdr_merge(&self, crf: &Crf) -> Result<RadianceImage> {
        crate::fuse::hdr_merge(&self.images(), &self.times, crf)
    }
}

/// Capture the ground-truth triplet at `dt0 < dt1 < dt2`.
pub fn make_triplet(
    radiance: &RadianceImage,
    crf: &Crf,
    cfg: &ExposureConfig,
    noise: &NoiseModel,
) -> Result<ExposureTriplet> {
    cfg.validate()?;
    let per_exposure = |dt: f64, offset: u64| -> LdrImage {
        let n = match noise {
            NoiseModel::None => NoiseModel::None,
            NoiseModel::Sensor {
                read_sigma,
                poisson_gain,
                seed,
            } => NoiseModel::Sensor {
                read_sigma: *read_sigma,
                poisson_gain: *poisson_gain,
                seed: seed.wrapping_add(offset),
            },
        };
        virtual_camera(radiance, crf, dt, &n)
    };
    ExposureTriplet::new(
        per_exposure(cfg.dt0, 1),
        per_exposure(cfg.dt1, 2),
        per_exposure(cfg.dt2, 3),
        [cfg.dt0, cfg.dt1, cfg.dt2],
        TripletRole::GroundTruth,
    )
}
