//! Seeded multi-scene experiments with per-scene metric rows.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{BrightRange, ExposureConfig};
use crate::crf::Crf;
use crate::error::{Error, Result};
use crate::fuse::hdr_merge;
use crate::harness::camera::{make_triplet, NoiseModel};
use crate::harness::pipeline::{restore_pipeline_with, PipelineOptions};
use crate::harness::refine::{GainBiasRefiner, IdentityRefiner, Refiner};
use crate::harness::scene::{generate_scene, SceneSpec};
use crate::image::RadianceImage;
use crate::metrics::{mef_ssim, psnr, ssim};
use crate::synth::WeightMode;

/// Strict-mode gates evaluated by [`run_experiment`].
pub const STRICT_MIN_MEF_SSIM: f64 = 0.90;
pub const STRICT_MIN_CASE1_FIDELITY: f64 = 0.99;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub scenes: usize,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub dynamic_range: f64,
    pub dt1: f64,
    pub ratio: f64,
    pub xi_u: u8,
    pub xi_l: u8,
    pub bright_lo: u8,
    pub bright_hi: u8,
    pub gamma: Option<f64>,
    pub crf_path: Option<PathBuf>,
    /// `verbatim` or `smooth`.
    pub mode: String,
    /// `identity` or `gainbias` (gain-bias fits against ground truth).
    pub refiner: String,
    pub noise_read_sigma: f64,
    pub noise_poisson_gain: f64,
    pub extra_levels: i32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenes: 20,
            seed: 7,
            width: 512,
            height: 512,
            dynamic_range: 1e4,
            dt1: 1.0,
            ratio: 4.0,
            xi_u: 250,
            xi_l: 200,
            bright_lo: 5,
            bright_hi: 55,
            gamma: Some(2.2),
            crf_path: None,
            mode: "verbatim".into(),
            refiner: "identity".into(),
            noise_read_sigma: 0.0,
            noise_poisson_gain: 0.0,
            extra_levels: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn exposure(&self) -> Result<ExposureConfig> {
        let cfg = ExposureConfig {
            dt0: self.dt1 / self.ratio,
            dt1: self.dt1,
            dt2: self.dt1 * self.ratio,
            xi_u: self.xi_u,
            xi_l: self.xi_l,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn crf(&self) -> Result<Crf> {
        match (&self.gamma, &self.crf_path) {
            (_, Some(path)) => Crf::from_csv_path(path),
            (Some(g), None) => Crf::gamma(*g),
            (None, None) => Err(Error::InvalidConfig("no crf configured".into())),
        }
    }

    pub fn weight_mode(&self) -> Result<WeightMode> {
        self.mode
            .parse()
            .map_err(|e: String| Error::InvalidConfig(e))
    }

    fn noise(&self, scene: u64) -> NoiseModel {
        if self.noise_read_sigma > 0.0 || self.noise_poisson_gain > 0.0 {
            NoiseModel::Sensor {
                read_sigma: self.noise_read_sigma,
                poisson_gain: self.noise_poisson_gain,
                seed: self.seed.wrapping_mul(1000).wrapping_add(scene),
            }
        } else {
            NoiseModel::None
        }
    }
}

/// One table row; the metric columns score the synthetic exposures
/// against ground truth and the fused/merged outputs against the
/// ground-truth stack.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SceneMetrics {
    pub scene: usize,
    pub ssim_low: f64,
    pub ssim_high: f64,
    pub psnr_low: f64,
    pub psnr_high: f64,
    pub mef_ssim: f64,
    pub mse_hdr: f64,
    /// Fraction of IMF-path (non-fallback) pixels within 2 levels of the
    /// ground truth, dark and bright directions.
    pub case1_dark_within2: f64,
    pub case1_bright_within2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrictChecks {
    pub mean_mef_ssim_ok: bool,
    pub case1_dark_ok: bool,
    pub case1_bright_ok: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub rows: Vec<SceneMetrics>,
    pub average: SceneMetrics,
    pub strict: StrictChecks,
}

fn fidelity_within(
    synthetic: &crate::image::LdrImage,
    truth: &crate::image::LdrImage,
    fallback: &[bool],
    tolerance: i16,
) -> f64 {
    let mut eligible = 0usize;
    let mut good = 0usize;
    for (i, &fell_back) in fallback.iter().enumerate() {
        if fell_back {
            continue;
        }
        eligible += 1;
        let ok = (0..3).all(|c| {
            let a = synthetic.data()[i * 3 + c] as i16;
            let b = truth.data()[i * 3 + c] as i16;
            (a - b).abs() <= tolerance
        });
        if ok {
            good += 1;
        }
    }
    if eligible == 0 {
        1.0
    } else {
        good as f64 / eligible as f64
    }
}

/// MSE between two radiance maps after normalizing both by the reference
/// peak, so the number is comparable across scenes.
pub fn radiance_mse(prediction: &RadianceImage, reference: &RadianceImage) -> Result<f64> {
    if prediction.width() != reference.width() || prediction.height() != reference.height() {
        return Err(Error::DimensionMismatch {
            expected: (reference.width(), reference.height()),
            got: (prediction.width(), prediction.height()),
        });
    }
    let peak = reference.max_value();
    if peak == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = prediction
        .data()
        .iter()
        .zip(reference.data())
        .map(|(&p, &r)| {
            let d = (p - r) / peak;
            d * d
        })
        .sum();
    Ok(sum / prediction.data().len() as f64)
}

fn run_scene(cfg: &ExperimentConfig, scene: usize) -> Result<SceneMetrics> {
    let exposure = cfg.exposure()?;
    let crf = cfg.crf()?;
    let mode = cfg.weight_mode()?;
    let bright_range = BrightRange {
        lower: cfg.bright_lo,
        upper: cfg.bright_hi,
    };

    let spec = SceneSpec::random(cfg.seed, scene as u64, cfg.width, cfg.height, cfg.dynamic_range);
    let radiance = generate_scene(&spec);
    let truth = make_triplet(&radiance, &crf, &exposure, &cfg.noise(scene as u64))?;

    let identity = IdentityRefiner;
    let gain_dark;
    let gain_bright;
    let (dark_refiner, bright_refiner): (&dyn Refiner, &dyn Refiner) =
        match cfg.refiner.as_str() {
            "identity" => (&identity, &identity),
            "gainbias" => {
                gain_dark = GainBiasRefiner {
                    target: truth.dark.clone(),
                };
                gain_bright = GainBiasRefiner {
                    target: truth.bright.clone(),
                };
                (&gain_dark, &gain_bright)
            }
            other => return Err(Error::UnknownRefiner(other.to_string())),
        };

    let opts = PipelineOptions {
        mode,
        bright_range,
        extra_levels: cfg.extra_levels,
        make_hdr: true,
    };
    let out = restore_pipeline_with(&truth.mid, &crf, &exposure, dark_refiner, bright_refiner, &opts)?;

    let dark_real = out.dark.to_real();
    let bright_real = out.bright.to_real();
    let truth_dark_real = truth.dark.to_real();
    let truth_bright_real = truth.bright.to_real();

    let hdr_truth = hdr_merge(
        &[&truth.dark, &truth.mid, &truth.bright],
        &truth.times,
        &crf,
    )?;
    let hdr_pred = out.hdr.as_ref().expect("make_hdr set");

    Ok(SceneMetrics {
        scene,
        ssim_low: ssim(&dark_real, &truth_dark_real)?,
        ssim_high: ssim(&bright_real, &truth_bright_real)?,
        psnr_low: psnr(&dark_real, &truth_dark_real)?,
        psnr_high: psnr(&bright_real, &truth_bright_real)?,
        mef_ssim: mef_ssim(&out.fused, &[&truth.dark, &truth.mid, &truth.bright])?,
        mse_hdr: radiance_mse(hdr_pred, &hdr_truth)?,
        case1_dark_within2: fidelity_within(
            &out.initial_dark.image,
            &truth.dark,
            &out.initial_dark.fallback,
            2,
        ),
        case1_bright_within2: fidelity_within(
            &out.initial_bright.image,
            &truth.bright,
            &out.initial_bright.fallback,
            2,
        ),
    })
}

fn average_rows(rows: &[SceneMetrics]) -> SceneMetrics {
    let n = rows.len().max(1) as f64;
    let mut avg = SceneMetrics {
        scene: rows.len(),
        ssim_low: 0.0,
        ssim_high: 0.0,
        psnr_low: 0.0,
        psnr_high: 0.0,
        mef_ssim: 0.0,
        mse_hdr: 0.0,
        case1_dark_within2: 0.0,
        case1_bright_within2: 0.0,
    };
    for r in rows {
        avg.ssim_low += r.ssim_low;
        avg.ssim_high += r.ssim_high;
        avg.psnr_low += r.psnr_low;
        avg.psnr_high += r.psnr_high;
        avg.mef_ssim += r.mef_ssim;
        avg.mse_hdr += r.mse_hdr;
        avg.case1_dark_within2 += r.case1_dark_within2;
        avg.case1_bright_within2 += r.case1_bright_within2;
    }
    avg.ssim_low /= n;
    avg.ssim_high /= n;
    avg.psnr_low /= n;
    avg.psnr_high /= n;
    avg.mef_ssim /= n;
    avg.mse_hdr /= n;
    avg.case1_dark_within2 /= n;
    avg.case1_bright_within2 /= n;
    avg
}

/// Run every scene of the configured suite and aggregate per-scene rows.
/// Scenes run in parallel; the report is deterministic from the config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    if cfg.scenes == 0 {
        return Err(Error::InvalidConfig("scene count must be positive".into()));
    }
    let rows: Vec<SceneMetrics> = (0..cfg.scenes)
        .into_par_iter()
        .map(|i| run_scene(cfg, i))
        .collect::<Result<_>>()?;
    let average = average_rows(&rows);
    let case1_dark_ok = rows
        .iter()
        .all(|r| r.case1_dark_within2 >= STRICT_MIN_CASE1_FIDELITY);
    let case1_bright_ok = rows
        .iter()
        .all(|r| r.case1_bright_within2 >= STRICT_MIN_CASE1_FIDELITY);
    let mean_mef_ssim_ok = average.mef_ssim >= STRICT_MIN_MEF_SSIM;
    let strict = StrictChecks {
        mean_mef_ssim_ok,
        case1_dark_ok,
        case1_bright_ok,
        passed: mean_mef_ssim_ok && case1_dark_ok && case1_bright_ok,
    };
    Ok(Report {
        config: cfg.clone(),
        rows,
        average,
        strict,
    })
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable metric table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(
            "scene  ssim_low  ssim_high  psnr_low  psnr_high  mef_ssim   mse_hdr\n",
        );
        let mut line = |label: String, r: &SceneMetrics| {
            out.push_str(&format!(
                "{label:>5}  {:>8.4}  {:>9.4}  {:>8.2}  {:>9.2}  {:>8.4}  {:>9.3e}\n",
                r.ssim_low, r.ssim_high, r.psnr_low, r.psnr_high, r.mef_ssim, r.mse_hdr
            ));
        };
        for r in &self.rows {
            line(format!("{}", r.scene), r);
        }
        line("avg".into(), &self.average);
        out
    }
}
