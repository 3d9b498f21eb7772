//! Exposure settings and the on-disk pipeline configuration format.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::crf::Crf;
use crate::error::{Error, Result};

/// Exposure times and reliability thresholds for the synthesis pipeline.
///
/// Defaults: `dt2 = 4 * dt1`, `dt0 = dt1 / 4`, thresholds 250 / 200.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExposureConfig {
    /// Exposure time of the dark synthetic image (seconds, relative).
    pub dt0: f64,
    /// Exposure time of the input image.
    pub dt1: f64,
    /// Exposure time of the bright synthetic image.
    pub dt2: f64,
    /// Upper reliability threshold (8-bit level).
    pub xi_u: u8,
    /// Lower reliability threshold (8-bit level).
    pub xi_l: u8,
}

impl Default for ExposureConfig {
    fn default() -> Self {
        Self {
            dt0: 0.25,
            dt1: 1.0,
            dt2: 4.0,
            xi_u: 250,
            xi_l: 200,
        }
    }
}

impl ExposureConfig {
    /// Build from a mid exposure time and an adjacent-exposure ratio.
    pub fn from_ratio(dt1: f64, ratio: f64) -> Result<Self> {
        let cfg = Self {
            dt0: dt1 / ratio,
            dt1,
            dt2: dt1 * ratio,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt0 > 0.0 && self.dt0 < self.dt1 && self.dt1 < self.dt2) {
            return Err(Error::InvalidConfig(format!(
                "exposure times must satisfy 0 < dt0 < dt1 < dt2, got {} {} {}",
                self.dt0, self.dt1, self.dt2
            )));
        }
        if !(0 < self.xi_l && self.xi_l < self.xi_u) {
            return Err(Error::InvalidConfig(format!(
                "thresholds must satisfy 0 < xi_l < xi_u <= 255, got xi_l={} xi_u={}",
                self.xi_l, self.xi_u
            )));
        }
        Ok(())
    }
}

/// Reliability band for bright-side synthesis: pixels below `lower` are
/// treated as underexposed (unreliable for brightening), the weight ramps
/// across [lower, upper].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrightRange {
    pub lower: u8,
    pub upper: u8,
}

impl Default for BrightRange {
    fn default() -> Self {
        Self {
            lower: 5,
            upper: 55,
        }
    }
}

impl BrightRange {
    pub fn validate(&self) -> Result<()> {
        if self.lower == 0 || self.lower >= self.upper {
            return Err(Error::InvalidConfig(format!(
                "bright range must satisfy 0 < lower < upper, got {} {}",
                self.lower, self.upper
            )));
        }
        Ok(())
    }
}

fn default_dt1() -> f64 {
    1.0
}

fn default_ratio() -> f64 {
    4.0
}

/// On-disk pipeline configuration (TOML).
///
/// Keys: `dt0,dt1,dt2,xi_u,xi_l` plus either `gamma` or `crf_path`.
/// `dt0`/`dt2` default to `dt1/ratio` and `dt1*ratio`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default = "default_dt1")]
    pub dt1: f64,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    pub dt0: Option<f64>,
    pub dt2: Option<f64>,
    pub xi_u: Option<u8>,
    pub xi_l: Option<u8>,
    pub gamma: Option<f64>,
    pub crf_path: Option<PathBuf>,
    #[serde(default)]
    pub bright_lo: Option<u8>,
    #[serde(default)]
    pub bright_hi: Option<u8>,
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn exposure(&self) -> Result<ExposureConfig> {
        let mut cfg = ExposureConfig {
            dt1: self.dt1,
            dt0: self.dt0.unwrap_or(self.dt1 / self.ratio),
            dt2: self.dt2.unwrap_or(self.dt1 * self.ratio),
            ..ExposureConfig::default()
        };
        if let Some(u) = self.xi_u {
            cfg.xi_u = u;
        }
        if let Some(l) = self.xi_l {
            cfg.xi_l = l;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn bright_range(&self) -> Result<BrightRange> {
        let mut range = BrightRange::default();
        if let Some(lo) = self.bright_lo {
            range.lower = lo;
        }
        if let Some(hi) = self.bright_hi {
            range.upper = hi;
        }
        range.validate()?;
        Ok(range)
    }

    pub fn crf(&self) -> Result<Crf> {
        match (&self.gamma, &self.crf_path) {
            (Some(g), None) => Crf::gamma(*g),
            (None, Some(path)) => Crf::from_csv_path(path),
            (Some(_), Some(_)) => Err(Error::InvalidConfig(
                "set either `gamma` or `crf_path`, not both".into(),
            )),
            (None, None) => Err(Error::InvalidConfig(
                "missing camera response: set `gamma` or `crf_path`".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_quarter_and_four_times() {
        let cfg = ExposureConfig::default();
        assert_eq!(cfg.dt0, cfg.dt1 / 4.0);
        assert_eq!(cfg.dt2, cfg.dt1 * 4.0);
        assert_eq!((cfg.xi_u, cfg.xi_l), (250, 200));
        cfg.validate().unwrap();
    }

    #[test]
    fn ordering_is_enforced() {
        let cfg = ExposureConfig {
            dt0: 2.0,
            dt1: 1.0,
            dt2: 4.0,
            ..ExposureConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn toml_keys_round_trip() {
        let cfg = PipelineConfig::from_toml_str(
            "dt1 = 2.0\nratio = 2.0\nxi_u = 240\nxi_l = 180\ngamma = 2.2\n",
        )
        .unwrap();
        let exp = cfg.exposure().unwrap();
        assert_eq!(exp.dt0, 1.0);
        assert_eq!(exp.dt2, 4.0);
        assert_eq!((exp.xi_u, exp.xi_l), (240, 180));
        assert!(cfg.crf().is_ok());

        let bad = PipelineConfig::from_toml_str("dt1 = 1.0\n").unwrap();
        assert!(bad.crf().is_err());
    }
}
