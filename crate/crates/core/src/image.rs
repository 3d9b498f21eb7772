//! Core image containers shared by the whole pipeline.
//!
//! Everything downstream works on three flavours of image:
//! - [`LdrImage`]: 8-bit, 3-channel, display-referred levels.
//! - [`RealImage`]: floating-point image on the same 0..255 level scale
//!   (signed values allowed; used for residuals and pre-quantization math).
//! - [`RadianceImage`]: linear scene-referred radiance, relative units.
//!
//! [`Plane`] is a single-channel float map used for weights, luma and
//! pyramid levels.

use std::path::Path;

use crate::error::{Error, Result};

/// Round half away from zero, then clamp to the 8-bit level range.
pub fn quantize(x: f64) -> u8 {
    x.round().clamp(0.0, 255.0) as u8
}

/// BT.601 luma from normalized or level-scale RGB (same scale out).
pub fn luma601(r: f64, g: f64, b: f64) -> f64 {
    0.299 * r + 0.587 * g + 0.114 * b
}

/// 8-bit 3-channel image, row-major interleaved RGB.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LdrImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl LdrImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ImageTooSmall {
                got: (width, height),
                min: (1, 1),
            });
        }
        if data.len() != width * height * 3 {
            return Err(Error::InvalidConfig(format!(
                "ldr image data length {} does not match {}x{}x3",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        Self::new(width, height, data)
    }

    /// Build from a per-pixel closure returning RGB.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn sample(&self, x: usize, y: usize, channel: usize) -> u8 {
        self.data[(y * self.width + x) * 3 + channel]
    }

    /// Convert to a float image on the same 0..255 scale.
    pub fn to_real(&self) -> RealImage {
        RealImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| v as f64).collect(),
        }
    }

    /// Extract one channel as a plane (level scale).
    pub fn channel_plane(&self, channel: usize) -> Plane {
        let data = self
            .data
            .chunks_exact(3)
            .map(|px| px[channel] as f64)
            .collect();
        Plane {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// BT.601 luma plane on the [0,1] scale.
    pub fn luma_plane(&self) -> Plane {
        let data = self
            .data
            .chunks_exact(3)
            .map(|px| luma601(px[0] as f64, px[1] as f64, px[2] as f64) / 255.0)
            .collect();
        Plane {
            width: self.width,
            height: self.height,
            data,
        }
    }

    pub fn open_png(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let dynimg = image::open(path)?;
        let rgb = match dynimg {
            image::DynamicImage::ImageRgb8(img) => img,
            image::DynamicImage::ImageRgba8(img) => {
                image::DynamicImage::ImageRgba8(img).to_rgb8()
            }
            image::DynamicImage::ImageLuma8(img) => {
                image::DynamicImage::ImageLuma8(img).to_rgb8()
            }
            _ => {
                return Err(Error::UnsupportedPng {
                    path: path.to_path_buf(),
                })
            }
        };
        let (w, h) = rgb.dimensions();
        Self::new(w as usize, h as usize, rgb.into_raw())
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let buf: image::RgbImage =
            image::ImageBuffer::from_raw(self.width as u32, self.height as u32, self.data.clone())
                .expect("dimensions validated at construction");
        buf.save_with_format(path.as_ref(), image::ImageFormat::Png)?;
        Ok(())
    }
}

/// Floating-point 3-channel image on the 0..255 level scale.
///
/// Values may be negative (residuals) or exceed 255 (pre-clamp sums).
#[derive(Debug, Clone, PartialEq)]
pub struct RealImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl RealImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * 3 || width == 0 || height == 0 {
            return Err(Error::InvalidConfig(format!(
                "real image data length {} does not match {}x{}x3",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height * 3],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Quantize to an 8-bit image (round half away from zero, clamp).
    pub fn quantize(&self) -> LdrImage {
        LdrImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| quantize(v)).collect(),
        }
    }

    pub fn same_size(&self, other: &RealImage) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Single-channel float map.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "plane data length");
        Self {
            width,
            height,
            data,
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }
}

/// Linear scene-referred radiance map (relative units), 3 channels.
#[derive(Debug, Clone, PartialEq)]
pub struct RadianceImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl RadianceImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * 3 || width == 0 || height == 0 {
            return Err(Error::InvalidConfig(format!(
                "radiance image data length {} does not match {}x{}x3",
                data.len(),
                width,
                height
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "radiance sample {i} is negative or not finite"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height * 3],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().cloned().fold(0.0, f64::max)
    }

    /// Smallest strictly positive sample, if any.
    pub fn min_positive(&self) -> Option<f64> {
        self.data
            .iter()
            .cloned()
            .filter(|v| *v > 0.0)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.min(v))))
    }
}
