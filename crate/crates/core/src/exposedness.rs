//! Exposedness masks and the gated guidance branch.
//!
//! Two binary per-channel masks mark where the synthetic exposures are
//! trustworthy: the dark-direction mask zeroes channels at or above the
//! upper threshold, the bright-direction mask zeroes channels at or below
//! the lower threshold. Gating multiplies a synthetic image by its mask
//! so unreliable samples carry no information into the guidance branch.
//!
//! The guidance branch itself is two 3x3 convolutions around a leaky
//! ramp; its output is blended into a host feature map with per-level
//! scales `alpha * host + beta * guidance`.

use crate::error::{Error, Result};
use crate::image::LdrImage;
use crate::tensor::{take_tensor, ConvKernel, FeatureMap, TensorMap};

/// Per-channel binary mask, S x H x W samples of 0 or 1 (interleaved RGB).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::InvalidConfig(format!(
                "mask data length {} does not match {}x{}x3",
                data.len(),
                width,
                height
            )));
        }
        if data.iter().any(|&v| v > 1) {
            return Err(Error::InvalidConfig("mask samples must be 0 or 1".into()));
        }
        Ok(Self {
            width,
            height,
            data,
        })
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

    pub fn get(&self, x: usize, y: usize, channel: usize) -> u8 {
        self.data[(y * self.width + x) * 3 + channel]
    }

    /// Render as an 8-bit image (1 -> 255) for inspection on disk.
    pub fn to_ldr(&self) -> LdrImage {
        let data = self.data.iter().map(|&v| v * 255).collect();
        LdrImage::new(self.width, self.height, data).expect("mask dims valid")
    }

    /// Read back a mask image written by [`BinaryMask::to_ldr`].
    pub fn from_ldr(image: &LdrImage) -> Self {
        let data = image.data().iter().map(|&v| (v > 127) as u8).collect();
        Self {
            width: image.width(),
            height: image.height(),
            data,
        }
    }
}

/// The pair of exposedness masks derived from the input image.
#[derive(Debug, Clone)]
pub struct ExposednessMasks {
    /// Reliability of the darkened image: 0 where the input channel is
    /// at or above `xi_u`.
    pub m0: BinaryMask,
    /// Reliability of the brightened image: 0 where the input channel is
    /// at or below `xi_l`.
    pub m2: BinaryMask,
}

/// Threshold the input image into the two masks.
pub fn compute_masks(input: &LdrImage, xi_u: u8, xi_l: u8) -> ExposednessMasks {
    let n = input.width() * input.height() * 3;
    let mut m0 = vec![0u8; n];
    let mut m2 = vec![0u8; n];
    for (i, &z) in input.data().iter().enumerate() {
        m0[i] = (z < xi_u) as u8;
        m2[i] = (z > xi_l) as u8;
    }
    ExposednessMasks {
        m0: BinaryMask {
            width: input.width(),
            height: input.height(),
            data: m0,
        },
        m2: BinaryMask {
            width: input.width(),
            height: input.height(),
            data: m2,
        },
    }
}

/// Zero out masked samples of a synthetic image.
pub fn gate(synthetic: &LdrImage, mask: &BinaryMask) -> Result<LdrImage> {
    if synthetic.width() != mask.width() || synthetic.height() != mask.height() {
        return Err(Error::DimensionMismatch {
            expected: (synthetic.width(), synthetic.height()),
            got: (mask.width(), mask.height()),
        });
    }
    let data = synthetic
        .data()
        .iter()
        .zip(mask.data())
        .map(|(&v, &m)| v * m)
        .collect();
    LdrImage::new(synthetic.width(), synthetic.height(), data)
}

/// Number of guidance injection levels.
pub const GUIDANCE_LEVELS: usize = 4;

/// Default channel width of the guidance convolutions.
pub const DEFAULT_GUIDANCE_WIDTH: usize = 16;

/// Injection scales of the trained guidance branch.
pub const TRAINED_ALPHA: [f64; GUIDANCE_LEVELS] = [0.9884, 0.9849, 0.981, 1.0826];
pub const TRAINED_BETA: [f64; GUIDANCE_LEVELS] = [1.0112, 0.9789, 0.9888, 1.0021];

/// Guidance branch parameters: conv-act-conv plus per-level injection
/// scales. The activation is a leaky ramp; slope 1.0 makes the branch
/// linear, slope 0.2 is the default.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceParams {
    pub conv1: ConvKernel,
    pub conv2: ConvKernel,
    pub alpha: [f64; GUIDANCE_LEVELS],
    pub beta: [f64; GUIDANCE_LEVELS],
    pub leaky_slope: f64,
}

impl GuidanceParams {
    /// Zero-weight branch with the given channel widths.
    pub fn zeros(c_in: usize, c_mid: usize, c_out: usize) -> Self {
        Self {
            conv1: ConvKernel::new(c_mid, c_in, 3, 3),
            conv2: ConvKernel::new(c_out, c_mid, 3, 3),
            alpha: [1.0; GUIDANCE_LEVELS],
            beta: [0.0; GUIDANCE_LEVELS],
            leaky_slope: 0.2,
        }
    }

    pub fn to_tensors(&self) -> TensorMap {
        let mut map = TensorMap::new();
        map.insert(
            "conv1.weight".into(),
            (
                vec![self.conv1.c_out, self.conv1.c_in, 3, 3],
                self.conv1.weights.clone(),
            ),
        );
        map.insert(
            "conv1.bias".into(),
            (vec![self.conv1.c_out], self.conv1.bias.clone()),
        );
        map.insert(
            "conv2.weight".into(),
            (
                vec![self.conv2.c_out, self.conv2.c_in, 3, 3],
                self.conv2.weights.clone(),
            ),
        );
        map.insert(
            "conv2.bias".into(),
            (vec![self.conv2.c_out], self.conv2.bias.clone()),
        );
        map.insert("alpha".into(), (vec![GUIDANCE_LEVELS], self.alpha.to_vec()));
        map.insert("beta".into(), (vec![GUIDANCE_LEVELS], self.beta.to_vec()));
        map
    }

    /// Rebuild from a tensor container with entries
    /// `conv1.*`, `conv2.*`, `alpha`, `beta`.
    pub fn from_tensors(map: &TensorMap, leaky_slope: f64) -> Result<Self> {
        let (w1_shape, _) = map
            .get("conv1.weight")
            .ok_or_else(|| Error::MissingTensor("conv1.weight".into()))?;
        if w1_shape.len() != 4 || w1_shape[2] != 3 || w1_shape[3] != 3 {
            return Err(Error::TensorParse {
                line: 0,
                message: format!("conv1.weight must be [c_out, c_in, 3, 3], got {w1_shape:?}"),
            });
        }
        let (c_mid, c_in) = (w1_shape[0], w1_shape[1]);
        let (w2_shape, _) = map
            .get("conv2.weight")
            .ok_or_else(|| Error::MissingTensor("conv2.weight".into()))?;
        if w2_shape.len() != 4 || w2_shape[1] != c_mid || w2_shape[2] != 3 || w2_shape[3] != 3 {
            return Err(Error::TensorParse {
                line: 0,
                message: format!("conv2.weight must be [c_out, {c_mid}, 3, 3], got {w2_shape:?}"),
            });
        }
        let c_out = w2_shape[0];

        let mut conv1 = ConvKernel::new(c_mid, c_in, 3, 3);
        conv1.weights = take_tensor(map, "conv1.weight", &[c_mid, c_in, 3, 3])?;
        conv1.bias = take_tensor(map, "conv1.bias", &[c_mid])?;
        let mut conv2 = ConvKernel::new(c_out, c_mid, 3, 3);
        conv2.weights = take_tensor(map, "conv2.weight", &[c_out, c_mid, 3, 3])?;
        conv2.bias = take_tensor(map, "conv2.bias", &[c_out])?;

        let alpha_v = take_tensor(map, "alpha", &[GUIDANCE_LEVELS])?;
        let beta_v = take_tensor(map, "beta", &[GUIDANCE_LEVELS])?;
        let mut alpha = [0.0; GUIDANCE_LEVELS];
        let mut beta = [0.0; GUIDANCE_LEVELS];
        alpha.copy_from_slice(&alpha_v);
        beta.copy_from_slice(&beta_v);

        Ok(Self {
            conv1,
            conv2,
            alpha,
            beta,
            leaky_slope,
        })
    }
}

fn leaky(x: f64, slope: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        slope * x
    }
}

/// Guidance features: `conv2(act(conv1(x)))`.
pub fn guidance_features(x: &FeatureMap, params: &GuidanceParams) -> Result<FeatureMap> {
    let slope = params.leaky_slope;
    let mid = params.conv1.forward(x)?.map(|v| leaky(v, slope));
    params.conv2.forward(&mid)
}

/// Blend guidance into a host map: `alpha * host + beta * guidance`.
pub fn inject(host: &FeatureMap, guidance: &FeatureMap, alpha: f64, beta: f64) -> Result<FeatureMap> {
    if !host.same_shape(guidance) {
        return Err(Error::ShapeMismatch {
            expected: host.shape(),
            got: guidance.shape(),
        });
    }
    let data = host
        .data()
        .iter()
        .zip(guidance.data())
        .map(|(&f, &g)| alpha * f + beta * g)
        .collect();
    let (c, h, w) = host.shape();
    FeatureMap::new(c, h, w, data)
}

/// Full guidance step at injection level `level`: compute features from
/// the gated input and blend them into the host map.
pub fn guidance_forward(
    host: &FeatureMap,
    gated: &FeatureMap,
    params: &GuidanceParams,
    level: usize,
) -> Result<FeatureMap> {
    let g = guidance_features(gated, params)?;
    inject(host, &g, params.alpha[level], params.beta[level])
}
