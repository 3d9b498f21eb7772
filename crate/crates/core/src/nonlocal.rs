//! Reference forward passes for the non-local spatial and channel
//! modules that make up one dual attention block.
//!
//! These are verification implementations: similarity matrices are
//! materialized in full, softmax rows are stabilized by max subtraction,
//! and the spatial attention is guarded against maps large enough that an
//! N x N matrix stops being a desk-scale object.

use crate::error::{Error, Result};
use crate::tensor::{take_tensor, FeatureMap, TensorMap};

/// Spatial attention guard: at most this many spatial positions.
pub const MAX_ATTENTION_POSITIONS: usize = 4096;

/// Forward-graph defaults: residual groups and dual modules per group.
pub const DEFAULT_RESIDUAL_GROUPS: usize = 4;
pub const DEFAULT_MODULES_PER_GROUP: usize = 4;

/// The three 1x1 projections of the spatial branch (C x C, row-major
/// `[out][in]`, no bias).
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    channels: usize,
    pub proj1: Vec<f64>,
    pub proj2: Vec<f64>,
    pub proj3: Vec<f64>,
}

impl AttentionParams {
    pub fn new(channels: usize, proj1: Vec<f64>, proj2: Vec<f64>, proj3: Vec<f64>) -> Result<Self> {
        let want = channels * channels;
        for (name, p) in [("proj1", &proj1), ("proj2", &proj2), ("proj3", &proj3)] {
            if p.len() != want {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be {channels}x{channels}, got {} values",
                    p.len()
                )));
            }
        }
        Ok(Self {
            channels,
            proj1,
            proj2,
            proj3,
        })
    }

    /// Identity projections.
    pub fn identity(channels: usize) -> Self {
        let mut eye = vec![0.0; channels * channels];
        for c in 0..channels {
            eye[c * channels + c] = 1.0;
        }
        Self {
            channels,
            proj1: eye.clone(),
            proj2: eye.clone(),
            proj3: eye,
        }
    }

    /// Identity query/key projections with a zeroed value path, which
    /// turns the spatial module into a pure residual.
    pub fn zero_value(channels: usize) -> Self {
        let mut p = Self::identity(channels);
        p.proj3 = vec![0.0; channels * channels];
        p
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Load projections from a tensor container with entries
    /// `proj1`, `proj2`, `proj3`, each `channels x channels`.
    pub fn from_tensors(map: &TensorMap, channels: usize) -> Result<Self> {
        let shape = [channels, channels];
        Self::new(
            channels,
            take_tensor(map, "proj1", &shape)?,
            take_tensor(map, "proj2", &shape)?,
            take_tensor(map, "proj3", &shape)?,
        )
    }

    pub fn to_tensors(&self) -> TensorMap {
        let mut map = TensorMap::new();
        let shape = vec![self.channels, self.channels];
        map.insert("proj1".into(), (shape.clone(), self.proj1.clone()));
        map.insert("proj2".into(), (shape.clone(), self.proj2.clone()));
        map.insert("proj3".into(), (shape, self.proj3.clone()));
        map
    }
}

/// Apply a C x C projection to every spatial position.
fn project(x: &FeatureMap, kernel: &[f64]) -> FeatureMap {
    let (c, h, w) = x.shape();
    let n = h * w;
    let mut out = FeatureMap::zeros(c, h, w);
    for o in 0..c {
        for p in 0..n {
            let mut acc = 0.0;
            for i in 0..c {
                acc += kernel[o * c + i] * x.at_position(i, p);
            }
            out.data_mut()[o * n + p] = acc;
        }
    }
    out
}

fn softmax_rows(logits: &mut [f64], rows: usize, cols: usize) {
    for r in 0..rows {
        let row = &mut logits[r * cols..(r + 1) * cols];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

/// Row-stochastic spatial similarity matrix (N x N, row j sums over i).
///
/// Entry (j, i) is the softmax over i of `q_i . k_j`, where `q` and `k`
/// are the first two projections of the input.
pub fn spatial_similarity(x: &FeatureMap, params: &AttentionParams) -> Result<Vec<f64>> {
    let (c, _, _) = x.shape();
    if c != params.channels {
        return Err(Error::ShapeMismatch {
            expected: (params.channels, x.height(), x.width()),
            got: x.shape(),
        });
    }
    let n = x.positions();
    if n > MAX_ATTENTION_POSITIONS {
        return Err(Error::AttentionTooLarge {
            positions: n,
            limit: MAX_ATTENTION_POSITIONS,
        });
    }
    let q = project(x, &params.proj1);
    let k = project(x, &params.proj2);
    let mut sim = vec![0.0f64; n * n];
    for j in 0..n {
        for i in 0..n {
            let mut dot = 0.0;
            for ch in 0..c {
                dot += q.at_position(ch, i) * k.at_position(ch, j);
            }
            sim[j * n + i] = dot;
        }
    }
    softmax_rows(&mut sim, n, n);
    Ok(sim)
}

/// Non-local spatial module: attention over positions plus residual.
pub fn nonlocal_spatial(x: &FeatureMap, params: &AttentionParams) -> Result<FeatureMap> {
    let sim = spatial_similarity(x, params)?;
    let v = project(x, &params.proj3);
    let (c, h, w) = x.shape();
    let n = h * w;
    let mut out = FeatureMap::zeros(c, h, w);
    for ch in 0..c {
        for j in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                acc += sim[j * n + i] * v.at_position(ch, i);
            }
            out.data_mut()[ch * n + j] = acc + x.at_position(ch, j);
        }
    }
    Ok(out)
}

/// Row-stochastic channel similarity matrix (C x C, row j sums over i).
///
/// Computed on the raw feature map, no learned parameters.
pub fn channel_similarity(x: &FeatureMap) -> Vec<f64> {
    let (c, _, _) = x.shape();
    let n = x.positions();
    let mut sim = vec![0.0f64; c * c];
    for j in 0..c {
        for i in 0..c {
            let mut dot = 0.0;
            for p in 0..n {
                dot += x.at_position(i, p) * x.at_position(j, p);
            }
            sim[j * c + i] = dot;
        }
    }
    softmax_rows(&mut sim, c, c);
    sim
}

/// Non-local channel module: attention over channels plus residual.
pub fn nonlocal_channel(x: &FeatureMap) -> FeatureMap {
    let sim = channel_similarity(x);
    let (c, h, w) = x.shape();
    let n = h * w;
    let mut out = FeatureMap::zeros(c, h, w);
    for j in 0..c {
        for p in 0..n {
            let mut acc = 0.0;
            for i in 0..c {
                acc += sim[j * c + i] * x.at_position(i, p);
            }
            out.data_mut()[j * n + p] = acc + x.at_position(j, p);
        }
    }
    out
}

/// Composition order of the two attention passes inside one dual module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AttentionOrder {
    #[default]
    SpatialThenChannel,
    ChannelThenSpatial,
}

/// Both attention passes in sequence.
pub fn dual_attention_forward(x: &FeatureMap, params: &AttentionParams, order: AttentionOrder) -> Result<FeatureMap> {
    match order {
        AttentionOrder::SpatialThenChannel => Ok(nonlocal_channel(&nonlocal_spatial(x, params)?)),
        AttentionOrder::ChannelThenSpatial => nonlocal_spatial(&nonlocal_channel(x), params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(c: usize, h: usize, w: usize, seed: u64) -> FeatureMap {
        // Small deterministic pseudo-random values in [-2, 2].
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
        let data = (0..c * h * w)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 33) as f64 / (1u64 << 31) as f64) * 2.0 - 2.0
            })
            .collect();
        FeatureMap::new(c, h, w, data).unwrap()
    }

    #[test]
    fn single_position_softmax_is_one() {
        let x = map(3, 1, 1, 7);
        let p = AttentionParams::identity(3);
        let sim = spatial_similarity(&x, &p).unwrap();
        assert_eq!(sim, vec![1.0]);
        let out = nonlocal_spatial(&x, &p).unwrap();
        for c in 0..3 {
            // S = [1] so output is value projection plus residual = 2x here.
            assert!((out.get(c, 0, 0) - 2.0 * x.get(c, 0, 0)).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_value_projection_is_residual_identity() {
        let x = map(4, 3, 2, 11);
        let p = AttentionParams::zero_value(4);
        let out = nonlocal_spatial(&x, &p).unwrap();
        assert_eq!(out.data(), x.data());
    }

    #[test]
    fn single_channel_doubles() {
        let x = map(1, 2, 3, 3);
        let out = nonlocal_channel(&x);
        let expect: Vec<f64> = x.data().iter().map(|&v| 2.0 * v).collect();
        assert_eq!(out.data(), &expect[..]);
    }

    #[test]
    fn zero_map_stays_zero() {
        let x = FeatureMap::zeros(4, 2, 3);
        let out = nonlocal_channel(&x);
        assert!(out.data().iter().all(|&v| v == 0.0));
        let p = AttentionParams::identity(4);
        let out = nonlocal_spatial(&x, &p).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rows_sum_to_one() {
        let x = map(5, 3, 3, 21);
        let p = AttentionParams::identity(5);
        let n = x.positions();
        let sim = spatial_similarity(&x, &p).unwrap();
        for j in 0..n {
            let s: f64 = sim[j * n..(j + 1) * n].iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
        let simc = channel_similarity(&x);
        for j in 0..5 {
            let s: f64 = simc[j * 5..(j + 1) * 5].iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn attention_guard_trips() {
        let x = FeatureMap::zeros(1, 65, 64);
        let p = AttentionParams::identity(1);
        match nonlocal_spatial(&x, &p) {
            Err(Error::AttentionTooLarge { positions: 4160, .. }) => {}
            other => panic!("expected guard, got {other:?}"),
        }
    }

    #[test]
    fn composition_matches_sequential_application() {
        let x = map(3, 4, 4, 5);
        let p = AttentionParams::identity(3);
        let composed = dual_attention_forward(&x, &p, AttentionOrder::SpatialThenChannel).unwrap();
        let manual = nonlocal_channel(&nonlocal_spatial(&x, &p).unwrap());
        assert_eq!(composed.data(), manual.data());

        let composed = dual_attention_forward(&x, &p, AttentionOrder::ChannelThenSpatial).unwrap();
        let manual = nonlocal_spatial(&nonlocal_channel(&x), &p).unwrap();
        assert_eq!(composed.data(), manual.data());
    }

    #[test]
    fn params_round_trip_through_container() {
        let p = AttentionParams::new(
            2,
            vec![0.5, -0.25, 0.0, 1.5],
            vec![1.0, 0.0, 0.0, 1.0],
            vec![0.1, 0.2, 0.3, 0.4],
        )
        .unwrap();
        let mut buf = Vec::new();
        crate::tensor::write_tensors(&p.to_tensors(), &mut buf).unwrap();
        let map = crate::tensor::read_tensors(std::io::Cursor::new(&buf)).unwrap();
        let back = AttentionParams::from_tensors(&map, 2).unwrap();
        assert_eq!(back, p);
        assert!(AttentionParams::from_tensors(&map, 3).is_err());
    }

    #[test]
    fn shape_is_preserved() {
        let x = map(8, 16, 16, 2);
        let p = AttentionParams::identity(8);
        let out = dual_attention_forward(&x, &p, AttentionOrder::default()).unwrap();
        assert_eq!(out.shape(), (8, 16, 16));
    }

    #[test]
    fn spatial_permutation_equivariance() {
        let x = map(3, 2, 4, 17);
        let p = AttentionParams::identity(3);
        let n = x.positions();
        // Deterministic permutation of the 8 positions.
        let perm: Vec<usize> = (0..n).map(|i| (i * 5 + 2) % n).collect();
        let mut xp = FeatureMap::zeros(3, 2, 4);
        for c in 0..3 {
            for (i, &target) in perm.iter().enumerate() {
                xp.data_mut()[c * n + target] = x.at_position(c, i);
            }
        }
        let out = nonlocal_spatial(&x, &p).unwrap();
        let outp = nonlocal_spatial(&xp, &p).unwrap();
        for c in 0..3 {
            for (i, &target) in perm.iter().enumerate() {
                let a = out.at_position(c, i);
                let b = outp.at_position(c, target);
                assert!((a - b).abs() < 1e-12, "c={c} i={i}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn uniform_attention_limit() {
        let x = map(4, 2, 3, 9);
        let t = 1e-6;
        let scaled = x.map(|v| v * t);
        let out = nonlocal_channel(&scaled);
        let n = x.positions();
        // As t -> 0 the similarity becomes uniform, so each output channel
        // approaches the channel mean plus the residual.
        for j in 0..4 {
            for p in 0..n {
                let mean: f64 = (0..4).map(|i| x.at_position(i, p)).sum::<f64>() / 4.0;
                let expect = mean + x.at_position(j, p);
                let got = out.at_position(j, p) / t;
                assert!((got - expect).abs() < 1e-4, "j={j} p={p}: {got} vs {expect}");
            }
        }
    }
}
