//! C x H x W float feature maps, small convolution helpers, and a plain
//! text container for named parameter tensors.
//!
//! The container holds each tensor as a header line
//! `tensor <name> <ndim> <dims...>` followed by whitespace-separated
//! values in row-major order. Floats are printed with Rust's shortest
//! round-trip formatting, so write/read cycles are exact.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::LdrImage;

/// Dense C x H x W feature map, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::ShapeMismatch {
                expected: (channels, height, width),
                got: (data.len(), 0, 0),
            });
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    /// Normalized [0,1] feature map from an 8-bit image (C = 3).
    pub fn from_ldr(image: &LdrImage) -> Self {
        let (w, h) = (image.width(), image.height());
        let mut data = vec![0.0; 3 * h * w];
        for y in 0..h {
            for x in 0..w {
                let px = image.pixel(x, y);
                for c in 0..3 {
                    data[(c * h + y) * w + x] = px[c] as f64 / 255.0;
                }
            }
        }
        Self {
            channels: 3,
            height: h,
            width: w,
            data,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn positions(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    /// Value at channel `c`, flattened spatial position `p = y * w + x`.
    pub fn at_position(&self, c: usize, p: usize) -> f64 {
        self.data[c * self.height * self.width + p]
    }

    pub fn same_shape(&self, other: &FeatureMap) -> bool {
        self.shape() == other.shape()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> FeatureMap {
        FeatureMap {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// 2-D convolution kernel bank: `[c_out][c_in][kh][kw]` weights + bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernel {
    pub c_out: usize,
    pub c_in: usize,
    pub kh: usize,
    pub kw: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvKernel {
    pub fn new(c_out: usize, c_in: usize, kh: usize, kw: usize) -> Self {
        Self {
            c_out,
            c_in,
            kh,
            kw,
            weights: vec![0.0; c_out * c_in * kh * kw],
            bias: vec![0.0; c_out],
        }
    }

    pub fn weight(&self, o: usize, i: usize, ky: usize, kx: usize) -> f64 {
        self.weights[((o * self.c_in + i) * self.kh + ky) * self.kw + kx]
    }

    pub fn set_weight(&mut self, o: usize, i: usize, ky: usize, kx: usize, v: f64) {
        self.weights[((o * self.c_in + i) * self.kh + ky) * self.kw + kx] = v;
    }

    /// Same-padding convolution with zero borders.
    pub fn forward(&self, x: &FeatureMap) -> Result<FeatureMap> {
        if x.channels() != self.c_in {
            return Err(Error::ShapeMismatch {
                expected: (self.c_in, x.height(), x.width()),
                got: x.shape(),
            });
        }
        let (h, w) = (x.height(), x.width());
        let (py, px) = (self.kh / 2, self.kw / 2);
        let mut out = FeatureMap::zeros(self.c_out, h, w);
        for o in 0..self.c_out {
            for y in 0..h {
                for xx in 0..w {
                    let mut acc = self.bias[o];
                    for i in 0..self.c_in {
                        for ky in 0..self.kh {
                            let sy = y as isize + ky as isize - py as isize;
                            if sy < 0 || sy >= h as isize {
                                continue;
                            }
                            for kx in 0..self.kw {
                                let sx = xx as isize + kx as isize - px as isize;
                                if sx < 0 || sx >= w as isize {
                                    continue;
                                }
                                acc += self.weight(o, i, ky, kx)
                                    * x.get(i, sy as usize, sx as usize);
                            }
                        }
                    }
                    out.set(o, y, xx, acc);
                }
            }
        }
        Ok(out)
    }
}

/// Named tensors: name -> (shape, row-major data).
pub type TensorMap = BTreeMap<String, (Vec<usize>, Vec<f64>)>;

const MAGIC: &str = "lumafuse-tensors v1";

pub fn write_tensors(tensors: &TensorMap, mut writer: impl Write) -> Result<()> {
    writeln!(writer, "{MAGIC}")?;
    for (name, (shape, data)) in tensors {
        write!(writer, "tensor {name} {}", shape.len())?;
        for d in shape {
            write!(writer, " {d}")?;
        }
        writeln!(writer)?;
        for (i, v) in data.iter().enumerate() {
            if i > 0 {
                let sep = if i % 8 == 0 { '\n' } else { ' ' };
                write!(writer, "{sep}")?;
            }
            write!(writer, "{v}")?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

pub fn read_tensors(reader: impl BufRead) -> Result<TensorMap> {
    let mut tensors = TensorMap::new();
    let mut lines = reader.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::TensorParse {
            line: 1,
            message: "empty file".into(),
        })?;
    let first = first?;
    if first.trim() != MAGIC {
        return Err(Error::TensorParse {
            line: 1,
            message: format!("expected `{MAGIC}` header, got `{first}`"),
        });
    }

    let mut pending: Option<(String, Vec<usize>, usize, Vec<f64>)> = None;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("tensor ") {
            if let Some((name, shape, want, data)) = pending.take() {
                if data.len() != want {
                    return Err(Error::TensorParse {
                        line: lineno,
                        message: format!(
                            "tensor `{name}` expected {want} values, got {}",
                            data.len()
                        ),
                    });
                }
                tensors.insert(name, (shape, data));
            }
            let mut parts = rest.split_whitespace();
            let name = parts
                .next()
                .ok_or_else(|| Error::TensorParse {
                    line: lineno,
                    message: "missing tensor name".into(),
                })?
                .to_string();
            let ndim: usize = parts
                .next()
                .ok_or_else(|| Error::TensorParse {
                    line: lineno,
                    message: "missing rank".into(),
                })?
                .parse()
                .map_err(|e| Error::TensorParse {
                    line: lineno,
                    message: format!("bad rank: {e}"),
                })?;
            let shape: Vec<usize> = parts
                .map(|t| {
                    t.parse().map_err(|e| Error::TensorParse {
                        line: lineno,
                        message: format!("bad dimension `{t}`: {e}"),
                    })
                })
                .collect::<Result<_>>()?;
            if shape.len() != ndim {
                return Err(Error::TensorParse {
                    line: lineno,
                    message: format!("rank {ndim} does not match {} dimensions", shape.len()),
                });
            }
            let want: usize = shape.iter().product();
            pending = Some((name, shape, want, Vec::with_capacity(want)));
        } else {
            let Some((_, _, want, data)) = pending.as_mut() else {
                return Err(Error::TensorParse {
                    line: lineno,
                    message: "values before any tensor header".into(),
                });
            };
            for tok in trimmed.split_whitespace() {
                let v: f64 = tok.parse().map_err(|e| Error::TensorParse {
                    line: lineno,
                    message: format!("bad value `{tok}`: {e}"),
                })?;
                data.push(v);
                if data.len() > *want {
                    return Err(Error::TensorParse {
                        line: lineno,
                        message: "more values than the declared shape holds".into(),
                    });
                }
            }
        }
    }
    if let Some((name, shape, want, data)) = pending.take() {
        if data.len() != want {
            return Err(Error::TensorParse {
                line: 0,
                message: format!("tensor `{name}` expected {want} values, got {}", data.len()),
            });
        }
        tensors.insert(name, (shape, data));
    }
    Ok(tensors)
}

pub fn write_tensors_path(tensors: &TensorMap, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_tensors(tensors, std::io::BufWriter::new(file))
}

pub fn read_tensors_path(path: impl AsRef<Path>) -> Result<TensorMap> {
    let file = std::fs::File::open(path)?;
    read_tensors(std::io::BufReader::new(file))
}

/// Fetch an entry and check its shape.
pub fn take_tensor(map: &TensorMap, name: &str, shape: &[usize]) -> Result<Vec<f64>> {
    let (got_shape, data) = map
        .get(name)
        .ok_or_else(|| Error::MissingTensor(name.to_string()))?;
    if got_shape != shape {
        return Err(Error::TensorParse {
            line: 0,
            message: format!("tensor `{name}` has shape {got_shape:?}, expected {shape:?}"),
        });
    }
    Ok(data.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn container_round_trip_is_exact() {
        let mut map = TensorMap::new();
        map.insert(
            "alpha".into(),
            (vec![4], vec![0.9884, 0.9849, 0.981, 1.0826]),
        );
        map.insert(
            "conv.weight".into(),
            (vec![2, 1, 3, 3], (0..18).map(|i| i as f64 * 0.1 - 0.7).collect()),
        );
        let mut buf = Vec::new();
        write_tensors(&map, &mut buf).unwrap();
        let back = read_tensors(std::io::Cursor::new(&buf)).unwrap();
        assert_eq!(map, back);
    }

    #[test]
    fn parse_errors_name_line() {
        let bad = "lumafuse-tensors v1\ntensor a 1 2\n1.0 2.0 3.0\n";
        match read_tensors(std::io::Cursor::new(bad)) {
            Err(Error::TensorParse { line: 3, .. }) => {}
            other => panic!("expected overflow error, got {other:?}"),
        }
        let bad2 = "wrong header\n";
        assert!(read_tensors(std::io::Cursor::new(bad2)).is_err());
    }

    #[test]
    fn conv_hand_value() {
        // Single 3x3 kernel that picks the left neighbor.
        let mut k = ConvKernel::new(1, 1, 3, 3);
        k.set_weight(0, 0, 1, 0, 1.0);
        let x = FeatureMap::new(1, 1, 3, vec![5.0, 7.0, 11.0]).unwrap();
        let y = k.forward(&x).unwrap();
        assert_eq!(y.data(), &[0.0, 5.0, 7.0]);
    }

    #[test]
    fn conv_shape_checked() {
        let k = ConvKernel::new(1, 2, 3, 3);
        let x = FeatureMap::zeros(1, 2, 2);
        assert!(k.forward(&x).is_err());
    }

    #[test]
    fn from_ldr_normalizes() {
        let img = LdrImage::filled(2, 1, [255, 0, 128]).unwrap();
        let f = FeatureMap::from_ldr(&img);
        assert_eq!(f.shape(), (3, 1, 2));
        assert_eq!(f.get(0, 0, 0), 1.0);
        assert_eq!(f.get(1, 0, 1), 0.0);
        assert!((f.get(2, 0, 0) - 128.0 / 255.0).abs() < 1e-12);
    }
}
