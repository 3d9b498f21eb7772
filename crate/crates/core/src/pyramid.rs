//! Gaussian and Laplacian pyramids over single-channel planes.
//!
//! The classic 5-tap binomial kernel [1 4 6 4 1]/16 with replicated
//! borders; odd sizes shrink with ceil(n/2). Collapse reverses build
//! exactly, so round trips are lossless up to float rounding.

use crate::image::Plane;

const KERNEL: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

fn blur_horizontal(src: &Plane) -> Plane {
    let (w, h) = (src.width(), src.height());
    let mut out = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kv) in KERNEL.iter().enumerate() {
                let sx = clamp_index(x as isize + k as isize - 2, w);
                acc += kv * src.get(sx, y);
            }
            out.set(x, y, acc);
        }
    }
    out
}

fn blur_vertical(src: &Plane) -> Plane {
    let (w, h) = (src.width(), src.height());
    let mut out = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kv) in KERNEL.iter().enumerate() {
                let sy = clamp_index(y as isize + k as isize - 2, h);
                acc += kv * src.get(x, sy);
            }
            out.set(x, y, acc);
        }
    }
    out
}

fn blur(src: &Plane) -> Plane {
    blur_vertical(&blur_horizontal(src))
}

/// Blur and decimate by two (even samples kept; output is ceil(n/2)).
pub fn downsample(src: &Plane) -> Plane {
    let blurred = blur(src);
    let (w, h) = (src.width(), src.height());
    let (dw, dh) = (w.div_ceil(2), h.div_ceil(2));
    let mut out = Plane::zeros(dw, dh);
    for y in 0..dh {
        for x in 0..dw {
            out.set(x, y, blurred.get(x * 2, y * 2));
        }
    }
    out
}

/// Zero-insert to the requested parent size and blur with a x4 gain,
/// which undoes the decimation density loss in both directions.
pub fn upsample(src: &Plane, width: usize, height: usize) -> Plane {
    let mut expanded = Plane::zeros(width, height);
    for y in 0..src.height() {
        for x in 0..src.width() {
            if x * 2 < width && y * 2 < height {
                expanded.set(x * 2, y * 2, src.get(x, y));
            }
        }
    }
    let mut out = blur(&expanded);
    for v in out.data_mut() {
        *v *= 4.0;
    }
    out
}

/// Number of levels of a full decomposition: the coarsest level of
/// `floor(log2(min(w, h))) + extra` levels still has every dimension >= 1.
/// `extra = 0` is the standard full pyramid.
pub fn level_count(width: usize, height: usize, extra: i32) -> usize {
    let base = (usize::min(width, height) as f64).log2().floor() as i64;
    let max_levels = base + 1;
    (base + extra as i64).clamp(1, max_levels) as usize
}

/// Gaussian pyramid: `levels` planes, finest first.
pub fn gaussian_pyramid(src: &Plane, levels: usize) -> Vec<Plane> {
    assert!(levels >= 1);
    let mut out = Vec::with_capacity(levels);
    out.push(src.clone());
    for _ in 1..levels {
        let next = downsample(out.last().unwrap());
        out.push(next);
    }
    out
}

/// Laplacian pyramid: band-pass residuals, coarsest level is the
/// low-pass remainder.
pub fn laplacian_pyramid(src: &Plane, levels: usize) -> Vec<Plane> {
    let gauss = gaussian_pyramid(src, levels);
    let mut out = Vec::with_capacity(levels);
    for i in 0..levels - 1 {
        let up = upsample(&gauss[i + 1], gauss[i].width(), gauss[i].height());
        let mut lap = gauss[i].clone();
        for (v, u) in lap.data_mut().iter_mut().zip(up.data()) {
            *v -= u;
        }
        out.push(lap);
    }
    out.push(gauss[levels - 1].clone());
    out
}

/// Rebuild the full-resolution plane from its Laplacian pyramid.
pub fn collapse(pyramid: &[Plane]) -> Plane {
    let mut acc = pyramid.last().expect("non-empty pyramid").clone();
    for lap in pyramid.iter().rev().skip(1) {
        let up = upsample(&acc, lap.width(), lap.height());
        acc = lap.clone();
        for (v, u) in acc.data_mut().iter_mut().zip(up.data()) {
            *v += u;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_plane(w: usize, h: usize) -> Plane {
        let data = (0..w * h)
            .map(|i| ((i * 37 % 101) as f64 / 100.0).sin().abs())
            .collect();
        Plane::new(w, h, data)
    }

    #[test]
    fn round_trip_is_lossless() {
        for (w, h, extra) in [(16, 16, 0), (16, 16, 1), (21, 13, 1), (8, 32, 0), (9, 9, 1)] {
            let plane = test_plane(w, h);
            let levels = level_count(w, h, extra);
            let pyr = laplacian_pyramid(&plane, levels);
            let back = collapse(&pyr);
            for (a, b) in back.data().iter().zip(plane.data()) {
                assert!((a - b).abs() < 1e-6, "{w}x{h} extra {extra}");
            }
        }
    }

    #[test]
    fn level_counts() {
        assert_eq!(level_count(512, 512, 0), 9);
        assert_eq!(level_count(512, 512, 1), 10);
        assert_eq!(level_count(8, 8, 1), 4);
        // The +1 cap: can't go beyond a 1-pixel coarsest level.
        assert_eq!(level_count(8, 8, 5), 4);
        assert_eq!(level_count(8, 100, 0), 3);
        assert_eq!(level_count(9, 9, -5), 1);
    }

    #[test]
    fn constant_planes_are_preserved_per_level() {
        // The kernel sums to one and borders replicate, so constants stay
        // constant at every pyramid level.
        let plane = Plane::new(12, 10, vec![0.6; 120]);
        let gauss = gaussian_pyramid(&plane, level_count(12, 10, 1));
        for level in &gauss {
            for &v in level.data() {
                assert!((v - 0.6).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn downsample_sizes_use_ceil() {
        let plane = test_plane(9, 5);
        let down = downsample(&plane);
        assert_eq!((down.width(), down.height()), (5, 3));
    }
}
