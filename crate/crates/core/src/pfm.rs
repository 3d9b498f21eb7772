//! PFM (portable float map) reader/writer for radiance maps.
//!
//! Color `PF` maps only, stored little-endian with scale -1.0, rows
//! bottom-to-top as the format prescribes. Samples are 32-bit floats on
//! disk; non-finite samples are rejected on both read and write.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::RadianceImage;

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::PfmParse {
        offset,
        message: message.into(),
    }
}

/// Read a whitespace-terminated ASCII token starting at `pos`.
fn read_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(parse_err(start, "unexpected end of header"));
    }
    String::from_utf8(bytes[start..*pos].to_vec())
        .map_err(|_| parse_err(start, "header token is not ascii"))
}

pub fn read(path: impl AsRef<Path>) -> Result<RadianceImage> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    read_bytes(&bytes)
}

pub fn read_bytes(bytes: &[u8]) -> Result<RadianceImage> {
    let mut pos = 0usize;
    let magic = read_token(bytes, &mut pos)?;
    if magic != "PF" {
        return Err(parse_err(0, format!("expected magic `PF`, got `{magic}`")));
    }
    let width: usize = {
        let at = pos;
        read_token(bytes, &mut pos)?
            .parse()
            .map_err(|e| parse_err(at, format!("bad width: {e}")))?
    };
    let height: usize = {
        let at = pos;
        read_token(bytes, &mut pos)?
            .parse()
            .map_err(|e| parse_err(at, format!("bad height: {e}")))?
    };
    let scale: f64 = {
        let at = pos;
        read_token(bytes, &mut pos)?
            .parse()
            .map_err(|e| parse_err(at, format!("bad scale: {e}")))?
    };
    if scale >= 0.0 {
        return Err(parse_err(pos, "big-endian pfm (scale >= 0) is not supported"));
    }
    if width == 0 || height == 0 {
        return Err(parse_err(pos, "zero dimension"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let needed = width * height * 3 * 4;
    if bytes.len() < pos + needed {
        return Err(parse_err(
            bytes.len(),
            format!("raster truncated: need {needed} bytes, have {}", bytes.len() - pos),
        ));
    }
    let mut data = vec![0.0f64; width * height * 3];
    // Raster rows run bottom-to-top.
    for row in 0..height {
        let y = height - 1 - row;
        for x in 0..width {
            for c in 0..3 {
                let off = pos + ((row * width + x) * 3 + c) * 4;
                let v = f32::from_le_bytes([
                    bytes[off],
                    bytes[off + 1],
                    bytes[off + 2],
                    bytes[off + 3],
                ]);
                let index = (y * width + x) * 3 + c;
                if !v.is_finite() {
                    return Err(Error::PfmNotFinite { index });
                }
                data[index] = v as f64;
            }
        }
    }
    RadianceImage::new(width, height, data)
}

pub fn write(image: &RadianceImage, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_to(image, std::io::BufWriter::new(file))
}

pub fn write_to(image: &RadianceImage, mut writer: impl Write) -> Result<()> {
    if let Some(index) = image.data().iter().position(|v| !v.is_finite()) {
        return Err(Error::PfmNotFinite { index });
    }
    write!(writer, "PF\n{} {}\n-1.0\n", image.width(), image.height())?;
    let (w, h) = (image.width(), image.height());
    for row in 0..h {
        let y = h - 1 - row;
        for x in 0..w {
            for v in image.pixel(x, y) {
                writer.write_all(&(v as f32).to_le_bytes())?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_image() -> RadianceImage {
        // f32-representable values so the round trip is value-exact.
        let mut data = Vec::new();
        for i in 0..5 * 3 * 3 {
            data.push((i as f32 * 0.125 + 0.5) as f64);
        }
        RadianceImage::new(5, 3, data).unwrap()
    }

    #[test]
    fn round_trip_is_value_exact() {
        let img = sample_image();
        let mut buf = Vec::new();
        write_to(&img, &mut buf).unwrap();
        let back = read_bytes(&buf).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn nan_is_rejected_on_read() {
        let img = sample_image();
        let mut buf = Vec::new();
        write_to(&img, &mut buf).unwrap();
        let header = buf.len() - 5 * 3 * 3 * 4;
        buf[header..header + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        match read_bytes(&buf) {
            Err(Error::PfmNotFinite { .. }) => {}
            other => panic!("expected NaN rejection, got {other:?}"),
        }
    }

    #[test]
    fn truncated_raster_names_offset() {
        let img = sample_image();
        let mut buf = Vec::new();
        write_to(&img, &mut buf).unwrap();
        buf.truncate(buf.len() - 7);
        match read_bytes(&buf) {
            Err(Error::PfmParse { .. }) => {}
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_wrong_magic_and_endianness() {
        assert!(read_bytes(b"Pf\n1 1\n-1.0\n\0\0\0\0").is_err());
        let bad = b"PF\n1 1\n1.0\n\0\0\0\0\0\0\0\0\0\0\0\0";
        match read_bytes(bad) {
            Err(Error::PfmParse { .. }) => {}
            other => panic!("expected endianness rejection, got {other:?}"),
        }
    }
}
