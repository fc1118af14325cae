//! Binary PGM (P5, maxval 255) read/write and 8-bit grayscale PNG read.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use super::{to_byte, Image};
use crate::error::{Error, Result};

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

/// Load an 8-bit grayscale PGM (P5) or PNG file.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P5") {
        decode_pgm(&bytes)
    } else if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(&bytes)
    } else if bytes.starts_with(b"P2") {
        Err(Error::UnsupportedFormat(
            "ASCII PGM (P2) is not supported; use binary P5".into(),
        ))
    } else {
        Err(Error::UnsupportedFormat(format!(
            "{} is neither a binary PGM nor a PNG file",
            path.display()
        )))
    }
}

/// Write `img` as a P5 PGM with maxval 255. Values are clamped to
/// `[0, 255]` and rounded to the nearest integer.
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.pixels().len());
    out.extend_from_slice(header.as_bytes());
    out.extend(img.pixels().iter().map(|&v| to_byte(v)));
    out
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Malformed(format!("bad PGM header field `{what}`")))
    }
}

/// Decode a P5 PGM from memory. Only maxval <= 255 is accepted; a maxval
/// below 255 is rescaled to the full `[0, 255]` range.
pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    if !bytes.starts_with(b"P5") {
        return Err(Error::UnsupportedFormat("missing P5 magic".into()));
    }
    let mut rd = HeaderReader { bytes, pos: 2 };
    let width = rd.number("width")? as usize;
    let height = rd.number("height")? as usize;
    let maxval = rd.number("maxval")?;
    if maxval == 0 {
        return Err(Error::Malformed("maxval must be positive".into()));
    }
    if maxval > 255 {
        return Err(Error::UnsupportedBitDepth(maxval));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(rd.pos) {
        Some(c) if c.is_ascii_whitespace() => rd.pos += 1,
        _ => return Err(Error::Malformed("missing whitespace after maxval".into())),
    }
    let need = width
        .checked_mul(height)
        .ok_or_else(|| Error::Malformed("image dimensions overflow".into()))?;
    let raster = &bytes[rd.pos..];
    if raster.len() < need {
        return Err(Error::Malformed(format!(
            "header declares {width}x{height} = {need} bytes, payload has {}",
            raster.len()
        )));
    }
    let scale = 255.0 / f64::from(maxval);
    let pixels = raster[..need]
        .iter()
        .map(|&b| {
            if maxval == 255 {
                f64::from(b)
            } else {
                (f64::from(b.min(maxval as u8)) * scale).round()
            }
        })
        .collect();
    Image::new(width, height, pixels)
}

fn decode_png(bytes: &[u8]) -> Result<Image> {
    use image::{ColorType, ImageDecoder};

    let decoder = image::codecs::png::PngDecoder::new(Cursor::new(bytes))
        .map_err(|e| Error::Malformed(format!("png: {e}")))?;
    match decoder.color_type() {
        ColorType::L8 => {}
        ColorType::L16 => return Err(Error::UnsupportedBitDepth(65535)),
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "png color type {other:?}; only 8-bit grayscale is supported"
            )))
        }
    }
    let (width, height) = decoder.dimensions();
    let mut buf = vec![0u8; decoder.total_bytes() as usize];
    decoder
        .read_image(&mut buf)
        .map_err(|e| Error::Malformed(format!("png: {e}")))?;
    Image::new(
        width as usize,
        height as usize,
        buf.into_iter().map(f64::from).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_tiny_p5() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend([0u8, 128, 255, 64]);
        let img = decode_pgm(&bytes).unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.pixels(), &[0.0, 128.0, 255.0, 64.0]);
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut bytes = b"P5\n# made by hand\n3 1 # trailing\n255\n".to_vec();
        bytes.extend([1u8, 2, 3]);
        assert_eq!(decode_pgm(&bytes).unwrap().pixels(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn sixteen_bit_is_rejected() {
        let mut bytes = b"P5\n1 1\n65535\n".to_vec();
        bytes.extend([0u8, 0]);
        let err = decode_pgm(&bytes).unwrap_err();
        assert!(matches!(err, Error::UnsupportedBitDepth(65535)));
        assert!(err.to_string().contains("unsupported bit depth"));
    }

    #[test]
    fn short_payload_is_rejected() {
        let mut bytes = b"P5\n4 4\n255\n".to_vec();
        bytes.extend([0u8; 15]);
        assert!(matches!(decode_pgm(&bytes), Err(Error::Malformed(_))));
    }

    #[test]
    fn encode_rounds_and_clamps() {
        let img = Image::new(1, 1, vec![127.6]).unwrap();
        assert_eq!(encode_pgm(&img).last(), Some(&128));
        let img = Image::new(2, 1, vec![-3.0, 300.0]).unwrap();
        let bytes = encode_pgm(&img);
        assert_eq!(&bytes[bytes.len() - 2..], &[0, 255]);
        assert_eq!(decode_pgm(&bytes).unwrap().pixels(), &[0.0, 255.0]);
    }

    #[test]
    fn low_maxval_is_rescaled() {
        let mut bytes = b"P5\n2 1\n15\n".to_vec();
        bytes.extend([0u8, 15]);
        assert_eq!(decode_pgm(&bytes).unwrap().pixels(), &[0.0, 255.0]);
    }
}
