//! Flat binary dictionary files and atom mosaics.
//!
//! File layout, all integers little-endian:
//!
//! ```text
//! "SDIC"  u32 M  u32 K  u8 flags  then K columns of M f64 (LE)
//! ```
//!
//! `flags` bit 0 is set when every entry is nonnegative.

use std::fs;
use std::path::Path;

use super::Dictionary;
use crate::error::{Error, Result};
use crate::imagecore::{save_image, Image};

const MAGIC: &[u8; 4] = b"SDIC";
const HEADER_LEN: usize = 4 + 4 + 4 + 1;
pub const FLAG_NONNEGATIVE: u8 = 0x01;

pub fn encode_dictionary(d: &Dictionary) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * d.as_slice().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(d.m() as u32).to_le_bytes());
    out.extend_from_slice(&(d.k() as u32).to_le_bytes());
    out.push(if d.is_nonnegative() { FLAG_NONNEGATIVE } else { 0 });
    for v in d.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_dictionary(bytes: &[u8]) -> Result<Dictionary> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::UnsupportedFormat("not an SDIC dictionary file".into()));
    }
    let m = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let k = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let flags = bytes[12];
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * m * k {
        return Err(Error::Malformed(format!(
            "SDIC header declares {m}x{k} ({} bytes), body has {}",
            8 * m * k,
            body.len()
        )));
    }
    let data: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let d = Dictionary::new(m, k, data)?;
    if flags & FLAG_NONNEGATIVE != 0 && !d.is_nonnegative() {
        return Err(Error::Malformed(
            "SDIC flagged nonnegative but contains negative entries".into(),
        ));
    }
    Ok(d)
}

pub fn write_dictionary(d: &Dictionary, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_dictionary(d)).map_err(|e| Error::io(path, e))
}

pub fn read_dictionary(path: impl AsRef<Path>) -> Result<Dictionary> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_dictionary(&bytes)
}

/// Tile square atoms into one image, each atom stretched to `[0, 255]`,
/// separated by one-pixel mid-gray borders.
pub fn atom_mosaic(d: &Dictionary) -> Result<Image> {
    let side = (d.m() as f64).sqrt().round() as usize;
    if side * side != d.m() {
        return Err(Error::DimensionMismatch(format!(
            "atoms of length {} are not square patches",
            d.m()
        )));
    }
    let per_row = (d.k() as f64).sqrt().ceil() as usize;
    let rows = d.k().div_ceil(per_row);
    let cell = side + 1;
    let (w, h) = (per_row * cell + 1, rows * cell + 1);
    let mut px = vec![128.0; w * h];
    for (i, atom) in d.atoms().enumerate() {
        let lo = atom.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = atom.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let (x0, y0) = ((i % per_row) * cell + 1, (i / per_row) * cell + 1);
        for r in 0..side {
            for c in 0..side {
                px[(y0 + r) * w + x0 + c] = 255.0 * (atom[r * side + c] - lo) / span;
            }
        }
    }
    Image::new(w, h, px)
}

pub fn write_mosaic(d: &Dictionary, path: impl AsRef<Path>) -> Result<()> {
    save_image(&atom_mosaic(d)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::overcomplete_dct_dictionary;

    #[test]
    fn header_layout() {
        let d = overcomplete_dct_dictionary(2, 3).unwrap();
        let bytes = encode_dictionary(&d);
        assert_eq!(&bytes[..4], b"SDIC");
        assert_eq!(&bytes[4..8], &4u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &9u32.to_le_bytes());
        assert_eq!(bytes[12], 0);
        assert_eq!(bytes.len(), 13 + 8 * 36);
        assert_eq!(&bytes[13..21], &0.5f64.to_le_bytes());
        assert_eq!(decode_dictionary(&bytes).unwrap(), d);
    }

    #[test]
    fn nonnegative_flag() {
        let d = Dictionary::new(2, 3, vec![1.0, 0.0, 0.0, 1.0, 0.6, 0.8]).unwrap();
        assert_eq!(encode_dictionary(&d)[12], FLAG_NONNEGATIVE);
    }

    #[test]
    fn truncated_body_rejected() {
        let d = overcomplete_dct_dictionary(2, 3).unwrap();
        let bytes = encode_dictionary(&d);
        assert!(decode_dictionary(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_dictionary(b"NOPE").is_err());
    }

    #[test]
    fn mosaic_dimensions() {
        let d = overcomplete_dct_dictionary(8, 16).unwrap();
        let img = atom_mosaic(&d).unwrap();
        assert_eq!((img.width(), img.height()), (16 * 9 + 1, 16 * 9 + 1));
    }
}
