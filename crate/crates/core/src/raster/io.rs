//! Binary tile (`FTL1`) and mask (`FMK1`) files.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! tile: "FTL1" u32 width, u32 height, u32 bands (=3), f32 values (band-major, row-major)
//! mask: "FMK1" u32 width, u32 height, u8 per pixel in {0, 1}
//! ```

use std::fs;
use std::path::Path;

use thiserror::Error;

use super::{FireMask, MultiSpectralTile, RasterError, BAND_COUNT};

pub const TILE_MAGIC: &[u8; 4] = b"FTL1";
pub const MASK_MAGIC: &[u8; 4] = b"FMK1";
const HEADER: usize = 16;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("bad magic {found:?}, expected {expected:?}")]
    BadMagic { found: Vec<u8>, expected: &'static [u8; 4] },
    #[error("truncated file: need {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),
    #[error("tile declares {0} bands, expected 3")]
    BandCount(u32),
    #[error("mask byte {value} at pixel {index} is not 0 or 1")]
    MaskValue { index: usize, value: u8 },
    #[error("dimension mismatch: expected {expected:?}, file has {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error(transparent)]
    Raster(#[from] RasterError),
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

fn check_magic(bytes: &[u8], magic: &'static [u8; 4]) -> Result<(), FormatError> {
    if bytes.len() < 4 {
        return Err(FormatError::Truncated {
            needed: 4,
            have: bytes.len(),
        });
    }
    if &bytes[..4] != magic {
        return Err(FormatError::BadMagic {
            found: bytes[..4].to_vec(),
            expected: magic,
        });
    }
    Ok(())
}

fn check_len(bytes: &[u8], needed: usize) -> Result<(), FormatError> {
    if bytes.len() < needed {
        return Err(FormatError::Truncated {
            needed,
            have: bytes.len(),
        });
    }
    if bytes.len() > needed {
        return Err(FormatError::TrailingBytes(bytes.len() - needed));
    }
    Ok(())
}

pub fn encode_tile(tile: &MultiSpectralTile) -> Vec<u8> {
    let n = tile.width() * tile.height();
    let mut out = Vec::with_capacity(HEADER + BAND_COUNT * n * 4);
    out.extend_from_slice(TILE_MAGIC);
    out.extend_from_slice(&(tile.width() as u32).to_le_bytes());
    out.extend_from_slice(&(tile.height() as u32).to_le_bytes());
    out.extend_from_slice(&(BAND_COUNT as u32).to_le_bytes());
    for plane in tile.bands() {
        for v in plane {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Reads the `(width, height, bands)` header only.
pub fn decode_tile_header(bytes: &[u8]) -> Result<(usize, usize, u32), FormatError> {
    check_magic(bytes, TILE_MAGIC)?;
    if bytes.len() < HEADER {
        return Err(FormatError::Truncated {
            needed: HEADER,
            have: bytes.len(),
        });
    }
    Ok((u32_at(bytes, 4) as usize, u32_at(bytes, 8) as usize, u32_at(bytes, 12)))
}

pub fn decode_tile(tile_id: &str, bytes: &[u8]) -> Result<MultiSpectralTile, FormatError> {
    let (w, h, bands) = decode_tile_header(bytes)?;
    if bands as usize != BAND_COUNT {
        return Err(FormatError::BandCount(bands));
    }
    let n = w * h;
    check_len(bytes, HEADER + BAND_COUNT * n * 4)?;
    let mut planes: [Vec<f32>; BAND_COUNT] = Default::default();
    let mut at = HEADER;
    for plane in planes.iter_mut() {
        plane.reserve(n);
        for _ in 0..n {
            plane.push(f32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes")));
            at += 4;
        }
    }
    Ok(MultiSpectralTile::new(tile_id, w, h, planes)?)
}

pub fn encode_mask(mask: &FireMask) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + mask.as_slice().len());
    out.extend_from_slice(MASK_MAGIC);
    out.extend_from_slice(&(mask.width() as u32).to_le_bytes());
    out.extend_from_slice(&(mask.height() as u32).to_le_bytes());
    out.extend(mask.as_slice().iter().map(|&v| v as u8));
    out
}

pub fn decode_mask(bytes: &[u8]) -> Result<FireMask, FormatError> {
    check_magic(bytes, MASK_MAGIC)?;
    if bytes.len() < 12 {
        return Err(FormatError::Truncated {
            needed: 12,
            have: bytes.len(),
        });
    }
    let (w, h) = (u32_at(bytes, 4) as usize, u32_at(bytes, 8) as usize);
    check_len(bytes, 12 + w * h)?;
    let mut data = Vec::with_capacity(w * h);
    for (index, &value) in bytes[12..].iter().enumerate() {
        match value {
            0 => data.push(false),
            1 => data.push(true),
            _ => return Err(FormatError::MaskValue { index, value }),
        }
    }
    Ok(FireMask::from_vec(w, h, data)?)
}

fn read(path: &Path) -> Result<Vec<u8>, FormatError> {
    fs::read(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    fs::write(path, bytes).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads a tile; its id is the file stem.
pub fn read_tile(path: &Path) -> Result<MultiSpectralTile, FormatError> {
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    decode_tile(&id, &read(path)?)
}

pub fn write_tile(path: &Path, tile: &MultiSpectralTile) -> Result<(), FormatError> {
    write(path, &encode_tile(tile))
}

pub fn read_mask(path: &Path) -> Result<FireMask, FormatError> {
    decode_mask(&read(path)?)
}

/// Reads a mask and requires the given `(width, height)`.
pub fn read_mask_expecting(path: &Path, dims: (usize, usize)) -> Result<FireMask, FormatError> {
    let m = read_mask(path)?;
    if m.dims() != dims {
        return Err(FormatError::DimensionMismatch {
            expected: dims,
            found: m.dims(),
        });
    }
    Ok(m)
}

pub fn write_mask(path: &Path, mask: &FireMask) -> Result<(), FormatError> {
    write(path, &encode_mask(mask))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout_is_little_endian() {
        let t = MultiSpectralTile::zeros("t", 2, 1);
        let b = encode_tile(&t);
        assert_eq!(&b[..16], b"FTL1\x02\0\0\0\x01\0\0\0\x03\0\0\0");
        assert_eq!(b.len(), 16 + 3 * 2 * 4);
        let m = FireMask::from_pixels(3, 1, &[(0, 1)]);
        assert_eq!(encode_mask(&m), b"FMK1\x03\0\0\0\x01\0\0\0\0\x01\0".to_vec());
    }

    #[test]
    fn two_band_tile_is_rejected() {
        let mut b = encode_tile(&MultiSpectralTile::zeros("t", 2, 2));
        b[12] = 2;
        assert!(matches!(decode_tile("t", &b), Err(FormatError::BandCount(2))));
    }

    #[test]
    fn malformed_files() {
        let good = encode_tile(&MultiSpectralTile::zeros("t", 2, 2));
        assert!(matches!(
            decode_tile("t", &good[..good.len() - 1]),
            Err(FormatError::Truncated { .. })
        ));
        let mut extra = good.clone();
        extra.push(0);
        assert!(matches!(decode_tile("t", &extra), Err(FormatError::TrailingBytes(1))));
        let mut wrong = good.clone();
        wrong[..4].copy_from_slice(b"FMK1");
        assert!(matches!(decode_tile("t", &wrong), Err(FormatError::BadMagic { .. })));
        assert!(matches!(decode_tile("t", b"FT"), Err(FormatError::Truncated { .. })));

        let mut m = encode_mask(&FireMask::empty(2, 2));
        m[13] = 2;
        assert!(matches!(
            decode_mask(&m),
            Err(FormatError::MaskValue { index: 1, value: 2 })
        ));

        let mut neg = good;
        neg[16..20].copy_from_slice(&(-1.0f32).to_le_bytes());
        assert!(matches!(decode_tile("t", &neg), Err(FormatError::Raster(_))));
    }

    #[test]
    fn file_round_trip_and_dimension_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("abc.fmk");
        let m = FireMask::from_pixels(4, 3, &[(2, 3)]);
        write_mask(&path, &m).unwrap();
        assert_eq!(read_mask(&path).unwrap(), m);
        assert!(matches!(
            read_mask_expecting(&path, (48, 48)),
            Err(FormatError::DimensionMismatch { .. })
        ));

        let tpath = dir.path().join("tile-7.ftl");
        let t = MultiSpectralTile::zeros("tile-7", 3, 3);
        write_tile(&tpath, &t).unwrap();
        let back = read_tile(&tpath).unwrap();
        assert_eq!(back.tile_id, "tile-7");
        assert_eq!(back.bands(), t.bands());
    }

    proptest! {
        #[test]
        fn tile_bytes_round_trip(w in 1usize..20, h in 1usize..20, vals in proptest::collection::vec(0.0f32..1e6, 3 * 400)) {
            let n = w * h;
            let bands = [vals[..n].to_vec(), vals[n..2 * n].to_vec(), vals[2 * n..3 * n].to_vec()];
            let t = MultiSpectralTile::new("x", w, h, bands).unwrap();
            let bytes = encode_tile(&t);
            let back = decode_tile("x", &bytes).unwrap();
            prop_assert_eq!(back.bands(), t.bands());
            prop_assert_eq!(encode_tile(&back), bytes);
        }

        #[test]
        fn mask_bytes_round_trip(w in 1usize..40, h in 1usize..40, bits in proptest::collection::vec(any::<bool>(), 1600)) {
            let m = FireMask::from_vec(w, h, bits[..w * h].to_vec()).unwrap();
            prop_assert_eq!(decode_mask(&encode_mask(&m)).unwrap(), m);
        }
    }
}
