//! Multispectral tiles, binary fire masks, scene tiling and dataset
//! catalogues.

pub mod catalog;
pub mod io;
pub mod tiling;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use catalog::{
    catalog_dataset, CatalogEntry, CatalogError, CloudClass, DatasetCatalog, FireSizeClass, Provenance, Split,
    TileMetadata, VerificationLabels,
};
pub use io::{read_mask, read_tile, write_mask, write_tile};
pub use tiling::{assemble_masks, tile_count, tile_mask, tile_scene};

/// Side length of a canonical model-input tile.
pub const CANONICAL_TILE: usize = 48;
pub const BAND_COUNT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Band {
    Blue = 0,
    Swir1 = 1,
    Swir2 = 2,
}

/// Pixel offset of a tile inside its parent scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Origin {
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum RasterError {
    #[error("band planes must hold {expected} values, got {got}")]
    BandSize { expected: usize, got: usize },
    #[error("reflectance at band {band}, index {index} is {value}; values must be finite and >= 0")]
    InvalidReflectance { band: usize, index: usize, value: f32 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("pixel ({row}, {col}) is written by more than one tile")]
    Overlap { row: usize, col: usize },
    #[error("pixel ({row}, {col}) is not covered by any tile")]
    MissingCoverage { row: usize, col: usize },
    #[error("tile at ({row}, {col}) lies entirely outside the {width}x{height} scene")]
    OutsideScene {
        row: usize,
        col: usize,
        width: usize,
        height: usize,
    },
}

/// Binary per-pixel fire label or prediction, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FireMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl FireMask {
    pub fn empty(width: usize, height: usize) -> Self {
        FireMask {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<bool>) -> Result<Self, RasterError> {
        if data.len() != width * height {
            return Err(RasterError::DimensionMismatch(format!(
                "{width}x{height} mask needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(FireMask { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        FireMask { width, height, data }
    }

    /// Builds a mask with the listed `(row, col)` pixels set.
    pub fn from_pixels(width: usize, height: usize, pixels: &[(usize, usize)]) -> Self {
        let mut m = FireMask::empty(width, height);
        for &(r, c) in pixels {
            m.set(r, c, true);
        }
        m
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, fire: bool) {
        self.data[row * self.width + col] = fire;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    pub fn fire_count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn has_fire(&self) -> bool {
        self.data.iter().any(|&v| v)
    }

    pub fn fire_pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .map(move |(i, _)| (i / w, i % w))
    }

    /// Inclusive bounding box `(min_row, min_col, max_row, max_col)` of the
    /// fire pixels.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        self.fire_pixels().fold(None, |acc, (r, c)| match acc {
            None => Some((r, c, r, c)),
            Some((r0, c0, r1, c1)) => Some((r0.min(r), c0.min(c), r1.max(r), c1.max(c))),
        })
    }

    /// Returns a copy moved by `(dr, dc)`; pixels leaving the frame are lost.
    pub fn shifted(&self, dr: isize, dc: isize) -> FireMask {
        let mut out = FireMask::empty(self.width, self.height);
        for (r, c) in self.fire_pixels() {
            let nr = r as isize + dr;
            let nc = c as isize + dc;
            if nr >= 0 && nc >= 0 && (nr as usize) < self.height && (nc as usize) < self.width {
                out.set(nr as usize, nc as usize, true);
            }
        }
        out
    }

    /// True when every fire pixel of `self` is also fire in `other`.
    pub fn is_subset_of(&self, other: &FireMask) -> bool {
        self.dims() == other.dims() && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }
}

fn check_plane(plane: &[f32], band: usize, expected: usize) -> Result<(), RasterError> {
    if plane.len() != expected {
        return Err(RasterError::BandSize {
            expected,
            got: plane.len(),
        });
    }
    if let Some((index, &value)) = plane.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
        return Err(RasterError::InvalidReflectance { band, index, value });
    }
    Ok(())
}

/// Three-band reflectance tile: Blue, SWIR-1, SWIR-2, each row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSpectralTile {
    pub tile_id: String,
    width: usize,
    height: usize,
    bands: [Vec<f32>; BAND_COUNT],
    pub origin: Origin,
    pub ground_resolution_m_per_px: f64,
}

impl MultiSpectralTile {
    pub fn new(
        tile_id: impl Into<String>,
        width: usize,
        height: usize,
        bands: [Vec<f32>; BAND_COUNT],
    ) -> Result<Self, RasterError> {
        for (b, plane) in bands.iter().enumerate() {
            check_plane(plane, b, width * height)?;
        }
        Ok(MultiSpectralTile {
            tile_id: tile_id.into(),
            width,
            height,
            bands,
            origin: Origin { row: 0, col: 0 },
            ground_resolution_m_per_px: 30.0,
        })
    }

    pub fn zeros(tile_id: impl Into<String>, width: usize, height: usize) -> Self {
        let n = width * height;
        MultiSpectralTile::new(tile_id, width, height, [vec![0.0; n], vec![0.0; n], vec![0.0; n]])
            .expect("zero tile is valid")
    }

    pub fn with_origin(mut self, origin: Origin) -> Self {
        self.origin = origin;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn band(&self, band: Band) -> &[f32] {
        &self.bands[band as usize]
    }

    pub fn bands(&self) -> &[Vec<f32>; BAND_COUNT] {
        &self.bands
    }

    pub fn value(&self, band: Band, row: usize, col: usize) -> f32 {
        self.bands[band as usize][row * self.width + col]
    }

    /// Sets one reflectance value. Panics on negative or non-finite input.
    pub fn set(&mut self, band: Band, row: usize, col: usize, value: f32) {
        assert!(value.is_finite() && value >= 0.0, "reflectance must be finite and >= 0");
        self.bands[band as usize][row * self.width + col] = value;
    }

    pub fn is_canonical(&self) -> bool {
        self.width == CANONICAL_TILE && self.height == CANONICAL_TILE
    }
}

/// A full captured image before tiling.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub scene_id: String,
    width: usize,
    height: usize,
    bands: [Vec<f32>; BAND_COUNT],
    /// Latitude and longitude of pixel (0, 0).
    pub anchor: (f64, f64),
    pub ground_resolution_m_per_px: f64,
}

impl Scene {
    pub fn new(
        scene_id: impl Into<String>,
        width: usize,
        height: usize,
        bands: [Vec<f32>; BAND_COUNT],
    ) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::DimensionMismatch(format!(
                "scene must be at least 1x1, got {width}x{height}"
            )));
        }
        for (b, plane) in bands.iter().enumerate() {
            check_plane(plane, b, width * height)?;
        }
        Ok(Scene {
            scene_id: scene_id.into(),
            width,
            height,
            bands,
            anchor: (0.0, 0.0),
            ground_resolution_m_per_px: 30.0,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn value(&self, band: Band, row: usize, col: usize) -> f32 {
        self.bands[band as usize][row * self.width + col]
    }
}
