//! Non-overlapping tiling with zero padding at the right and bottom edges,
//! and the inverse reassembly of per-tile masks.

use super::{FireMask, MultiSpectralTile, Origin, RasterError, Scene, BAND_COUNT};

/// `ceil(width / tile) * ceil(height / tile)`.
pub fn tile_count(width: usize, height: usize, tile: usize) -> usize {
    width.div_ceil(tile) * height.div_ceil(tile)
}

fn origins(width: usize, height: usize, tile: usize) -> impl Iterator<Item = Origin> {
    let rows = height.div_ceil(tile);
    let cols = width.div_ceil(tile);
    (0..rows).flat_map(move |tr| {
        (0..cols).map(move |tc| Origin {
            row: tr * tile,
            col: tc * tile,
        })
    })
}

/// Splits a scene into `tile`x`tile` tiles in row-major order. Tiles that
/// run past the scene edge are zero-padded.
///
/// Panics if `tile` is zero.
pub fn tile_scene(scene: &Scene, tile: usize) -> Vec<MultiSpectralTile> {
    assert!(tile >= 1, "tile size must be at least 1");
    origins(scene.width(), scene.height(), tile)
        .map(|o| {
            let mut bands: [Vec<f32>; BAND_COUNT] = Default::default();
            for (b, plane) in bands.iter_mut().enumerate() {
                plane.reserve(tile * tile);
                let w = scene.width();
                let cols = tile.min(w - o.col);
                for r in 0..tile {
                    let sr = o.row + r;
                    if sr < scene.height() {
                        let start = sr * w + o.col;
                        plane.extend_from_slice(&scene.bands[b][start..start + cols]);
                        plane.resize(plane.len() + tile - cols, 0.0);
                    } else {
                        plane.resize(plane.len() + tile, 0.0);
                    }
                }
            }
            let id = format!("{}-r{:04}-c{:04}", scene.scene_id, o.row / tile, o.col / tile);
            let mut t = MultiSpectralTile::new(id, tile, tile, bands).expect("scene values are validated");
            t.origin = o;
            t.ground_resolution_m_per_px = scene.ground_resolution_m_per_px;
            t
        })
        .collect()
}

/// Same layout as [`tile_scene`], applied to a mask.
pub fn tile_mask(mask: &FireMask, tile: usize) -> Vec<(Origin, FireMask)> {
    assert!(tile >= 1, "tile size must be at least 1");
    origins(mask.width(), mask.height(), tile)
        .map(|o| {
            let m = FireMask::from_fn(tile, tile, |r, c| {
                let (sr, sc) = (o.row + r, o.col + c);
                sr < mask.height() && sc < mask.width() && mask.get(sr, sc)
            });
            (o, m)
        })
        .collect()
}

/// Writes each tile mask at its origin into a `width`x`height` mask.
/// Pixels beyond the scene are discarded; every scene pixel must be written
/// exactly once.
pub fn assemble_masks(tiles: &[(Origin, FireMask)], width: usize, height: usize) -> Result<FireMask, RasterError> {
    let mut out = FireMask::empty(width, height);
    let mut written = vec![false; width * height];
    for (o, m) in tiles {
        if o.row >= height || o.col >= width {
            return Err(RasterError::OutsideScene {
                row: o.row,
                col: o.col,
                width,
                height,
            });
        }
        let rows = m.height().min(height - o.row);
        let cols = m.width().min(width - o.col);
        for r in 0..rows {
            for c in 0..cols {
                let (sr, sc) = (o.row + r, o.col + c);
                let idx = sr * width + sc;
                if written[idx] {
                    return Err(RasterError::Overlap { row: sr, col: sc });
                }
                written[idx] = true;
                out.set(sr, sc, m.get(r, c));
            }
        }
    }
    if let Some(idx) = written.iter().position(|&w| !w) {
        return Err(RasterError::MissingCoverage {
            row: idx / width,
            col: idx % width,
        });
    }
    Ok(out)
}
