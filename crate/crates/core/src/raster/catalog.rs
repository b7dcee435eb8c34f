//! Dataset directories: `<tile_id>.ftl` tiles, optional `<tile_id>.fmk`
//! truth masks and a `metadata.json` array describing every tile.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::io::{decode_tile_header, read_mask_expecting, read_tile, FormatError};
use super::{FireMask, MultiSpectralTile};
use crate::requirements::{DimensionName, RequirementSet};

pub const METADATA_FILE: &str = "metadata.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Split {
    Development,
    InternalTest1,
    InternalTest2,
    Verification,
}

impl Split {
    pub const ALL: [Split; 4] = [
        Split::Development,
        Split::InternalTest1,
        Split::InternalTest2,
        Split::Verification,
    ];
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labeler_team: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collected_by_dev_team: Option<bool>,
}

/// Longest-dimension fire size class used by the verification matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FireSizeClass {
    None,
    #[serde(rename = "Small_lt30m")]
    SmallLt30m,
    #[serde(rename = "Large_gt100m")]
    LargeGt100m,
}

/// Cloud-cover class used by the verification matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CloudClass {
    None,
    #[serde(rename = "Low_lt10pct")]
    LowLt10pct,
    #[serde(rename = "High_gt50pct")]
    HighGt50pct,
}

impl FireSizeClass {
    pub const ALL: [FireSizeClass; 3] = [
        FireSizeClass::None,
        FireSizeClass::SmallLt30m,
        FireSizeClass::LargeGt100m,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FireSizeClass::None => "None",
            FireSizeClass::SmallLt30m => "Small_lt30m",
            FireSizeClass::LargeGt100m => "Large_gt100m",
        }
    }
}

impl CloudClass {
    pub const ALL: [CloudClass; 3] = [CloudClass::None, CloudClass::LowLt10pct, CloudClass::HighGt50pct];

    pub fn name(self) -> &'static str {
        match self {
            CloudClass::None => "None",
            CloudClass::LowLt10pct => "Low_lt10pct",
            CloudClass::HighGt50pct => "High_gt50pct",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationLabels {
    pub fire_size: FireSizeClass,
    pub cloud: CloudClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TileMetadata {
    pub tile_id: String,
    /// One class per robustness dimension, by key or label.
    #[serde(default)]
    pub classes: BTreeMap<DimensionName, String>,
    pub has_fire: bool,
    pub split: Split,
    #[serde(default)]
    pub provenance: Provenance,
    /// Sensor-geometry attestation checked by DR3.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nadir_representative: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_resolution_m_per_px: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationLabels>,
}

impl TileMetadata {
    pub fn new(tile_id: impl Into<String>, split: Split, has_fire: bool) -> Self {
        TileMetadata {
            tile_id: tile_id.into(),
            classes: BTreeMap::new(),
            has_fire,
            split,
            provenance: Provenance::default(),
            nadir_representative: None,
            ground_resolution_m_per_px: None,
            verification: None,
        }
    }

    pub fn class(&self, dim: DimensionName) -> Option<&str> {
        self.classes.get(&dim).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub metadata: TileMetadata,
    pub tile_path: PathBuf,
    pub mask_path: Option<PathBuf>,
    pub width: usize,
    pub height: usize,
    pub bands: u32,
}

impl CatalogEntry {
    pub fn load_tile(&self) -> Result<MultiSpectralTile, FormatError> {
        read_tile(&self.tile_path)
    }

    pub fn load_mask(&self) -> Result<Option<FireMask>, FormatError> {
        self.mask_path
            .as_deref()
            .map(|p| read_mask_expecting(p, (self.width, self.height)))
            .transpose()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetCatalog {
    pub root: PathBuf,
    pub entries: BTreeMap<String, CatalogEntry>,
}

impl DatasetCatalog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, tile_id: &str) -> Option<&CatalogEntry> {
        self.entries.get(tile_id)
    }

    pub fn counts_per_split(&self) -> BTreeMap<Split, usize> {
        let mut out = BTreeMap::new();
        for e in self.entries.values() {
            *out.entry(e.metadata.split).or_insert(0) += 1;
        }
        out
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &CatalogEntry> {
        self.entries.values().filter(move |e| e.metadata.split == split)
    }
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: invalid metadata: {message}")]
    Metadata { path: String, message: String },
    #[error("tile {0} has no metadata entry")]
    TileWithoutMetadata(String),
    #[error("metadata entry {0} has no tile file")]
    MissingTileFile(String),
    #[error("tile id {0:?} is not usable as a file name")]
    BadTileId(String),
    #[error("duplicate metadata entry for tile {0}")]
    DuplicateTile(String),
    #[error("tile {tile}: dimension {dimension} is not part of the taxonomy")]
    UnknownDimension { tile: String, dimension: DimensionName },
    #[error("tile {tile}: {dimension} class {name:?} does not exist in the taxonomy")]
    UnknownClass {
        tile: String,
        dimension: DimensionName,
        name: String,
    },
    #[error("tile {tile}: {source}")]
    Format { tile: String, source: FormatError },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CatalogError + '_ {
    move |source| CatalogError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn valid_tile_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

/// Writes `metadata.json` for a dataset directory.
pub fn write_metadata(dir: &Path, records: &[TileMetadata]) -> Result<(), CatalogError> {
    let path = dir.join(METADATA_FILE);
    let text = serde_json::to_string_pretty(records).expect("metadata serializes");
    fs::write(&path, text + "\n").map_err(io_err(&path))
}

/// Scans `dir`, joins every tile with its metadata record and checks class
/// labels against the taxonomy in `taxonomy`.
pub fn catalog_dataset(dir: &Path, taxonomy: &RequirementSet) -> Result<DatasetCatalog, CatalogError> {
    let mut tiles_on_disk = BTreeSet::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) == Some("ftl") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                tiles_on_disk.insert(stem.to_string());
            }
        }
    }

    let meta_path = dir.join(METADATA_FILE);
    let records: Vec<TileMetadata> = if meta_path.exists() {
        let text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
        serde_json::from_str(&text).map_err(|e| CatalogError::Metadata {
            path: meta_path.display().to_string(),
            message: e.to_string(),
        })?
    } else {
        Vec::new()
    };

    let mut catalog = DatasetCatalog {
        root: dir.to_path_buf(),
        entries: BTreeMap::new(),
    };
    for meta in records {
        let id = meta.tile_id.clone();
        if !valid_tile_id(&id) {
            return Err(CatalogError::BadTileId(id));
        }
        if catalog.entries.contains_key(&id) {
            return Err(CatalogError::DuplicateTile(id));
        }
        for (dim, name) in &meta.classes {
            let d = taxonomy.dimension(*dim).ok_or(CatalogError::UnknownDimension {
                tile: id.clone(),
                dimension: *dim,
            })?;
            if d.class(name).is_none() {
                return Err(CatalogError::UnknownClass {
                    tile: id.clone(),
                    dimension: *dim,
                    name: name.clone(),
                });
            }
        }
        if !tiles_on_disk.remove(&id) {
            return Err(CatalogError::MissingTileFile(id));
        }
        let tile_path = dir.join(format!("{id}.ftl"));
        let bytes = fs::read(&tile_path).map_err(io_err(&tile_path))?;
        let (width, height, bands) = decode_tile_header(&bytes).map_err(|source| CatalogError::Format {
            tile: id.clone(),
            source,
        })?;
        let mask_path = dir.join(format!("{id}.fmk"));
        catalog.entries.insert(
            id,
            CatalogEntry {
                metadata: meta,
                tile_path,
                mask_path: mask_path.exists().then_some(mask_path),
                width,
                height,
                bands,
            },
        );
    }
    if let Some(orphan) = tiles_on_disk.into_iter().next() {
        return Err(CatalogError::TileWithoutMetadata(orphan));
    }
    Ok(catalog)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::io::write_tile;

    fn write_set(dir: &Path, records: &[TileMetadata]) {
        for r in records {
            write_tile(
                &dir.join(format!("{}.ftl", r.tile_id)),
                &MultiSpectralTile::zeros(&r.tile_id, 48, 48),
            )
            .unwrap();
        }
        write_metadata(dir, records).unwrap();
    }

    #[test]
    fn counts_per_split() {
        let dir = tempfile::tempdir().unwrap();
        let records: Vec<_> = (0..10)
            .map(|i| {
                let split = if i < 6 {
                    Split::Development
                } else {
                    Split::InternalTest1
                };
                let mut m = TileMetadata::new(format!("t{i:02}"), split, i % 2 == 0);
                m.classes.insert(DimensionName::LandType, "grassland".into());
                m
            })
            .collect();
        write_set(dir.path(), &records);
        let cat = catalog_dataset(dir.path(), &RequirementSet::canonical()).unwrap();
        assert_eq!(cat.len(), 10);
        let counts = cat.counts_per_split();
        assert_eq!(counts.get(&Split::Development), Some(&6));
        assert_eq!(counts.get(&Split::InternalTest1), Some(&4));
        assert_eq!(counts.len(), 2);
        assert_eq!(cat.get("t03").unwrap().width, 48);
    }

    #[test]
    fn empty_dir_gives_empty_catalog() {
        let dir = tempfile::tempdir().unwrap();
        let cat = catalog_dataset(dir.path(), &RequirementSet::canonical()).unwrap();
        assert!(cat.is_empty());
    }

    #[test]
    fn unknown_land_type_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = TileMetadata::new("a", Split::Development, false);
        m.classes.insert(DimensionName::LandType, "Ocean".into());
        write_set(dir.path(), &[m]);
        let err = catalog_dataset(dir.path(), &RequirementSet::canonical()).unwrap_err();
        assert!(
            matches!(err, CatalogError::UnknownClass { ref name, .. } if name == "Ocean"),
            "{err}"
        );
    }

    #[test]
    fn tile_without_metadata_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_set(dir.path(), &[TileMetadata::new("a", Split::Development, false)]);
        write_tile(
            &dir.path().join("stray.ftl"),
            &MultiSpectralTile::zeros("stray", 48, 48),
        )
        .unwrap();
        let err = catalog_dataset(dir.path(), &RequirementSet::canonical()).unwrap_err();
        assert!(matches!(err, CatalogError::TileWithoutMetadata(ref id) if id == "stray"));
    }

    #[test]
    fn labels_accept_key_or_full_label() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = TileMetadata::new("a", Split::Verification, true);
        m.classes.insert(DimensionName::LandType, "Temperate rainforest".into());
        m.classes.insert(DimensionName::Clouds, "high".into());
        m.verification = Some(VerificationLabels {
            fire_size: FireSizeClass::SmallLt30m,
            cloud: CloudClass::HighGt50pct,
        });
        write_set(dir.path(), &[m.clone()]);
        let cat = catalog_dataset(dir.path(), &RequirementSet::canonical()).unwrap();
        assert_eq!(cat.get("a").unwrap().metadata, m);
        let text = fs::read_to_string(dir.path().join(METADATA_FILE)).unwrap();
        assert!(text.contains("\"Small_lt30m\""));
        assert!(text.contains("\"LandType\""));
    }

    #[test]
    fn path_like_ids_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_metadata(dir.path(), &[TileMetadata::new("../x", Split::Development, false)]).unwrap();
        assert!(matches!(
            catalog_dataset(dir.path(), &RequirementSet::canonical()),
            Err(CatalogError::BadTileId(_))
        ));
    }
}
