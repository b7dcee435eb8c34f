//! Deterministic synthetic tiles, masks and catalogs.
//!
//! Spectral design, in reflectance units:
//! - background and cloud keep SWIR2 at or below 0.95 x SWIR1, so the
//!   baseline ratio test never fires on them;
//! - fire pixels have SWIR2 in [0.5, 1.0] and SWIR2/SWIR1 in [2, 4], large
//!   fires add a saturated core with SWIR2 >= 1.3;
//! - urban tiles carry hot roofs: six 2x3 patches with SWIR2 in [0.45, 0.6] and
//!   ratio in [2, 3], which the baseline mistakes for fire.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::raster::catalog::{write_metadata, Provenance, TileMetadata, VerificationLabels};
use crate::raster::{
    write_mask, write_tile, Band, CatalogError, CloudClass, FireMask, FireSizeClass, MultiSpectralTile, Split,
    CANONICAL_TILE,
};
use crate::requirements::{enumerate_in_context_combinations, DimensionName, RequirementSet};

pub const DEV_TEAM: &str = "model-dev";
pub const VERIFICATION_TEAM: &str = "independent-verification";

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Format(#[from] crate::raster::io::FormatError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Planted fire footprint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FirePlan {
    None,
    /// One or two pixels.
    Small,
    /// Roughly 3x3.
    Medium,
    /// Disc of radius 2.5 to 3.5 px with a saturated core.
    Large,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TilePlan {
    pub land: String,
    pub fire: FirePlan,
    /// Share of rows covered by cloud.
    pub cloud_fraction: f64,
    /// Fire intensity scale in [0, 1].
    pub intensity: f64,
    /// Background brightness scale.
    pub illumination: f64,
}

impl TilePlan {
    pub fn new(land: &str, fire: FirePlan, cloud: CloudClass) -> Self {
        TilePlan {
            land: land.to_string(),
            fire,
            cloud_fraction: match cloud {
                CloudClass::None => 0.0,
                CloudClass::LowLt10pct => 0.08,
                CloudClass::HighGt50pct => 0.6,
            },
            intensity: 0.5,
            illumination: 1.0,
        }
    }
}

impl From<FireSizeClass> for FirePlan {
    fn from(c: FireSizeClass) -> Self {
        match c {
            FireSizeClass::None => FirePlan::None,
            FireSizeClass::SmallLt30m => FirePlan::Small,
            FireSizeClass::LargeGt100m => FirePlan::Large,
        }
    }
}

/// (blue, swir1, swir2/swir1) ranges per land type.
fn land_profile(land: &str) -> ([f32; 2], [f32; 2], [f32; 2]) {
    match land {
        "temperate_rainforest" => ([0.02, 0.06], [0.08, 0.16], [0.3, 0.6]),
        "agricultural" => ([0.05, 0.12], [0.2, 0.35], [0.5, 0.9]),
        "urban" => ([0.08, 0.15], [0.2, 0.3], [0.7, 0.95]),
        "industrial" => ([0.07, 0.14], [0.22, 0.38], [0.6, 0.95]),
        "grassland" => ([0.04, 0.1], [0.18, 0.3], [0.5, 0.85]),
        "desert" => ([0.15, 0.25], [0.35, 0.5], [0.8, 0.95]),
        "sea" => ([0.03, 0.08], [0.01, 0.03], [0.3, 0.7]),
        _ => ([0.05, 0.1], [0.15, 0.3], [0.5, 0.9]),
    }
}

fn seed_for(seed: u64, id: &str) -> u64 {
    let h = Sha256::new()
        .chain_update(seed.to_le_bytes())
        .chain_update(id.as_bytes())
        .finalize();
    u64::from_le_bytes(h[..8].try_into().expect("8 bytes"))
}

fn uniform(rng: &mut ChaCha8Rng, r: [f32; 2]) -> f32 {
    rng.gen_range(r[0]..=r[1])
}

/// One 48x48 tile and its truth mask. Deterministic in (`id`, `seed`).
pub fn synth_tile(id: &str, plan: &TilePlan, seed: u64) -> (MultiSpectralTile, FireMask) {
    let n = CANONICAL_TILE;
    let mut rng = ChaCha8Rng::seed_from_u64(seed_for(seed, id));
    let mut tile = MultiSpectralTile::zeros(id, n, n);
    let (blue, swir1, ratio) = land_profile(&plan.land);
    let illum = plan.illumination as f32;
    let cloud_rows = ((plan.cloud_fraction * n as f64).round() as usize).min(n - 12);
    for r in 0..n {
        for c in 0..n {
            let (b, s1, k) = if r < cloud_rows {
                (
                    uniform(&mut rng, [0.5, 0.8]),
                    uniform(&mut rng, [0.35, 0.55]),
                    uniform(&mut rng, [0.6, 0.9]),
                )
            } else {
                (
                    uniform(&mut rng, blue) * illum,
                    uniform(&mut rng, swir1) * illum,
                    uniform(&mut rng, ratio),
                )
            };
            tile.set(Band::Blue, r, c, b);
            tile.set(Band::Swir1, r, c, s1);
            tile.set(Band::Swir2, r, c, s1 * k);
        }
    }

    let lo = (cloud_rows + 5).max(5);
    let hi = n - 5;
    let cr = rng.gen_range(lo..hi);
    let cc = rng.gen_range(5..n - 5);
    let mut fire = FireMask::empty(n, n);
    match plan.fire {
        FirePlan::None => {}
        FirePlan::Small => {
            fire.set(cr, cc, true);
            if rng.gen_bool(0.5) {
                fire.set(cr, cc + 1, true);
            }
        }
        FirePlan::Medium => {
            for r in cr - 1..=cr + 1 {
                for c in cc - 1..=cc + 1 {
                    fire.set(r, c, true);
                }
            }
        }
        FirePlan::Large => {
            let rad: f64 = rng.gen_range(2.5..3.5);
            for r in cr - 4..=cr + 4 {
                for c in cc - 4..=cc + 4 {
                    let d2 = (r as f64 - cr as f64).powi(2) + (c as f64 - cc as f64).powi(2);
                    if d2 <= rad * rad {
                        fire.set(r, c, true);
                    }
                }
            }
        }
    }
    let lo_s2 = 0.5 + 0.25 * plan.intensity.clamp(0.0, 1.0) as f32;
    for (r, c) in fire.fire_pixels() {
        let s2 = uniform(&mut rng, [lo_s2, (lo_s2 + 0.25).min(1.0)]);
        let k = uniform(&mut rng, [2.0, 4.0]);
        tile.set(Band::Swir2, r, c, s2);
        tile.set(Band::Swir1, r, c, s2 / k);
    }
    if plan.fire == FirePlan::Large {
        let s2 = uniform(&mut rng, [1.3, 1.6]);
        tile.set(Band::Swir2, cr, cc, s2);
        tile.set(Band::Swir1, cr, cc, s2 / uniform(&mut rng, [1.0, 1.3]));
    }

    if plan.land == "urban" {
        let mut placed = 0;
        let mut tries = 0;
        while placed < 6 && tries < 400 {
            tries += 1;
            let r = rng.gen_range(cloud_rows..n - 2);
            let c = rng.gen_range(0..n - 3);
            let clear = (r.saturating_sub(3)..(r + 5).min(n))
                .all(|rr| (c.saturating_sub(3)..(c + 6).min(n)).all(|cc| !fire.get(rr, cc)));
            if !clear {
                continue;
            }
            for rr in r..r + 2 {
                for cc in c..c + 3 {
                    let s2 = uniform(&mut rng, [0.45, 0.6]);
                    tile.set(Band::Swir2, rr, cc, s2);
                    tile.set(Band::Swir1, rr, cc, s2 / uniform(&mut rng, [2.0, 3.0]));
                }
            }
            placed += 1;
        }
    }
    (tile, fire)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    pub seed: u64,
    /// Development tiles cover every in-context class combination when
    /// true, otherwise every `dev_stride`-th combination.
    pub full_coverage: bool,
    pub dev_stride: usize,
    /// Verification tiles per (land, size, cloud) case.
    pub verification_replicates: usize,
    /// Every n-th development fire tile gets an audit reference.
    pub audit_every: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 7,
            full_coverage: true,
            dev_stride: 9,
            verification_replicates: 1,
            audit_every: 60,
        }
    }
}

fn taxonomy_fire(key: &str) -> FirePlan {
    match key {
        "small" | "small_medium" => FirePlan::Small,
        "medium_large" => FirePlan::Medium,
        _ => FirePlan::Large,
    }
}

fn cloud_fraction(key: &str) -> f64 {
    match key {
        "none" => 0.0,
        "low" => 0.08,
        "low_medium" => 0.25,
        "medium_high" => 0.45,
        _ => 0.6,
    }
}

fn illumination(time_of_day: &str, time_of_year: &str) -> f64 {
    let d = match time_of_day {
        "early_morning" => 0.8,
        "late_afternoon" => 0.9,
        _ => 1.0,
    };
    let y = match time_of_year {
        "winter" => 0.85,
        "autumn" => 0.95,
        _ => 1.0,
    };
    d * y
}

fn dev_split(i: usize) -> Split {
    match i % 10 {
        0 => Split::InternalTest1,
        5 => Split::InternalTest2,
        _ => Split::Development,
    }
}

struct Writer<'a> {
    dir: &'a Path,
    seed: u64,
    metas: Vec<TileMetadata>,
}

impl Writer<'_> {
    fn add(&mut self, mut meta: TileMetadata, plan: &TilePlan) -> Result<FireMask, SynthError> {
        let (tile, mask) = synth_tile(&meta.tile_id, plan, self.seed);
        write_tile(&self.dir.join(format!("{}.ftl", meta.tile_id)), &tile)?;
        if mask.has_fire() {
            write_mask(&self.dir.join(format!("{}.fmk", meta.tile_id)), &mask)?;
        }
        meta.has_fire = mask.has_fire();
        meta.nadir_representative = Some(true);
        meta.ground_resolution_m_per_px = Some(30.0);
        self.metas.push(meta);
        Ok(mask)
    }
}

fn classes(pairs: &[(DimensionName, &str)]) -> BTreeMap<DimensionName, String> {
    pairs.iter().map(|(d, k)| (*d, k.to_string())).collect()
}

/// Writes a complete dataset directory: tiles, truth masks,
/// `metadata.json` and `audit/` references. Returns the metadata written.
pub fn generate_dataset(
    dir: &Path,
    rs: &RequirementSet,
    cfg: &SyntheticConfig,
) -> Result<Vec<TileMetadata>, SynthError> {
    std::fs::create_dir_all(dir.join("audit")).map_err(|source| SynthError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut w = Writer {
        dir,
        seed: cfg.seed,
        metas: Vec::new(),
    };
    let dev_prov = Provenance {
        source: Some("synthetic".into()),
        labeler_team: Some(DEV_TEAM.into()),
        collected_by_dev_team: Some(true),
    };

    let (combos, _) = enumerate_in_context_combinations(rs);
    let stride = if cfg.full_coverage { 1 } else { cfg.dev_stride.max(1) };
    let mut fire_count = 0usize;
    for (i, combo) in combos.iter().enumerate().step_by(stride) {
        let get = |d| combo.get(d).unwrap_or_default();
        let id = format!("dev-{i:05}");
        let mut meta = TileMetadata::new(&id, dev_split(i / stride), true);
        meta.classes = combo.0.iter().map(|(d, k)| (*d, k.clone())).collect();
        meta.provenance = dev_prov.clone();
        let plan = TilePlan {
            land: get(DimensionName::LandType).to_string(),
            fire: taxonomy_fire(get(DimensionName::FireSize)),
            cloud_fraction: cloud_fraction(get(DimensionName::Clouds)),
            intensity: if get(DimensionName::FireIntensity) == "high" {
                1.0
            } else {
                0.4
            },
            illumination: illumination(get(DimensionName::TimeOfDay), get(DimensionName::TimeOfYear)),
        };
        let mask = w.add(meta, &plan)?;
        fire_count += 1;
        if cfg.audit_every > 0 && fire_count % cfg.audit_every == 1 {
            write_mask(&dir.join("audit").join(format!("{id}.fmk")), &mask)?;
        }
    }

    // clear scenes: one per land x cloud x time of day, spread over seasons
    let dim = |d| {
        rs.dimension(d)
            .map(|x| x.in_context().map(|c| c.key.clone()).collect::<Vec<_>>())
            .unwrap_or_default()
    };
    let (lands, clouds, tods, toys) = (
        dim(DimensionName::LandType),
        dim(DimensionName::Clouds),
        dim(DimensionName::TimeOfDay),
        dim(DimensionName::TimeOfYear),
    );
    let mut k = 0usize;
    for land in &lands {
        for cloud in &clouds {
            for tod in &tods {
                let toy = &toys[k % toys.len().max(1)];
                let id = format!("clear-{k:04}");
                let mut meta = TileMetadata::new(&id, dev_split(k), false);
                meta.classes = classes(&[
                    (DimensionName::LandType, land),
                    (DimensionName::Clouds, cloud),
                    (DimensionName::TimeOfDay, tod),
                    (DimensionName::TimeOfYear, toy),
                ]);
                meta.provenance = dev_prov.clone();
                let plan = TilePlan {
                    land: land.clone(),
                    fire: FirePlan::None,
                    cloud_fraction: cloud_fraction(cloud),
                    intensity: 0.0,
                    illumination: illumination(tod, toy),
                };
                w.add(meta, &plan)?;
                k += 1;
            }
        }
    }

    let ver_prov = Provenance {
        source: Some("synthetic-archive".into()),
        labeler_team: Some(VERIFICATION_TEAM.into()),
        collected_by_dev_team: Some(false),
    };
    for land in &lands {
        for size in FireSizeClass::ALL {
            for cloud in CloudClass::ALL {
                for rep in 0..cfg.verification_replicates.max(1) {
                    let id = format!("ver-{land}-{}-{}-{rep}", size.name(), cloud.name());
                    let mut meta = TileMetadata::new(&id, Split::Verification, size != FireSizeClass::None);
                    let cloud_key = match cloud {
                        CloudClass::None => "none",
                        CloudClass::LowLt10pct => "low",
                        CloudClass::HighGt50pct => "high",
                    };
                    let mut cl = vec![
                        (DimensionName::LandType, land.as_str()),
                        (DimensionName::Clouds, cloud_key),
                        (DimensionName::TimeOfDay, "midday"),
                        (DimensionName::TimeOfYear, "summer"),
                    ];
                    match size {
                        FireSizeClass::SmallLt30m => {
                            cl.push((DimensionName::FireSize, "small_medium"));
                            cl.push((DimensionName::FireIntensity, "medium"));
                        }
                        FireSizeClass::LargeGt100m => {
                            cl.push((DimensionName::FireSize, "large"));
                            cl.push((DimensionName::FireIntensity, "high"));
                        }
                        FireSizeClass::None => {}
                    }
                    meta.classes = classes(&cl);
                    meta.provenance = ver_prov.clone();
                    meta.verification = Some(VerificationLabels { fire_size: size, cloud });
                    w.add(meta, &TilePlan::new(land, size.into(), cloud))?;
                }
            }
        }
    }
    write_metadata(dir, &w.metas)?;
    Ok(w.metas)
}

/// Fixture detector answering with every stored truth mask; tiles without
/// one get an all-clear mask written under `dir`.
pub fn truth_fixture(
    catalog: &crate::raster::DatasetCatalog,
    dir: &Path,
) -> Result<crate::detector::DetectorSpec, SynthError> {
    let clear = dir.join("clear.fmk");
    write_mask(&clear, &FireMask::empty(CANONICAL_TILE, CANONICAL_TILE))?;
    let masks = catalog
        .entries
        .iter()
        .map(|(k, e)| (k.clone(), e.mask_path.clone().unwrap_or_else(|| clear.clone())))
        .collect();
    Ok(crate::detector::DetectorSpec::Fixture { masks })
}

/// Fixture detector whose masks are the truth shifted `cols` pixels
/// horizontally. The shift goes left instead when going right would push
/// fire pixels off the tile.
pub fn shifted_fixture(
    catalog: &crate::raster::DatasetCatalog,
    dir: &Path,
    cols: isize,
) -> Result<crate::detector::DetectorSpec, SynthError> {
    std::fs::create_dir_all(dir).map_err(|source| SynthError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut masks = BTreeMap::new();
    for (k, e) in &catalog.entries {
        let truth = e.load_mask()?.unwrap_or_else(|| FireMask::empty(e.width, e.height));
        let p: PathBuf = dir.join(format!("{k}.fmk"));
        let mut moved = truth.shifted(0, cols);
        if moved.fire_count() != truth.fire_count() {
            moved = truth.shifted(0, -cols);
        }
        write_mask(&p, &moved)?;
        masks.insert(k.clone(), p);
    }
    Ok(crate::detector::DetectorSpec::Fixture { masks })
}
