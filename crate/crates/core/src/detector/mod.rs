//! Per-tile fire detectors: a spectral threshold baseline, a detector that
//! replays stored masks, and an external process speaking a line-delimited
//! JSON protocol.

mod external;
mod serve;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::io::{read_mask_expecting, FormatError};
use crate::raster::{Band, FireMask, MultiSpectralTile};

pub use external::ExternalSession;
pub use serve::serve;

pub const DEFAULT_TIMEOUT_S: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineParams {
    /// Minimum SWIR-2 reflectance for the ratio test.
    pub swir2_min: f32,
    /// Minimum SWIR-2 / (SWIR-1 + epsilon).
    pub ratio_min: f32,
    #[serde(default = "default_epsilon")]
    pub epsilon: f32,
    /// SWIR-2 reflectance that marks fire on its own.
    pub saturation_min: f32,
}

fn default_epsilon() -> f32 {
    1e-6
}

fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT_S
}

impl BaselineParams {
    /// Thresholds shipped in `corpus/detector_defaults.json`.
    pub fn defaults() -> Self {
        let mut v: serde_json::Value =
            serde_json::from_str(crate::corpus::DETECTOR_DEFAULTS).expect("bundled defaults");
        if let Some(obj) = v.as_object_mut() {
            obj.retain(|k, _| matches!(k.as_str(), "swir2_min" | "ratio_min" | "epsilon" | "saturation_min"));
        }
        serde_json::from_value(v).expect("bundled defaults")
    }

    pub fn validate(&self) -> Result<(), DetectorError> {
        let ok = |x: f32| x.is_finite() && x > 0.0;
        if ok(self.swir2_min) && ok(self.ratio_min) && ok(self.saturation_min) && ok(self.epsilon) {
            Ok(())
        } else {
            Err(DetectorError::InvalidSpec(format!(
                "baseline thresholds must be finite and > 0: {self:?}"
            )))
        }
    }

    /// The per-pixel fire predicate.
    pub fn is_fire(&self, swir1: f32, swir2: f32) -> bool {
        swir2 >= self.saturation_min || (swir2 >= self.swir2_min && swir2 / (swir1 + self.epsilon) >= self.ratio_min)
    }

    pub fn apply(&self, tile: &MultiSpectralTile) -> FireMask {
        let (s1, s2) = (tile.band(Band::Swir1), tile.band(Band::Swir2));
        let w = tile.width();
        FireMask::from_fn(w, tile.height(), |r, c| self.is_fire(s1[r * w + c], s2[r * w + c]))
    }

    pub fn version(&self) -> String {
        format!(
            "baseline-threshold/1 a={} r={} s={} eps={}",
            self.swir2_min, self.ratio_min, self.saturation_min, self.epsilon
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum DetectorSpec {
    BaselineThreshold(BaselineParams),
    Fixture {
        /// tile id -> FMK1 mask path
        masks: BTreeMap<String, PathBuf>,
    },
    External {
        /// Program followed by its arguments.
        command: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        working_dir: Option<PathBuf>,
        #[serde(default = "default_timeout")]
        timeout_s: f64,
    },
}

impl DetectorSpec {
    pub fn baseline() -> Self {
        DetectorSpec::BaselineThreshold(BaselineParams::defaults())
    }

    pub fn external(command: Vec<String>) -> Self {
        DetectorSpec::External {
            command,
            working_dir: None,
            timeout_s: DEFAULT_TIMEOUT_S,
        }
    }

    /// Resolves relative fixture paths and working directories against `base`.
    pub fn resolve_paths(mut self, base: &Path) -> Self {
        match &mut self {
            DetectorSpec::Fixture { masks } => {
                for p in masks.values_mut() {
                    if p.is_relative() {
                        *p = base.join(&*p);
                    }
                }
            }
            DetectorSpec::External { working_dir, .. } => {
                if let Some(d) = working_dir {
                    if d.is_relative() {
                        *d = base.join(&*d);
                    }
                }
            }
            DetectorSpec::BaselineThreshold(_) => {}
        }
        self
    }

    pub fn validate(&self) -> Result<(), DetectorError> {
        match self {
            DetectorSpec::BaselineThreshold(p) => p.validate(),
            DetectorSpec::Fixture { .. } => Ok(()),
            DetectorSpec::External { command, timeout_s, .. } => {
                if command.is_empty() {
                    return Err(DetectorError::InvalidSpec("external command is empty".into()));
                }
                if !(timeout_s.is_finite() && *timeout_s > 0.0) {
                    return Err(DetectorError::InvalidSpec(format!("timeout {timeout_s} must be > 0")));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionOutput {
    pub tile_id: String,
    pub mask: FireMask,
    pub detector_version: String,
    pub wall_time_ms: f64,
}

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error("invalid detector spec: {0}")]
    InvalidSpec(String),
    #[error("tile {tile_id} is {width}x{height}; this detector needs 48x48x3 tiles")]
    NonCanonicalTile {
        tile_id: String,
        width: usize,
        height: usize,
    },
    #[error("fixture has no mask for tile {0}")]
    FixtureMissing(String),
    #[error("mask for tile {tile_id}: {source}")]
    Mask { tile_id: String, source: FormatError },
    #[error("failed to start {command}: {source}")]
    Spawn { command: String, source: std::io::Error },
    #[error("i/o with detector process: {0}")]
    Io(#[from] std::io::Error),
    #[error("detector process exited ({status}); stderr: {stderr}")]
    Exited { status: String, stderr: String },
    #[error("detector did not answer within {seconds} s; stderr: {stderr}")]
    Timeout { seconds: f64, stderr: String },
    #[error("protocol violation: {message}; stderr: {stderr}")]
    Protocol { message: String, stderr: String },
    #[error("request {id} malformed response: {line}")]
    MalformedResponse { id: u64, line: String },
    #[error("request {id} failed in detector: {message}")]
    Remote { id: u64, message: String },
}

impl DetectorError {
    /// Errors after which the session can still serve further requests.
    pub fn is_per_request(&self) -> bool {
        matches!(
            self,
            DetectorError::MalformedResponse { .. }
                | DetectorError::Remote { .. }
                | DetectorError::Mask { .. }
                | DetectorError::FixtureMissing(_)
                | DetectorError::NonCanonicalTile { .. }
        )
    }
}

fn require_canonical(tile: &MultiSpectralTile) -> Result<(), DetectorError> {
    if tile.is_canonical() {
        Ok(())
    } else {
        Err(DetectorError::NonCanonicalTile {
            tile_id: tile.tile_id.clone(),
            width: tile.width(),
            height: tile.height(),
        })
    }
}

/// An open detector. External detectors keep one child process per session.
pub enum Detector {
    Baseline(BaselineParams),
    Fixture(BTreeMap<String, PathBuf>),
    External(ExternalSession),
}

impl Detector {
    pub fn open(spec: &DetectorSpec) -> Result<Detector, DetectorError> {
        spec.validate()?;
        Ok(match spec {
            DetectorSpec::BaselineThreshold(p) => Detector::Baseline(*p),
            DetectorSpec::Fixture { masks } => Detector::Fixture(masks.clone()),
            DetectorSpec::External {
                command,
                working_dir,
                timeout_s,
            } => Detector::External(ExternalSession::start(
                command,
                working_dir.as_deref(),
                Duration::from_secs_f64(*timeout_s),
            )?),
        })
    }

    pub fn version(&self) -> String {
        match self {
            Detector::Baseline(p) => p.version(),
            Detector::Fixture(_) => "fixture/1".to_string(),
            Detector::External(s) => format!("{}/{}", s.name(), s.version()),
        }
    }

    pub fn detect(&mut self, tile: &MultiSpectralTile) -> Result<DetectionOutput, DetectorError> {
        let start = Instant::now();
        let mask = match self {
            Detector::Baseline(p) => {
                require_canonical(tile)?;
                p.apply(tile)
            }
            Detector::Fixture(masks) => {
                let path = masks
                    .get(&tile.tile_id)
                    .ok_or_else(|| DetectorError::FixtureMissing(tile.tile_id.clone()))?;
                read_mask_expecting(path, (tile.width(), tile.height())).map_err(|source| DetectorError::Mask {
                    tile_id: tile.tile_id.clone(),
                    source,
                })?
            }
            Detector::External(s) => {
                require_canonical(tile)?;
                s.detect(tile)?
            }
        };
        Ok(DetectionOutput {
            tile_id: tile.tile_id.clone(),
            mask,
            detector_version: self.version(),
            wall_time_ms: start.elapsed().as_secs_f64() * 1000.0,
        })
    }
}

pub fn run_detector(spec: &DetectorSpec, tile: &MultiSpectralTile) -> Result<DetectionOutput, DetectorError> {
    Detector::open(spec)?.detect(tile)
}

/// Runs every tile through one detector session, preserving input order.
/// The first error aborts the batch.
pub fn run_batch(spec: &DetectorSpec, tiles: &[MultiSpectralTile]) -> Result<Vec<DetectionOutput>, DetectorError> {
    if tiles.is_empty() {
        spec.validate()?;
        return Ok(Vec::new());
    }
    let mut det = Detector::open(spec)?;
    tiles.iter().map(|t| det.detect(t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::CANONICAL_TILE;
    use proptest::prelude::*;

    const N: usize = CANONICAL_TILE;

    fn params() -> BaselineParams {
        BaselineParams {
            swir2_min: 0.4,
            ratio_min: 1.5,
            epsilon: 1e-6,
            saturation_min: 1.2,
        }
    }

    #[test]
    fn defaults_load_and_validate() {
        let p = BaselineParams::defaults();
        assert_eq!(p, params());
        p.validate().unwrap();
        assert!(BaselineParams { ratio_min: 0.0, ..p }.validate().is_err());
    }

    #[test]
    fn zero_tile_has_no_fire() {
        let out = run_detector(&DetectorSpec::baseline(), &MultiSpectralTile::zeros("z", N, N)).unwrap();
        assert!(!out.mask.has_fire());
        assert_eq!(out.tile_id, "z");
    }

    #[test]
    fn planted_block_is_recovered_exactly() {
        let p = params();
        let mut t = MultiSpectralTile::zeros("b", N, N);
        let swir2 = 10.0 * p.swir2_min;
        // ratio = 10 r  =>  swir1 = swir2 / (10 r)
        let swir1 = swir2 / (10.0 * p.ratio_min);
        let mut want = Vec::new();
        for r in 20..23 {
            for c in 5..8 {
                t.set(Band::Swir2, r, c, swir2);
                t.set(Band::Swir1, r, c, swir1);
                want.push((r, c));
            }
        }
        let out = run_detector(&DetectorSpec::BaselineThreshold(p), &t).unwrap();
        assert_eq!(out.mask, FireMask::from_pixels(N, N, &want));
    }

    #[test]
    fn baseline_rejects_non_canonical_tile() {
        let err = run_detector(&DetectorSpec::baseline(), &MultiSpectralTile::zeros("x", 10, 10)).unwrap_err();
        assert!(matches!(err, DetectorError::NonCanonicalTile { .. }));
    }

    #[test]
    fn fixture_detector() {
        let dir = tempfile::tempdir().unwrap();
        let m = FireMask::from_pixels(5, 4, &[(1, 2)]);
        crate::raster::write_mask(&dir.path().join("a.fmk"), &m).unwrap();
        let spec = DetectorSpec::Fixture {
            masks: BTreeMap::from([("a".to_string(), PathBuf::from("a.fmk"))]),
        }
        .resolve_paths(dir.path());
        let out = run_detector(&spec, &MultiSpectralTile::zeros("a", 5, 4)).unwrap();
        assert_eq!(out.mask, m);
        assert!(matches!(
            run_detector(&spec, &MultiSpectralTile::zeros("b", 5, 4)),
            Err(DetectorError::FixtureMissing(ref id)) if id == "b"
        ));
        assert!(matches!(
            run_detector(&spec, &MultiSpectralTile::zeros("a", 6, 4)),
            Err(DetectorError::Mask { .. })
        ));
    }

    #[test]
    fn batch_preserves_order() {
        assert!(run_batch(&DetectorSpec::baseline(), &[]).unwrap().is_empty());
        let tiles: Vec<_> = (0..1428)
            .map(|i| MultiSpectralTile::zeros(format!("t{i}"), N, N))
            .collect();
        let out = run_batch(&DetectorSpec::baseline(), &tiles).unwrap();
        assert_eq!(out.len(), 1428);
        assert!(out.iter().zip(&tiles).all(|(o, t)| o.tile_id == t.tile_id));
    }

    #[test]
    fn spec_json_shape() {
        let spec: DetectorSpec = serde_json::from_str(
            r#"{"kind":"BaselineThreshold","swir2_min":0.4,"ratio_min":1.5,"saturation_min":1.2}"#,
        )
        .unwrap();
        assert_eq!(spec, DetectorSpec::BaselineThreshold(params()));
        let ext: DetectorSpec = serde_json::from_str(r#"{"kind":"External","command":["x"]}"#).unwrap();
        assert!(matches!(ext, DetectorSpec::External { timeout_s, .. } if timeout_s == 30.0));
        assert!(serde_json::from_str::<DetectorSpec>(r#"{"kind":"Fixture","masks":{},"command":["x"]}"#).is_err());
        assert!(DetectorSpec::external(vec![]).validate().is_err());
    }

    proptest! {
        #[test]
        fn raising_swir2_never_clears_fire(swir1 in 0.0f32..2.0, swir2 in 0.0f32..2.0, bump in 0.0f32..2.0,
                                           a in 0.01f32..1.0, r in 0.1f32..5.0, s in 0.5f32..3.0) {
            let p = BaselineParams { swir2_min: a, ratio_min: r, epsilon: 1e-6, saturation_min: s };
            if p.is_fire(swir1, swir2) {
                prop_assert!(p.is_fire(swir1, swir2 + bump));
            }
        }

        #[test]
        fn baseline_is_deterministic(vals in proptest::collection::vec(0.0f32..2.0, 2 * N * N)) {
            let n = N * N;
            let t = MultiSpectralTile::new("d", N, N, [vec![0.1; n], vals[..n].to_vec(), vals[n..].to_vec()]).unwrap();
            let p = params();
            prop_assert_eq!(p.apply(&t), p.apply(&t.clone()));
        }
    }
}
