//! Verification campaign: a case matrix over land type, fire size and cloud
//! cover built from the independent verification split, per-case judgement
//! against MLSR1-3, and a per-class breakdown for MLSR4.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::{Detector, DetectorError, DetectorSpec};
use crate::metrics::{
    classify_sample, discrete_detections, monthly_fp, summarize_verdicts, MetricsError, MonthlyFp, SampleSummary,
    SampleVerdict, Thresholds,
};
use crate::raster::io::FormatError;
use crate::raster::{DatasetCatalog, FireMask, Split};
use crate::requirements::{DimensionName, RequirementSet};
use crate::{Finding, SCHEMA_VERSION};

pub use crate::raster::{CloudClass, FireSizeClass};

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("the catalog has no verification tiles")]
    EmptySplit,
    #[error("case {case_id}: fire tile {tile_id} has no truth mask")]
    MissingTruth { case_id: u32, tile_id: String },
    #[error("case {case_id}: tile {tile_id} is not in the catalog")]
    UnknownTile { case_id: u32, tile_id: String },
    #[error("tile {tile_id}: {source}")]
    Format { tile_id: String, source: FormatError },
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error("tile {tile_id}: {source}")]
    Metrics { tile_id: String, source: MetricsError },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationCase {
    pub case_id: u32,
    /// Land-type class key.
    pub land_type: String,
    pub fire_size: FireSizeClass,
    pub cloud: CloudClass,
    pub tile_ids: Vec<String>,
    /// Kept out of the detector path; used only for judging.
    pub expected_has_fire: bool,
}

impl VerificationCase {
    pub fn label(&self) -> String {
        format!("{}/{}/{}", self.land_type, self.fire_size.name(), self.cloud.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseMatrix {
    pub cases: Vec<VerificationCase>,
    /// `land/size/cloud` combinations with no verification tiles.
    pub absent: Vec<String>,
    pub findings: Vec<Finding>,
}

/// Groups verification tiles by (land type, fire size, cloud). Case ids
/// follow taxonomy order of land types, then size, then cloud.
pub fn build_case_matrix(catalog: &DatasetCatalog, rs: &RequirementSet) -> Result<CaseMatrix, CampaignError> {
    let tiles: Vec<_> = catalog.split(Split::Verification).collect();
    if tiles.is_empty() {
        return Err(CampaignError::EmptySplit);
    }
    let lands: Vec<(String, bool)> = rs
        .dimension(DimensionName::LandType)
        .map(|d| d.classes.iter().map(|c| (c.key.clone(), c.in_context)).collect())
        .unwrap_or_default();
    let land_dim = rs.dimension(DimensionName::LandType);
    let mut findings = Vec::new();
    let mut groups: BTreeMap<(usize, FireSizeClass, CloudClass), Vec<String>> = BTreeMap::new();
    for e in tiles {
        let id = &e.metadata.tile_id;
        let Some(v) = e.metadata.verification else {
            findings.push(Finding::warning(
                "verification-unlabelled",
                id,
                "verification tile has no fire-size / cloud labels; excluded from the case matrix",
            ));
            continue;
        };
        let land = e
            .metadata
            .class(DimensionName::LandType)
            .and_then(|n| land_dim.and_then(|d| d.class(n)));
        let Some(land) = land else {
            findings.push(Finding::warning(
                "verification-unlabelled",
                id,
                "verification tile has no land type",
            ));
            continue;
        };
        if !land.in_context {
            findings.push(Finding::warning(
                "verification-out-of-context",
                id,
                format!("land type {} is out of context; excluded", land.key),
            ));
            continue;
        }
        let idx = lands
            .iter()
            .position(|(k, _)| *k == land.key)
            .expect("class from taxonomy");
        groups.entry((idx, v.fire_size, v.cloud)).or_default().push(id.clone());
    }
    let mut cases = Vec::new();
    let mut absent = Vec::new();
    for (idx, (land, in_ctx)) in lands.iter().enumerate() {
        if !in_ctx {
            continue;
        }
        for size in FireSizeClass::ALL {
            for cloud in CloudClass::ALL {
                match groups.remove(&(idx, size, cloud)) {
                    Some(mut ids) => {
                        ids.sort();
                        cases.push(VerificationCase {
                            case_id: cases.len() as u32 + 1,
                            land_type: land.clone(),
                            fire_size: size,
                            cloud,
                            tile_ids: ids,
                            expected_has_fire: size != FireSizeClass::None,
                        });
                    }
                    None => absent.push(format!("{land}/{}/{}", size.name(), cloud.name())),
                }
            }
        }
    }
    Ok(CaseMatrix {
        cases,
        absent,
        findings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MlsrStatus {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseStatus {
    Pass,
    #[serde(rename = "Fail_MLSR1")]
    FailMlsr1,
    #[serde(rename = "Fail_MLSR2")]
    FailMlsr2,
    #[serde(rename = "Fail_MLSR3")]
    FailMlsr3,
}

impl CaseStatus {
    pub fn name(self) -> &'static str {
        match self {
            CaseStatus::Pass => "Pass",
            CaseStatus::FailMlsr1 => "Fail_MLSR1",
            CaseStatus::FailMlsr2 => "Fail_MLSR2",
            CaseStatus::FailMlsr3 => "Fail_MLSR3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisplayColor {
    /// Every requirement satisfied.
    Green,
    /// Fire found but mis-positioned (MLSR1 only).
    Amber,
    Red,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseMetrics {
    pub tiles: usize,
    pub max_boundary_offset_px: Option<f64>,
    pub min_fire_iou: Option<f64>,
    pub min_nonfire_iou: f64,
    pub missed_fire_tiles: usize,
    pub false_positive_tiles: usize,
    /// Predicted fire components touching no truth fire pixel.
    pub spurious_detections: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case_id: u32,
    pub land_type: String,
    pub fire_size: FireSizeClass,
    pub cloud: CloudClass,
    pub mlsr1: MlsrStatus,
    pub mlsr2: MlsrStatus,
    pub mlsr3: MlsrStatus,
    pub status: Vec<CaseStatus>,
    pub color: DisplayColor,
    pub metrics: CaseMetrics,
}

impl CaseResult {
    pub fn passed(&self) -> bool {
        self.status == [CaseStatus::Pass]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CampaignConfig {
    pub thresholds: Thresholds,
    pub max_boundary_offset_px: f64,
    pub min_detection_rate: f64,
    pub max_fp_per_month: f64,
    /// Frames per month from the pass simulator; enables the monthly verdict.
    pub frames_per_month: Option<f64>,
    /// Share of failing cases in one land class that is reported as a
    /// limitation of use.
    pub limitation_share: f64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            thresholds: Thresholds::default(),
            max_boundary_offset_px: 6.0,
            min_detection_rate: 0.95,
            max_fp_per_month: 52.0,
            frames_per_month: None,
            limitation_share: 0.5,
        }
    }
}

impl CampaignConfig {
    /// Limits taken from the MLSR parameters of a requirement set.
    pub fn from_requirements(rs: &RequirementSet) -> Self {
        let d = CampaignConfig::default();
        CampaignConfig {
            max_boundary_offset_px: rs
                .ml_param("MLSR1", "max_boundary_offset_px")
                .unwrap_or(d.max_boundary_offset_px),
            min_detection_rate: rs
                .ml_param("MLSR2", "min_detection_rate")
                .unwrap_or(d.min_detection_rate),
            max_fp_per_month: rs.ml_param("MLSR3", "max_fp_per_month").unwrap_or(d.max_fp_per_month),
            ..d
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassBreakdown {
    pub land_type: String,
    pub cases: usize,
    pub passed: usize,
    pub fail_mlsr1: usize,
    pub fail_mlsr2: usize,
    pub fail_mlsr3: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub cases: usize,
    pub passed_cases: usize,
    pub fire_cases: usize,
    pub detected_fire_cases: usize,
    pub detection_rate: f64,
    pub mlsr1_satisfied: bool,
    pub mlsr2_satisfied: bool,
    pub no_fire_frames: usize,
    pub false_positive_frames: usize,
    pub fp_per_frame: f64,
    pub monthly_fp: Option<MonthlyFp>,
    pub mlsr3_satisfied: Option<bool>,
    pub mlsr4_satisfied: bool,
    pub max_boundary_offset_px: Option<f64>,
    pub per_class: Vec<ClassBreakdown>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub schema_version: u32,
    pub detector: String,
    pub config: CampaignConfig,
    pub results: Vec<CaseResult>,
    pub absent_combinations: Vec<String>,
    pub summary: CampaignSummary,
    pub findings: Vec<Finding>,
}

impl Campaign {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("campaign serializes") + "\n"
    }

    pub fn all_passed(&self) -> bool {
        self.results.iter().all(CaseResult::passed)
            && self.summary.mlsr2_satisfied
            && self.summary.mlsr3_satisfied != Some(false)
    }

    pub fn results_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "schema_version",
            "case_id",
            "land_type",
            "fire_size",
            "cloud",
            "tiles",
            "mlsr1",
            "mlsr2",
            "mlsr3",
            "status",
            "color",
            "max_boundary_offset_px",
            "min_fire_iou",
            "min_nonfire_iou",
        ])
        .expect("in-memory write");
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
        for r in &self.results {
            w.write_record([
                SCHEMA_VERSION.to_string(),
                r.case_id.to_string(),
                r.land_type.clone(),
                r.fire_size.name().to_string(),
                r.cloud.name().to_string(),
                r.metrics.tiles.to_string(),
                format!("{:?}", r.mlsr1),
                format!("{:?}", r.mlsr2),
                format!("{:?}", r.mlsr3),
                r.status.iter().map(|s| s.name()).collect::<Vec<_>>().join(";"),
                format!("{:?}", r.color).to_lowercase(),
                opt(r.metrics.max_boundary_offset_px),
                opt(r.metrics.min_fire_iou),
                format!("{:.6}", r.metrics.min_nonfire_iou),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn findings_text(&self) -> String {
        let s = &self.summary;
        let mut out = String::new();
        let _ = writeln!(out, "Verification campaign ({})", self.detector);
        let _ = writeln!(out, "  cases: {} ({} passed)", s.cases, s.passed_cases);
        let _ = writeln!(
            out,
            "  detection rate: {}/{} = {:.4} (MLSR2 {})",
            s.detected_fire_cases,
            s.fire_cases,
            s.detection_rate,
            if s.mlsr2_satisfied { "met" } else { "not met" }
        );
        let _ = writeln!(
            out,
            "  false-positive frames: {}/{} = {:.6} per frame",
            s.false_positive_frames, s.no_fire_frames, s.fp_per_frame
        );
        match &s.monthly_fp {
            Some(m) => {
                let _ = writeln!(
                    out,
                    "  expected false alarms per month: {:.2} (budget {}; MLSR3 {})",
                    m.expected_per_month,
                    m.budget_per_month,
                    if m.compliant { "met" } else { "not met" }
                );
            }
            None => {
                let _ = writeln!(
                    out,
                    "  monthly false-alarm verdict: not judged (no frames-per-month figure)"
                );
            }
        }
        let _ = writeln!(out, "  per land type:");
        for c in &s.per_class {
            let _ = writeln!(
                out,
                "    {:<22} {:>3} cases {:>3} passed  MLSR1 x{} MLSR2 x{} MLSR3 x{}",
                c.land_type, c.cases, c.passed, c.fail_mlsr1, c.fail_mlsr2, c.fail_mlsr3
            );
        }
        if !self.absent_combinations.is_empty() {
            let _ = writeln!(out, "  absent combinations: {}", self.absent_combinations.len());
            for a in &self.absent_combinations {
                let _ = writeln!(out, "    {a}");
            }
        }
        for f in &self.findings {
            let _ = writeln!(out, "{f}");
        }
        out
    }
}

fn load_truth(
    catalog: &DatasetCatalog,
    case: &VerificationCase,
    tile_id: &str,
    dims: (usize, usize),
) -> Result<FireMask, CampaignError> {
    let entry = catalog.get(tile_id).ok_or_else(|| CampaignError::UnknownTile {
        case_id: case.case_id,
        tile_id: tile_id.to_string(),
    })?;
    match entry.load_mask() {
        Ok(Some(m)) => Ok(m),
        Ok(None) if case.expected_has_fire && entry.metadata.has_fire => Err(CampaignError::MissingTruth {
            case_id: case.case_id,
            tile_id: tile_id.to_string(),
        }),
        Ok(None) => Ok(FireMask::empty(dims.0, dims.1)),
        Err(source) => Err(CampaignError::Format {
            tile_id: tile_id.to_string(),
            source,
        }),
    }
}

fn judge_case(
    case: &VerificationCase,
    detector: &mut Detector,
    catalog: &DatasetCatalog,
    cfg: &CampaignConfig,
) -> Result<CaseResult, CampaignError> {
    let mut m = CaseMetrics {
        tiles: case.tile_ids.len(),
        max_boundary_offset_px: None,
        min_fire_iou: None,
        min_nonfire_iou: 1.0,
        missed_fire_tiles: 0,
        false_positive_tiles: 0,
        spurious_detections: 0,
    };
    let mut fire_tiles = 0;
    for tid in &case.tile_ids {
        let entry = catalog.get(tid).ok_or_else(|| CampaignError::UnknownTile {
            case_id: case.case_id,
            tile_id: tid.clone(),
        })?;
        let tile = entry.load_tile().map_err(|source| CampaignError::Format {
            tile_id: tid.clone(),
            source,
        })?;
        let truth = load_truth(catalog, case, tid, (tile.width(), tile.height()))?;
        let pred = detector.detect(&tile)?.mask;
        let v = classify_sample(tid, &pred, &truth, &cfg.thresholds).map_err(|source| CampaignError::Metrics {
            tile_id: tid.clone(),
            source,
        })?;
        m.min_nonfire_iou = m.min_nonfire_iou.min(v.scores.nonfire_iou);
        if let Some(d) = v.boundary_offset_px {
            m.max_boundary_offset_px = Some(m.max_boundary_offset_px.map_or(d, |x: f64| x.max(d)));
        }
        if truth.has_fire() {
            fire_tiles += 1;
            m.min_fire_iou = Some(
                m.min_fire_iou
                    .map_or(v.scores.fire_iou, |x: f64| x.min(v.scores.fire_iou)),
            );
            if v.is_false_negative {
                m.missed_fire_tiles += 1;
            }
            m.spurious_detections += discrete_detections(&pred)
                .components
                .iter()
                .filter(|c| c.pixels.iter().all(|&(r, c)| !truth.get(r, c)))
                .count();
        } else if v.is_false_positive {
            m.false_positive_tiles += 1;
        }
    }

    let fire_case = case.expected_has_fire && fire_tiles > 0;
    let mlsr1 = if !fire_case {
        MlsrStatus::NotApplicable
    } else if m
        .max_boundary_offset_px
        .is_some_and(|d| d >= cfg.max_boundary_offset_px)
    {
        MlsrStatus::Fail
    } else {
        MlsrStatus::Pass
    };
    let mlsr2 = if !fire_case {
        MlsrStatus::NotApplicable
    } else if m.missed_fire_tiles > 0 {
        MlsrStatus::Fail
    } else {
        MlsrStatus::Pass
    };
    let mlsr3 = if m.false_positive_tiles > 0 || m.spurious_detections > 0 {
        MlsrStatus::Fail
    } else {
        MlsrStatus::Pass
    };
    let mut status = Vec::new();
    for (s, tag) in [
        (mlsr1, CaseStatus::FailMlsr1),
        (mlsr2, CaseStatus::FailMlsr2),
        (mlsr3, CaseStatus::FailMlsr3),
    ] {
        if s == MlsrStatus::Fail {
            status.push(tag);
        }
    }
    if status.is_empty() {
        status.push(CaseStatus::Pass);
    }
    let color = match status.as_slice() {
        [CaseStatus::Pass] => DisplayColor::Green,
        [CaseStatus::FailMlsr1] => DisplayColor::Amber,
        _ => DisplayColor::Red,
    };
    Ok(CaseResult {
        case_id: case.case_id,
        land_type: case.land_type.clone(),
        fire_size: case.fire_size,
        cloud: case.cloud,
        mlsr1,
        mlsr2,
        mlsr3,
        status,
        color,
        metrics: m,
    })
}

/// Runs every case through one detector session and judges the results.
pub fn run_campaign(
    catalog: &DatasetCatalog,
    matrix: &CaseMatrix,
    spec: &DetectorSpec,
    rs: &RequirementSet,
    cfg: &CampaignConfig,
) -> Result<Campaign, CampaignError> {
    let mut detector = Detector::open(spec)?;
    let mut results = Vec::with_capacity(matrix.cases.len());
    for case in &matrix.cases {
        results.push(judge_case(case, &mut detector, catalog, cfg)?);
    }

    let mut findings = matrix.findings.clone();
    let fire: Vec<&CaseResult> = results
        .iter()
        .filter(|r| r.mlsr2 != MlsrStatus::NotApplicable)
        .collect();
    let detected = fire.iter().filter(|r| r.mlsr2 == MlsrStatus::Pass).count();
    let detection_rate = if fire.is_empty() {
        1.0
    } else {
        detected as f64 / fire.len() as f64
    };
    let no_fire_frames: usize = results
        .iter()
        .filter(|r| r.mlsr2 == MlsrStatus::NotApplicable)
        .map(|r| r.metrics.tiles)
        .sum();
    let fp_frames: usize = results.iter().map(|r| r.metrics.false_positive_tiles).sum();
    let fp_per_frame = if no_fire_frames == 0 {
        0.0
    } else {
        fp_frames as f64 / no_fire_frames as f64
    };
    let monthly = cfg
        .frames_per_month
        .map(|f| monthly_fp(fp_per_frame, f, cfg.max_fp_per_month).expect("frequency is a probability"));

    let land_order: Vec<String> = rs
        .dimension(DimensionName::LandType)
        .map(|d| d.in_context().map(|c| c.key.clone()).collect())
        .unwrap_or_default();
    let mut per_class = Vec::new();
    for land in &land_order {
        let rows: Vec<&CaseResult> = results.iter().filter(|r| &r.land_type == land).collect();
        if rows.is_empty() {
            findings.push(Finding::warning(
                "class-unverified",
                land,
                "no verification cases for this in-context land type",
            ));
            continue;
        }
        let count = |s: CaseStatus| rows.iter().filter(|r| r.status.contains(&s)).count();
        let b = ClassBreakdown {
            land_type: land.clone(),
            cases: rows.len(),
            passed: rows.iter().filter(|r| r.passed()).count(),
            fail_mlsr1: count(CaseStatus::FailMlsr1),
            fail_mlsr2: count(CaseStatus::FailMlsr2),
            fail_mlsr3: count(CaseStatus::FailMlsr3),
        };
        let failed = b.cases - b.passed;
        if failed > 0 && failed as f64 >= cfg.limitation_share * b.cases as f64 {
            findings.push(Finding::warning(
                "limitation",
                land,
                format!(
                    "limitation: {land}: {failed} of {} cases fail; not suitable for this land type",
                    b.cases
                ),
            ));
        }
        per_class.push(b);
    }
    for r in &results {
        if !r.passed() {
            let tags: Vec<_> = r.status.iter().map(|s| s.name()).collect();
            findings.push(Finding::error(
                "case-failed",
                format!("case {}", r.case_id),
                format!(
                    "{}/{}/{}: {}",
                    r.land_type,
                    r.fire_size.name(),
                    r.cloud.name(),
                    tags.join(", ")
                ),
            ));
        }
    }

    let mlsr1_satisfied = results.iter().all(|r| r.mlsr1 != MlsrStatus::Fail);
    let mlsr2_satisfied = detection_rate + 1e-12 >= cfg.min_detection_rate;
    let summary = CampaignSummary {
        cases: results.len(),
        passed_cases: results.iter().filter(|r| r.passed()).count(),
        fire_cases: fire.len(),
        detected_fire_cases: detected,
        detection_rate,
        mlsr1_satisfied,
        mlsr2_satisfied,
        no_fire_frames,
        false_positive_frames: fp_frames,
        fp_per_frame,
        mlsr3_satisfied: monthly.map(|m| m.compliant),
        monthly_fp: monthly,
        mlsr4_satisfied: per_class.iter().all(|c| c.passed == c.cases) && per_class.len() == land_order.len(),
        max_boundary_offset_px: results
            .iter()
            .filter_map(|r| r.metrics.max_boundary_offset_px)
            .reduce(f64::max),
        per_class,
    };
    Ok(Campaign {
        schema_version: SCHEMA_VERSION,
        detector: detector.version(),
        config: cfg.clone(),
        results,
        absent_combinations: matrix.absent.clone(),
        summary,
        findings,
    })
}

/// Checks that verification tiles were collected and labelled outside the
/// development team.
pub fn independence_check(catalog: &DatasetCatalog, dev_team: Option<&str>) -> Vec<Finding> {
    let mut out = Vec::new();
    for e in catalog.split(Split::Verification) {
        let id = &e.metadata.tile_id;
        let p = &e.metadata.provenance;
        if p.collected_by_dev_team == Some(true) {
            out.push(Finding::error(
                "not-independent",
                id,
                "verification tile collected by the development team",
            ));
        }
        match (&p.labeler_team, dev_team) {
            (Some(l), Some(d)) if l == d => out.push(Finding::error(
                "not-independent",
                id,
                format!("verification tile labelled by the development team {d}"),
            )),
            _ => {}
        }
        if p.collected_by_dev_team.is_none() || p.labeler_team.is_none() {
            out.push(Finding::warning(
                "provenance-missing",
                id,
                "provenance incomplete; independence cannot be confirmed",
            ));
        }
    }
    out
}

/// Sample-level results over internal test splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InternalTestReport {
    pub schema_version: u32,
    pub detector: String,
    pub splits: Vec<Split>,
    pub summary: SampleSummary,
}

/// Runs the detector over every tile of `splits` and classifies each
/// sample against its truth mask (all-clear when absent).
pub fn internal_test(
    catalog: &DatasetCatalog,
    splits: &[Split],
    spec: &DetectorSpec,
    thresholds: &Thresholds,
) -> Result<(InternalTestReport, Vec<SampleVerdict>), CampaignError> {
    let mut detector = Detector::open(spec)?;
    let mut verdicts = Vec::new();
    for e in catalog.entries.values().filter(|e| splits.contains(&e.metadata.split)) {
        let tid = &e.metadata.tile_id;
        let fmt = |source| CampaignError::Format {
            tile_id: tid.clone(),
            source,
        };
        let tile = e.load_tile().map_err(fmt)?;
        let truth = e
            .load_mask()
            .map_err(fmt)?
            .unwrap_or_else(|| FireMask::empty(e.width, e.height));
        let pred = detector.detect(&tile)?.mask;
        verdicts.push(
            classify_sample(tid, &pred, &truth, thresholds).map_err(|source| CampaignError::Metrics {
                tile_id: tid.clone(),
                source,
            })?,
        );
    }
    let report = InternalTestReport {
        schema_version: SCHEMA_VERSION,
        detector: detector.version(),
        splits: splits.to_vec(),
        summary: summarize_verdicts(&verdicts),
    };
    Ok((report, verdicts))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub schema_version: u32,
    pub dev_team: Option<String>,
    pub tiles_checked: usize,
    pub independent: bool,
    pub findings: Vec<Finding>,
}

impl IndependenceReport {
    pub fn new(catalog: &DatasetCatalog, dev_team: Option<&str>) -> Self {
        let findings = independence_check(catalog, dev_team);
        IndependenceReport {
            schema_version: SCHEMA_VERSION,
            dev_team: dev_team.map(str::to_string),
            tiles_checked: catalog.split(Split::Verification).count(),
            independent: !findings.iter().any(Finding::is_error),
            findings,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}
