//! End-to-end steps shared by the command-line tool and the demo project.
//! Each step reads its inputs, writes its artifacts into an output
//! directory and returns the typed result.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{AssemblyError, ProjectManifest, SafetyCaseProject};
use crate::corpus;
use crate::data_eval::{evaluate_dataset, load_audit_pairs, DataEvalConfig, DataEvaluationReport};
use crate::detector::{DetectorError, DetectorSpec};
use crate::evidence::{EvidenceError, EvidenceKind, EvidenceRegistry};
use crate::metrics::{results_csv, Thresholds};
use crate::passsim::{
    frames_per_month, run_scenario, ConstellationConfig, FireEvent, OutcomeModel, RegionOfInterest, Scenario, SimError,
    SimulationResult,
};
use crate::raster::io::FormatError;
use crate::raster::{catalog_dataset, CatalogError, DatasetCatalog, Split};
use crate::requirements::RequirementSet;
use crate::synthetic::{generate_dataset, SynthError, SyntheticConfig, DEV_TEAM};
use crate::verification::{
    build_case_matrix, internal_test, run_campaign, Campaign, CampaignConfig, CampaignError, CaseMatrix,
    IndependenceReport, InternalTestReport,
};
use crate::SCHEMA_VERSION;

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Campaign(#[from] CampaignError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Synthetic(#[from] SynthError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
}

fn write(path: &Path, text: impl AsRef<[u8]>) -> Result<(), WorkflowError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| WorkflowError::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| WorkflowError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, WorkflowError> {
    let text = std::fs::read_to_string(path).map_err(|source| WorkflowError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| WorkflowError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Reads a detector spec; relative mask paths and working directories are
/// taken relative to the spec file.
pub fn load_detector_spec(path: &Path) -> Result<DetectorSpec, WorkflowError> {
    let spec: DetectorSpec = load_json(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let spec = spec.resolve_paths(base);
    spec.validate()?;
    Ok(spec)
}

/// Writes `data_eval.json` and `data_eval.txt`.
pub fn run_data_eval(
    dataset: &Path,
    rs: &RequirementSet,
    cfg: &DataEvalConfig,
    out: &Path,
) -> Result<DataEvaluationReport, WorkflowError> {
    let catalog = catalog_dataset(dataset, rs)?;
    let audit = load_audit_pairs(&catalog)?;
    let report = evaluate_dataset(&catalog, rs, &audit, cfg);
    write(&out.join("data_eval.json"), report.to_json())?;
    write(&out.join("data_eval.txt"), report.to_text())?;
    Ok(report)
}

/// Writes `internal_test.json` and the per-sample `internal_test.csv`.
pub fn run_internal_test(
    dataset: &Path,
    rs: &RequirementSet,
    spec: &DetectorSpec,
    out: &Path,
) -> Result<InternalTestReport, WorkflowError> {
    let catalog = catalog_dataset(dataset, rs)?;
    let (report, verdicts) = internal_test(
        &catalog,
        &[Split::InternalTest1, Split::InternalTest2],
        spec,
        &Thresholds::default(),
    )?;
    write(&out.join("internal_test.json"), pretty(&report))?;
    write(&out.join("internal_test.csv"), results_csv(&verdicts))?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct VerificationOutputs {
    pub matrix: CaseMatrix,
    pub campaign: Campaign,
    pub independence: IndependenceReport,
}

/// Writes `case_matrix.json`, `campaign.json`, `campaign.csv`,
/// `campaign.txt` and `independence.json`.
pub fn run_verification(
    dataset: &Path,
    rs: &RequirementSet,
    spec: &DetectorSpec,
    cfg: &CampaignConfig,
    dev_team: Option<&str>,
    out: &Path,
) -> Result<VerificationOutputs, WorkflowError> {
    let catalog: DatasetCatalog = catalog_dataset(dataset, rs)?;
    let matrix = build_case_matrix(&catalog, rs)?;
    let campaign = run_campaign(&catalog, &matrix, spec, rs, cfg)?;
    let independence = IndependenceReport::new(&catalog, dev_team);
    write(&out.join("case_matrix.json"), pretty(&matrix))?;
    write(&out.join("campaign.json"), campaign.to_json())?;
    write(&out.join("campaign.csv"), campaign.results_csv())?;
    write(&out.join("campaign.txt"), campaign.findings_text())?;
    write(&out.join("independence.json"), independence.to_json())?;
    Ok(VerificationOutputs {
        matrix,
        campaign,
        independence,
    })
}

/// Writes `passlog.jsonl`, `alerts.json` and `pass_summary.csv`.
pub fn run_simulation(scenario: &Scenario, out: &Path) -> Result<SimulationResult, WorkflowError> {
    let result = run_scenario(scenario)?;
    write(&out.join("passlog.jsonl"), result.log_jsonl())?;
    write(&out.join("alerts.json"), result.alerts_json())?;
    let mut csv = result.summary(scenario.fires.len()).to_csv();
    let fpm = frames_per_month(&scenario.constellation, &scenario.roi)?;
    let _ = writeln!(
        csv,
        "# frames_per_month = (43200 / revisit_min) * ceil(roi_length_km / frame_length_km) = {fpm:.3}"
    );
    write(&out.join("pass_summary.csv"), csv)?;
    Ok(result)
}

pub fn demo_scenario(seed: u64) -> Scenario {
    let roi = RegionOfInterest::new(19.6, 325.0);
    let fires = (0..12)
        .map(|i| FireEvent {
            x_km: 4.0 + (i % 4) as f64 * 4.0,
            y_km: 10.0 + i as f64 * 26.0,
            start_time_min: i as f64 * 37.0,
            observable: true,
        })
        .collect();
    Scenario {
        schema_version: SCHEMA_VERSION,
        constellation: ConstellationConfig::default(),
        roi,
        fires,
        outcome: OutcomeModel {
            detection_probability: 0.95,
            fp_probability_per_frame: 0.0005,
            processing_latency_min: 5.0,
        },
        seed,
        duration_min: 1440.0,
        first_pass_min: 0.0,
        altitude_km: Some(450.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DemoDetector {
    /// The spectral threshold baseline.
    Baseline,
    /// A fixture detector replaying the truth masks.
    Truth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoConfig {
    pub synthetic: SyntheticConfig,
    pub detector: DemoDetector,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            synthetic: SyntheticConfig::default(),
            detector: DemoDetector::Baseline,
        }
    }
}

fn development_log(catalog: &DatasetCatalog, spec: &DetectorSpec, report: &InternalTestReport) -> String {
    let mut out = String::from("# Model development log\n\n");
    let _ = writeln!(out, "Detector: {}\n", report.detector);
    let _ = writeln!(
        out,
        "Specification:\n\n```json\n{}\n```\n",
        serde_json::to_string_pretty(spec).expect("spec")
    );
    let _ = writeln!(out, "## Data\n");
    for (split, n) in catalog.counts_per_split() {
        let _ = writeln!(out, "- {split:?}: {n} tiles");
    }
    let s = &report.summary;
    let _ = writeln!(out, "\n## Internal test\n");
    let _ = writeln!(
        out,
        "- {} samples, {} false negatives ({:.2}%), {} false positives ({:.2}%), mean IoU {:.4}",
        s.samples, s.false_negatives, s.fn_pct, s.false_positives, s.fp_pct, s.mean_iou
    );
    out.push_str("\n## Decisions\n\n- Thresholds fixed before the verification split was inspected.\n");
    out
}

/// Builds a complete project under `dir`: dataset, fragments, requirement
/// set, detector spec, pass scenario, every pipeline output, registered
/// evidence and Solution bindings. Returns the manifest path.
pub fn init_demo(dir: &Path, cfg: &DemoConfig) -> Result<PathBuf, WorkflowError> {
    let rs = RequirementSet::canonical();
    let dataset = dir.join("dataset");
    generate_dataset(&dataset, &rs, &cfg.synthetic)?;
    let catalog = catalog_dataset(&dataset, &rs)?;

    let mut fragments = BTreeMap::new();
    for slot in crate::assembly::REQUIRED_SLOTS {
        let rel = format!("gsn/{slot}.gsn");
        write(&dir.join(&rel), corpus::fragment(slot).expect("corpus slot"))?;
        fragments.insert(slot.to_string(), rel);
    }
    write(&dir.join("requirements.json"), rs.to_json())?;

    let spec = match cfg.detector {
        DemoDetector::Baseline => DetectorSpec::baseline(),
        DemoDetector::Truth => {
            write(
                &dir.join("fixtures/clear.fmk"),
                crate::raster::io::encode_mask(&crate::raster::FireMask::empty(48, 48)),
            )?;
            let masks = catalog
                .entries
                .iter()
                .map(|(k, e)| {
                    let rel = match &e.mask_path {
                        Some(_) => format!("dataset/{k}.fmk"),
                        None => "fixtures/clear.fmk".to_string(),
                    };
                    (k.clone(), PathBuf::from(rel))
                })
                .collect();
            DetectorSpec::Fixture { masks }
        }
    };
    write(&dir.join("detector.json"), pretty(&spec))?;
    let spec = load_detector_spec(&dir.join("detector.json"))?;
    let scenario = demo_scenario(cfg.synthetic.seed);
    write(&dir.join("scenario.json"), pretty(&scenario))?;

    let out = dir.join("out");
    run_data_eval(&dataset, &rs, &DataEvalConfig::default(), &out)?;
    let internal = run_internal_test(&dataset, &rs, &spec, &out)?;
    write(
        &dir.join("docs/development_log.md"),
        development_log(&catalog, &spec, &internal),
    )?;
    let campaign_cfg = CampaignConfig {
        frames_per_month: Some(frames_per_month(&scenario.constellation, &scenario.roi)?),
        ..CampaignConfig::from_requirements(&rs)
    };
    write(&dir.join("campaign_config.json"), pretty(&campaign_cfg))?;
    run_verification(&dataset, &rs, &spec, &campaign_cfg, Some(DEV_TEAM), &out)?;
    run_simulation(&scenario, &out)?;

    let mut registry = EvidenceRegistry::default();
    let mut bindings = BTreeMap::new();
    let mut reg = |rel: &str, kind: EvidenceKind, solutions: &[&str]| -> Result<(), WorkflowError> {
        let a = registry.register(dir, Path::new(rel), kind, "firecase-demo")?;
        for sn in solutions {
            bindings.insert(sn.to_string(), a.id.clone());
        }
        Ok(())
    };
    reg(
        "requirements.json",
        EvidenceKind::RequirementsRationale,
        &["Sn2.1", "Sn3.1"],
    )?;
    reg("out/data_eval.json", EvidenceKind::DataEvaluationReport, &["Sn3.2"])?;
    reg("out/internal_test.json", EvidenceKind::InternalTestResults, &["Sn4.1"])?;
    reg("docs/development_log.md", EvidenceKind::DevelopmentLog, &["Sn4.2"])?;
    reg("out/independence.json", EvidenceKind::VerificationResults, &["Sn5.1"])?;
    reg("out/campaign.json", EvidenceKind::VerificationResults, &["Sn5.2"])?;
    reg("out/case_matrix.json", EvidenceKind::VerificationResults, &["Sn5.3"])?;
    reg("out/passlog.jsonl", EvidenceKind::PassLog, &[])?;
    registry.save(&dir.join("evidence.json"))?;

    let manifest = ProjectManifest {
        schema_version: SCHEMA_VERSION,
        name: "wildfire-ml-safety-case".into(),
        requirements: Some("requirements.json".into()),
        fragments,
        evidence: "evidence.json".into(),
        bindings,
        dev_team: Some(DEV_TEAM.into()),
    };
    let path = dir.join("project.json");
    SafetyCaseProject {
        manifest_path: path.clone(),
        base: dir.to_path_buf(),
        manifest,
    }
    .save_manifest()?;
    Ok(path)
}
