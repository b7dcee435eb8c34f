//! Safety-case assembly from a project manifest.
//!
//! `project.json` names the argument fragments, the requirement set, the
//! evidence registry and the Solution bindings, all relative to the
//! manifest. Assembly fails closed: every Solution must be bound to a
//! registered artifact whose file still matches its hash.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::data_eval::{DataEvaluationReport, Verdict};
use crate::evidence::{EvidenceArtifact, EvidenceError, EvidenceRegistry};
use crate::gsn::{merge_fragments, parse_argument, render_dot, validate_argument, ArgumentGraph, GsnError};
use crate::requirements::{
    load_requirements, traceability_matrix_csv, validate_traceability, LoadError, RequirementSet,
};
use crate::verification::{Campaign, IndependenceReport};
use crate::{Finding, SCHEMA_VERSION};

pub const REQUIRED_SLOTS: [&str; 5] = ["scoping", "requirements", "data", "learning", "verification"];
pub const OPTIONAL_SLOTS: [&str; 1] = ["deployment"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectManifest {
    #[serde(default = "schema")]
    pub schema_version: u32,
    pub name: String,
    /// Requirement set JSON; the built-in set when absent.
    #[serde(default)]
    pub requirements: Option<String>,
    /// Slot name to `.gsn` path.
    pub fragments: BTreeMap<String, String>,
    #[serde(default = "default_registry")]
    pub evidence: String,
    /// Solution id to evidence id.
    #[serde(default)]
    pub bindings: BTreeMap<String, String>,
    #[serde(default)]
    pub dev_team: Option<String>,
}

fn schema() -> u32 {
    SCHEMA_VERSION
}

fn default_registry() -> String {
    "evidence.json".into()
}

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("{path}: {message}")]
    Manifest { path: String, message: String },
    #[error("manifest has no `{0}` fragment")]
    MissingFragment(String),
    #[error("manifest names unknown fragment slot `{0}`")]
    UnknownSlot(String),
    #[error("fragment {slot} ({path}): {source}")]
    FragmentParse {
        slot: String,
        path: String,
        source: Box<GsnError>,
    },
    #[error("fragment {slot} has {} validation error(s): {}", .findings.len(), join(.findings))]
    FragmentInvalid { slot: String, findings: Vec<Finding> },
    #[error("merged argument: {0}")]
    Merge(Box<GsnError>),
    #[error("merged argument has validation errors: {}", join(.0))]
    MergedInvalid(Vec<Finding>),
    #[error("unbound solution(s): {}", .0.join(", "))]
    Unbound(Vec<String>),
    #[error("solution {solution}: {source}")]
    Evidence {
        solution: String,
        source: Box<EvidenceError>,
    },
    #[error(transparent)]
    Registry(EvidenceError),
    #[error("requirements: {0}")]
    Requirements(#[from] LoadError),
    #[error("requirement set has traceability errors: {}", join(.0))]
    RequirementsInvalid(Vec<Finding>),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn join(f: &[Finding]) -> String {
    f.iter().map(|f| f.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone)]
pub struct SafetyCaseProject {
    pub manifest_path: PathBuf,
    pub base: PathBuf,
    pub manifest: ProjectManifest,
}

impl SafetyCaseProject {
    pub fn load(manifest_path: &Path) -> Result<SafetyCaseProject, AssemblyError> {
        let err = |message: String| AssemblyError::Manifest {
            path: manifest_path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(manifest_path).map_err(|e| err(e.to_string()))?;
        let manifest: ProjectManifest = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        let base = manifest_path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."))
            .to_path_buf();
        Ok(SafetyCaseProject {
            manifest_path: manifest_path.to_path_buf(),
            base,
            manifest,
        })
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.base.join(rel)
    }

    pub fn registry_path(&self) -> PathBuf {
        self.resolve(&self.manifest.evidence)
    }

    pub fn registry(&self) -> Result<EvidenceRegistry, AssemblyError> {
        EvidenceRegistry::load(&self.registry_path()).map_err(AssemblyError::Registry)
    }

    pub fn requirements(&self) -> Result<RequirementSet, AssemblyError> {
        match &self.manifest.requirements {
            Some(p) => Ok(load_requirements(&self.resolve(p))?),
            None => Ok(RequirementSet::canonical()),
        }
    }

    pub fn save_manifest(&self) -> Result<(), AssemblyError> {
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes") + "\n";
        std::fs::write(&self.manifest_path, text).map_err(|source| AssemblyError::Io {
            path: self.manifest_path.display().to_string(),
            source,
        })
    }

    /// Parses every fragment in slot order.
    pub fn fragments(&self) -> Result<Vec<(String, ArgumentGraph)>, AssemblyError> {
        for slot in self.manifest.fragments.keys() {
            if !REQUIRED_SLOTS.contains(&slot.as_str()) && !OPTIONAL_SLOTS.contains(&slot.as_str()) {
                return Err(AssemblyError::UnknownSlot(slot.clone()));
            }
        }
        let mut out = Vec::new();
        for slot in REQUIRED_SLOTS.iter().chain(OPTIONAL_SLOTS.iter()) {
            let Some(rel) = self.manifest.fragments.get(*slot) else {
                if REQUIRED_SLOTS.contains(slot) {
                    return Err(AssemblyError::MissingFragment(slot.to_string()));
                }
                continue;
            };
            let path = self.resolve(rel);
            let src = std::fs::read_to_string(&path).map_err(|source| AssemblyError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let g = parse_argument(&src).map_err(|source| AssemblyError::FragmentParse {
                slot: slot.to_string(),
                path: rel.clone(),
                source: Box::new(source),
            })?;
            out.push((slot.to_string(), g));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvidenceVerdict {
    Supportive,
    Adverse,
    /// Content not interpreted (logs, rationale documents).
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEvidence {
    pub solution: String,
    pub artifact: EvidenceArtifact,
    pub verdict: EvidenceVerdict,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictSummary {
    pub schema_version: u32,
    pub project: String,
    pub status: String,
    pub reasons: Vec<String>,
    /// MLSR id to "met" / "not met" / "not judged".
    pub mlsr: BTreeMap<String, String>,
    /// DR id to Pass / Warning / Fail.
    pub dr: BTreeMap<String, String>,
    pub evidence: Vec<SummaryEvidence>,
    pub findings: Vec<Finding>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEvidence {
    pub solution: String,
    pub evidence_id: String,
    pub kind: String,
    pub verdict: EvidenceVerdict,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct AssembledCase {
    pub project: SafetyCaseProject,
    pub graph: ArgumentGraph,
    pub fragments: Vec<(String, ArgumentGraph)>,
    pub requirements: RequirementSet,
    pub evidence: Vec<BoundEvidence>,
    pub summary: VerdictSummary,
}

impl AssembledCase {
    pub fn assured(&self) -> bool {
        self.summary.status == "assured"
    }
}

fn met(b: bool) -> String {
    if b { "met" } else { "not met" }.to_string()
}

/// Reads typed results out of an artifact; anything unrecognised is neutral.
fn interpret(
    bytes: &[u8],
    mlsr: &mut BTreeMap<String, String>,
    dr: &mut BTreeMap<String, String>,
) -> (EvidenceVerdict, String) {
    let Ok(v) = serde_json::from_slice::<Value>(bytes) else {
        return (EvidenceVerdict::Neutral, String::new());
    };
    if let Ok(c) = serde_json::from_value::<Campaign>(v.clone()) {
        let s = &c.summary;
        mlsr.insert("MLSR1".into(), met(s.mlsr1_satisfied));
        mlsr.insert("MLSR2".into(), met(s.mlsr2_satisfied));
        mlsr.insert(
            "MLSR3".into(),
            s.mlsr3_satisfied.map(met).unwrap_or_else(|| "not judged".into()),
        );
        mlsr.insert("MLSR4".into(), met(s.mlsr4_satisfied));
        let failed = s.cases - s.passed_cases;
        return if c.all_passed() && s.mlsr4_satisfied {
            (
                EvidenceVerdict::Supportive,
                format!("{} of {} cases pass", s.passed_cases, s.cases),
            )
        } else {
            (
                EvidenceVerdict::Adverse,
                format!("{failed} of {} verification cases fail", s.cases),
            )
        };
    }
    if let Ok(r) = serde_json::from_value::<DataEvaluationReport>(v.clone()) {
        for x in &r.results {
            dr.insert(x.id.clone(), x.verdict.to_string());
        }
        let fails: Vec<_> = r
            .results
            .iter()
            .filter(|x| x.verdict == Verdict::Fail)
            .map(|x| x.id.as_str())
            .collect();
        return if fails.is_empty() {
            (
                EvidenceVerdict::Supportive,
                format!("{} data requirements evaluated", r.results.len()),
            )
        } else {
            (EvidenceVerdict::Adverse, format!("failing: {}", fails.join(", ")))
        };
    }
    if let Ok(r) = serde_json::from_value::<IndependenceReport>(v) {
        return if r.independent {
            (
                EvidenceVerdict::Supportive,
                format!("{} verification tiles independent", r.tiles_checked),
            )
        } else {
            let n = r.findings.iter().filter(|f| f.is_error()).count();
            (EvidenceVerdict::Adverse, format!("{n} independence violation(s)"))
        };
    }
    (EvidenceVerdict::Neutral, String::new())
}

pub fn assemble_case(project: &SafetyCaseProject) -> Result<AssembledCase, AssemblyError> {
    let fragments = project.fragments()?;
    for (slot, g) in &fragments {
        let errors: Vec<Finding> = validate_argument(g).into_iter().filter(Finding::is_error).collect();
        if !errors.is_empty() {
            return Err(AssemblyError::FragmentInvalid {
                slot: slot.clone(),
                findings: errors,
            });
        }
    }
    let root = &fragments[0].1;
    let others: Vec<&ArgumentGraph> = fragments[1..].iter().map(|(_, g)| g).collect();
    let graph =
        merge_fragments(&project.manifest.name, root, &others).map_err(|e| AssemblyError::Merge(Box::new(e)))?;
    let mut findings: Vec<Finding> = validate_argument(&graph);
    let errors: Vec<Finding> = findings.iter().filter(|f| f.is_error()).cloned().collect();
    if !errors.is_empty() {
        return Err(AssemblyError::MergedInvalid(errors));
    }
    findings.retain(|f| f.code != "solution-unbound");

    let requirements = project.requirements()?;
    let trace = validate_traceability(&requirements);
    let trace_errors: Vec<Finding> = trace.iter().filter(|f| f.is_error()).cloned().collect();
    if !trace_errors.is_empty() {
        return Err(AssemblyError::RequirementsInvalid(trace_errors));
    }
    findings.extend(trace);

    let registry = project.registry()?;
    let mut unbound = Vec::new();
    let mut bound: Vec<(String, String)> = Vec::new();
    for sn in graph.solutions() {
        match project.manifest.bindings.get(&sn.id).or(sn.evidence.as_ref()) {
            Some(id) => bound.push((sn.id.clone(), id.clone())),
            None => unbound.push(sn.id.clone()),
        }
    }
    if !unbound.is_empty() {
        return Err(AssemblyError::Unbound(unbound));
    }
    let solutions: BTreeSet<&str> = graph.solutions().map(|n| n.id.as_str()).collect();
    for sn in project.manifest.bindings.keys() {
        if !solutions.contains(sn.as_str()) {
            findings.push(Finding::warning(
                "binding-unused",
                sn,
                "binding names a node that is not a Solution in the assembled argument",
            ));
        }
    }

    let mut mlsr = BTreeMap::new();
    let mut dr = BTreeMap::new();
    let mut evidence = Vec::new();
    for (sn, id) in bound {
        let artifact = registry
            .verify(&project.base, &id)
            .map_err(|source| AssemblyError::Evidence {
                solution: sn.clone(),
                source: Box::new(source),
            })?
            .clone();
        let path = project.resolve(&artifact.path);
        let bytes = std::fs::read(&path).map_err(|source| AssemblyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let (verdict, note) = interpret(&bytes, &mut mlsr, &mut dr);
        evidence.push(BoundEvidence {
            solution: sn,
            artifact,
            verdict,
            note,
        });
    }

    let mut reasons = Vec::new();
    for e in &evidence {
        if e.verdict == EvidenceVerdict::Adverse {
            reasons.push(format!(
                "{} evidence {} is adverse: {}",
                e.solution, e.artifact.id, e.note
            ));
        }
    }
    for (id, v) in &mlsr {
        if v == "not judged" {
            findings.push(Finding::warning(
                "mlsr-not-judged",
                id,
                "no monthly verdict in the verification results",
            ));
        }
    }
    for (id, s) in &dr {
        if s == "Warning" {
            findings.push(Finding::warning(
                "dr-warning",
                id,
                "data requirement evaluated with a warning",
            ));
        }
    }
    let status = if reasons.is_empty() { "assured" } else { "not assured" }.to_string();
    let summary = VerdictSummary {
        schema_version: SCHEMA_VERSION,
        project: project.manifest.name.clone(),
        status,
        reasons,
        mlsr,
        dr,
        evidence: evidence
            .iter()
            .map(|e| SummaryEvidence {
                solution: e.solution.clone(),
                evidence_id: e.artifact.id.clone(),
                kind: e.artifact.kind.name().to_string(),
                verdict: e.verdict,
                note: e.note.clone(),
            })
            .collect(),
        findings,
    };
    Ok(AssembledCase {
        project: project.clone(),
        graph,
        fragments,
        requirements,
        evidence,
        summary,
    })
}

impl VerdictSummary {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Safety case: {}", self.project);
        let _ = writeln!(out, "Status: {}", self.status);
        for r in &self.reasons {
            let _ = writeln!(out, "  - {r}");
        }
        if !self.mlsr.is_empty() {
            let _ = writeln!(out, "ML safety requirements:");
            for (k, v) in &self.mlsr {
                let _ = writeln!(out, "  {k:<6} {v}");
            }
        }
        if !self.dr.is_empty() {
            let _ = writeln!(out, "Data requirements:");
            for (k, v) in &self.dr {
                let _ = writeln!(out, "  {k:<6} {v}");
            }
        }
        let _ = writeln!(out, "Evidence:");
        for e in &self.evidence {
            let _ = writeln!(
                out,
                "  {:<8} {:<22} {:<22} {:?}{}",
                e.solution,
                e.evidence_id,
                e.kind,
                e.verdict,
                if e.note.is_empty() {
                    String::new()
                } else {
                    format!(" ({})", e.note)
                }
            );
        }
        for f in &self.findings {
            let _ = writeln!(out, "{f}");
        }
        out
    }
}

fn inventory_csv(case: &AssembledCase) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "schema_version",
        "solution",
        "evidence_id",
        "kind",
        "path",
        "sha256",
        "producer",
        "verdict",
    ])
    .expect("in-memory write");
    for e in &case.evidence {
        w.write_record([
            SCHEMA_VERSION.to_string(),
            e.solution.clone(),
            e.artifact.id.clone(),
            e.artifact.kind.name().to_string(),
            e.artifact.path.clone(),
            e.artifact.sha256.clone(),
            e.artifact.producer.clone(),
            format!("{:?}", e.verdict).to_lowercase(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Writes the report bundle and returns the paths written, relative to
/// `out`.
///
/// ```text
/// merged.dot
/// fragments/<slot>.dot
/// traceability.csv
/// evidence_inventory.csv
/// summary.json
/// summary.txt
/// ```
pub fn emit_report(case: &AssembledCase, out: &Path) -> Result<Vec<String>, AssemblyError> {
    let io = |p: &Path| {
        let path = p.display().to_string();
        move |source| AssemblyError::Io { path, source }
    };
    std::fs::create_dir_all(out.join("fragments")).map_err(io(out))?;
    let mut files: Vec<(String, String)> = Vec::new();
    let dot = |g: &ArgumentGraph| render_dot(g).map_err(|e| AssemblyError::Merge(Box::new(e)));
    files.push(("merged.dot".into(), dot(&case.graph)?));
    for (slot, g) in &case.fragments {
        files.push((format!("fragments/{slot}.dot"), dot(g)?));
    }
    files.push(("traceability.csv".into(), traceability_matrix_csv(&case.requirements)));
    files.push(("evidence_inventory.csv".into(), inventory_csv(case)));
    let mut summary = serde_json::to_value(&case.summary).expect("summary serializes");
    summary["nodes"] = json!(case.graph.nodes.len());
    summary["solutions"] = json!(case.graph.solutions().count());
    files.push((
        "summary.json".into(),
        serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
    ));
    files.push(("summary.txt".into(), case.summary.to_text()));
    let mut written = Vec::new();
    for (rel, text) in files {
        let p = out.join(&rel);
        std::fs::write(&p, text).map_err(io(&p))?;
        written.push(rel);
    }
    Ok(written)
}
