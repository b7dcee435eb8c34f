//! System, ML and data safety requirements, the robustness taxonomy, and
//! the trace links between them.
//!
//! Trace links point from a derived requirement to the requirement it
//! refines: ML safety requirements trace to system safety requirements,
//! data requirements trace to ML safety requirements.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::finding::Finding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hazard {
    MissEmergency,
    FalseEmergency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSafetyRequirement {
    pub id: String,
    pub hazard: Hazard,
    pub text: String,
    pub allocated_to_ml: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MlRequirementKind {
    Performance,
    Robustness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Text(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Number(n) => Some(*n),
            ParamValue::Text(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlSafetyRequirement {
    pub id: String,
    pub kind: MlRequirementKind,
    pub text: String,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
    #[serde(default)]
    pub rationale: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataCategory {
    Relevance,
    Completeness,
    Accuracy,
    Balance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataRequirement {
    pub id: String,
    pub category: DataCategory,
    pub text: String,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
    #[serde(default)]
    pub rationale: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DimensionName {
    LandType,
    FireSize,
    FireIntensity,
    Clouds,
    TimeOfDay,
    TimeOfYear,
}

impl DimensionName {
    pub const ALL: [DimensionName; 6] = [
        DimensionName::LandType,
        DimensionName::FireSize,
        DimensionName::FireIntensity,
        DimensionName::Clouds,
        DimensionName::TimeOfDay,
        DimensionName::TimeOfYear,
    ];
}

impl fmt::Display for DimensionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessClass {
    /// Short identifier used in dataset metadata.
    pub key: String,
    /// Class wording as listed in the taxonomy table.
    pub label: String,
    pub in_context: bool,
}

impl RobustnessClass {
    /// Metadata may name a class by key or by label.
    pub fn matches(&self, name: &str) -> bool {
        self.key == name || self.label == name
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessDimension {
    pub name: DimensionName,
    pub classes: Vec<RobustnessClass>,
}

impl RobustnessDimension {
    pub fn class(&self, name: &str) -> Option<&RobustnessClass> {
        self.classes.iter().find(|c| c.matches(name))
    }

    pub fn in_context(&self) -> impl Iterator<Item = &RobustnessClass> {
        self.classes.iter().filter(|c| c.in_context)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceLink {
    pub from: String,
    pub to: String,
    #[serde(default)]
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequirementSet {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub system: Vec<SystemSafetyRequirement>,
    #[serde(default)]
    pub ml: Vec<MlSafetyRequirement>,
    #[serde(default)]
    pub data: Vec<DataRequirement>,
    #[serde(default)]
    pub dimensions: Vec<RobustnessDimension>,
    #[serde(default)]
    pub traces: Vec<TraceLink>,
}

fn default_schema_version() -> u32 {
    crate::SCHEMA_VERSION
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("unknown label: {0}")]
    UnknownLabel(String),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("duplicate requirement id `{0}`")]
    DuplicateId(String),
    #[error("trace {from} -> {to} references unknown requirement `{missing}`")]
    UnknownTraceEnd { from: String, to: String, missing: String },
    #[error("trace link from `{0}` to itself")]
    SelfLink(String),
    #[error("dimension {0} declared twice")]
    DuplicateDimension(DimensionName),
    #[error("dimension {dimension} declares class `{class}` twice")]
    DuplicateClass { dimension: DimensionName, class: String },
}

/// Which table a requirement id belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RequirementLevel {
    System,
    Ml,
    Data,
}

/// One in-context class per dimension, as class keys in dimension order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClassCombination(pub Vec<(DimensionName, String)>);

impl ClassCombination {
    pub fn get(&self, dim: DimensionName) -> Option<&str> {
        self.0.iter().find(|(d, _)| *d == dim).map(|(_, k)| k.as_str())
    }
}

impl fmt::Display for ClassCombination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.0.iter().map(|(_, k)| k.as_str()).collect();
        f.write_str(&parts.join("/"))
    }
}

/// The bundled requirement set.
pub const CANONICAL_JSON: &str = include_str!("../corpus/requirements.json");

impl RequirementSet {
    pub fn canonical() -> RequirementSet {
        RequirementSet::from_json(CANONICAL_JSON).expect("canonical requirements manifest is valid")
    }

    pub fn from_json(text: &str) -> Result<RequirementSet, LoadError> {
        let rs: RequirementSet = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            if msg.contains("unknown variant") {
                LoadError::UnknownLabel(msg)
            } else {
                LoadError::Schema(msg)
            }
        })?;
        rs.check_integrity()?;
        Ok(rs)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("requirement set serializes");
        s.push('\n');
        s
    }

    fn check_integrity(&self) -> Result<(), LoadError> {
        let mut ids = BTreeSet::new();
        let all_ids = self
            .system
            .iter()
            .map(|r| &r.id)
            .chain(self.ml.iter().map(|r| &r.id))
            .chain(self.data.iter().map(|r| &r.id));
        for id in all_ids {
            if !ids.insert(id.as_str()) {
                return Err(LoadError::DuplicateId(id.clone()));
            }
        }
        for t in &self.traces {
            if t.from == t.to {
                return Err(LoadError::SelfLink(t.from.clone()));
            }
            for end in [&t.from, &t.to] {
                if !ids.contains(end.as_str()) {
                    return Err(LoadError::UnknownTraceEnd {
                        from: t.from.clone(),
                        to: t.to.clone(),
                        missing: end.clone(),
                    });
                }
            }
        }
        let mut dims = BTreeSet::new();
        for d in &self.dimensions {
            if !dims.insert(d.name) {
                return Err(LoadError::DuplicateDimension(d.name));
            }
            let mut keys = BTreeSet::new();
            for c in &d.classes {
                if !keys.insert(c.key.as_str()) {
                    return Err(LoadError::DuplicateClass {
                        dimension: d.name,
                        class: c.key.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn level_of(&self, id: &str) -> Option<RequirementLevel> {
        if self.system.iter().any(|r| r.id == id) {
            Some(RequirementLevel::System)
        } else if self.ml.iter().any(|r| r.id == id) {
            Some(RequirementLevel::Ml)
        } else if self.data.iter().any(|r| r.id == id) {
            Some(RequirementLevel::Data)
        } else {
            None
        }
    }

    pub fn system_req(&self, id: &str) -> Option<&SystemSafetyRequirement> {
        self.system.iter().find(|r| r.id == id)
    }

    pub fn ml_req(&self, id: &str) -> Option<&MlSafetyRequirement> {
        self.ml.iter().find(|r| r.id == id)
    }

    pub fn data_req(&self, id: &str) -> Option<&DataRequirement> {
        self.data.iter().find(|r| r.id == id)
    }

    pub fn ml_param(&self, id: &str, name: &str) -> Option<f64> {
        self.ml_req(id)?.params.get(name)?.as_f64()
    }

    pub fn data_param(&self, id: &str, name: &str) -> Option<f64> {
        self.data_req(id)?.params.get(name)?.as_f64()
    }

    pub fn dimension(&self, name: DimensionName) -> Option<&RobustnessDimension> {
        self.dimensions.iter().find(|d| d.name == name)
    }

    pub fn parents_of<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.traces.iter().filter(move |t| t.from == id).map(|t| t.to.as_str())
    }

    pub fn children_of<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.traces.iter().filter(move |t| t.to == id).map(|t| t.from.as_str())
    }
}

pub fn load_requirements(path: &Path) -> Result<RequirementSet, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    RequirementSet::from_json(&text)
}

/// Checks the trace structure between the requirement levels.
pub fn validate_traceability(rs: &RequirementSet) -> Vec<Finding> {
    let mut findings = Vec::new();

    for t in &rs.traces {
        let (Some(from), Some(to)) = (rs.level_of(&t.from), rs.level_of(&t.to)) else {
            findings.push(Finding::error(
                "trace-unresolved",
                &t.from,
                format!("trace {} -> {} has an unknown end", t.from, t.to),
            ));
            continue;
        };
        match (from, to) {
            (RequirementLevel::Ml, RequirementLevel::System) => {
                if rs.system_req(&t.to).is_some_and(|s| !s.allocated_to_ml) {
                    findings.push(Finding::error(
                        "trace-to-unallocated",
                        &t.from,
                        format!(
                            "{} traces to {}, which is not allocated to the ML component",
                            t.from, t.to
                        ),
                    ));
                }
            }
            (RequirementLevel::Data, RequirementLevel::Ml) => {}
            _ => findings.push(Finding::error(
                "trace-direction",
                &t.from,
                format!("trace {} -> {} does not refine ML->system or data->ML", t.from, t.to),
            )),
        }
    }

    for m in &rs.ml {
        let has_parent = rs
            .parents_of(&m.id)
            .any(|p| rs.level_of(p) == Some(RequirementLevel::System));
        if !has_parent {
            findings.push(Finding::error(
                "ml-without-parent",
                &m.id,
                "ML safety requirement does not trace to any system safety requirement",
            ));
        }
    }

    for d in &rs.data {
        let has_parent = rs
            .parents_of(&d.id)
            .any(|p| rs.level_of(p) == Some(RequirementLevel::Ml));
        if !has_parent {
            findings.push(Finding::error(
                "data-without-parent",
                &d.id,
                "data requirement does not trace to any ML safety requirement",
            ));
        }
    }

    for s in rs.system.iter().filter(|s| s.allocated_to_ml) {
        let has_child = rs
            .children_of(&s.id)
            .any(|c| rs.level_of(c) == Some(RequirementLevel::Ml));
        if !has_child {
            findings.push(Finding::warning(
                "allocated-without-ml-child",
                &s.id,
                "allocated to the ML component but no ML safety requirement refines it",
            ));
        }
    }

    findings
}

/// Cartesian product of the in-context classes of every dimension, in
/// lexicographic order of class position within each dimension.
///
/// A dimension without in-context classes empties the product and is
/// reported as a Warning.
pub fn enumerate_in_context_combinations(rs: &RequirementSet) -> (Vec<ClassCombination>, Vec<Finding>) {
    let mut findings = Vec::new();
    let per_dim: Vec<(DimensionName, Vec<&str>)> = rs
        .dimensions
        .iter()
        .map(|d| (d.name, d.in_context().map(|c| c.key.as_str()).collect()))
        .collect();
    for (name, classes) in &per_dim {
        if classes.is_empty() {
            findings.push(Finding::warning(
                "dimension-without-context",
                name.to_string(),
                "dimension has no in-context class; no combination can be formed",
            ));
        }
    }
    if per_dim.is_empty() || !findings.is_empty() {
        return (Vec::new(), findings);
    }

    let total: usize = per_dim.iter().map(|(_, c)| c.len()).product();
    let mut out = Vec::with_capacity(total);
    // mixed-radix counter, last dimension varies fastest
    let mut idx = vec![0usize; per_dim.len()];
    for _ in 0..total {
        out.push(ClassCombination(
            per_dim
                .iter()
                .zip(&idx)
                .map(|((name, classes), &i)| (*name, classes[i].to_string()))
                .collect(),
        ));
        for pos in (0..idx.len()).rev() {
            idx[pos] += 1;
            if idx[pos] < per_dim[pos].1.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
    (out, findings)
}

/// Traceability matrix: one row per ML or data requirement, one column per
/// system or ML requirement, `x` where a trace link exists.
pub fn traceability_matrix_csv(rs: &RequirementSet) -> String {
    let columns: Vec<&str> = rs
        .system
        .iter()
        .map(|r| r.id.as_str())
        .chain(rs.ml.iter().map(|r| r.id.as_str()))
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["schema_version".to_string(), "requirement".to_string()];
    header.extend(columns.iter().map(|c| c.to_string()));
    w.write_record(&header).expect("in-memory csv");
    let rows = rs
        .ml
        .iter()
        .map(|r| r.id.as_str())
        .chain(rs.data.iter().map(|r| r.id.as_str()));
    for row in rows {
        let mut rec = vec![crate::SCHEMA_VERSION.to_string(), row.to_string()];
        for col in &columns {
            let linked = rs.traces.iter().any(|t| t.from == row && t.to == *col);
            rec.push(if linked { "x".into() } else { String::new() });
        }
        w.write_record(&rec).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8 csv")
}
