//! Evaluation of a catalogued dataset against the data requirements.
//!
//! Each DR id is handled by a registered evaluator. A DR in the requirement
//! set without an evaluator fails with "no evaluator registered".

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::metrics::boundary_offset;
use crate::raster::io::{read_mask_expecting, FormatError};
use crate::raster::{DatasetCatalog, FireMask, Split};
use crate::requirements::{enumerate_in_context_combinations, ClassCombination, DimensionName, RequirementSet};
use crate::{Finding, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Warning,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataEvalConfig {
    /// Fraction of in-context combinations that must be present for DR4.
    pub min_coverage: f64,
    /// Smallest acceptable share for an in-context class, and for the
    /// fire / no-fire split.
    pub min_share: f64,
    /// Ground resolution the pixel-based requirements assume.
    pub expected_resolution_m_per_px: f64,
}

impl Default for DataEvalConfig {
    fn default() -> Self {
        DataEvalConfig {
            min_coverage: 1.0,
            min_share: 0.02,
            expected_resolution_m_per_px: 30.0,
        }
    }
}

/// A stored label mask paired with an audited reference extent of the fire.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelAuditPair {
    pub tile_id: String,
    pub label_mask: FireMask,
    pub reference_extent: FireMask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrResult {
    pub id: String,
    pub verdict: Verdict,
    pub summary: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violators: Vec<String>,
    #[serde(default)]
    pub metrics: Value,
}

impl DrResult {
    fn new(id: &str, verdict: Verdict, summary: impl Into<String>) -> Self {
        DrResult {
            id: id.to_string(),
            verdict,
            summary: summary.into(),
            violators: Vec::new(),
            metrics: Value::Null,
        }
    }

    fn with_violators(mut self, v: Vec<String>) -> Self {
        self.violators = v;
        self
    }

    fn with_metrics(mut self, m: Value) -> Self {
        self.metrics = m;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageTable {
    pub total: usize,
    pub covered: usize,
    pub fraction: f64,
    pub missing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassShare {
    pub dimension: DimensionName,
    pub class: String,
    pub in_context: bool,
    pub count: usize,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceTable {
    pub classes: Vec<ClassShare>,
    pub fire_tiles: usize,
    pub no_fire_tiles: usize,
    pub fire_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataEvaluationReport {
    pub schema_version: u32,
    pub dataset: String,
    pub results: Vec<DrResult>,
    pub coverage: CoverageTable,
    pub balance: BalanceTable,
    pub findings: Vec<Finding>,
}

impl DataEvaluationReport {
    pub fn result(&self, id: &str) -> Option<&DrResult> {
        self.results.iter().find(|r| r.id == id)
    }

    pub fn has_fail(&self) -> bool {
        self.results.iter().any(|r| r.verdict == Verdict::Fail)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Data evaluation: {}", self.dataset);
        for r in &self.results {
            let _ = writeln!(out, "  {:<5} {:<7} {}", r.id, r.verdict, r.summary);
            for v in r.violators.iter().take(10) {
                let _ = writeln!(out, "          - {v}");
            }
            if r.violators.len() > 10 {
                let _ = writeln!(out, "          ... {} more", r.violators.len() - 10);
            }
        }
        let _ = writeln!(
            out,
            "Combination coverage: {}/{} ({:.1}%)",
            self.coverage.covered,
            self.coverage.total,
            100.0 * self.coverage.fraction
        );
        let _ = writeln!(
            out,
            "Fire / no-fire tiles: {} / {} (fire share {:.3})",
            self.balance.fire_tiles, self.balance.no_fire_tiles, self.balance.fire_share
        );
        for f in &self.findings {
            let _ = writeln!(out, "{f}");
        }
        out
    }
}

struct Ctx<'a> {
    catalog: &'a DatasetCatalog,
    rs: &'a RequirementSet,
    combos: &'a [ClassCombination],
    audit: &'a [LabelAuditPair],
    cfg: &'a DataEvalConfig,
}

type Evaluator = fn(&str, &Ctx) -> DrResult;

fn registry() -> BTreeMap<&'static str, Evaluator> {
    BTreeMap::from([
        ("DR1", dr1_land_type as Evaluator),
        ("DR2", dr2_format),
        ("DR3", dr3_geometry),
        ("DR4", dr4_combinations),
        ("DR5", dr5_fire_presence),
        ("DR6", dr6_contains_fire),
        ("DR7", dr7_oversize),
        ("DR8", dr8_labelled),
        ("DR9", dr9_offset),
        ("DR10", dr10_balance),
    ])
}

pub fn registered_evaluators() -> Vec<&'static str> {
    registry().into_keys().collect()
}

fn dr1_land_type(id: &str, cx: &Ctx) -> DrResult {
    let land = cx.rs.dimension(DimensionName::LandType);
    let mut bad = Vec::new();
    for (tid, e) in &cx.catalog.entries {
        match e.metadata.class(DimensionName::LandType) {
            None => bad.push(format!("{tid}: no land type")),
            Some(name) => {
                let in_ctx = land.and_then(|d| d.class(name)).map(|c| c.in_context).unwrap_or(false);
                if !in_ctx {
                    bad.push(format!("{tid}: {name}"));
                }
            }
        }
    }
    if bad.is_empty() {
        DrResult::new(id, Verdict::Pass, "all samples show an in-context land type")
    } else {
        DrResult::new(
            id,
            Verdict::Fail,
            format!("{} samples outside the specified land types", bad.len()),
        )
        .with_violators(bad)
    }
}

fn dr2_format(id: &str, cx: &Ctx) -> DrResult {
    let want_w = cx.rs.data_param(id, "tile_width_px").unwrap_or(48.0) as usize;
    let want_h = cx.rs.data_param(id, "tile_height_px").unwrap_or(48.0) as usize;
    let want_b = cx.rs.data_param(id, "bands").unwrap_or(3.0) as u32;
    let mut bad = Vec::new();
    let mut res_mismatch = Vec::new();
    for (tid, e) in &cx.catalog.entries {
        if e.width != want_w || e.height != want_h || e.bands != want_b {
            bad.push(format!("{tid}: {}x{}x{}", e.width, e.height, e.bands));
        }
        if let Some(r) = e.metadata.ground_resolution_m_per_px {
            if (r - cx.cfg.expected_resolution_m_per_px).abs() > 1e-9 {
                res_mismatch.push(format!("{tid}: {r} m/px"));
            }
        }
    }
    let metrics =
        json!({"expected": format!("{want_w}x{want_h}x{want_b}"), "resolution_mismatches": res_mismatch.len()});
    if !bad.is_empty() {
        DrResult::new(
            id,
            Verdict::Fail,
            format!("{} samples not {want_w}x{want_h}x{want_b}", bad.len()),
        )
        .with_violators(bad)
        .with_metrics(metrics)
    } else if !res_mismatch.is_empty() {
        DrResult::new(
            id,
            Verdict::Warning,
            format!(
                "{} samples at a ground resolution other than {} m/px; pixel bounds assume that resolution",
                res_mismatch.len(),
                cx.cfg.expected_resolution_m_per_px
            ),
        )
        .with_violators(res_mismatch)
        .with_metrics(metrics)
    } else {
        DrResult::new(id, Verdict::Pass, format!("all samples {want_w}x{want_h}x{want_b}")).with_metrics(metrics)
    }
}

fn dr3_geometry(id: &str, cx: &Ctx) -> DrResult {
    let mut oblique = Vec::new();
    let mut unknown = Vec::new();
    for (tid, e) in &cx.catalog.entries {
        match e.metadata.nadir_representative {
            Some(true) => {}
            Some(false) => oblique.push(tid.clone()),
            None => unknown.push(tid.clone()),
        }
    }
    if !oblique.is_empty() {
        DrResult::new(
            id,
            Verdict::Fail,
            format!(
                "{} samples flagged with unrepresentative sensor geometry",
                oblique.len()
            ),
        )
        .with_violators(oblique)
    } else if !unknown.is_empty() {
        DrResult::new(
            id,
            Verdict::Warning,
            format!("{} samples lack a sensor-geometry attestation", unknown.len()),
        )
        .with_violators(unknown)
    } else {
        DrResult::new(
            id,
            Verdict::Pass,
            "all samples attested as representative sensor geometry",
        )
    }
}

/// Distinct in-context class tuples present in the catalog.
pub fn covered_combinations(catalog: &DatasetCatalog, rs: &RequirementSet) -> BTreeSet<Vec<String>> {
    let mut out = BTreeSet::new();
    'tiles: for e in catalog.entries.values() {
        let mut key = Vec::with_capacity(rs.dimensions.len());
        for d in &rs.dimensions {
            let Some(c) = e.metadata.class(d.name).and_then(|n| d.class(n)) else {
                continue 'tiles;
            };
            if !c.in_context {
                continue 'tiles;
            }
            key.push(c.key.clone());
        }
        out.insert(key);
    }
    out
}

fn combo_key(c: &ClassCombination, rs: &RequirementSet) -> Vec<String> {
    rs.dimensions
        .iter()
        .map(|d| {
            let name = c.get(d.name).unwrap_or_default();
            d.class(name).map(|k| k.key.clone()).unwrap_or_else(|| name.to_string())
        })
        .collect()
}

fn coverage(cx: &Ctx) -> CoverageTable {
    let present = covered_combinations(cx.catalog, cx.rs);
    let mut missing = Vec::new();
    let mut covered = 0;
    for c in cx.combos {
        if present.contains(&combo_key(c, cx.rs)) {
            covered += 1;
        } else {
            missing.push(c.to_string());
        }
    }
    let total = cx.combos.len();
    CoverageTable {
        total,
        covered,
        fraction: if total == 0 { 1.0 } else { covered as f64 / total as f64 },
        missing,
    }
}

fn dr4_combinations(id: &str, cx: &Ctx) -> DrResult {
    let cov = coverage(cx);
    let verdict = if cov.total > 0 && cov.fraction + 1e-12 >= cx.cfg.min_coverage {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    DrResult::new(
        id,
        verdict,
        format!(
            "{}/{} in-context combinations present (required {:.1}%)",
            cov.covered,
            cov.total,
            100.0 * cx.cfg.min_coverage
        ),
    )
    .with_metrics(json!({"covered": cov.covered, "total": cov.total, "missing": cov.missing.len()}))
}

fn dr5_fire_presence(id: &str, cx: &Ctx) -> DrResult {
    let mut per_split: BTreeMap<Split, (usize, usize)> = BTreeMap::new();
    for e in cx.catalog.entries.values() {
        let slot = per_split.entry(e.metadata.split).or_default();
        if e.metadata.has_fire {
            slot.0 += 1;
        } else {
            slot.1 += 1;
        }
    }
    if per_split.is_empty() {
        return DrResult::new(id, Verdict::Fail, "dataset is empty");
    }
    let bad: Vec<String> = per_split
        .iter()
        .filter(|(_, (f, n))| *f == 0 || *n == 0)
        .map(|(s, (f, n))| format!("{s:?}: {f} fire / {n} no-fire"))
        .collect();
    let metrics = Value::Object(
        per_split
            .iter()
            .map(|(s, (f, n))| (format!("{s:?}"), json!({"fire": f, "no_fire": n})))
            .collect(),
    );
    if bad.is_empty() {
        DrResult::new(id, Verdict::Pass, "every split holds fire and no-fire samples").with_metrics(metrics)
    } else {
        DrResult::new(
            id,
            Verdict::Fail,
            format!("{} splits lack fire or no-fire samples", bad.len()),
        )
        .with_violators(bad)
        .with_metrics(metrics)
    }
}

fn accuracy(id: &str, cx: &Ctx, what: &str, mut check: impl FnMut(&LabelAuditPair) -> Option<String>) -> DrResult {
    if cx.audit.is_empty() {
        return DrResult::new(
            id,
            Verdict::Warning,
            "no audited labels supplied; accuracy unverifiable",
        );
    }
    let bad: Vec<String> = cx.audit.iter().filter_map(&mut check).collect();
    let n = cx.audit.len();
    if bad.is_empty() {
        DrResult::new(id, Verdict::Pass, format!("{n} audited labels {what}")).with_metrics(json!({"audited": n}))
    } else {
        DrResult::new(
            id,
            Verdict::Fail,
            format!("{} of {n} audited labels violate: {what}", bad.len()),
        )
        .with_violators(bad)
        .with_metrics(json!({"audited": n}))
    }
}

fn max_px(id: &str, cx: &Ctx) -> f64 {
    cx.rs.data_param(id, "max_px").unwrap_or(6.0)
}

fn dr6_contains_fire(id: &str, cx: &Ctx) -> DrResult {
    accuracy(id, cx, "include the whole fire", |p| {
        (!p.reference_extent.is_subset_of(&p.label_mask)).then(|| p.tile_id.clone())
    })
}

/// Per-axis growth `(rows, cols)` of the label bounding box over the
/// reference bounding box.
pub fn bbox_excess(label: &FireMask, reference: &FireMask) -> Option<(i64, i64)> {
    let (lr0, lc0, lr1, lc1) = label.bounding_box()?;
    let span = |a: usize, b: usize| (b - a + 1) as i64;
    match reference.bounding_box() {
        Some((rr0, rc0, rr1, rc1)) => Some((span(lr0, lr1) - span(rr0, rr1), span(lc0, lc1) - span(rc0, rc1))),
        None => Some((span(lr0, lr1), span(lc0, lc1))),
    }
}

fn dr7_oversize(id: &str, cx: &Ctx) -> DrResult {
    let limit = max_px(id, cx) as i64;
    accuracy(
        id,
        cx,
        &format!("stay within {limit} px of the minimal fire box"),
        |p| {
            let (dr, dc) = bbox_excess(&p.label_mask, &p.reference_extent)?;
            (dr > limit || dc > limit).then(|| format!("{}: +{dr} rows, +{dc} cols", p.tile_id))
        },
    )
}

fn dr8_labelled(id: &str, cx: &Ctx) -> DrResult {
    accuracy(id, cx, "mark fire wherever fire is present", |p| {
        (p.reference_extent.has_fire() && !p.label_mask.has_fire()).then(|| p.tile_id.clone())
    })
}

fn dr9_offset(id: &str, cx: &Ctx) -> DrResult {
    let limit = max_px(id, cx);
    accuracy(id, cx, &format!("lie less than {limit} px outside the fire"), |p| {
        if !p.label_mask.has_fire() {
            return None;
        }
        if !p.reference_extent.has_fire() {
            return Some(format!("{}: fire labelled where none exists", p.tile_id));
        }
        let d = boundary_offset(&p.label_mask, &p.reference_extent).ok()?;
        (d >= limit).then(|| format!("{}: {d:.2} px", p.tile_id))
    })
}

fn balance(cx: &Ctx) -> BalanceTable {
    let n = cx.catalog.len();
    let share = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    let mut classes = Vec::new();
    for d in &cx.rs.dimensions {
        for c in &d.classes {
            let count = cx
                .catalog
                .entries
                .values()
                .filter(|e| e.metadata.class(d.name).map(|x| c.matches(x)).unwrap_or(false))
                .count();
            classes.push(ClassShare {
                dimension: d.name,
                class: c.key.clone(),
                in_context: c.in_context,
                count,
                share: share(count),
            });
        }
    }
    let fire = cx.catalog.entries.values().filter(|e| e.metadata.has_fire).count();
    BalanceTable {
        classes,
        fire_tiles: fire,
        no_fire_tiles: n - fire,
        fire_share: share(fire),
    }
}

fn dr10_balance(id: &str, cx: &Ctx) -> DrResult {
    let b = balance(cx);
    let zero: Vec<String> = b
        .classes
        .iter()
        .filter(|c| c.in_context && c.count == 0)
        .map(|c| format!("{}: {}", c.dimension, c.class))
        .collect();
    let mut thin: Vec<String> = b
        .classes
        .iter()
        .filter(|c| c.in_context && c.count > 0 && c.share < cx.cfg.min_share)
        .map(|c| format!("{}: {} share {:.4}", c.dimension, c.class, c.share))
        .collect();
    let minority = b.fire_share.min(1.0 - b.fire_share);
    if !cx.catalog.is_empty() && minority < cx.cfg.min_share {
        thin.push(format!("fire/no-fire imbalance: fire share {:.4}", b.fire_share));
    }
    let metrics = json!({"fire_share": b.fire_share, "min_share": cx.cfg.min_share});
    if !zero.is_empty() {
        DrResult::new(
            id,
            Verdict::Fail,
            format!("{} in-context classes have no samples", zero.len()),
        )
        .with_violators(zero.into_iter().chain(thin).collect())
        .with_metrics(metrics)
    } else if !thin.is_empty() {
        DrResult::new(
            id,
            Verdict::Warning,
            format!("{} shares below {}", thin.len(), cx.cfg.min_share),
        )
        .with_violators(thin)
        .with_metrics(metrics)
    } else {
        DrResult::new(
            id,
            Verdict::Pass,
            "every in-context class represented above the minimum share",
        )
        .with_metrics(metrics)
    }
}

pub fn evaluate_dataset(
    catalog: &DatasetCatalog,
    rs: &RequirementSet,
    audit: &[LabelAuditPair],
    cfg: &DataEvalConfig,
) -> DataEvaluationReport {
    let (combos, mut findings) = enumerate_in_context_combinations(rs);
    let cx = Ctx {
        catalog,
        rs,
        combos: &combos,
        audit,
        cfg,
    };
    let reg = registry();
    let results: Vec<DrResult> = rs
        .data
        .iter()
        .map(|dr| match reg.get(dr.id.as_str()) {
            Some(eval) => eval(&dr.id, &cx),
            None => DrResult::new(&dr.id, Verdict::Fail, "no evaluator registered"),
        })
        .collect();
    for r in &results {
        match r.verdict {
            Verdict::Fail => findings.push(Finding::error("data-requirement", &r.id, &r.summary)),
            Verdict::Warning => findings.push(Finding::warning("data-requirement", &r.id, &r.summary)),
            Verdict::Pass => {}
        }
    }
    DataEvaluationReport {
        schema_version: SCHEMA_VERSION,
        dataset: catalog.root.display().to_string(),
        coverage: coverage(&cx),
        balance: balance(&cx),
        results,
        findings,
    }
}

/// Audit references live in `<dataset>/audit/<tile_id>.fmk`; the label is
/// the tile's stored truth mask.
pub fn load_audit_pairs(catalog: &DatasetCatalog) -> Result<Vec<LabelAuditPair>, FormatError> {
    let dir = catalog.root.join("audit");
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut ids: Vec<String> = fs::read_dir(&dir)
        .map_err(|source| FormatError::Io {
            path: dir.display().to_string(),
            source,
        })?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let p = e.path();
            (p.extension().and_then(|x| x.to_str()) == Some("fmk"))
                .then(|| p.file_stem().and_then(|s| s.to_str()).map(str::to_string))
                .flatten()
        })
        .collect();
    ids.sort();
    let mut out = Vec::new();
    for id in ids {
        let entry = catalog.get(&id).ok_or_else(|| FormatError::Io {
            path: dir.join(format!("{id}.fmk")).display().to_string(),
            source: std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "audit reference for a tile not in the catalog",
            ),
        })?;
        let dims = (entry.width, entry.height);
        let label = match entry.load_mask()? {
            Some(m) => m,
            None => FireMask::empty(dims.0, dims.1),
        };
        let reference = read_mask_expecting(&dir.join(format!("{id}.fmk")), dims)?;
        out.push(LabelAuditPair {
            tile_id: id,
            label_mask: label,
            reference_extent: reference,
        });
    }
    Ok(out)
}

pub fn write_report(report: &DataEvaluationReport, json_path: &Path, text_path: &Path) -> std::io::Result<()> {
    fs::write(json_path, report.to_json())?;
    fs::write(text_path, report.to_text())
}
