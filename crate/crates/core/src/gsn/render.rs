//! Graphviz export.
//!
//! Shape mapping (version `gsn-dot/1`):
//!
//! | GSN element    | DOT                                   |
//! |----------------|---------------------------------------|
//! | Goal           | `shape=box`                           |
//! | Strategy       | `shape=parallelogram`                 |
//! | Solution       | `shape=circle`                        |
//! | Context        | `shape=box, style=rounded`            |
//! | Assumption     | `shape=ellipse, xlabel="A"`           |
//! | Justification  | `shape=ellipse, xlabel="J"`           |
//! | SupportedBy    | `arrowhead=normal` (filled)           |
//! | InContextOf    | `arrowhead=empty` (open)              |
//! | ACP on an edge | `dir=both, arrowtail=box` (black square at the source end) |
//!
//! Undeveloped elements get a trailing `<>` line in their label; away goals
//! are drawn dashed with their module name.

use super::{validate_argument, ArgumentGraph, EdgeKind, GsnError, NodeKind};
use crate::finding::count_errors;

pub const DOT_MAPPING_VERSION: &str = "gsn-dot/1";

const WRAP: usize = 36;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out
}

fn wrap(text: &str) -> Vec<String> {
    let mut lines = Vec::new();
    let mut cur = String::new();
    for word in text.split_whitespace() {
        if !cur.is_empty() && cur.chars().count() + 1 + word.chars().count() > WRAP {
            lines.push(std::mem::take(&mut cur));
        }
        if !cur.is_empty() {
            cur.push(' ');
        }
        cur.push_str(word);
    }
    if !cur.is_empty() {
        lines.push(cur);
    }
    lines
}

fn shape(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::Goal => "shape=box",
        NodeKind::Strategy => "shape=parallelogram",
        NodeKind::Solution => "shape=circle",
        NodeKind::Context => "shape=box, style=rounded",
        NodeKind::Assumption => "shape=ellipse, xlabel=\"A\"",
        NodeKind::Justification => "shape=ellipse, xlabel=\"J\"",
    }
}

/// Renders a graph that validates without Errors. Output bytes depend only
/// on the graph value.
pub fn render_dot(g: &ArgumentGraph) -> Result<String, GsnError> {
    let errors = count_errors(&validate_argument(g));
    if errors > 0 {
        return Err(GsnError::Invalid {
            graph: g.id.clone(),
            errors,
        });
    }

    let mut out = String::new();
    out.push_str(&format!("// {DOT_MAPPING_VERSION}\n"));
    out.push_str(&format!("digraph \"{}\" {{\n", escape(&g.id)));
    out.push_str("  rankdir=TB;\n");
    out.push_str("  node [fontname=\"Helvetica\", fontsize=10];\n");
    out.push_str("  edge [color=black];\n");

    for n in &g.nodes {
        let mut label = vec![n.id.clone()];
        if let Some(m) = &n.away {
            label.push(format!("[{m}]"));
        }
        label.extend(wrap(&n.statement));
        if n.undeveloped {
            label.push("<>".to_string());
        }
        let label = label.iter().map(|l| escape(l)).collect::<Vec<_>>().join("\\n");
        let mut attrs = shape(n.kind).to_string();
        if n.away.is_some() {
            attrs.push_str(", style=dashed");
        }
        out.push_str(&format!("  \"{}\" [{attrs}, label=\"{label}\"];\n", escape(&n.id)));
    }

    for e in &g.edges {
        let head = match e.kind {
            EdgeKind::SupportedBy => "arrowhead=normal",
            EdgeKind::InContextOf => "arrowhead=empty",
        };
        let acps: Vec<&str> = g
            .acps
            .iter()
            .filter(|a| a.from == e.from && a.to == e.to)
            .map(|a| a.id.as_str())
            .collect();
        let decoration = if acps.is_empty() {
            String::new()
        } else {
            format!(", dir=both, arrowtail=box, taillabel=\"{}\"", escape(&acps.join(",")))
        };
        out.push_str(&format!(
            "  \"{}\" -> \"{}\" [{head}{decoration}];\n",
            escape(&e.from),
            escape(&e.to)
        ));
    }
    out.push_str("}\n");
    Ok(out)
}
