//! Argument pattern instantiation: `{placeholder}` substitution in node
//! statements.

use std::collections::BTreeMap;

use super::{ArgumentGraph, GsnError, NodeKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Binding {
    Text(String),
    /// Evidence artifact id; only valid inside a Solution statement, where
    /// it is also recorded on the node.
    Evidence(String),
}

impl Binding {
    fn text(&self) -> &str {
        match self {
            Binding::Text(t) | Binding::Evidence(t) => t,
        }
    }
}

fn is_placeholder_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

/// Splits a statement into literal text and placeholder names.
fn placeholders(statement: &str) -> Vec<(usize, usize, &str)> {
    let mut out = Vec::new();
    let bytes = statement.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            if let Some(rel) = statement[i + 1..].find('}') {
                let name = &statement[i + 1..i + 1 + rel];
                if !name.is_empty() && name.chars().all(is_placeholder_char) {
                    out.push((i, i + rel + 2, name));
                    i += rel + 2;
                    continue;
                }
            }
        }
        i += 1;
    }
    out
}

/// Returns a copy of `template` with every placeholder substituted.
pub fn instantiate_pattern(
    template: &ArgumentGraph,
    bindings: &BTreeMap<String, Binding>,
) -> Result<ArgumentGraph, GsnError> {
    let mut g = template.clone();
    for node in &mut g.nodes {
        let spots = placeholders(&node.statement);
        if spots.is_empty() {
            continue;
        }
        let mut out = String::with_capacity(node.statement.len());
        let mut last = 0;
        for (start, end, name) in spots {
            let binding = bindings.get(name).ok_or_else(|| GsnError::MissingBinding {
                placeholder: name.to_string(),
                node: node.id.clone(),
            })?;
            if let Binding::Evidence(id) = binding {
                if node.kind != NodeKind::Solution {
                    return Err(GsnError::EvidenceOnNonSolution {
                        placeholder: name.to_string(),
                        node: node.id.clone(),
                    });
                }
                node.evidence = Some(id.clone());
            }
            out.push_str(&node.statement[last..start]);
            out.push_str(binding.text());
            last = end;
        }
        out.push_str(&node.statement[last..]);
        node.statement = out;
    }
    Ok(g)
}
