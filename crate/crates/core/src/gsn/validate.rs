//! Well-formedness rules for argument graphs.

use std::collections::{BTreeSet, HashMap};

use super::{parse_argument, ArgumentGraph, EdgeKind, GsnError, NodeKind};
use crate::finding::Finding;

/// Structural validation. Pure and order-stable: findings follow node,
/// then edge declaration order.
pub fn validate_argument(g: &ArgumentGraph) -> Vec<Finding> {
    validate_inner(g, None)
}

/// Structural validation plus a warning for every Solution that is neither
/// carrying an `evidence` attribute nor listed in `bound`.
pub fn validate_with_bindings(g: &ArgumentGraph, bound: &BTreeSet<String>) -> Vec<Finding> {
    validate_inner(g, Some(bound))
}

/// Parses and validates in one step, reporting a parse failure as an
/// Error finding instead of a `Result`.
pub fn check_source(source: &str) -> Vec<Finding> {
    match parse_argument(source) {
        Ok(g) => validate_argument(&g),
        Err(e) => vec![parse_finding(&e)],
    }
}

fn parse_finding(e: &GsnError) -> Finding {
    let subject = match e {
        GsnError::UnknownNode { id, .. } | GsnError::DuplicateId { id, .. } => id.clone(),
        GsnError::AcpWithoutEdge { acp, .. } => acp.clone(),
        _ => String::from("<source>"),
    };
    Finding::error("parse", subject, e.to_string())
}

fn validate_inner(g: &ArgumentGraph, bound: Option<&BTreeSet<String>>) -> Vec<Finding> {
    let mut findings = Vec::new();
    let mut kinds: HashMap<&str, NodeKind> = HashMap::new();

    for n in &g.nodes {
        if n.id.is_empty() {
            findings.push(Finding::error("empty-id", "", "node with empty id"));
        }
        if kinds.insert(n.id.as_str(), n.kind).is_some() {
            findings.push(Finding::error("duplicate-id", &n.id, "node id declared more than once"));
        }
        if n.undeveloped && !n.kind.may_be_undeveloped() {
            findings.push(Finding::error(
                "undeveloped-kind",
                &n.id,
                format!("a {} cannot be marked undeveloped", n.kind),
            ));
        }
    }

    match g.root.as_deref() {
        None => findings.push(Finding::error("root-missing", &g.id, "argument has no root goal")),
        Some(r) => match kinds.get(r) {
            None => findings.push(Finding::error("root-missing", r, "root is not a node of the argument")),
            Some(NodeKind::Goal) => {
                if g.parents(r, EdgeKind::SupportedBy).next().is_some() {
                    findings.push(Finding::error(
                        "root-supported",
                        r,
                        "root goal is the target of a supported-by edge",
                    ));
                }
            }
            Some(k) => findings.push(Finding::error("root-kind", r, format!("root is a {k}, not a Goal"))),
        },
    }

    for n in &g.nodes {
        let supported = g.children(&n.id, EdgeKind::SupportedBy).next().is_some();
        match n.kind {
            NodeKind::Goal if !supported && !n.undeveloped && n.away.is_none() => {
                findings.push(Finding::warning(
                    "goal-unsupported",
                    &n.id,
                    "goal has no supporting argument and is not marked undeveloped",
                ));
            }
            NodeKind::Strategy if !supported && !n.undeveloped => {
                findings.push(Finding::warning(
                    "strategy-unsupported",
                    &n.id,
                    "strategy has no sub-goals and is not marked undeveloped",
                ));
            }
            NodeKind::Solution => {
                if let Some(bound) = bound {
                    if n.evidence.is_none() && !bound.contains(&n.id) {
                        findings.push(Finding::warning(
                            "solution-unbound",
                            &n.id,
                            "solution has no bound evidence artifact",
                        ));
                    }
                }
            }
            _ => {}
        }
    }

    for e in &g.edges {
        let (Some(&from), Some(&to)) = (kinds.get(e.from.as_str()), kinds.get(e.to.as_str())) else {
            let missing = if kinds.contains_key(e.from.as_str()) {
                &e.to
            } else {
                &e.from
            };
            findings.push(Finding::error(
                "dangling-edge",
                missing,
                format!("edge {} -> {} references an unknown node", e.from, e.to),
            ));
            continue;
        };
        let source_ok = matches!(from, NodeKind::Goal | NodeKind::Strategy);
        let (src_code, dst_code, target_ok, label) = match e.kind {
            EdgeKind::SupportedBy => (
                "support-source-kind",
                "support-target-kind",
                matches!(to, NodeKind::Goal | NodeKind::Strategy | NodeKind::Solution),
                "supported-by",
            ),
            EdgeKind::InContextOf => (
                "context-source-kind",
                "context-target-kind",
                matches!(to, NodeKind::Context | NodeKind::Assumption | NodeKind::Justification),
                "in-context-of",
            ),
        };
        if !source_ok {
            findings.push(Finding::error(
                src_code,
                &e.from,
                format!("{label} edge {} -> {} starts at a {from}", e.from, e.to),
            ));
        }
        if !target_ok {
            findings.push(Finding::error(
                dst_code,
                &e.to,
                format!("{label} edge {} -> {} ends at a {to}", e.from, e.to),
            ));
        }
    }

    for a in &g.acps {
        if !g.has_edge(&a.from, &a.to) {
            findings.push(Finding::error(
                "acp-edge-missing",
                &a.id,
                format!("ACP attached to {} -> {}, which is not an edge", a.from, a.to),
            ));
        }
    }

    findings.extend(cycle_findings(g));
    findings
}

/// One Error per back edge found by a depth-first walk of the
/// supported-by subgraph, started from nodes in declaration order.
fn cycle_findings(g: &ArgumentGraph) -> Vec<Finding> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let index: HashMap<&str, usize> = g.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); g.nodes.len()];
    for e in g.edges.iter().filter(|e| e.kind == EdgeKind::SupportedBy) {
        if let (Some(&a), Some(&b)) = (index.get(e.from.as_str()), index.get(e.to.as_str())) {
            adj[a].push(b);
        }
    }
    let mut mark = vec![Mark::New; g.nodes.len()];
    let mut out = Vec::new();
    for start in 0..g.nodes.len() {
        if mark[start] != Mark::New {
            continue;
        }
        // explicit stack of (node, next child index)
        let mut stack = vec![(start, 0usize)];
        mark[start] = Mark::Active;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if let Some(&w) = adj[v].get(*next) {
                *next += 1;
                match mark[w] {
                    Mark::New => {
                        mark[w] = Mark::Active;
                        stack.push((w, 0));
                    }
                    Mark::Active => out.push(Finding::error(
                        "supportedby-cycle",
                        &g.nodes[w].id,
                        format!(
                            "supported-by cycle closed by edge {} -> {}",
                            g.nodes[v].id, g.nodes[w].id
                        ),
                    )),
                    Mark::Done => {}
                }
            } else {
                mark[v] = Mark::Done;
                stack.pop();
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finding::{count_errors, Severity};

    fn codes(f: &[Finding]) -> Vec<&str> {
        f.iter().map(|f| f.code.as_str()).collect()
    }

    #[test]
    fn minimal_graph_is_clean() {
        let g = parse_argument("goal G1 \"a\"\nsolution Sn1 \"b\"\nsupport G1 -> Sn1\n").unwrap();
        assert!(validate_argument(&g).is_empty());
    }

    #[test]
    fn two_cycle_is_an_error() {
        let src =
            "goal G0 \"root\"\ngoal G1 \"a\"\ngoal G2 \"b\"\nsupport G0 -> G1\nsupport G1 -> G2\nsupport G2 -> G1\n";
        let f = validate_argument(&parse_argument(src).unwrap());
        assert_eq!(codes(&f), vec!["supportedby-cycle"]);
        assert_eq!(f[0].subject, "G1");
    }

    #[test]
    fn cycle_through_root_also_breaks_root_rule() {
        let src = "argument c [root=G1]\ngoal G1 \"a\"\ngoal G2 \"b\"\nsupport G1 -> G2\nsupport G2 -> G1\n";
        let f = validate_argument(&parse_argument(src).unwrap());
        assert!(codes(&f).contains(&"supportedby-cycle"));
        assert!(codes(&f).contains(&"root-supported"));
    }

    #[test]
    fn kind_rules() {
        let src = "goal G1 \"a\"\nassumption A1 \"x\"\ncontext C1 \"c\"\nsolution Sn1 \"s\"\nsupport G1 -> A1\nincontext G1 -> C1\nincontext Sn1 -> C1\nsupport G1 -> Sn1\n";
        let f = validate_argument(&parse_argument(src).unwrap());
        assert_eq!(codes(&f), vec!["support-target-kind", "context-source-kind"]);
        assert_eq!(count_errors(&f), 2);
    }

    #[test]
    fn unsupported_goal_is_a_warning_unless_undeveloped_or_away() {
        let src = "goal G1 \"a\"\ngoal G2 \"b\"\ngoal G3 \"c\" [undeveloped]\ngoal G4 \"d\" [away=elsewhere]\nsupport G1 -> G2\nsupport G1 -> G3\nsupport G1 -> G4\n";
        let f = validate_argument(&parse_argument(src).unwrap());
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].severity, Severity::Warning);
        assert_eq!(f[0].subject, "G2");
    }

    #[test]
    fn unbound_solutions_only_reported_with_bindings() {
        let g = parse_argument("goal G1 \"a\"\nsolution Sn1 \"b\"\nsolution Sn2 \"c\" [evidence=e]\nsupport G1 -> Sn1\nsupport G1 -> Sn2\n").unwrap();
        assert!(validate_argument(&g).is_empty());
        let f = validate_with_bindings(&g, &BTreeSet::new());
        assert_eq!(codes(&f), vec!["solution-unbound"]);
        assert_eq!(f[0].subject, "Sn1");
        let bound: BTreeSet<String> = ["Sn1".to_string()].into();
        assert!(validate_with_bindings(&g, &bound).is_empty());
    }

    #[test]
    fn check_source_turns_parse_errors_into_findings() {
        let f = check_source("goal G1 \"a\"\nsupport G1 -> G9\n");
        assert_eq!(f.len(), 1);
        assert!(f[0].is_error());
        assert_eq!(f[0].subject, "G9");
    }

    #[test]
    fn validation_is_deterministic() {
        let src =
            "goal G1 \"a\"\ngoal G2 \"b\"\ngoal G3 \"c\"\nsupport G2 -> G3\nsupport G3 -> G2\nincontext G1 -> G2\n";
        let g = parse_argument(src).unwrap();
        assert_eq!(validate_argument(&g), validate_argument(&g.clone()));
    }
}
