//! Joining argument fragments into one graph.
//!
//! A goal marked `away=<module>` in one fragment is replaced by its full
//! definition when another fragment supplies it. Nodes repeated verbatim
//! across fragments (same kind and statement) are shared; any other
//! repeated id is a conflict.

use std::collections::{BTreeSet, HashMap};

use super::{ArgumentGraph, GsnError, GsnNode};

pub fn merge_fragments(
    id: &str,
    root_fragment: &ArgumentGraph,
    others: &[&ArgumentGraph],
) -> Result<ArgumentGraph, GsnError> {
    let root = root_fragment
        .root
        .clone()
        .ok_or_else(|| GsnError::NoRoot(root_fragment.id.clone()))?;
    let fragments: Vec<&ArgumentGraph> = std::iter::once(root_fragment).chain(others.iter().copied()).collect();

    let mut order: Vec<String> = Vec::new();
    // id -> (node, owning fragment id)
    let mut chosen: HashMap<String, (GsnNode, String)> = HashMap::new();
    for frag in &fragments {
        for n in &frag.nodes {
            match chosen.get(&n.id) {
                None => {
                    order.push(n.id.clone());
                    chosen.insert(n.id.clone(), (n.clone(), frag.id.clone()));
                }
                Some((existing, owner)) => {
                    let replace = match (existing.away.is_some(), n.away.is_some()) {
                        (true, false) => true,
                        (_, true) => false,
                        (false, false) => {
                            if existing.kind == n.kind && existing.statement == n.statement {
                                false
                            } else {
                                return Err(GsnError::ConflictingDefinition {
                                    id: n.id.clone(),
                                    first: owner.clone(),
                                    second: frag.id.clone(),
                                });
                            }
                        }
                    };
                    if replace {
                        chosen.insert(n.id.clone(), (n.clone(), frag.id.clone()));
                    }
                }
            }
        }
    }

    let mut seen_edges = BTreeSet::new();
    let mut edges = Vec::new();
    let mut acps = Vec::new();
    let mut seen_acps = BTreeSet::new();
    for frag in &fragments {
        for e in &frag.edges {
            if seen_edges.insert((e.from.clone(), e.to.clone())) {
                edges.push(e.clone());
            }
        }
        for a in &frag.acps {
            if seen_acps.insert(a.id.clone()) {
                acps.push(a.clone());
            }
        }
    }

    let nodes = order
        .into_iter()
        .map(|id| chosen.remove(&id).map(|(n, _)| n))
        .collect::<Option<Vec<_>>>();
    Ok(ArgumentGraph {
        id: id.to_string(),
        nodes: nodes.unwrap_or_default(),
        edges,
        acps,
        root: Some(root),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gsn::{parse_argument, validate_argument};

    #[test]
    fn away_goal_is_replaced_by_definition() {
        let top =
            parse_argument("argument top\ngoal G1 \"top\"\ngoal G2 \"sub\" [away=sub]\nsupport G1 -> G2\n").unwrap();
        let sub = parse_argument("argument sub\ngoal G2 \"sub\"\nsolution Sn1 \"e\"\nsupport G2 -> Sn1\n").unwrap();
        let m = merge_fragments("merged", &top, &[&sub]).unwrap();
        assert_eq!(m.root.as_deref(), Some("G1"));
        assert_eq!(m.nodes.len(), 3);
        assert!(m.node("G2").unwrap().away.is_none());
        assert!(validate_argument(&m).is_empty());
    }

    #[test]
    fn later_away_reference_keeps_full_definition() {
        let top = parse_argument(
            "argument top\ngoal G1 \"top\"\ngoal G2 \"sub\"\nsolution Sn1 \"e\"\nsupport G1 -> G2\nsupport G2 -> Sn1\n",
        )
        .unwrap();
        let other =
            parse_argument("argument o\ngoal G3 \"x\"\ngoal G2 \"sub\" [away=top]\nsupport G3 -> G2\n").unwrap();
        let m = merge_fragments("m", &top, &[&other]).unwrap();
        assert!(m.node("G2").unwrap().away.is_none());
    }

    #[test]
    fn conflicting_definitions_fail() {
        let a = parse_argument("argument a\ngoal G1 \"top\"\ncontext C1 \"one\"\nincontext G1 -> C1\n").unwrap();
        let b = parse_argument("argument b\ngoal G2 \"x\"\ncontext C1 \"two\"\nincontext G2 -> C1\n").unwrap();
        assert!(matches!(
            merge_fragments("m", &a, &[&b]),
            Err(GsnError::ConflictingDefinition { .. })
        ));
    }
}
