//! Goal Structuring Notation argument graphs.
//!
//! Arguments are written in a small line-oriented DSL (see [`parse`]),
//! checked for well-formedness by [`validate`], rendered to Graphviz by
//! [`render`] and filled in from templates by [`pattern`]. Fragments that
//! reference each other through away goals are joined by [`merge`].

pub mod merge;
pub mod parse;
pub mod pattern;
pub mod render;
pub mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use merge::merge_fragments;
pub use parse::{parse_argument, to_dsl};
pub use pattern::{instantiate_pattern, Binding};
pub use render::{render_dot, DOT_MAPPING_VERSION};
pub use validate::{check_source, validate_argument, validate_with_bindings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Goal,
    Strategy,
    Solution,
    Context,
    Assumption,
    Justification,
}

impl NodeKind {
    pub const ALL: [NodeKind; 6] = [
        NodeKind::Goal,
        NodeKind::Strategy,
        NodeKind::Solution,
        NodeKind::Context,
        NodeKind::Assumption,
        NodeKind::Justification,
    ];

    /// DSL keyword introducing a node of this kind.
    pub fn keyword(self) -> &'static str {
        match self {
            NodeKind::Goal => "goal",
            NodeKind::Strategy => "strategy",
            NodeKind::Solution => "solution",
            NodeKind::Context => "context",
            NodeKind::Assumption => "assumption",
            NodeKind::Justification => "justification",
        }
    }

    pub fn from_keyword(word: &str) -> Option<NodeKind> {
        NodeKind::ALL.into_iter().find(|k| k.keyword() == word)
    }

    /// Only goals and strategies may be left undeveloped.
    pub fn may_be_undeveloped(self) -> bool {
        matches!(self, NodeKind::Goal | NodeKind::Strategy)
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GsnNode {
    pub id: String,
    pub kind: NodeKind,
    pub statement: String,
    pub undeveloped: bool,
    /// Module name when this goal is developed in another argument.
    pub away: Option<String>,
    /// Evidence artifact id recorded on a Solution.
    pub evidence: Option<String>,
}

impl GsnNode {
    pub fn new(id: impl Into<String>, kind: NodeKind, statement: impl Into<String>) -> Self {
        GsnNode {
            id: id.into(),
            kind,
            statement: statement.into(),
            undeveloped: false,
            away: None,
            evidence: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    SupportedBy,
    InContextOf,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GsnEdge {
    pub from: String,
    pub to: String,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssuranceClaimPoint {
    pub id: String,
    pub from: String,
    pub to: String,
    /// Id of the argument graph carrying the confidence argument.
    pub confidence_argument: Option<String>,
}

/// A GSN argument. Nodes, edges and ACPs keep declaration order so that
/// rendering and validation are order-stable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgumentGraph {
    pub id: String,
    pub nodes: Vec<GsnNode>,
    pub edges: Vec<GsnEdge>,
    pub acps: Vec<AssuranceClaimPoint>,
    pub root: Option<String>,
}

impl ArgumentGraph {
    pub fn node(&self, id: &str) -> Option<&GsnNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_mut(&mut self, id: &str) -> Option<&mut GsnNode> {
        self.nodes.iter_mut().find(|n| n.id == id)
    }

    pub fn kind_of(&self, id: &str) -> Option<NodeKind> {
        self.node(id).map(|n| n.kind)
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        self.edges.iter().any(|e| e.from == from && e.to == to)
    }

    pub fn children<'a>(&'a self, id: &'a str, kind: EdgeKind) -> impl Iterator<Item = &'a str> + 'a {
        self.edges
            .iter()
            .filter(move |e| e.kind == kind && e.from == id)
            .map(|e| e.to.as_str())
    }

    pub fn parents<'a>(&'a self, id: &'a str, kind: EdgeKind) -> impl Iterator<Item = &'a str> + 'a {
        self.edges
            .iter()
            .filter(move |e| e.kind == kind && e.to == id)
            .map(|e| e.from.as_str())
    }

    pub fn solutions(&self) -> impl Iterator<Item = &GsnNode> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Solution)
    }

    /// Returns a copy with `id` and every edge/ACP touching it removed.
    pub fn without_node(&self, id: &str) -> ArgumentGraph {
        let mut g = self.clone();
        g.nodes.retain(|n| n.id != id);
        g.edges.retain(|e| e.from != id && e.to != id);
        g.acps.retain(|a| a.from != id && a.to != id);
        if g.root.as_deref() == Some(id) {
            g.root = None;
        }
        g
    }

    /// Count of nodes per kind, used by reports.
    pub fn kind_counts(&self) -> BTreeMap<NodeKind, usize> {
        let mut counts = BTreeMap::new();
        for n in &self.nodes {
            *counts.entry(n.kind).or_insert(0) += 1;
        }
        counts
    }

    /// Structural equality ignoring declaration order.
    pub fn is_isomorphic(&self, other: &ArgumentGraph) -> bool {
        let key = |g: &ArgumentGraph| {
            let mut nodes: Vec<_> = g
                .nodes
                .iter()
                .map(|n| (n.id.clone(), n.kind, n.statement.clone(), n.undeveloped, n.away.clone()))
                .collect();
            nodes.sort();
            let mut edges = g.edges.clone();
            edges.sort();
            let mut acps: Vec<_> = g
                .acps
                .iter()
                .map(|a| {
                    (
                        a.id.clone(),
                        a.from.clone(),
                        a.to.clone(),
                        a.confidence_argument.clone(),
                    )
                })
                .collect();
            acps.sort();
            (g.id.clone(), g.root.clone(), nodes, edges, acps)
        };
        key(self) == key(other)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GsnError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: duplicate node id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: reference to unknown node `{id}`")]
    UnknownNode { line: usize, id: String },
    #[error("line {line}: duplicate edge {from} -> {to}")]
    DuplicateEdge { line: usize, from: String, to: String },
    #[error("line {line}: ACP `{acp}` is attached to {from} -> {to}, which is not an edge")]
    AcpWithoutEdge {
        line: usize,
        acp: String,
        from: String,
        to: String,
    },
    #[error("no binding for placeholder `{placeholder}` used by node {node}")]
    MissingBinding { placeholder: String, node: String },
    #[error("placeholder `{placeholder}` binds evidence but node {node} is not a Solution")]
    EvidenceOnNonSolution { placeholder: String, node: String },
    #[error("graph `{graph}` has {errors} validation error(s); refusing to render")]
    Invalid { graph: String, errors: usize },
    #[error("node `{id}` is defined in both `{first}` and `{second}`")]
    ConflictingDefinition { id: String, first: String, second: String },
    #[error("root fragment `{0}` has no root goal")]
    NoRoot(String),
}
