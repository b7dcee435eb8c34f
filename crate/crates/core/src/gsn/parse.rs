//! Line-oriented argument DSL.
//!
//! ```text
//! argument ml-requirements [root=G2.1]
//! goal G2.2 "ML model satisfies the ML safety requirements"
//! solution Sn2.1 "ML safety requirements rationale"
//! context C2.1 "ML data"
//! support G2.2 -> Sn2.1
//! incontext G2.2 -> C2.1
//! acp ACP2.1 on G2.2 -> C2.1 [confidence=ml-data]
//! ```
//!
//! Attributes go in trailing brackets, either one per group or comma
//! separated: `[undeveloped]`, `[away=system-case]`,
//! `[evidence=<artifact id>]`. `#` starts a comment outside of quotes.

use std::collections::{BTreeSet, HashMap};

use super::{ArgumentGraph, AssuranceClaimPoint, EdgeKind, GsnEdge, GsnError, GsnNode, NodeKind};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Quoted(String),
    Arrow,
    Attrs(Vec<(String, Option<String>)>),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> GsnError {
    GsnError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn is_id_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '.' | '-' | '_')
}

fn lex_line(line_no: usize, text: &str) -> Result<Vec<Spanned>, GsnError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c == '#' {
            break;
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err(syntax(line_no, column, "unterminated string")),
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') => {
                        match chars.get(i + 1) {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            _ => return Err(syntax(line_no, i + 1, "invalid escape in string")),
                        }
                        i += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            out.push(Spanned {
                tok: Tok::Quoted(s),
                column,
            });
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            out.push(Spanned {
                tok: Tok::Arrow,
                column,
            });
            i += 2;
        } else if c == '[' {
            let close = chars[i..]
                .iter()
                .position(|&ch| ch == ']')
                .ok_or_else(|| syntax(line_no, column, "unterminated attribute list"))?;
            let body: String = chars[i + 1..i + close].iter().collect();
            let mut attrs = Vec::new();
            for part in body.split(',') {
                let part = part.trim();
                if part.is_empty() {
                    return Err(syntax(line_no, column, "empty attribute"));
                }
                match part.split_once('=') {
                    Some((k, v)) => attrs.push((k.trim().to_string(), Some(v.trim().to_string()))),
                    None => attrs.push((part.to_string(), None)),
                }
            }
            out.push(Spanned {
                tok: Tok::Attrs(attrs),
                column,
            });
            i += close + 1;
        } else if is_id_char(c) {
            let start = i;
            while i < chars.len() && is_id_char(chars[i]) {
                // stop before an arrow glued to an identifier, e.g. `G1->Sn1`
                if chars[i] == '-' && chars.get(i + 1) == Some(&'>') {
                    break;
                }
                i += 1;
            }
            out.push(Spanned {
                tok: Tok::Word(chars[start..i].iter().collect()),
                column,
            });
        } else {
            return Err(syntax(line_no, column, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    line: usize,
    toks: &'a [Spanned],
    pos: usize,
    end_column: usize,
}

impl<'a> Cursor<'a> {
    fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_column, |t| t.column)
    }

    fn word(&mut self, what: &str) -> Result<String, GsnError> {
        match self.toks.get(self.pos) {
            Some(Spanned { tok: Tok::Word(w), .. }) => {
                self.pos += 1;
                Ok(w.clone())
            }
            _ => Err(syntax(self.line, self.column(), format!("expected {what}"))),
        }
    }

    fn quoted(&mut self) -> Result<String, GsnError> {
        match self.toks.get(self.pos) {
            Some(Spanned {
                tok: Tok::Quoted(s), ..
            }) => {
                self.pos += 1;
                Ok(s.clone())
            }
            _ => Err(syntax(self.line, self.column(), "expected quoted statement")),
        }
    }

    fn arrow(&mut self) -> Result<(), GsnError> {
        match self.toks.get(self.pos) {
            Some(Spanned { tok: Tok::Arrow, .. }) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(syntax(self.line, self.column(), "expected `->`")),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), GsnError> {
        let col = self.column();
        match self.word(&format!("`{kw}`")) {
            Ok(w) if w == kw => Ok(()),
            _ => Err(syntax(self.line, col, format!("expected `{kw}`"))),
        }
    }

    /// Consumes trailing attribute groups and requires end of line.
    fn attrs(&mut self) -> Result<Vec<(String, Option<String>, usize)>, GsnError> {
        let mut all = Vec::new();
        while let Some(t) = self.toks.get(self.pos) {
            match &t.tok {
                Tok::Attrs(list) => {
                    all.extend(list.iter().map(|(k, v)| (k.clone(), v.clone(), t.column)));
                    self.pos += 1;
                }
                _ => return Err(syntax(self.line, t.column, "unexpected trailing token")),
            }
        }
        Ok(all)
    }
}

struct PendingEdge {
    line: usize,
    from: String,
    to: String,
    kind: EdgeKind,
}

struct PendingAcp {
    line: usize,
    acp: AssuranceClaimPoint,
}

/// Parses DSL source into an argument graph.
///
/// The graph id comes from an optional `argument <id>` line (default
/// `"argument"`). The root is the `root=` attribute of that line when
/// given, otherwise the first declared goal with no incoming support edge.
pub fn parse_argument(source: &str) -> Result<ArgumentGraph, GsnError> {
    let mut graph_id = String::from("argument");
    let mut declared_root: Option<(usize, String)> = None;
    let mut nodes: Vec<GsnNode> = Vec::new();
    let mut node_lines: HashMap<String, usize> = HashMap::new();
    let mut edges: Vec<PendingEdge> = Vec::new();
    let mut acps: Vec<PendingAcp> = Vec::new();
    let mut seen_argument = false;

    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let toks = lex_line(line, raw)?;
        if toks.is_empty() {
            continue;
        }
        let mut cur = Cursor {
            line,
            toks: &toks,
            pos: 0,
            end_column: raw.chars().count() + 1,
        };
        let head_col = cur.column();
        let head = cur.word("declaration keyword")?;
        match head.as_str() {
            "argument" => {
                if seen_argument {
                    return Err(syntax(line, head_col, "second `argument` declaration"));
                }
                seen_argument = true;
                graph_id = cur.word("argument id")?;
                for (k, v, col) in cur.attrs()? {
                    match (k.as_str(), v) {
                        ("root", Some(r)) => declared_root = Some((line, r)),
                        _ => return Err(syntax(line, col, format!("attribute `{k}` not allowed on argument"))),
                    }
                }
            }
            "support" | "incontext" => {
                let from = cur.word("source node id")?;
                cur.arrow()?;
                let to = cur.word("target node id")?;
                if let Some((k, _, col)) = cur.attrs()?.into_iter().next() {
                    return Err(syntax(line, col, format!("attribute `{k}` not allowed on edge")));
                }
                let kind = if head == "support" {
                    EdgeKind::SupportedBy
                } else {
                    EdgeKind::InContextOf
                };
                edges.push(PendingEdge { line, from, to, kind });
            }
            "acp" => {
                let id = cur.word("ACP id")?;
                cur.keyword("on")?;
                let from = cur.word("source node id")?;
                cur.arrow()?;
                let to = cur.word("target node id")?;
                let mut confidence_argument = None;
                for (k, v, col) in cur.attrs()? {
                    match (k.as_str(), v) {
                        ("confidence", Some(c)) => confidence_argument = Some(c),
                        _ => return Err(syntax(line, col, format!("attribute `{k}` not allowed on acp"))),
                    }
                }
                acps.push(PendingAcp {
                    line,
                    acp: AssuranceClaimPoint {
                        id,
                        from,
                        to,
                        confidence_argument,
                    },
                });
            }
            other => {
                let kind = NodeKind::from_keyword(other)
                    .ok_or_else(|| syntax(line, head_col, format!("unknown declaration `{other}`")))?;
                let id = cur.word("node id")?;
                let statement = cur.quoted()?;
                let mut node = GsnNode::new(id, kind, statement);
                for (k, v, col) in cur.attrs()? {
                    match (k.as_str(), v) {
                        ("undeveloped", None) if kind.may_be_undeveloped() => node.undeveloped = true,
                        ("undeveloped", None) => {
                            return Err(syntax(line, col, format!("a {kind} cannot be undeveloped")))
                        }
                        ("away", Some(m)) if kind == NodeKind::Goal => node.away = Some(m),
                        ("evidence", Some(e)) if kind == NodeKind::Solution => node.evidence = Some(e),
                        _ => return Err(syntax(line, col, format!("attribute `{k}` not allowed on {other}"))),
                    }
                }
                if node_lines.contains_key(&node.id) {
                    return Err(GsnError::DuplicateId { line, id: node.id });
                }
                node_lines.insert(node.id.clone(), line);
                nodes.push(node);
            }
        }
    }

    let mut seen_edges = BTreeSet::new();
    let mut out_edges = Vec::with_capacity(edges.len());
    for e in edges {
        for id in [&e.from, &e.to] {
            if !node_lines.contains_key(id) {
                return Err(GsnError::UnknownNode {
                    line: e.line,
                    id: id.clone(),
                });
            }
        }
        if !seen_edges.insert((e.from.clone(), e.to.clone())) {
            return Err(GsnError::DuplicateEdge {
                line: e.line,
                from: e.from,
                to: e.to,
            });
        }
        out_edges.push(GsnEdge {
            from: e.from,
            to: e.to,
            kind: e.kind,
        });
    }

    let mut acp_ids = BTreeSet::new();
    let mut out_acps = Vec::with_capacity(acps.len());
    for p in acps {
        if !acp_ids.insert(p.acp.id.clone()) || node_lines.contains_key(&p.acp.id) {
            return Err(GsnError::DuplicateId {
                line: p.line,
                id: p.acp.id,
            });
        }
        for id in [&p.acp.from, &p.acp.to] {
            if !node_lines.contains_key(id) {
                return Err(GsnError::UnknownNode {
                    line: p.line,
                    id: id.clone(),
                });
            }
        }
        if !seen_edges.contains(&(p.acp.from.clone(), p.acp.to.clone())) {
            return Err(GsnError::AcpWithoutEdge {
                line: p.line,
                acp: p.acp.id,
                from: p.acp.from,
                to: p.acp.to,
            });
        }
        out_acps.push(p.acp);
    }

    let root = match declared_root {
        Some((line, r)) => {
            if !node_lines.contains_key(&r) {
                return Err(GsnError::UnknownNode { line, id: r });
            }
            Some(r)
        }
        None => nodes
            .iter()
            .find(|n| {
                n.kind == NodeKind::Goal
                    && !out_edges
                        .iter()
                        .any(|e| e.kind == EdgeKind::SupportedBy && e.to == n.id)
            })
            .map(|n| n.id.clone()),
    };

    Ok(ArgumentGraph {
        id: graph_id,
        nodes,
        edges: out_edges,
        acps: out_acps,
        root,
    })
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Canonical DSL serialization. Always emits the root explicitly.
pub fn to_dsl(g: &ArgumentGraph) -> String {
    let mut out = String::new();
    out.push_str("argument ");
    out.push_str(&g.id);
    if let Some(r) = &g.root {
        out.push_str(&format!(" [root={r}]"));
    }
    out.push('\n');
    for n in &g.nodes {
        let mut attrs = Vec::new();
        if n.undeveloped {
            attrs.push("undeveloped".to_string());
        }
        if let Some(m) = &n.away {
            attrs.push(format!("away={m}"));
        }
        if let Some(e) = &n.evidence {
            attrs.push(format!("evidence={e}"));
        }
        out.push_str(&format!("{} {} {}", n.kind.keyword(), n.id, quote(&n.statement)));
        if !attrs.is_empty() {
            out.push_str(&format!(" [{}]", attrs.join(", ")));
        }
        out.push('\n');
    }
    for e in &g.edges {
        let kw = match e.kind {
            EdgeKind::SupportedBy => "support",
            EdgeKind::InContextOf => "incontext",
        };
        out.push_str(&format!("{kw} {} -> {}\n", e.from, e.to));
    }
    for a in &g.acps {
        out.push_str(&format!("acp {} on {} -> {}", a.id, a.from, a.to));
        if let Some(c) = &a.confidence_argument {
            out.push_str(&format!(" [confidence={c}]"));
        }
        out.push('\n');
    }
    out
}
