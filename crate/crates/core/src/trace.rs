//! Reasoning trees and their renderings.
//!
//! Each node is one evaluated conclusion or condition with an `o`/`x`
//! outcome. Condition children hang off solid edges, exception children off
//! dotted ones. A failed node without `via` that lists several children
//! collects the separate rule attempts for the same goal.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::ast::Atom;
use crate::engine::Outcome;
use crate::parser::parse_atom;

/// Version stamped into trace JSON documents.
pub const TRACE_VERSION: u32 = 1;

/// DOT colour for succeeded nodes.
pub const DOT_SUCCESS_COLOR: &str = "darkgreen";
/// DOT colour for failed nodes.
pub const DOT_FAILURE_COLOR: &str = "red";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Condition,
    Exception,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Condition => "condition",
            EdgeKind::Exception => "exception",
        }
    }

    fn arrow(self) -> &'static str {
        match self {
            EdgeKind::Condition => "->",
            EdgeKind::Exception => "~>",
        }
    }

    fn dot_style(self) -> &'static str {
        match self {
            EdgeKind::Condition => "solid",
            EdgeKind::Exception => "dotted",
        }
    }
}

/// How a node was concluded.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Via {
    Fact,
    Rule(String),
}

impl Via {
    pub fn label(&self) -> &str {
        match self {
            Via::Fact => "fact",
            Via::Rule(id) => id,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceNode {
    pub goal: Atom,
    pub outcome: Outcome,
    pub via: Option<Via>,
    pub defeated: bool,
    pub children: Vec<(EdgeKind, TraceNode)>,
    pub note: Option<String>,
}

impl TraceNode {
    pub fn new(goal: Atom, outcome: Outcome) -> Self {
        TraceNode { goal, outcome, via: None, defeated: false, children: Vec::new(), note: None }
    }

    pub fn fact(goal: Atom) -> Self {
        TraceNode { via: Some(Via::Fact), ..TraceNode::new(goal, Outcome::Success) }
    }

    pub fn failure(goal: Atom, note: impl Into<String>) -> Self {
        TraceNode { note: Some(note.into()), ..TraceNode::new(goal, Outcome::Failure) }
    }

    /// Preorder walk; the edge is `None` for the root.
    pub fn walk(&self) -> Vec<(Option<EdgeKind>, &TraceNode)> {
        let mut out = Vec::new();
        fn go<'a>(edge: Option<EdgeKind>, node: &'a TraceNode, out: &mut Vec<(Option<EdgeKind>, &'a TraceNode)>) {
            out.push((edge, node));
            for (kind, child) in &node.children {
                go(Some(*kind), child, out);
            }
        }
        go(None, self, &mut out);
        out
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(|(_, c)| c.size()).sum::<usize>()
    }

    /// Checks the structural invariants of every node, returning the first
    /// violation found.
    pub fn validate(&self) -> Result<(), String> {
        for (_, node) in self.walk() {
            node.validate_local()?;
        }
        Ok(())
    }

    fn validate_local(&self) -> Result<(), String> {
        let exception_success = self
            .children
            .iter()
            .any(|(k, c)| *k == EdgeKind::Exception && c.outcome.is_success());
        let conditions_hold = self
            .children
            .iter()
            .filter(|(k, _)| *k == EdgeKind::Condition)
            .all(|(_, c)| c.outcome.is_success());
        if self.defeated && (self.outcome.is_success() || !exception_success) {
            return Err(format!("`{}` is defeated without a succeeding exception", self.goal));
        }
        match &self.via {
            Some(Via::Fact) if !self.children.is_empty() || !self.outcome.is_success() => {
                Err(format!("fact node `{}` must succeed without children", self.goal))
            }
            Some(Via::Rule(id)) if self.outcome.is_success() && (!conditions_hold || exception_success) => {
                Err(format!("`{}` succeeds via {id} despite a failed condition or a proven exception", self.goal))
            }
            Some(Via::Rule(id)) if !self.outcome.is_success() && conditions_hold && !self.defeated => {
                Err(format!("`{}` fails via {id} with all conditions proven but is not defeated", self.goal))
            }
            _ => Ok(()),
        }
    }
}

/// Indented tree, one node per line: `goal [o|x] (via, defeated, note)`.
/// Condition children are prefixed `->`, exception children `~>`.
pub fn render_text(root: &TraceNode) -> String {
    let mut out = String::new();
    fn go(node: &TraceNode, edge: Option<EdgeKind>, depth: usize, out: &mut String) {
        for _ in 0..depth {
            out.push_str("  ");
        }
        if let Some(kind) = edge {
            out.push_str(kind.arrow());
            out.push(' ');
        }
        let _ = write!(out, "{} [{}]", node.goal, node.outcome.glyph());
        let mut tags: Vec<&str> = Vec::new();
        if let Some(via) = &node.via {
            tags.push(via.label());
        }
        if node.defeated {
            tags.push("defeated");
        }
        if let Some(note) = &node.note {
            tags.push(note);
        }
        if !tags.is_empty() {
            let _ = write!(out, " ({})", tags.join(", "));
        }
        out.push('\n');
        for (kind, child) in &node.children {
            go(child, Some(*kind), depth + 1, out);
        }
    }
    go(root, None, 0, &mut out);
    out
}

fn dot_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out
}

/// Graphviz DOT digraph: one box per node labelled `goal\n<glyph>`, solid
/// condition edges, dotted exception edges. Nodes are numbered in preorder.
pub fn render_dot(root: &TraceNode) -> String {
    let mut out = String::from("digraph proleg_trace {\n  node [shape=box];\n");
    let mut edges = String::new();
    let mut next_id = 0usize;
    fn go(node: &TraceNode, next_id: &mut usize, out: &mut String, edges: &mut String) -> usize {
        let id = *next_id;
        *next_id += 1;
        let color = if node.outcome.is_success() { DOT_SUCCESS_COLOR } else { DOT_FAILURE_COLOR };
        let _ = writeln!(
            out,
            "  n{id} [label=\"{}\\n{}\", color=\"{color}\"];",
            dot_escape(&node.goal.to_string()),
            node.outcome.glyph()
        );
        for (kind, child) in &node.children {
            let child_id = go(child, next_id, out, edges);
            let _ = writeln!(edges, "  n{id} -> n{child_id} [style={}];", kind.dot_style());
        }
        id
    }
    go(root, &mut next_id, &mut out, &mut edges);
    out.push_str(&edges);
    out.push_str("}\n");
    out
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonNode {
    goal: String,
    outcome: String,
    via: Option<String>,
    defeated: bool,
    note: Option<String>,
    children: Vec<JsonChild>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonChild {
    edge: String,
    node: JsonNode,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonDocument {
    trace_version: u32,
    #[serde(flatten)]
    root: JsonNode,
}

fn to_json_node(node: &TraceNode) -> JsonNode {
    JsonNode {
        goal: node.goal.to_string(),
        outcome: node.outcome.glyph().to_string(),
        via: node.via.as_ref().map(|v| v.label().to_string()),
        defeated: node.defeated,
        note: node.note.clone(),
        children: node
            .children
            .iter()
            .map(|(kind, child)| JsonChild { edge: kind.as_str().to_string(), node: to_json_node(child) })
            .collect(),
    }
}

/// Compact JSON of a node and its subtree, keys in the fixed order
/// `goal, outcome, via, defeated, note, children`.
pub fn render_json(root: &TraceNode) -> String {
    serde_json::to_string(&to_json_node(root)).expect("trace serializes")
}

/// [`render_json`] with a leading `"trace_version"` key; the form written to
/// trace files.
pub fn render_json_document(root: &TraceNode) -> String {
    serde_json::to_string(&JsonDocument { trace_version: TRACE_VERSION, root: to_json_node(root) })
        .expect("trace serializes")
}

#[derive(Debug, thiserror::Error)]
pub enum TraceJsonError {
    #[error("invalid trace JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported trace_version {0}")]
    Version(u64),
    #[error("invalid trace field: {0}")]
    Field(String),
}

/// Reads either a bare node ([`render_json`]) or a versioned document
/// ([`render_json_document`]).
pub fn parse_json(text: &str) -> Result<TraceNode, TraceJsonError> {
    let mut value: serde_json::Value = serde_json::from_str(text)?;
    if let Some(obj) = value.as_object_mut() {
        if let Some(version) = obj.remove("trace_version") {
            let v = version.as_u64().ok_or_else(|| TraceJsonError::Field("trace_version".into()))?;
            if v != u64::from(TRACE_VERSION) {
                return Err(TraceJsonError::Version(v));
            }
        }
    }
    let node: JsonNode = serde_json::from_value(value)?;
    from_json_node(node)
}

fn from_json_node(node: JsonNode) -> Result<TraceNode, TraceJsonError> {
    let goal = parse_atom(&node.goal).map_err(|_| TraceJsonError::Field(format!("goal `{}`", node.goal)))?;
    let outcome = Outcome::from_glyph(&node.outcome)
        .ok_or_else(|| TraceJsonError::Field(format!("outcome `{}`", node.outcome)))?;
    let via = node.via.map(|v| if v == "fact" { Via::Fact } else { Via::Rule(v) });
    let children = node
        .children
        .into_iter()
        .map(|child| {
            let kind = match child.edge.as_str() {
                "condition" => EdgeKind::Condition,
                "exception" => EdgeKind::Exception,
                other => return Err(TraceJsonError::Field(format!("edge `{other}`"))),
            };
            Ok((kind, from_json_node(child.node)?))
        })
        .collect::<Result<_, _>>()?;
    Ok(TraceNode { goal, outcome, via, defeated: node.defeated, children, note: node.note })
}
