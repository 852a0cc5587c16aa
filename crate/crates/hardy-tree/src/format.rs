//! The tree JSON format.
//!
//! ```json
//! {"vertices": [0, 1],
//!  "edges": [{"id": 0, "from": 0, "to": 1, "length": 1.0,
//!             "u": [{"len": 1.0, "value": 1.0}], "v": [{"len": 1.0, "value": 1.0}]}],
//!  "root": {"edge": 0, "offset": 0.0}}
//! ```
//!
//! `from`/`to` are vertex ids, weight pieces run from the `from` end and their lengths
//! must add up to the edge length, and the root sits `offset` along `edge` from its `from` end.

use std::path::Path;

use hardy_tree_core::tree::Edge;
use hardy_tree_core::weights::LENGTH_TOL;
use hardy_tree_core::{MetricTree, StepWeight, WeightedTree};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub vertices: Vec<u64>,
    pub edges: Vec<EdgeFile>,
    pub root: RootFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeFile {
    pub id: u64,
    pub from: u64,
    pub to: u64,
    pub length: f64,
    pub u: Vec<Piece>,
    pub v: Vec<Piece>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Piece {
    pub len: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootFile {
    pub edge: u64,
    pub offset: f64,
}

/// A parsed and validated tree file.
#[derive(Debug, Clone)]
pub struct LoadedTree {
    pub name: String,
    pub file: TreeFile,
    pub weighted: WeightedTree,
}

pub fn parse(text: &str, name: &str) -> Result<LoadedTree, CliError> {
    let file: TreeFile = serde_json::from_str(text).map_err(|e| CliError::Parse {
        source_name: name.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let weighted = build(&file)?;
    let name = file.name.clone().unwrap_or_else(|| name.to_string());
    Ok(LoadedTree { name, file, weighted })
}

pub fn load(path: &Path) -> Result<LoadedTree, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("tree");
    parse(&text, stem)
}

fn schema(msg: String) -> CliError {
    CliError::Schema(msg)
}

/// Checks the file beyond what serde enforces and builds the weighted tree.
pub fn build(file: &TreeFile) -> Result<WeightedTree, CliError> {
    let index = |id: u64, edge: u64, field: &str| {
        file.vertices
            .iter()
            .position(|&v| v == id)
            .ok_or_else(|| schema(format!("edge {edge}: field `{field}` names unknown vertex {id}")))
    };
    let mut edges = Vec::with_capacity(file.edges.len());
    let mut u = Vec::with_capacity(file.edges.len());
    let mut v = Vec::with_capacity(file.edges.len());
    for e in &file.edges {
        if file.edges.iter().filter(|o| o.id == e.id).count() > 1 {
            return Err(schema(format!("edge {}: duplicate edge id", e.id)));
        }
        if !(e.length.is_finite() && e.length > 0.0) {
            return Err(schema(format!("edge {}: field `length` must be positive, got {}", e.id, e.length)));
        }
        for (field, pieces) in [("u", &e.u), ("v", &e.v)] {
            if pieces.is_empty() {
                return Err(schema(format!("edge {}: field `{field}` has no pieces", e.id)));
            }
            for (j, pc) in pieces.iter().enumerate() {
                if !(pc.len.is_finite() && pc.len > 0.0) {
                    return Err(schema(format!("edge {}: `{field}[{j}].len` must be positive, got {}", e.id, pc.len)));
                }
                if !(pc.value.is_finite() && pc.value >= 0.0) {
                    return Err(schema(format!(
                        "edge {}: `{field}[{j}].value` must be finite and nonnegative, got {}",
                        e.id, pc.value
                    )));
                }
            }
            let total: f64 = pieces.iter().map(|p| p.len).sum();
            if (total - e.length).abs() > LENGTH_TOL {
                return Err(schema(format!(
                    "edge {}: `{field}` piece lengths sum to {total}, edge length is {}",
                    e.id, e.length
                )));
            }
        }
        edges.push(Edge { id: e.id, from: index(e.from, e.id, "from")?, to: index(e.to, e.id, "to")?, length: e.length });
        u.push(e.u.iter().map(|p| (p.len, p.value)).collect());
        v.push(e.v.iter().map(|p| (p.len, p.value)).collect());
    }
    let tree = MetricTree::new(file.vertices.clone(), edges)?;
    let root_edge = tree
        .edge_index(file.root.edge)
        .ok_or_else(|| schema(format!("root: field `edge` names unknown edge {}", file.root.edge)))?;
    let loc = tree
        .locate(root_edge, file.root.offset)
        .map_err(|e| schema(format!("root: field `offset`: {e}")))?;
    let u = StepWeight::new(u)?;
    let v = StepWeight::new(v)?;
    Ok(WeightedTree::new(tree, loc, &u, &v)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT: &str = r#"{"vertices":[0,1],"edges":[{"id":0,"from":0,"to":1,"length":1.0,
        "u":[{"len":1.0,"value":1.0}],"v":[{"len":0.5,"value":1.0},{"len":0.5,"value":2.0}]}],
        "root":{"edge":0,"offset":0.0}}"#;

    #[test]
    fn parses_unit_interval() {
        let t = parse(UNIT, "unit").unwrap();
        assert_eq!(t.name, "unit");
        assert!((t.weighted.integral_uv() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn reports_line_of_syntax_error() {
        let bad = "{\"vertices\":[0,1],\n\"edges\": [,]}";
        match parse(bad, "bad") {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn names_edge_with_bad_piece_lengths() {
        let bad = UNIT.replace(r#"{"len":0.5,"value":2.0}"#, r#"{"len":0.4,"value":2.0}"#);
        let err = parse(&bad, "bad").unwrap_err().to_string();
        assert!(err.contains("edge 0") && err.contains("`v`"), "{err}");
    }

    #[test]
    fn rejects_unknown_field() {
        let bad = UNIT.replace("\"root\"", "\"rooot\"");
        assert!(matches!(parse(&bad, "bad"), Err(CliError::Parse { .. })));
    }

    #[test]
    fn round_trips() {
        let t = parse(UNIT, "unit").unwrap();
        let text = serde_json::to_string(&t.file).unwrap();
        assert_eq!(parse(&text, "unit").unwrap().file, t.file);
    }
}
