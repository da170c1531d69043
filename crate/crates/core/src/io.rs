//! Graph file formats.
//!
//! Text format (UTF-8, 1-based node indices, `#` starts a comment):
//!
//! ```text
//! graph 3
//! node 2 7
//! edge 1 2
//! edge 2 3 4
//! ```
//!
//! `node <i> <token>` and the optional edge token default to token 0. A file
//! may hold several documents, each starting with its own `graph` header.
//!
//! JSON mirror (one object per graph, one per line in `graphs.jsonl`):
//! `{"n":3,"nodes":[0,7,0],"edges":[[1,2,0],[2,3,4]]}`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, FeatureToken, GraphBuilder};

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Whitespace-separated words of a line with their 1-based columns.
fn words(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (idx, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(idx),
            (true, Some(s)) => {
                out.push((s + 1, &line[s..idx]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn number(line: usize, (col, word): (usize, &str), what: &str) -> Result<u64> {
    word.parse::<u64>()
        .map_err(|_| parse_err(line, col, format!("expected {what}, found `{word}`")))
}

fn node_index(line: usize, w: (usize, &str), n: usize) -> Result<usize> {
    let v = number(line, w, "node index")?;
    if v == 0 || v as usize > n {
        return Err(Error::Validation(format!(
            "line {line}: node {v} outside 1..={n}"
        )));
    }
    Ok(v as usize - 1)
}

fn token(line: usize, w: (usize, &str)) -> Result<FeatureToken> {
    let v = number(line, w, "feature token")?;
    u32::try_from(v)
        .map(FeatureToken)
        .map_err(|_| parse_err(line, w.0, "feature token does not fit in 32 bits"))
}

/// Parse every graph document in `text`.
pub fn parse_graphs(text: &str) -> Result<Vec<AttributedGraph>> {
    let mut graphs = Vec::new();
    let mut current: Option<GraphBuilder> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let ws = words(content);
        let Some(&(col, keyword)) = ws.first() else {
            continue;
        };
        match keyword {
            "graph" => {
                if ws.len() != 2 {
                    return Err(parse_err(line_no, col, "expected `graph <n>`"));
                }
                let n = number(line_no, ws[1], "node count")? as usize;
                if let Some(b) = current.replace(GraphBuilder::new(n)) {
                    graphs.push(b.build());
                }
            }
            "node" => {
                let b = current
                    .as_mut()
                    .ok_or_else(|| parse_err(line_no, col, "`node` before `graph` header"))?;
                if ws.len() != 3 {
                    return Err(parse_err(line_no, col, "expected `node <i> <token>`"));
                }
                let i = node_index(line_no, ws[1], b.n())?;
                b.set_node_feature(i, token(line_no, ws[2])?);
            }
            "edge" => {
                let b = current
                    .as_mut()
                    .ok_or_else(|| parse_err(line_no, col, "`edge` before `graph` header"))?;
                if !(3..=4).contains(&ws.len()) {
                    return Err(parse_err(line_no, col, "expected `edge <i> <j> [token]`"));
                }
                let i = node_index(line_no, ws[1], b.n())?;
                let j = node_index(line_no, ws[2], b.n())?;
                let t = match ws.get(3) {
                    Some(&w) => token(line_no, w)?,
                    None => FeatureToken::DEFAULT,
                };
                b.add_edge(i, j, t)
                    .map_err(|e| Error::Validation(format!("line {line_no}: {e}")))?;
            }
            other => {
                return Err(parse_err(line_no, col, format!("unknown keyword `{other}`")));
            }
        }
    }
    if let Some(b) = current {
        graphs.push(b.build());
    }
    Ok(graphs)
}

/// Parse a document holding exactly one graph.
pub fn parse_graph(text: &str) -> Result<AttributedGraph> {
    let mut graphs = parse_graphs(text)?;
    match graphs.len() {
        1 => Ok(graphs.pop().expect("one graph")),
        0 => Err(parse_err(1, 1, "missing `graph <n>` header")),
        k => Err(parse_err(1, 1, format!("expected one graph, found {k}"))),
    }
}

/// Canonical text form: node lines only for non-default tokens, edges sorted
/// with the token written only when it is not the default.
pub fn serialize_graph(g: &AttributedGraph) -> String {
    let mut out = format!("graph {}\n", g.n());
    for i in 0..g.n() {
        let t = g.node_feature(i);
        if t != FeatureToken::DEFAULT {
            writeln!(out, "node {} {}", i + 1, t).expect("write to string");
        }
    }
    for (i, j, t) in g.edges() {
        if t == FeatureToken::DEFAULT {
            writeln!(out, "edge {} {}", i + 1, j + 1).expect("write to string");
        } else {
            writeln!(out, "edge {} {} {}", i + 1, j + 1, t).expect("write to string");
        }
    }
    out
}

/// JSON mirror of a graph, 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    #[serde(default)]
    pub nodes: Vec<u32>,
    #[serde(default)]
    pub edges: Vec<Vec<u64>>,
}

impl From<&AttributedGraph> for GraphJson {
    fn from(g: &AttributedGraph) -> Self {
        GraphJson {
            n: g.n(),
            nodes: g.node_features().iter().map(|t| t.0).collect(),
            edges: g
                .edges()
                .map(|(i, j, t)| vec![i as u64 + 1, j as u64 + 1, t.0 as u64])
                .collect(),
        }
    }
}

impl TryFrom<&GraphJson> for AttributedGraph {
    type Error = Error;

    fn try_from(j: &GraphJson) -> Result<Self> {
        let mut b = GraphBuilder::new(j.n);
        if !j.nodes.is_empty() {
            if j.nodes.len() != j.n {
                return Err(Error::Validation(format!(
                    "{} node tokens for {} nodes",
                    j.nodes.len(),
                    j.n
                )));
            }
            for (i, &t) in j.nodes.iter().enumerate() {
                b.set_node_feature(i, FeatureToken(t));
            }
        }
        for e in &j.edges {
            let (u, v, t) = match e.as_slice() {
                [u, v] => (*u, *v, 0),
                [u, v, t] => (*u, *v, *t),
                _ => return Err(Error::Validation(format!("malformed edge {e:?}"))),
            };
            if u == 0 || v == 0 || u as usize > j.n || v as usize > j.n {
                return Err(Error::Validation(format!("edge {e:?} outside 1..={}", j.n)));
            }
            let t = u32::try_from(t)
                .map_err(|_| Error::Validation(format!("edge token {t} too large")))?;
            b.add_edge(u as usize - 1, v as usize - 1, FeatureToken(t))?;
        }
        Ok(b.build())
    }
}

pub fn graph_to_json(g: &AttributedGraph) -> String {
    serde_json::to_string(&GraphJson::from(g)).expect("graph JSON is always serializable")
}

pub fn graph_from_json(s: &str) -> Result<AttributedGraph> {
    let j: GraphJson = serde_json::from_str(s)?;
    AttributedGraph::try_from(&j)
}

pub fn write_jsonl(path: &Path, graphs: &[AttributedGraph]) -> Result<()> {
    let mut out = String::new();
    for g in graphs {
        out.push_str(&graph_to_json(g));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<AttributedGraph>> {
    let text = read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(graph_from_json)
        .collect()
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.display().to_string()),
        _ => Error::Io(e),
    })
}

/// Load graphs from a dataset directory (`graphs.jsonl`), a `.jsonl`/`.json`
/// file, or a text file with one or more documents.
pub fn load_graphs(path: &Path) -> Result<Vec<AttributedGraph>> {
    if path.is_dir() {
        return read_jsonl(&path.join("graphs.jsonl"));
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") | Some("json") => read_jsonl(path),
        _ => parse_graphs(&read_to_string(path)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_round_trip() {
        let k3 = AttributedGraph::complete(3);
        let text = serialize_graph(&k3);
        assert_eq!(text, "graph 3\nedge 1 2\nedge 1 3\nedge 2 3\n");
        assert_eq!(parse_graph(&text).unwrap(), k3);
    }

    #[test]
    fn tokens_and_comments() {
        let g = parse_graph("# header\ngraph 3\nnode 2 7  # inline\nedge 3 2 4\n").unwrap();
        assert_eq!(g.node_feature(1), FeatureToken(7));
        assert_eq!(g.edge(1, 2), Some(FeatureToken(4)));
        assert_eq!(parse_graph(&serialize_graph(&g)).unwrap(), g);
    }

    #[test]
    fn self_loop_is_a_validation_error() {
        let err = parse_graph("graph 2\nedge 1 1\n").unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn duplicate_edge_is_a_validation_error() {
        let err = parse_graph("graph 3\nedge 1 2\nedge 2 1\n").unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn parse_errors_carry_position() {
        match parse_graph("graph 3\nedge 1 x\n").unwrap_err() {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (2, 8)),
            e => panic!("unexpected {e}"),
        }
        match parse_graph("graph 3\n  vertex 1\n").unwrap_err() {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (2, 3)),
            e => panic!("unexpected {e}"),
        }
        assert!(matches!(parse_graph("edge 1 2"), Err(Error::Parse { .. })));
    }

    #[test]
    fn several_documents() {
        let gs = parse_graphs("graph 2\nedge 1 2\ngraph 3\n").unwrap();
        assert_eq!(gs.len(), 2);
        assert_eq!(gs[1], AttributedGraph::empty(3));
    }

    #[test]
    fn json_mirror() {
        let g = parse_graph("graph 3\nnode 1 2\nedge 1 3 5\n").unwrap();
        let s = graph_to_json(&g);
        assert_eq!(s, r#"{"n":3,"nodes":[2,0,0],"edges":[[1,3,5]]}"#);
        assert_eq!(graph_from_json(&s).unwrap(), g);
        assert!(graph_from_json(r#"{"n":2,"edges":[[1,1,0]]}"#).is_err());
        assert_eq!(
            graph_from_json(r#"{"n":2,"edges":[[1,2]]}"#).unwrap(),
            AttributedGraph::path(2)
        );
    }
}
