//! Plain-text edge list format.
//!
//! One edge per line: `<src> <dst>` or `<src> <dst> <weight>`. `#` starts a
//! comment, blank lines are skipped, and a file must be uniformly weighted or
//! uniformly unweighted. The writer emits a `# vertices <n>` directive so
//! isolated trailing vertices survive a round trip; the reader honors the
//! directive unless the caller overrides the vertex count.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::topology::{CooGraph, VertexId};

pub fn write_edge_list(g: &CooGraph, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io_at(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# vertices {}", g.num_vertices())?;
    match g.weights() {
        None => {
            for e in 0..g.num_edges() {
                let (s, d) = g.edge(e);
                writeln!(w, "{s} {d}")?;
            }
        }
        Some(weights) => {
            for (e, weight) in weights.iter().enumerate() {
                let (s, d) = g.edge(e);
                writeln!(w, "{s} {d} {weight}")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_edge_list(path: &Path, num_vertices: Option<usize>) -> Result<CooGraph> {
    let text = fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
    parse_edge_list(&text, path, num_vertices)
}

/// Parses edge-list text. `origin` is only used in error messages.
/// The vertex count is, in order of precedence: the `num_vertices` override,
/// a `# vertices <n>` directive, or max vertex id + 1. An explicit count
/// smaller than some vertex id is rejected.
pub fn parse_edge_list(text: &str, origin: &Path, num_vertices: Option<usize>) -> Result<CooGraph> {
    let err = |line: usize, reason: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        reason,
    };
    let mut edges: Vec<(VertexId, VertexId)> = Vec::new();
    let mut weights: Vec<f32> = Vec::new();
    let mut weighted: Option<bool> = None;
    let mut directive_n: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = raw.trim();
        if let Some(rest) = trimmed.strip_prefix('#') {
            let toks: Vec<&str> = rest.split_whitespace().collect();
            if toks.len() == 2 && toks[0] == "vertices" {
                let n: usize = toks[1]
                    .parse()
                    .map_err(|e| err(line_no, format!("bad vertex count directive: {e}")))?;
                directive_n = Some(n);
            }
            continue;
        }
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 2 && toks.len() != 3 {
            return Err(err(
                line_no,
                format!(
                    "expected `src dst` or `src dst weight`, found {} fields",
                    toks.len()
                ),
            ));
        }
        let s: VertexId = toks[0]
            .parse()
            .map_err(|e| err(line_no, format!("bad source id `{}`: {e}", toks[0])))?;
        let d: VertexId = toks[1]
            .parse()
            .map_err(|e| err(line_no, format!("bad destination id `{}`: {e}", toks[1])))?;
        let has_weight = toks.len() == 3;
        match weighted {
            None => weighted = Some(has_weight),
            Some(w) if w != has_weight => {
                return Err(err(
                    line_no,
                    "mixed weighted and unweighted edges in one file".into(),
                ));
            }
            _ => {}
        }
        if has_weight {
            let wv: f32 = toks[2]
                .parse()
                .map_err(|e| err(line_no, format!("bad weight `{}`: {e}", toks[2])))?;
            if !wv.is_finite() {
                return Err(err(line_no, format!("non-finite weight `{}`", toks[2])));
            }
            weights.push(wv);
        }
        edges.push((s, d));
    }
    let max_id_n = edges
        .iter()
        .map(|&(s, d)| s.max(d) as usize + 1)
        .max()
        .unwrap_or(0);
    let n = num_vertices.or(directive_n).unwrap_or(max_id_n);
    if n < max_id_n {
        return Err(Error::InvalidParameter {
            name: "num_vertices",
            reason: format!("{n} vertices declared but ids reach {}", max_id_n - 1),
        });
    }
    let weights = if weighted == Some(true) { Some(weights) } else { None };
    CooGraph::from_edge_list(&edges, n, weights)
}
